"""Exception hierarchy shared by every module."""


class SPVoteError(ValueError):
    """Base class for validation failures raised by spvote."""


class DimensionError(SPVoteError):
    """Inputs disagree on the number of alternatives or groups."""


class CapacityError(SPVoteError):
    """Exhaustive enumeration requested beyond the supported size."""


class ParameterError(SPVoteError):
    """A model parameter lies outside its admissible range."""


class DegeneratePriorError(SPVoteError):
    """A posterior has zero total mass."""


class CoverageError(SPVoteError):
    """Subsets or fits do not cover the alternatives or pairs required."""


class PreconditionError(SPVoteError):
    """An identifiability condition is not applicable to the parameters."""


class ParseError(SPVoteError):
    """Malformed input text or file row."""
