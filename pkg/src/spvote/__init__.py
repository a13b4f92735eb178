"""Surprisingly-popular voting under concentric mixture rank models."""

from .errors import (
    CapacityError,
    CoverageError,
    DegeneratePriorError,
    DimensionError,
    ParameterError,
    ParseError,
    PreconditionError,
    SPVoteError,
)
from .models import CmmParams, CmplParams, ModelSpec, sample
from .rankings import PartialRanking, Ranking, kendall_tau, rank_index, unrank
from .sp_engine import FullPosterior, ModalRanking, Profile, Top, TopT, VoterReport, sp_winner

__version__ = "0.1.0"
