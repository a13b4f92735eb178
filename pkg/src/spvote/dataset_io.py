"""File formats: profile and ground-truth CSVs, model and experiment JSON, result CSVs.

Profile CSV columns::

    domain,question_id,participant_id,vote,prediction_type,prediction_value

``vote`` is ranking text such as ``"2>0>1"`` over global alternative ids.
``prediction_type`` is ``top`` (one id), ``rank`` (ranking text) or ``top_t``
(comma-joined ids). Within a question, global ids are mapped to dense local
indices in ascending order; the mapping is kept as ``Profile.alternatives``.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Mapping

import numpy as np

from .errors import ParameterError, ParseError
from .experiments import ExperimentConfig, ExperimentResult, ResultRow
from .inference import McmcConfig, PosteriorSamples, PriorSpec
from .models import ModelSpec
from .rankings import Ranking, format_ranking, parse_ranking
from .sp_engine import FullPosterior, ModalRanking, Profile, Top, TopT, VoterReport

PROFILE_HEADER = ("domain", "question_id", "participant_id", "vote", "prediction_type", "prediction_value")
TRUTH_HEADER = ("domain", "question_id", "ranking")
RESULT_HEADER = ("aggregator", "n", "mean_kt", "ci_lo", "ci_hi", "trials")
POSTERIOR_HEADER = ("parameter", "mean", "sd", "q05", "q95", "rhat", "ess")
PREDICTION_TYPES = ("top", "rank", "top_t")

QuestionKey = tuple[str, str]


def _fmt(x: float) -> str:
    out = f"{float(x):.6f}"
    return "0.000000" if out == "-0.000000" else out


def _read_rows(path, header: tuple[str, ...]):
    """Yield ``(line number, row dict)``; the header is line 1."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: missing header") from None
        if tuple(h.strip() for h in first) != header:
            raise ParseError(f"{path}: line 1: header {first} does not match {list(header)}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"line {reader.line_num}: expected {len(header)} fields, got {len(row)}")
            yield reader.line_num, dict(zip(header, (c.strip() for c in row)))


def _field_error(line: int, name: str, msg: str) -> ParseError:
    return ParseError(f"line {line}: field {name}: {msg}")


def _parse_ids(text: str, line: int, name: str) -> tuple[int, ...]:
    try:
        return parse_ranking(text)
    except ParseError as exc:
        raise _field_error(line, name, str(exc)) from None


def parse_prediction(kind: str, value: str, alternatives: frozenset, line: int = 0):
    """Parse one prediction cell into global ids; returns ``(kind, payload)``."""
    if kind not in PREDICTION_TYPES:
        raise _field_error(line, "prediction_type", f"unknown type {kind!r}")
    if kind == "top":
        ids = _parse_ids(value, line, "prediction_value")
        if len(ids) != 1:
            raise _field_error(line, "prediction_value", f"top prediction must be one id, got {value!r}")
    elif kind == "rank":
        ids = _parse_ids(value, line, "prediction_value")
        if set(ids) != alternatives:
            raise _field_error(line, "prediction_value", f"ranking {value!r} does not cover the vote's alternatives")
    else:
        parts = [p.strip() for p in value.split(",")]
        ids = _parse_ids(">".join(parts), line, "prediction_value") if value.strip() else ()
        if not ids:
            raise _field_error(line, "prediction_value", "top_t prediction must be non-empty")
    if not set(ids) <= alternatives:
        raise _field_error(line, "prediction_value", f"ids {sorted(set(ids) - alternatives)} not among the alternatives")
    return kind, ids


def load_profiles(path) -> dict[QuestionKey, Profile]:
    """Group rows by ``(domain, question_id)`` into profiles over local indices."""
    raw: dict[QuestionKey, list] = {}
    alt_sets: dict[QuestionKey, tuple[frozenset, int]] = {}
    seen: set[tuple[str, str, str]] = set()
    for line, row in _read_rows(path, PROFILE_HEADER):
        for name in ("domain", "question_id", "participant_id"):
            if not row[name]:
                raise _field_error(line, name, "empty")
        key = (row["domain"], row["question_id"])
        ident = key + (row["participant_id"],)
        if ident in seen:
            raise _field_error(line, "participant_id", f"duplicate participant {row['participant_id']!r} for {key}")
        seen.add(ident)
        vote = _parse_ids(row["vote"], line, "vote")
        alts = frozenset(vote)
        if key in alt_sets and alt_sets[key][0] != alts:
            raise _field_error(line, "vote", f"alternatives differ from line {alt_sets[key][1]} of the same question")
        alt_sets.setdefault(key, (alts, line))
        pred = parse_prediction(row["prediction_type"], row["prediction_value"], alts, line)
        raw.setdefault(key, []).append((row["participant_id"], vote, pred))

    out = {}
    for key, rows in raw.items():
        alternatives = tuple(sorted(alt_sets[key][0]))
        local = {a: j for j, a in enumerate(alternatives)}
        reports = []
        for pid, vote, (kind, ids) in rows:
            v = tuple(local[a] for a in vote)
            if kind == "top":
                pred = Top(local[ids[0]])
            elif kind == "rank":
                pred = ModalRanking(tuple(local[a] for a in ids))
            else:
                pred = TopT(frozenset(local[a] for a in ids))
            reports.append(VoterReport(v, pred, pid))
        out[key] = Profile(len(alternatives), reports, alternatives,
                           meta={"domain": key[0], "question_id": key[1]})
    return out


def _prediction_cells(p: Profile, pred) -> tuple[str, str]:
    if isinstance(pred, Top):
        return "top", str(p.alternatives[pred.alternative])
    if isinstance(pred, ModalRanking):
        return "rank", format_ranking(p.to_global(pred.ranking))
    if isinstance(pred, TopT):
        return "top_t", ",".join(str(a) for a in sorted(p.alternatives[x] for x in pred.alternatives))
    if isinstance(pred, FullPosterior):
        raise ParameterError("full-posterior predictions have no CSV form")
    raise ParameterError(f"unknown prediction report {pred!r}")


def profiles_to_csv(profiles: Mapping[QuestionKey, Profile]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PROFILE_HEADER)
    for key in sorted(profiles):
        p = profiles[key]
        for i, r in enumerate(p.reports):
            pid = r.participant if r.participant is not None else f"v{i}"
            w.writerow([key[0], key[1], pid, format_ranking(p.to_global(r.vote)), *_prediction_cells(p, r.prediction)])
    return buf.getvalue()


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def save_profiles(profiles: Mapping[QuestionKey, Profile], path) -> None:
    _write_text(path, profiles_to_csv(profiles))


def load_ground_truths(path) -> dict[QuestionKey, Ranking]:
    out = {}
    for line, row in _read_rows(path, TRUTH_HEADER):
        key = (row["domain"], row["question_id"])
        if key in out:
            raise _field_error(line, "question_id", f"duplicate ground truth for {key}")
        out[key] = _parse_ids(row["ranking"], line, "ranking")
    return out


def save_ground_truths(truths: Mapping[QuestionKey, Ranking], path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRUTH_HEADER)
    for key in sorted(truths):
        w.writerow([key[0], key[1], format_ranking(truths[key])])
    _write_text(path, buf.getvalue())


# ---------------------------------------------------------------------------
# JSON documents


def model_to_dict(spec: ModelSpec) -> dict:
    pr = spec.params
    out = {"kind": spec.kind, "m": spec.m, "ground_truth": list(spec.ground_truth),
           "proportions": [float(x) for x in pr.proportions]}
    if spec.kind == "CMM":
        out["dispersions"] = [float(x) for x in pr.dispersions]
    else:
        out["strengths"] = [[float(x) for x in row] for row in pr.strengths]
    return out


def model_from_dict(d: Mapping) -> ModelSpec:
    try:
        kind = d["kind"]
        m = int(d["m"])
        gt = d.get("ground_truth")
        if kind == "CMM":
            return ModelSpec.cmm(d["proportions"], d["dispersions"], m, gt)
        if kind == "CMPL":
            spec = ModelSpec.cmpl(d["proportions"], d["strengths"], gt)
            if spec.m != m:
                raise ParameterError(f"strength rows of length {spec.m} but m={m}")
            return spec
    except KeyError as exc:
        raise ParameterError(f"model document lacks field {exc.args[0]!r}") from None
    raise ParameterError(f"unknown model kind {kind!r}")


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from None


def load_model(path) -> ModelSpec:
    return model_from_dict(read_json(path))


def save_model(spec: ModelSpec, path) -> None:
    _write_text(path, json.dumps(model_to_dict(spec), sort_keys=True, indent=2) + "\n")


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {"model": model_to_dict(cfg.model), "aggregators": list(cfg.aggregators),
            "sample_sizes": list(cfg.sample_sizes), "trials": cfg.trials,
            "bootstrap_reps": cfg.bootstrap_reps, "confidence": cfg.confidence, "seed": cfg.seed}


def config_from_dict(d: Mapping, seed: int | None = None) -> ExperimentConfig:
    """Experiment config; an explicit ``seed`` overrides the document's."""
    if "model" not in d:
        raise ParameterError("experiment document lacks field 'model'")
    kw = {k: d[k] for k in ("aggregators", "sample_sizes", "trials", "bootstrap_reps", "confidence", "seed") if k in d}
    if seed is not None:
        kw["seed"] = seed
    return ExperimentConfig(model_from_dict(d["model"]), **kw)


def load_experiment_config(path, seed: int | None = None) -> ExperimentConfig:
    return config_from_dict(read_json(path), seed)


def save_experiment_config(cfg: ExperimentConfig, path) -> None:
    _write_text(path, json.dumps(config_to_dict(cfg), sort_keys=True, indent=2) + "\n")


def mcmc_from_dict(d: Mapping | None, seed: int | None = None) -> McmcConfig:
    d = dict(d or {})
    if seed is not None:
        d["seed"] = seed
    unknown = set(d) - {"chains", "iterations", "warmup", "proposal_scale", "seed"}
    if unknown:
        raise ParameterError(f"unknown MCMC fields {sorted(unknown)}")
    return McmcConfig(**d)


def priors_from_dict(d: Mapping | None) -> PriorSpec | None:
    if not d:
        return None
    try:
        return PriorSpec(tuple(d["proportions"]), tuple(tuple(x) for x in d["votes"]),
                         tuple(tuple(x) for x in d["predictions"]))
    except KeyError as exc:
        raise ParameterError(f"prior document lacks field {exc.args[0]!r}") from None


# ---------------------------------------------------------------------------
# Result tables


def results_to_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_HEADER)
    for r in result.rows:
        w.writerow([r.aggregator, r.n, _fmt(r.mean_kt), _fmt(r.ci_lo), _fmt(r.ci_hi), r.trials])
    return buf.getvalue()


def save_results(result: ExperimentResult, path) -> None:
    _write_text(path, results_to_csv(result))


def load_results(path) -> ExperimentResult:
    rows = []
    for line, row in _read_rows(path, RESULT_HEADER):
        try:
            rows.append(ResultRow(row["aggregator"], int(row["n"]), float(row["mean_kt"]),
                                  float(row["ci_lo"]), float(row["ci_hi"]), int(row["trials"])))
        except ValueError as exc:
            raise ParseError(f"line {line}: {exc}") from None
    return ExperimentResult(rows)


def posterior_to_csv(samples: PosteriorSamples) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(POSTERIOR_HEADER)
    for s in samples.summary():
        w.writerow([s["parameter"]] + [_fmt(s[k]) for k in POSTERIOR_HEADER[1:]])
    return buf.getvalue()


def save_posterior_summary(samples: PosteriorSamples, path) -> None:
    _write_text(path, posterior_to_csv(samples))


def modal_profile_from_votes(votes: np.ndarray, preds: np.ndarray, domain: str = "synthetic",
                             question: str = "q0") -> dict[QuestionKey, Profile]:
    """Single-question profile from vote and modal-prediction arrays (local = global ids)."""
    m = votes.shape[1]
    reports = [VoterReport(tuple(int(a) for a in v), ModalRanking(tuple(int(a) for a in q)), f"v{i}")
               for i, (v, q) in enumerate(zip(votes, preds))]
    return {(domain, question): Profile(m, reports, tuple(range(m)), meta={"domain": domain, "question_id": question})}
