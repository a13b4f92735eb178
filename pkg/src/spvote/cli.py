"""Command-line interface.

Exit status is 0 on success, 1 for invalid input or usage, 2 for failures
while running (I/O and the like).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

import numpy as np

from . import dataset_io as dio
from .baselines import borda_scores, copeland_scores, order_by_score, pairwise_tally
from .errors import ParameterError, SPVoteError
from .experiments import run_real_data, run_sample_complexity, simulate_reports, validate_common
from .identifiability import (
    check_condition,
    cmm_g2_condition,
    cmm_general_condition,
    cmpl_g2_condition,
    cmpl_general_condition,
    separation_ratio,
)
from .inference import cmm_exact_infer, cmm_infer, cmpl_infer, predict_full_ranking_cmpl
from .models import CmmParams, CmplParams, ModelSpec
from .rankings import format_ranking, inverse, kendall_tau, parse_ranking
from .sp_engine import ModalRanking, partial_sp, sp_modal_scores, sp_vote_modal

RULES = ("sp-modal", "copeland", "borda", "partial-sp")
LEMMA_TAGS = ("cmm2", "cmmg", "cmpl2", "cmplg")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _matrix(text: str) -> list[list[float]]:
    return [_floats(row) for row in text.split(";")]


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _select(profiles: dict, domain: str | None, question: str | None) -> dict:
    out = {k: p for k, p in profiles.items()
           if (domain is None or k[0] == domain) and (question is None or k[1] == question)}
    if not out:
        raise ParameterError("no question matches the selection")
    return out


# ---------------------------------------------------------------------------
# Subcommands


def cmd_simulate(args) -> int:
    spec = dio.load_model(args.model)
    if args.n < 1:
        raise ParameterError("--n must be positive")
    votes, preds = simulate_reports(spec, args.n, args.seed)
    dio.save_profiles(dio.modal_profile_from_votes(votes, preds, args.domain, args.question), args.out)
    return 0


def aggregate_profile(profile, rule: str, form: str = "ratio") -> dict:
    """Winner (global ids), scores and diagnostics of one profile."""
    diag = {"rule": rule, "n": profile.n, "m": profile.m, **profile.meta}
    if rule == "sp-modal":
        scores = sp_modal_scores(profile, form)
        winner = sp_vote_modal(profile, form)
        keyed = {format_ranking(profile.to_global(r)): s for r, s in scores.items()}
        diag["form"] = form
    else:
        V = profile.votes()
        s = copeland_scores(pairwise_tally(V)) if rule == "copeland" else borda_scores(V)
        winner = order_by_score(s)
        keyed = {str(profile.alternatives[a]): float(s[a]) for a in range(profile.m)}
    return {"winner": format_ranking(profile.to_global(winner)), "scores": keyed, "diagnostics": diag}


def cmd_aggregate(args) -> int:
    profiles = _select(dio.load_profiles(args.input), args.domain, args.question)
    if args.rule == "partial-sp":
        keys = sorted(profiles)
        winner = partial_sp([profiles[k] for k in keys], m=args.universe)
        _emit({"winner": format_ranking(winner), "scores": {},
               "diagnostics": {"rule": "partial-sp", "subsets": len(keys)}})
        return 0
    for key in sorted(profiles):
        _emit(aggregate_profile(profiles[key], args.rule, args.form))
    return 0


def identifiability_report(args):
    if args.model:
        spec = dio.load_model(args.model)
        expected = {"cmm2": ("CMM", 2), "cmpl2": ("CMPL", 2)}.get(args.lemma)
        kind = "CMM" if args.lemma.startswith("cmm") else "CMPL"
        if spec.kind != kind or (expected and spec.G != 2):
            raise ParameterError(f"lemma {args.lemma} does not apply to a {spec.kind} model with G={spec.G}")
        s = None if args.lemma in ("cmm2", "cmpl2") else (args.s or 1)
        return check_condition(spec, s), spec
    if args.lemma == "cmm2":
        if args.p1 is None or args.phi is None or args.m is None or len(args.phi) != 2:
            raise ParameterError("cmm2 needs --p1, --phi a,b and --m")
        return cmm_g2_condition(args.p1, args.phi[0], args.phi[1], args.m), None
    if args.lemma == "cmpl2":
        if args.p1 is None or args.theta is None or len(args.theta) != 2:
            raise ParameterError("cmpl2 needs --p1 and --theta row1;row2")
        return cmpl_g2_condition(args.p1, args.theta[0], args.theta[1]), None
    if args.p is None:
        raise ParameterError(f"{args.lemma} needs --p")
    if args.lemma == "cmmg":
        if args.phi is None or args.m is None:
            raise ParameterError("cmmg needs --phi and --m")
        return cmm_general_condition(CmmParams(args.p, args.phi), args.s or 1, args.m), None
    if args.theta is None:
        raise ParameterError("cmplg needs --theta")
    return cmpl_general_condition(CmplParams(args.p, args.theta), args.s or 1), None


def cmd_check(args) -> int:
    report, spec = identifiability_report(args)
    out = report.to_dict()
    if args.verify:
        if spec is None:
            p = args.p if args.p is not None else [args.p1, 1 - args.p1]
            spec = (ModelSpec.cmm(p, args.phi, args.m) if args.lemma.startswith("cmm")
                    else ModelSpec.cmpl(p, args.theta))
        out["separation_ratio"] = separation_ratio(spec)
    _emit(out)
    return 0


def relative_pairs(profiles: dict, truths: dict, with_predictions: bool | None = None):
    """Pool reports as rankings relative to each question's ground truth.

    Each vote is rewritten so that its question's ground truth becomes the
    identity; all pooled questions must share ``m``. Predictions are used
    when every report carries a full-ranking prediction.
    """
    keys = sorted(profiles)
    ms = {profiles[k].m for k in keys}
    if len(ms) != 1:
        raise ParameterError(f"pooled questions differ in m: {sorted(ms)}")
    if with_predictions is None:
        with_predictions = all(isinstance(r.prediction, ModalRanking) for k in keys for r in profiles[k].reports)
    pairs = []
    for k in keys:
        if k not in truths:
            raise ParameterError(f"no ground truth for {k}")
        p = profiles[k]
        local = {a: j for j, a in enumerate(p.alternatives)}
        try:
            gt_local = tuple(local[a] for a in truths[k])
        except KeyError:
            raise ParameterError(f"ground truth of {k} names alternatives outside the question") from None
        pos = inverse(gt_local)
        for r in p.reports:
            v = tuple(pos[a] for a in r.vote)
            if with_predictions:
                if not isinstance(r.prediction, ModalRanking):
                    raise ParameterError(f"report of {r.participant} in {k} lacks a ranking prediction")
                q = tuple(pos[a] for a in r.prediction.ranking)
            else:
                q = None
            pairs.append((v, q))
    return pairs, ms.pop()


def run_inference(kind: str, pairs, m: int, G: int, priors, mcmc, threads):
    identity = tuple(range(m))
    if kind == "cmm":
        data = [(kendall_tau(v, identity), np.nan if q is None else kendall_tau(q, identity)) for v, q in pairs]
        return cmm_infer(data, G, m, priors, mcmc, threads)
    if kind == "cmm-exact":
        return cmm_exact_infer(pairs, identity, G, priors, mcmc, threads)
    return cmpl_infer(pairs, identity, G, priors, mcmc, threads)


def _load_infer_config(path, seed):
    doc = dio.read_json(path) if path else {}
    return dio.priors_from_dict(doc.get("priors")), dio.mcmc_from_dict(doc.get("mcmc"), seed)


def cmd_infer(args) -> int:
    profiles = _select(dio.load_profiles(args.input), args.domain, args.question)
    truths = dio.load_ground_truths(args.truth)
    priors, mcmc = _load_infer_config(args.config, args.seed)
    pairs, m = relative_pairs(profiles, truths, False if args.votes_only else None)
    samples = run_inference(args.model, pairs, m, args.G, priors, mcmc, args.threads)
    dio.save_posterior_summary(samples, args.out)
    _emit({"acceptance_rate": samples.acceptance_rate, "draws": int(samples.flat.shape[0]),
           "rejected_nonfinite": samples.diagnostics["rejected_nonfinite"], **samples.meta,
           "max_rhat": max(samples.diagnostics["rhat"].values())})
    return 0


def cmd_experiment(args) -> int:
    doc = dio.read_json(args.config)
    if args.profiles:
        if not args.truth:
            raise ParameterError("--profiles needs --truth")
        profiles = dio.load_profiles(args.profiles)
        truths = dio.load_ground_truths(args.truth)
        aggs = tuple(doc.get("aggregators", ("sp-modal", "copeland")))
        sizes = tuple(doc.get("sample_sizes", (10, 20, 30, 40, 48)))
        trials, reps = doc.get("trials", 100), doc.get("bootstrap_reps", 1000)
        conf = doc.get("confidence", 0.95)
        validate_common(aggs, sizes, trials, reps, conf)
        result = run_real_data(profiles, truths, aggs, sizes, trials, args.seed, reps, conf, args.threads)
    else:
        cfg = dio.config_from_dict(doc, args.seed)
        result = run_sample_complexity(cfg, args.threads)
    dio.save_results(result, args.out)
    return 0


def cmd_predict_full(args) -> int:
    profiles = dio.load_profiles(args.input)
    truths = dio.load_ground_truths(args.truth)
    priors, mcmc = _load_infer_config(args.config, args.seed)
    fits = []
    for key in sorted(profiles):
        pairs, m = relative_pairs({key: profiles[key]}, truths, False if args.votes_only else None)
        fits.append((tuple(truths[key]), run_inference("cmpl", pairs, m, args.G, priors, mcmc, args.threads)))
    universe = args.universe or 1 + max(a for p in profiles.values() for a in p.alternatives)
    reference = parse_ranking(args.reference) if args.reference else None
    pred = predict_full_ranking_cmpl(fits, universe, args.bootstrap, args.seed, args.group, reference=reference)
    out = {"distribution": {format_ranking(r): f for r, f in sorted(pred.distribution.items())}}
    if pred.kt_histogram is not None:
        out["kt_histogram"] = {str(d): c for d, c in sorted(pred.kt_histogram.items())}
    _emit(out)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spvote", description="Surprisingly-popular voting under concentric mixture models.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, seed=True):
        if seed:
            p.add_argument("--seed", type=int, required=True)
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("simulate", help="sample votes and modal predictions into a profiles CSV")
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--domain", default="synthetic")
    p.add_argument("--question", default="q0")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("aggregate", help="aggregate each question of a profiles CSV")
    p.add_argument("--rule", choices=RULES, required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--form", choices=("ratio", "difference"), default="ratio")
    p.add_argument("--domain")
    p.add_argument("--question")
    p.add_argument("--universe", type=int, help="universe size for partial-sp")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("check-identifiability", help="evaluate a sufficient identifiability condition")
    p.add_argument("--lemma", choices=LEMMA_TAGS, required=True)
    p.add_argument("--model", help="model JSON (alternative to the parameter flags)")
    p.add_argument("--p1", type=float)
    p.add_argument("--p", type=_floats)
    p.add_argument("--phi", type=_floats)
    p.add_argument("--theta", type=_matrix, help="rows separated by ';'")
    p.add_argument("--m", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--verify", action="store_true", help="also report the exact separation ratio")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("infer", help="posterior inference of mixture parameters")
    p.add_argument("--model", choices=("cmm", "cmm-exact", "cmpl"), required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--G", type=int, required=True)
    p.add_argument("--config", help="JSON with optional 'mcmc' and 'priors' objects")
    p.add_argument("--out", required=True)
    p.add_argument("--domain")
    p.add_argument("--question")
    p.add_argument("--votes-only", action="store_true")
    common(p)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("experiment", help="sample-complexity or real-data experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--profiles", help="profiles CSV for a real-data run")
    p.add_argument("--truth", help="ground-truth CSV for a real-data run")
    common(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("predict-full", help="stitch a full ranking from per-question CMPL fits")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--G", type=int, required=True)
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--group", type=int, default=0)
    p.add_argument("--universe", type=int)
    p.add_argument("--reference", help="ranking text for the KT histogram")
    p.add_argument("--config")
    p.add_argument("--votes-only", action="store_true")
    common(p)
    p.set_defaults(func=cmd_predict_full)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"spvote: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
        print("spvote: error: --threads must be positive", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (SPVoteError, ValueError) as exc:
        print(f"spvote: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - every other failure is a runtime error
        print(f"spvote: runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
