"""Command-line entry point: ``collusionlab <command> [flags]``.

Exit codes: 0 success, 1 a bound check failed, 2 invalid flags,
3 unsupported combination, 4 oracle budget exceeded under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .classify import classify
from .core import (
    CollusionLabError,
    Rule,
    ScoringProfile,
    TieBreak,
    Unsupported,
    tally,
    WrongRule,
)
from .count import (
    BoundId,
    BoundSpec,
    audit_kapproval,
    count_almost_equal,
    count_scoring_profiles,
)
from .estimate import (
    EXHAUSTIVE,
    MONTE_CARLO,
    BoundCheck,
    ExperimentConfig,
    GridPoint,
    agreement_harness,
    estimate_fraction,
    sweep,
    verify_bounds,
)
from .oracle import DEFAULT_BUDGET, Budget, Status, collusion_oracle
from .presets import BOUND_PRESETS, HARNESS_PRESETS
from .sample import RngStream, sample_ic, sample_isc

SEED_ENV = "COLLUSIONLAB_SEED"

EXIT_OK, EXIT_FAIL, EXIT_FLAGS, EXIT_UNSUPPORTED, EXIT_BUDGET = 0, 1, 2, 3, 4

ESTIMATE_COLUMNS = [
    "rule", "k", "n", "m", "c", "tiebreak", "culture", "trials",
    "proof", "manipulable", "unknown", "fraction", "ci_low", "ci_high", "seed",
]
BOUND_COLUMNS = [
    "bound_id", "n", "m", "c", "k", "tiebreak", "mode", "value", "bound", "verdict",
    "ci_low", "ci_high", "note",
]
AUDIT_COLUMNS = ["rule", "n", "m", "k", "authoritative", "paper_formula", "match"]


class UsageError(Exception):
    pass


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _int_list(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(rows: list, columns: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(col, "")) for col in columns])
    return buf.getvalue()


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def emit(args, text: str, started: str, config: dict, suffix: str = ""):
    """Write ``text`` to ``--out`` with a manifest sidecar, or to stdout."""
    if not args.out:
        sys.stdout.write(text)
        return
    path = Path(args.out + suffix) if suffix else Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = text.encode("utf-8")
    path.write_bytes(data)
    manifest = {
        "tool": "collusionlab",
        "version": __version__,
        "command": args.command,
        "config": config,
        "seed": config.get("seed"),
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "outputs": {path.name: _digest(data)},
    }
    Path(str(path) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _resolved_config(args) -> dict:
    skip = {"func", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return _u64(env)
    except (ValueError, argparse.ArgumentTypeError):
        raise UsageError(f"{SEED_ENV} must be an unsigned 64-bit integer")


def _rule(args) -> Rule:
    if args.rule == "kapproval" and args.k is None:
        raise UsageError("--k is required for kapproval")
    return Rule.from_name(args.rule, args.m, args.k)


def _profile(args) -> ScoringProfile:
    if args.scores is None:
        raise UsageError("--scores is required")
    rule = _rule(args)
    return ScoringProfile(tuple(args.scores), args.n, rule)


def _experiment(args, **overrides) -> ExperimentConfig:
    fields = dict(
        rule=args.rule, m=args.m, n=args.n, c=args.c,
        k=args.k if args.rule == "kapproval" else None,
        tie_break=args.tiebreak, culture=args.culture, trials=args.trials,
        seed=_seed(args), oracle_budget=args.oracle_budget,
        resolve_unknown=args.resolve_unknown, labeler=args.labeler,
    )
    fields.update(overrides)
    return ExperimentConfig(**fields)


# Commands -------------------------------------------------------------------


def cmd_classify(args) -> int:
    x = _profile(args)
    tb = TieBreak.parse(args.tiebreak)
    record = classify(x, args.c, tb).to_dict()
    code = EXIT_OK
    if args.oracle:
        verdict = collusion_oracle(x, args.c, tb, Budget(args.oracle_budget))
        record["oracle_status"] = verdict.status.value
        if verdict.witness:
            record["witness"] = verdict.witness.to_dict()
        if verdict.status is Status.BUDGET_EXCEEDED and args.strict:
            code = EXIT_BUDGET
    sys.stdout.write(json.dumps(record, sort_keys=True) + "\n")
    return code


def cmd_oracle(args) -> int:
    x = _profile(args)
    verdict = collusion_oracle(x, args.c, TieBreak.parse(args.tiebreak), Budget(args.oracle_budget))
    record = {
        "status": verdict.status.value,
        "evaluations": verdict.evaluations,
        "witness": verdict.witness.to_dict() if verdict.witness else None,
    }
    sys.stdout.write(json.dumps(record, sort_keys=True) + "\n")
    if verdict.status is Status.BUDGET_EXCEEDED and args.strict:
        return EXIT_BUDGET
    return EXIT_OK


def cmd_count(args) -> int:
    started = datetime.now(timezone.utc).isoformat()
    rule = _rule(args)
    if args.audit:
        if rule.approvals is None or rule.kind.value == "veto":
            raise Unsupported("--audit applies to plurality and k-approval")
        row = audit_kapproval(args.n, rule.approvals, args.m)
        record = asdict(row)
        record["match"] = row.match
        emit(args, write_csv([record], AUDIT_COLUMNS), started, _resolved_config(args))
        return EXIT_OK
    record = {"rule": rule.kind.value, "n": args.n, "m": args.m, "k": rule.approvals,
              "scoring_profiles": count_scoring_profiles(rule, args.n)}
    if args.almost_equal:
        record["almost_equal"] = count_almost_equal(rule, args.n)
    emit(args, json.dumps(record, sort_keys=True) + "\n", started, _resolved_config(args))
    return EXIT_OK


def cmd_sample(args) -> int:
    started = datetime.now(timezone.utc).isoformat()
    rule = _rule(args)
    gen = RngStream(_seed(args)).generator()
    columns = ["sample"] + [f"x{i}" for i in range(args.m)]
    if args.culture == "ic":
        columns.append("votes")
    rows = []
    for i in range(args.trials):
        if args.culture == "isc":
            x = sample_isc(rule, args.n, gen)
            rows.append({"sample": i, **{f"x{j}": s for j, s in enumerate(x.scores)}})
        else:
            votes = sample_ic(args.n, args.m, gen)
            x = tally(votes, rule)
            row = {"sample": i, **{f"x{j}": s for j, s in enumerate(x.scores)}}
            row["votes"] = "|".join(">".join(map(str, v)) for v in votes)
            rows.append(row)
    config = _resolved_config(args)
    config["seed"] = _seed(args)
    emit(args, write_csv(rows, columns), started, config)
    return EXIT_OK


def cmd_estimate(args) -> int:
    started = datetime.now(timezone.utc).isoformat()
    cfg = _experiment(args)
    result = estimate_fraction(cfg, threads=args.threads)
    config = asdict(cfg)
    emit(args, write_csv([result.row()], ESTIMATE_COLUMNS), started, config)
    if args.strict and result.unknown_count:
        return EXIT_BUDGET
    return EXIT_OK


def cmd_sweep(args) -> int:
    started = datetime.now(timezone.utc).isoformat()
    axis = args.axis.lower()
    first = {axis: args.values[0]}
    cfg = _experiment(args, **first)
    rows = []
    columns = ESTIMATE_COLUMNS + ["error"]
    for point in sweep(cfg, axis, args.values, threads=args.threads):
        if point.result is not None:
            rows.append(point.result.row())
        else:
            rows.append({"rule": cfg.rule, "n": cfg.n, "m": cfg.m, axis: point.value, "error": point.error})
    config = asdict(cfg)
    config.update(axis=axis, values=args.values)
    emit(args, write_csv(rows, columns), started, config)
    return EXIT_OK


def _bound_checks(args) -> list:
    if args.preset:
        return BOUND_PRESETS[args.preset]()
    if not args.bound:
        raise UsageError("give --preset or --bound")
    spec = BoundSpec(BoundId(args.bound), args.n, args.m, c=args.c, k=args.k, lam=args.lam)
    return [BoundCheck(spec, args.mode, args.tiebreak, args.trials, _seed(args))]


def cmd_verify_bounds(args) -> int:
    started = datetime.now(timezone.utc).isoformat()
    rows = verify_bounds(_bound_checks(args))
    emit(args, write_csv([r.row() for r in rows], BOUND_COLUMNS), started, _resolved_config(args))
    return EXIT_FAIL if any(r.verdict == "Fail" for r in rows) else EXIT_OK


def cmd_harness(args) -> int:
    started = datetime.now(timezone.utc).isoformat()
    if args.preset:
        grid = HARNESS_PRESETS[args.preset]()
    else:
        _rule(args)
        grid = [GridPoint(args.rule, args.m, args.n, args.c, args.tiebreak,
                          args.k if args.rule == "kapproval" else None)]
    report = agreement_harness(grid, Budget(args.oracle_budget))
    text = json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n"
    emit(args, text, started, _resolved_config(args))
    if args.strict and report.errors:
        return EXIT_BUDGET
    return EXIT_OK


# Parser ---------------------------------------------------------------------


def _add_profile_flags(p, need_scores=False):
    p.add_argument("--rule", choices=["plurality", "veto", "kapproval", "borda"], required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--c", type=int, default=1)
    p.add_argument("--tiebreak", choices=["for", "against", "fixed"], default="for")
    if need_scores:
        p.add_argument("--scores", type=_int_list, required=True)


def _add_common(p, seed=True, trials=True):
    if seed:
        p.add_argument("--seed", type=_u64, help=f"defaults to ${SEED_ENV} or 0")
    if trials:
        p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--culture", choices=["ic", "isc"], default="isc")
    p.add_argument("--out")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--oracle-budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--resolve-unknown", type=_bool, default=True)
    p.add_argument("--labeler", choices=["classify", "oracle"], default="classify")
    p.add_argument("--strict", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="collusionlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="classify one scoring profile")
    _add_profile_flags(p, need_scores=True)
    p.add_argument("--oracle", action="store_true", help="also run the brute-force oracle")
    p.add_argument("--oracle-budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("oracle", help="brute-force verdict for one scoring profile")
    _add_profile_flags(p, need_scores=True)
    p.add_argument("--oracle-budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("count", help="exact scoring-profile counts")
    p.add_argument("--rule", choices=["plurality", "veto", "kapproval", "borda"], required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--audit", action="store_true", help="compare with the printed k-approval sum")
    p.add_argument("--almost-equal", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("sample", help="draw IC or ISC samples")
    _add_profile_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("estimate", help="Monte Carlo proof fraction")
    _add_profile_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="estimates along n or m")
    _add_profile_flags(p)
    p.set_defaults(n=None, m=None)
    for action in p._actions:
        if action.dest in ("n", "m"):
            action.required = False
    p.add_argument("--axis", choices=["n", "m", "N", "M"], required=True)
    p.add_argument("--values", type=_int_list, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify-bounds", help="check the closed-form lower bounds")
    p.add_argument("--preset", choices=sorted(BOUND_PRESETS))
    p.add_argument("--bound", choices=[b.value for b in BoundId if b is not BoundId.BORDA_LIMIT])
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--c", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--lam", type=float)
    p.add_argument("--mode", choices=[EXHAUSTIVE, MONTE_CARLO], default=EXHAUSTIVE)
    p.add_argument("--tiebreak", choices=["for", "against", "fixed"], default="for")
    p.add_argument("--seed", type=_u64)
    p.add_argument("--trials", type=int, default=20_000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify_bounds)

    p = sub.add_parser("harness", help="classifier vs oracle agreement report (JSON)")
    p.add_argument("--preset", choices=sorted(HARNESS_PRESETS))
    p.add_argument("--rule", choices=["plurality", "veto", "kapproval", "borda"])
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--c", type=int, default=1)
    p.add_argument("--tiebreak", choices=["for", "against", "fixed"], default="for")
    p.add_argument("--oracle-budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_harness)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sweep":
            other = "m" if args.axis.lower() == "n" else "n"
            if getattr(args, other) is None:
                raise UsageError(f"--{other} is required when sweeping over {args.axis.lower()}")
        if args.command == "harness" and not args.preset and None in (args.rule, args.n, args.m):
            raise UsageError("give --preset or --rule/--n/--m")
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (Unsupported, WrongRule) as exc:
        sys.stderr.write(f"collusionlab: unsupported: {exc}\n")
        return EXIT_UNSUPPORTED
    except CollusionLabError as exc:
        sys.stderr.write(f"collusionlab: error: {exc}\n")
        return EXIT_FLAGS


if __name__ == "__main__":
    sys.exit(main())
