"""Monte Carlo and exhaustive measurement of proof fractions.

Trials are cut into fixed blocks of :data:`BLOCK_SIZE`; block ``i`` draws
from ``spawn_stream(root, i)``.  Worker threads only decide who runs which
block, so tallies are identical for any ``threads`` value.
"""

from __future__ import annotations

import itertools
import math
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from statsmodels.stats.proportion import proportion_confint

from .classify import Classification, borda_sufficient_manipulable, classify
from .core import (
    CollusionLabError,
    OutOfRegime,
    PreconditionViolated,
    Rule,
    RuleKind,
    ScoringProfile,
    TieBreak,
    TooLarge,
    Unsupported,
    make_score_vector,
    tally,
    tally_votes,
)
from .count import (
    BoundId,
    BoundSpec,
    bound_value,
    count_scoring_profiles,
    enumerate_scoring_profiles,
)
from .oracle import DEFAULT_BUDGET, Budget, Status, collusion_oracle, replay_witness
from .sample import RngStream, sample_ic, sample_isc, spawn_stream

BLOCK_SIZE = 500
EXHAUSTIVE_GUARD = 10**7
CULTURES = ("ic", "isc")
LABELERS = ("classify", "oracle")


@dataclass(frozen=True)
class ExperimentConfig:
    rule: str
    m: int
    n: int
    c: int = 1
    k: Optional[int] = None
    tie_break: str = "for"
    culture: str = "isc"
    trials: int = 10_000
    seed: int = 0
    oracle_budget: int = DEFAULT_BUDGET
    resolve_unknown: bool = True
    labeler: str = "classify"

    def __post_init__(self):
        self.rule_obj  # validates rule, m and k
        TieBreak.parse(self.tie_break)
        if self.culture not in CULTURES:
            raise PreconditionViolated(f"culture must be one of {CULTURES}")
        if self.labeler not in LABELERS:
            raise PreconditionViolated(f"labeler must be one of {LABELERS}")
        if self.trials < 1:
            raise PreconditionViolated("trials must be at least 1")
        if self.c < 1 or self.n < 0:
            raise PreconditionViolated("need c >= 1 and n >= 0")
        if self.culture == "isc" and self.rule_obj.kind is RuleKind.BORDA:
            raise Unsupported("ISC is not defined for Borda")

    @property
    def rule_obj(self) -> Rule:
        return Rule.from_name(self.rule, self.m, self.k)

    @property
    def tb(self) -> TieBreak:
        return TieBreak.parse(self.tie_break)

    def with_axis(self, axis: str, value: int) -> "ExperimentConfig":
        return replace(self, **{axis.lower(): value})


def label(x: ScoringProfile, cfg: ExperimentConfig) -> Status:
    """Proof status of one sampled scoring profile under ``cfg``."""
    if cfg.labeler == "oracle":
        status = collusion_oracle(x, cfg.c, cfg.tb, Budget(cfg.oracle_budget)).status
    else:
        status = classify(x, cfg.c, cfg.tb).status
        if status is Status.UNKNOWN and cfg.resolve_unknown:
            status = collusion_oracle(x, cfg.c, cfg.tb, Budget(cfg.oracle_budget)).status
    return Status.UNKNOWN if status is Status.BUDGET_EXCEEDED else status


def _draw(cfg: ExperimentConfig, gen) -> ScoringProfile:
    if cfg.culture == "isc":
        return sample_isc(cfg.rule_obj, cfg.n, gen)
    return tally(sample_ic(cfg.n, cfg.m, gen), cfg.rule_obj)


def wilson_interval(successes: int, trials: int) -> tuple:
    low, high = proportion_confint(successes, trials, alpha=0.05, method="wilson")
    p = successes / trials
    return min(max(0.0, float(low)), p), max(min(1.0, float(high)), p)


@dataclass(frozen=True)
class EstimateResult:
    config: ExperimentConfig
    trials: int
    proof_count: int
    manipulable_count: int
    unknown_count: int
    fraction_proof: float
    ci_low: float
    ci_high: float
    seed: int
    elapsed: float = field(default=0.0, compare=False)

    def row(self) -> dict:
        cfg = self.config
        return {
            "rule": cfg.rule,
            "k": "" if cfg.k is None else cfg.k,
            "n": cfg.n,
            "m": cfg.m,
            "c": cfg.c,
            "tiebreak": cfg.tie_break,
            "culture": cfg.culture,
            "trials": self.trials,
            "proof": self.proof_count,
            "manipulable": self.manipulable_count,
            "unknown": self.unknown_count,
            "fraction": self.fraction_proof,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "seed": self.seed,
        }


def _run_block(cfg: ExperimentConfig, root: RngStream, index: int, cache: dict) -> Counter:
    gen = spawn_stream(root, index).generator()
    size = min(BLOCK_SIZE, cfg.trials - index * BLOCK_SIZE)
    counts = Counter()
    for _ in range(size):
        x = _draw(cfg, gen)
        status = cache.get(x.scores)
        if status is None:
            status = cache[x.scores] = label(x, cfg)
        counts[status] += 1
    return counts


def estimate_fraction(
    cfg: ExperimentConfig, threads: int = 1, stream: Optional[RngStream] = None
) -> EstimateResult:
    """Monte Carlo proof fraction with a 95% Wilson interval."""
    start = time.perf_counter()
    root = stream or RngStream(cfg.seed)
    blocks = range(math.ceil(cfg.trials / BLOCK_SIZE))
    cache: dict = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda i: _run_block(cfg, root, i, cache), blocks))
    else:
        parts = [_run_block(cfg, root, i, cache) for i in blocks]
    total = sum(parts, Counter())
    proof = total[Status.PROOF]
    low, high = wilson_interval(proof, cfg.trials)
    return EstimateResult(
        cfg, cfg.trials, proof, total[Status.MANIPULABLE], total[Status.UNKNOWN],
        proof / cfg.trials, low, high, cfg.seed, time.perf_counter() - start,
    )


def _ic_profiles(n: int, m: int):
    """Multisets of n orders with their number of orderings."""
    orders = list(itertools.permutations(range(m)))
    for votes in itertools.combinations_with_replacement(orders, n):
        mult = math.factorial(n)
        for _, group in itertools.groupby(votes):
            mult //= math.factorial(len(list(group)))
        yield votes, mult


def exhaustive_fraction(cfg: ExperimentConfig) -> tuple:
    """Exact (proof, manipulable, unknown) fractions over the whole support."""
    rule = cfg.rule_obj
    counts = Counter()
    if cfg.culture == "isc":
        size = count_scoring_profiles(rule, cfg.n)
        if size > EXHAUSTIVE_GUARD:
            raise TooLarge(f"|S| = {size} exceeds {EXHAUSTIVE_GUARD}")
        for x in enumerate_scoring_profiles(rule, cfg.n):
            counts[label(x, cfg)] += 1
    else:
        size = math.factorial(cfg.m) ** cfg.n
        if size > EXHAUSTIVE_GUARD:
            raise TooLarge(f"(m!)^n = {size} exceeds {EXHAUSTIVE_GUARD}")
        alpha = make_score_vector(rule)
        cache = {}
        for votes, mult in _ic_profiles(cfg.n, cfg.m):
            scores = tuple(tally_votes(votes, alpha))
            if scores not in cache:
                cache[scores] = label(ScoringProfile(scores, cfg.n, rule), cfg)
            counts[cache[scores]] += mult
    return tuple(
        Fraction(counts[s], size) for s in (Status.PROOF, Status.MANIPULABLE, Status.UNKNOWN)
    )


@dataclass(frozen=True)
class SweepRow:
    value: int
    result: Optional[EstimateResult] = None
    error: Optional[str] = None


def sweep(
    cfg: ExperimentConfig, axis: str, values: Sequence[int], threads: int = 1
) -> list:
    """One estimate per axis value; point ``i`` uses ``spawn_stream(seed, i)``."""
    if axis.lower() not in ("n", "m"):
        raise PreconditionViolated("axis must be n or m")
    root = RngStream(cfg.seed)
    rows = []
    for i, value in enumerate(values):
        try:
            point = cfg.with_axis(axis, value)
            rows.append(SweepRow(value, estimate_fraction(point, threads, spawn_stream(root, i))))
        except CollusionLabError as exc:
            rows.append(SweepRow(value, error=f"{type(exc).__name__}: {exc}"))
    return rows


def non_increasing_within_ci(results: Sequence[EstimateResult]) -> bool:
    """No later point's interval sits entirely above an earlier point's."""
    return all(
        later.ci_low <= earlier.ci_high
        for i, earlier in enumerate(results)
        for later in results[i + 1:]
    )


def non_decreasing_within_ci(results: Sequence[EstimateResult]) -> bool:
    return all(
        later.ci_high >= earlier.ci_low
        for i, earlier in enumerate(results)
        for later in results[i + 1:]
    )


# Bound verification ---------------------------------------------------------

EXHAUSTIVE, MONTE_CARLO = "Exhaustive", "MonteCarlo"


@dataclass(frozen=True)
class BoundCheck:
    spec: BoundSpec
    mode: str = EXHAUSTIVE
    tie_break: str = "for"
    trials: int = 20_000
    seed: int = 0


@dataclass(frozen=True)
class BoundCheckRow:
    check: BoundCheck
    value: object  # Fraction (exhaustive) or float (Monte Carlo)
    bound: object
    verdict: str
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    note: str = ""

    def row(self) -> dict:
        s = self.check.spec
        fmt = lambda v: "" if v is None else (str(v) if isinstance(v, (Fraction, int)) else format(v, ".17g"))
        return {
            "bound_id": s.bound_id.value,
            "n": s.n,
            "m": s.m,
            "c": "" if s.c is None else s.c,
            "k": "" if s.k is None else s.k,
            "tiebreak": self.check.tie_break,
            "mode": self.check.mode,
            "value": fmt(self.value),
            "bound": fmt(self.bound),
            "verdict": self.verdict,
            "ci_low": fmt(self.ci_low),
            "ci_high": fmt(self.ci_high),
            "note": self.note,
        }


def almost_equal(scores: Sequence[int]) -> bool:
    return max(scores) - min(scores) <= 1


def ic_approval_probability(n: int, m: int, k: int, predicate: Callable) -> Fraction:
    """IC probability that an approval tally satisfies ``predicate``.

    Only each vote's approved set matters and every k-subset is equally
    likely, so the sum runs over ``C(m, k)^n`` set tuples.
    """
    subsets = list(itertools.combinations(range(m), k))
    if len(subsets) ** n > EXHAUSTIVE_GUARD:
        raise TooLarge("too many approval-set tuples")
    hits = 0
    for choice in itertools.product(subsets, repeat=n):
        scores = [0] * m
        for approved in choice:
            for cand in approved:
                scores[cand] += 1
        hits += bool(predicate(scores))
    return Fraction(hits, len(subsets) ** n)


def _fraction_proof_oracle(rule: Rule, n: int, c: int, tb: TieBreak) -> Fraction:
    total = proof = 0
    for x in enumerate_scoring_profiles(rule, n):
        total += 1
        verdict = collusion_oracle(x, c, tb)
        if verdict.status is Status.BUDGET_EXCEEDED:
            raise TooLarge("oracle budget exceeded during exact bound check")
        proof += verdict.status is Status.PROOF
    return Fraction(proof, total)


def _exact_value(check: BoundCheck) -> Fraction:
    s = check.spec
    tb = TieBreak.parse(check.tie_break)
    b = s.bound_id
    if b is BoundId.PLURALITY_CP:
        return _fraction_proof_oracle(Rule.plurality(s.m), s.n, s.c, tb)
    if b is BoundId.VETO_CP:
        return _fraction_proof_oracle(Rule.veto(s.m), s.n, s.c, tb)
    if b in (BoundId.PLURALITY_E, BoundId.VETO_E):
        rule = Rule.plurality(s.m) if b is BoundId.PLURALITY_E else Rule.veto(s.m)
        profiles = list(enumerate_scoring_profiles(rule, s.n))
        return Fraction(sum(almost_equal(x.scores) for x in profiles), len(profiles))
    if b is BoundId.VETO_F:
        return ic_approval_probability(s.n, s.m, s.m - 1, almost_equal)
    if b is BoundId.KAPPROVAL_F:
        return ic_approval_probability(s.n, s.m, s.k, almost_equal)
    raise OutOfRegime(f"{b.value} has no finite-size estimand")


def _mc_config(check: BoundCheck) -> tuple:
    s = check.spec
    b = s.bound_id
    common = dict(n=s.n, m=s.m, tie_break=check.tie_break, trials=check.trials, seed=check.seed)
    if b is BoundId.PLURALITY_CP:
        return ExperimentConfig("plurality", c=s.c, culture="isc", labeler="oracle", **common), None
    if b is BoundId.VETO_CP:
        return ExperimentConfig("veto", c=s.c, culture="isc", labeler="oracle", **common), None
    if b is BoundId.PLURALITY_E:
        return ExperimentConfig("plurality", culture="isc", **common), almost_equal
    if b is BoundId.VETO_E:
        return ExperimentConfig("veto", culture="isc", **common), almost_equal
    if b is BoundId.VETO_F:
        return ExperimentConfig("veto", culture="ic", **common), almost_equal
    if b is BoundId.KAPPROVAL_F:
        rule = "plurality" if s.k == 1 else "kapproval"
        return ExperimentConfig(rule, k=None if s.k == 1 else s.k, culture="ic", **common), almost_equal
    raise OutOfRegime(f"{b.value} has no finite-size estimand")


def _mc_value(check: BoundCheck) -> tuple:
    cfg, predicate = _mc_config(check)
    if predicate is None:
        res = estimate_fraction(cfg)
        return res.fraction_proof, res.ci_low, res.ci_high
    root = RngStream(cfg.seed)
    hits = 0
    for i in range(math.ceil(cfg.trials / BLOCK_SIZE)):
        gen = spawn_stream(root, i).generator()
        for _ in range(min(BLOCK_SIZE, cfg.trials - i * BLOCK_SIZE)):
            hits += almost_equal(_draw(cfg, gen).scores)
    low, high = wilson_interval(hits, cfg.trials)
    return hits / cfg.trials, low, high


def verify_bounds(checks: Iterable[BoundCheck]) -> list:
    """Evaluate each lower-bound claim exactly or by Monte Carlo."""
    rows = []
    for check in checks:
        try:
            bound = bound_value(check.spec)
        except OutOfRegime as exc:
            rows.append(BoundCheckRow(check, None, None, "Inconclusive", note=str(exc)))
            continue
        try:
            if check.mode == EXHAUSTIVE:
                value = _exact_value(check)
                rows.append(BoundCheckRow(check, value, bound, "Pass" if value >= bound else "Fail"))
            else:
                value, low, high = _mc_value(check)
                verdict = "Pass" if high >= bound else "Fail"
                rows.append(BoundCheckRow(check, value, bound, verdict, low, high))
        except (TooLarge, OutOfRegime) as exc:
            rows.append(BoundCheckRow(check, None, bound, "Inconclusive", note=str(exc)))
    return rows


# Classifier / oracle agreement ------------------------------------------------


@dataclass(frozen=True)
class GridPoint:
    rule: str
    m: int
    n: int
    c: int
    tie_break: str
    k: Optional[int] = None

    @property
    def rule_obj(self) -> Rule:
        return Rule.from_name(self.rule, self.m, self.k)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass
class HarnessReport:
    points: list = field(default_factory=list)
    disagreements: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    @property
    def false_proof(self) -> int:
        return sum(1 for d in self.disagreements if d["classifier"] == "proof")

    @property
    def false_manipulable(self) -> int:
        return sum(1 for d in self.disagreements if d["classifier"] == "manipulable")

    def to_dict(self) -> dict:
        return {
            "summary": {
                "grid_points": len(self.points),
                "profiles": sum(p["profiles"] for p in self.points),
                "disagreements": len(self.disagreements),
                "false_proof": self.false_proof,
                "false_manipulable": self.false_manipulable,
                "errors": len(self.errors),
            },
            "points": self.points,
            "disagreements": self.disagreements,
            "errors": self.errors,
        }


def agreement_harness(grid: Iterable[GridPoint], budget: Optional[Budget] = None) -> HarnessReport:
    """Compare the closed-form classifier with the oracle on every profile.

    A disagreement is a definite classifier answer that the oracle
    contradicts.  ``UNKNOWN`` answers are tabulated, never counted as
    disagreements.
    """
    report = HarnessReport()
    for point in grid:
        tb = TieBreak.parse(point.tie_break)
        try:
            profiles = list(enumerate_scoring_profiles(point.rule_obj, point.n))
        except CollusionLabError as exc:
            report.errors.append({"grid_point": point.to_dict(), "error": str(exc)})
            continue
        table = Counter()
        for x in profiles:
            cls: Classification = classify(x, point.c, tb)
            verdict = collusion_oracle(x, point.c, tb, budget)
            if verdict.status is Status.BUDGET_EXCEEDED:
                report.errors.append({"grid_point": point.to_dict(), "profile": list(x.scores), "error": "budget exceeded"})
                continue
            if verdict.witness is not None and not replay_witness(x, verdict.witness, tb):
                raise AssertionError(f"witness failed to replay for {x}")
            table[(cls.basis, cls.status.value, verdict.status.value)] += 1
            if cls.status is not Status.UNKNOWN and cls.status is not verdict.status:
                report.disagreements.append({
                    "grid_point": point.to_dict(),
                    "profile": list(x.scores),
                    "classifier": cls.status.value,
                    "basis": cls.basis,
                    "oracle": verdict.status.value,
                    "witness": verdict.witness.to_dict() if verdict.witness else None,
                })
        report.points.append({
            "grid_point": point.to_dict(),
            "profiles": len(profiles),
            "table": [
                {"basis": b, "classifier": c, "oracle": o, "count": n}
                for (b, c, o), n in sorted(table.items())
            ],
        })
    return report


# Borda sufficient condition ----------------------------------------------------


@dataclass(frozen=True)
class SufficientEstimate:
    n: int
    m: int
    l: int
    trials: int
    flagged: int
    fraction: float
    ci_low: float
    ci_high: float
    checked: int  # flagged profiles confirmed by the oracle
    contradicted: int


def borda_sufficient_estimate(
    n: int, m: int, l: int, trials: int, seed: int, tie_break: str = "for",
    oracle_check_max_m: int = 5,
) -> SufficientEstimate:
    """IC frequency of the two-in-top-``l`` certificate for Borda.

    For ``m <= oracle_check_max_m`` every flagged profile is re-checked by
    the oracle; ``contradicted`` counts flagged profiles the oracle calls proof.
    """
    rule = Rule.borda(m)
    tb = TieBreak.parse(tie_break)
    root = RngStream(seed)
    flagged = checked = contradicted = 0
    for i in range(math.ceil(trials / BLOCK_SIZE)):
        gen = spawn_stream(root, i).generator()
        for _ in range(min(BLOCK_SIZE, trials - i * BLOCK_SIZE)):
            votes = sample_ic(n, m, gen)
            if not borda_sufficient_manipulable(votes, l):
                continue
            flagged += 1
            if m <= oracle_check_max_m:
                checked += 1
                status = collusion_oracle(tally(votes, rule), 1, tb).status
                contradicted += status is Status.PROOF
    low, high = wilson_interval(flagged, trials)
    return SufficientEstimate(n, m, l, trials, flagged, flagged / trials, low, high, checked, contradicted)
