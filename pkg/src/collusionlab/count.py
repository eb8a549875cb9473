"""Exact counting: scoring-profile spaces, almost-equal sets and bounds.

All counts are Python integers and all bounds ``fractions.Fraction``;
floats appear only where an exponential forces them.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Optional, Sequence

from .core import (
    OutOfRegime,
    PreconditionViolated,
    Rule,
    RuleKind,
    ScoringProfile,
    TooLarge,
    Unsupported,
    make_score_vector,
    tally_votes,
)

ENUMERATION_GUARD = 10**8


def binom(n: int, k: int) -> int:
    """Binomial coefficient that is 0 whenever ``n < 0`` or ``k`` is out of range."""
    if n < 0 or k < 0 or k > n:
        return 0
    return math.comb(n, k)


def falling(n: int, k: int) -> int:
    return math.perm(n, k) if 0 <= k <= n else 0


@lru_cache(maxsize=None)
def bounded_composition_table(m: int, cap: int, total: int) -> tuple:
    """``table[j][s]``: ways for ``j`` parts in ``[0, cap]`` to sum to ``s``.

    Row ``j`` holds the coefficients of ``(1 + x + ... + x^cap)^j`` up to
    ``x^total``.
    """
    rows = [[1] + [0] * total]
    for _ in range(m):
        prev = rows[-1]
        row = [0] * (total + 1)
        window = 0
        for s in range(total + 1):
            window += prev[s]
            if s - cap - 1 >= 0:
                window -= prev[s - cap - 1]
            row[s] = window
        rows.append(row)
    return tuple(tuple(r) for r in rows)


def _approval_shape(rule: Rule):
    if rule.kind is RuleKind.BORDA:
        raise Unsupported("no scoring-profile count for Borda")
    return rule.approvals


def count_scoring_profiles(rule: Rule, n: int, m: Optional[int] = None) -> int:
    """``|S^n([m])|`` for plurality, veto and k-approval.

    The coefficient of ``x^(nk)`` in ``(1 + x + ... + x^n)^m``.  Veto is
    counted through its k = m - 1 approval form, which is in bijection with
    the negative-score convention.
    """
    m = rule.m if m is None else m
    if n < 0 or m < 1:
        raise PreconditionViolated("need n >= 0 and m >= 1")
    rule = Rule(rule.kind, m, rule.k)
    k = _approval_shape(rule)
    if m == 1:
        return 1
    return bounded_composition_table(m, n, n * k)[m][n * k]


def plurality_closed_form(n: int, m: int) -> int:
    return binom(n + m - 1, m - 1)


def evaluate_paper_kapproval_formula(n: int, k: int, m: int) -> int:
    """The alternating sum ``sum_i (-1)^i C(n(k-i)+m-1, m-1)``, kept for auditing."""
    return sum((-1) ** i * binom(n * (k - i) + m - 1, m - 1) for i in range(k + 1))


def bounded_composition_inclusion_exclusion(n: int, k: int, m: int) -> int:
    """Textbook inclusion-exclusion for parts in [0, n] summing to nk."""
    return sum(
        (-1) ** i * binom(m, i) * binom(n * k - i * (n + 1) + m - 1, m - 1)
        for i in range(m + 1)
    )


@dataclass(frozen=True)
class AuditRow:
    rule: str
    n: int
    m: int
    k: int
    authoritative: int
    paper_formula: int

    @property
    def match(self) -> bool:
        return self.authoritative == self.paper_formula


def audit_kapproval(n: int, k: int, m: int) -> AuditRow:
    rule = Rule.plurality(m) if k == 1 else Rule.kapproval(k, m)
    return AuditRow(
        rule.kind.value, n, m, k,
        count_scoring_profiles(rule, n),
        evaluate_paper_kapproval_formula(n, k, m),
    )


def count_almost_equal(rule: Rule, n: int, m: Optional[int] = None) -> int:
    """``|E^n([m])|`` for plurality or veto with ``m > n >= 1``: C(m, n)."""
    m = rule.m if m is None else m
    if rule.kind not in (RuleKind.PLURALITY, RuleKind.VETO):
        raise Unsupported(f"almost-equal count only for plurality and veto, not {rule.kind.value}")
    if not m > n >= 1:
        raise PreconditionViolated(f"need m > n >= 1, got n={n}, m={m}")
    return binom(m, n)


def count_F_kapproval(n: int, k: int, m: int) -> int:
    """Voting profiles with an almost-equal k-approval tally, for ``m >= nk``."""
    if k < 1 or n < 1 or m < n * k:
        raise PreconditionViolated(f"need m >= nk >= 1, got n={n}, k={k}, m={m}")
    return math.factorial(m) * math.factorial(m - k) ** n // math.factorial(m - n * k)


def truncated_profile_count(n: int, k: int, m: int) -> int:
    """Number of n-tuples of ordered top-k lists: ``(m (m-1) ... (m-k+1))^n``."""
    return falling(m, k) ** n


class BoundId(str, enum.Enum):
    PLURALITY_CP = "PluralityCP"
    PLURALITY_E = "PluralityE"
    KAPPROVAL_F = "KApprovalF"
    VETO_E = "VetoE"
    VETO_F = "VetoF"
    VETO_CP = "VetoCP"
    BORDA_LIMIT = "BordaLimit"


@dataclass(frozen=True)
class BoundSpec:
    bound_id: BoundId
    n: int
    m: int
    c: Optional[int] = None
    k: Optional[int] = None
    lam: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "bound_id", BoundId(self.bound_id))

    def params(self) -> dict:
        return {"n": self.n, "m": self.m, "c": self.c, "k": self.k, "lam": self.lam}


def _require(cond: bool, what: str):
    if not cond:
        raise OutOfRegime(what)


def bound_value(spec: BoundSpec):
    """Lower bound claimed for ``spec``: a Fraction, or a float for BordaLimit."""
    n, m, c, k = spec.n, spec.m, spec.c, spec.k
    b = spec.bound_id
    if b is BoundId.PLURALITY_CP:
        _require(c is not None and c >= 1, "PluralityCP needs c >= 1")
        _require(m >= 2 and n >= c, "PluralityCP needs m >= 2 and n >= c")
        return Fraction(n - c, n + 1) ** (m - 1)
    if b in (BoundId.PLURALITY_E, BoundId.VETO_E, BoundId.VETO_F):
        _require(m > n >= 1, f"{b.value} needs m > n >= 1")
        return Fraction(m - n + 1, m) ** n
    if b is BoundId.KAPPROVAL_F:
        _require(k is not None and 1 <= k < m, "KApprovalF needs 1 <= k < m")
        _require(n >= 1 and m >= n * k, "KApprovalF needs m >= nk")
        return Fraction(m - n * k + 1, m) ** (n * k)
    if b is BoundId.VETO_CP:
        _require(c is not None and c >= 1 and m >= 2, "VetoCP needs c >= 1 and m >= 2")
        shift = (c + 1) * (m - 1)
        _require(n >= shift, "VetoCP needs n >= (c+1)(m-1)")
        return Fraction(n - shift + 1, m * n - shift) ** shift
    if b is BoundId.BORDA_LIMIT:
        lam = spec.lam
        _require(lam is not None and lam > 0 and n >= 1, "BordaLimit needs lam > 0 and n >= 1")
        t = float(lam) ** n
        return 1.0 - (1.0 + t) * math.exp(-t)
    raise OutOfRegime(f"unknown bound {b}")


def at_least_two_cover_count(sets: Sequence[set]) -> tuple:
    """Count elements lying in two or more of ``sets``, directly and by the
    alternating intersection sum with coefficients ``(-1)^r (r - 1)``."""
    sets = [frozenset(s) for s in sets]
    if len(sets) > 20 or len(frozenset().union(*sets)) > 64:
        raise TooLarge("at most 20 sets over at most 64 elements")
    brute = sum(
        1 for e in frozenset().union(*sets) if sum(e in s for s in sets) >= 2
    )
    formula = 0
    for r in range(2, len(sets) + 1):
        inner = sum(len(frozenset.intersection(*combo)) for combo in itertools.combinations(sets, r))
        formula += (-1) ** r * (r - 1) * inner
    return brute, formula


def series_identity_check(l: int) -> tuple:
    if l < 3:
        raise PreconditionViolated("identity stated for l >= 3")
    lhs = 1 - (-1) ** l * (l - 1)
    rhs = sum((-1) ** i * (i - 1) * binom(l, i) for i in range(2, l))
    return lhs, rhs


def exp_partial_sum(x: float, terms: int) -> float:
    """``sum_{i=2}^{terms} (-1)^i (i-1) x^i / i!``; tends to ``1 - (1+x) e^-x``."""
    if terms < 2:
        raise PreconditionViolated("need terms >= 2")
    total = 0.0
    term = x  # x^i / i! for i = 1
    for i in range(2, terms + 1):
        term *= x / i
        total += (-1) ** i * (i - 1) * term
    return total


def two_in_top_lower_bound(n: int, m: int, l: int) -> Fraction:
    """Exact IC probability that two candidates sit in the top ``l`` of all n votes."""
    return sum(
        (
            (-1) ** r * (r - 1) * binom(m, r) * Fraction(falling(l, r), falling(m, r)) ** n
            for r in range(2, min(l, m) + 1)
        ),
        Fraction(0),
    )


def _compositions(total: int, parts: int, cap: int) -> Iterator[tuple]:
    if parts == 1:
        if 0 <= total <= cap:
            yield (total,)
        return
    for first in range(min(cap, total), -1, -1):
        for rest in _compositions(total - first, parts - 1, cap):
            yield (first,) + rest


def enumerate_scoring_profiles(rule: Rule, n: int, m: Optional[int] = None) -> Iterator[ScoringProfile]:
    """Yield every element of ``S^n([m])`` exactly once.

    Approval rules walk bounded compositions; Borda tallies every multiset
    of n orders and deduplicates, guarded by ``(m!)^n <= 10^8``.
    """
    m = rule.m if m is None else m
    rule = Rule(rule.kind, m, rule.k)
    if rule.kind is RuleKind.BORDA:
        if math.factorial(m) ** n > ENUMERATION_GUARD:
            raise TooLarge(f"(m!)^n = {math.factorial(m) ** n} exceeds {ENUMERATION_GUARD}")
        alpha = make_score_vector(rule)
        orders = list(itertools.permutations(range(m)))
        seen = set()
        for votes in itertools.combinations_with_replacement(orders, n):
            seen.add(tuple(tally_votes(votes, alpha)))
        for s in sorted(seen, reverse=True):
            yield ScoringProfile(s, n, rule)
        return
    if count_scoring_profiles(rule, n) > ENUMERATION_GUARD:
        raise TooLarge("scoring-profile space exceeds the enumeration guard")
    k = rule.approvals
    if rule.kind is RuleKind.VETO:
        # Count vetoes received, then negate.
        for vetoes in _compositions(n, m, n):
            yield ScoringProfile(tuple(-v for v in vetoes), n, rule)
        return
    for s in _compositions(n * k, m, n):
        yield ScoringProfile(s, n, rule)
