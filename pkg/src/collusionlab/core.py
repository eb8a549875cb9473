"""Domain types, score vectors, tallying and winner determination.

Candidates are dense integer indices ``0..m-1``.  A preference is a tuple
listing candidates from most to least preferred.  Everything here is
immutable and side-effect free.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

Preference = tuple  # tuple[int, ...], a permutation of range(m)
Profile = tuple  # tuple[Preference, ...]


class CollusionLabError(Exception):
    """Base class for all library errors."""


class InvalidK(CollusionLabError):
    pass


class MissingReference(CollusionLabError):
    pass


class WrongRule(CollusionLabError):
    pass


class PreconditionViolated(CollusionLabError):
    pass


class Unsupported(CollusionLabError):
    pass


class TooLarge(CollusionLabError):
    pass


class OutOfRegime(CollusionLabError):
    pass


class RuleKind(str, enum.Enum):
    PLURALITY = "plurality"
    VETO = "veto"
    KAPPROVAL = "kapproval"
    BORDA = "borda"


@dataclass(frozen=True)
class Rule:
    kind: RuleKind
    m: int
    k: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", RuleKind(self.kind))
        if self.m < 1:
            raise PreconditionViolated(f"need m >= 1, got {self.m}")
        if self.kind is RuleKind.KAPPROVAL:
            if self.k is None or not 1 <= self.k <= self.m - 1:
                raise InvalidK(f"k must lie in 1..{self.m - 1}, got {self.k}")
        elif self.k is not None:
            expected = {RuleKind.PLURALITY: 1, RuleKind.VETO: self.m - 1}.get(self.kind)
            if self.k != expected:
                raise InvalidK(f"{self.kind.value} does not take k={self.k}")
            object.__setattr__(self, "k", None)

    @classmethod
    def plurality(cls, m: int) -> "Rule":
        return cls(RuleKind.PLURALITY, m)

    @classmethod
    def veto(cls, m: int) -> "Rule":
        return cls(RuleKind.VETO, m)

    @classmethod
    def kapproval(cls, k: int, m: int) -> "Rule":
        return cls(RuleKind.KAPPROVAL, m, k)

    @classmethod
    def borda(cls, m: int) -> "Rule":
        return cls(RuleKind.BORDA, m)

    @classmethod
    def from_name(cls, name: str, m: int, k: Optional[int] = None) -> "Rule":
        kind = RuleKind(name.lower())
        return cls(kind, m, k if kind is RuleKind.KAPPROVAL else None)

    @property
    def approvals(self) -> Optional[int]:
        """Number of approved positions for approval-style rules, else None."""
        if self.kind is RuleKind.PLURALITY:
            return 1
        if self.kind is RuleKind.KAPPROVAL:
            return self.k
        if self.kind is RuleKind.VETO:
            return self.m - 1
        return None

    def __str__(self):
        if self.kind is RuleKind.KAPPROVAL:
            return f"{self.k}-approval(m={self.m})"
        return f"{self.kind.value}(m={self.m})"


def make_score_vector(rule: Rule) -> tuple:
    """Canonical score vector of ``rule``; veto uses ``(0, ..., 0, -1)``."""
    m = rule.m
    if rule.kind is RuleKind.BORDA:
        return tuple(range(m - 1, -1, -1))
    if rule.kind is RuleKind.VETO:
        return (0,) * (m - 1) + (-1,)
    k = rule.approvals
    return (1,) * k + (0,) * (m - k)


def check_preference(order: Sequence[int], m: Optional[int] = None) -> Preference:
    order = tuple(int(c) for c in order)
    if m is None:
        m = len(order)
    if m < 1 or len(order) != m or sorted(order) != list(range(m)):
        raise PreconditionViolated(f"{order!r} is not a permutation of 0..{m - 1}")
    return order


def check_profile(votes: Iterable[Sequence[int]], m: Optional[int] = None) -> Profile:
    votes = tuple(votes)
    if votes and m is None:
        m = len(votes[0])
    return tuple(check_preference(v, m) for v in votes)


@dataclass(frozen=True)
class ScoringProfile:
    """Total scores of each candidate after ``n`` votes under ``rule``."""

    scores: tuple
    n: int
    rule: Rule

    def __post_init__(self):
        scores = tuple(int(s) for s in self.scores)
        object.__setattr__(self, "scores", scores)
        alpha = make_score_vector(self.rule)
        if len(scores) != self.rule.m:
            raise PreconditionViolated(f"expected {self.rule.m} scores, got {len(scores)}")
        if self.n < 0:
            raise PreconditionViolated("n must be non-negative")
        if sum(scores) != self.n * sum(alpha):
            raise PreconditionViolated(
                f"scores {scores} do not sum to n*sum(alpha) = {self.n * sum(alpha)}"
            )
        lo, hi = self.n * alpha[-1], self.n * alpha[0]
        if any(s < lo or s > hi for s in scores):
            raise PreconditionViolated(f"scores {scores} leave the range [{lo}, {hi}]")

    @property
    def m(self) -> int:
        return self.rule.m

    def __iter__(self):
        return iter(self.scores)

    def __len__(self):
        return len(self.scores)

    def __getitem__(self, i):
        return self.scores[i]


def tally_votes(votes: Iterable[Sequence[int]], alpha: Sequence[int]) -> list:
    scores = [0] * len(alpha)
    for vote in votes:
        for position, cand in enumerate(vote):
            scores[cand] += alpha[position]
    return scores


def tally(profile: Iterable[Sequence[int]], rule: Rule) -> ScoringProfile:
    votes = check_profile(profile, rule.m)
    scores = tally_votes(votes, make_score_vector(rule))
    return ScoringProfile(tuple(scores), len(votes), rule)


class TieBreakKind(str, enum.Enum):
    FOR = "for"
    AGAINST = "against"
    FIXED = "fixed"


@dataclass(frozen=True)
class TieBreak:
    """How tied top scores are resolved.

    ``FOR`` and ``AGAINST`` consult the manipulators' reference order at
    call time; ``FIXED`` carries its own order (identity when omitted).
    """

    kind: TieBreakKind
    reference: Optional[Preference] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", TieBreakKind(self.kind))
        if self.reference is not None:
            object.__setattr__(self, "reference", check_preference(self.reference))
            if self.kind is not TieBreakKind.FIXED:
                raise PreconditionViolated("only FIXED tie-breaking carries a reference")

    @classmethod
    def parse(cls, name: str) -> "TieBreak":
        return cls(TieBreakKind(name.lower()))

    @property
    def needs_reference(self) -> bool:
        return self.kind is not TieBreakKind.FIXED

    def __str__(self):
        return self.kind.value


FOR = TieBreak(TieBreakKind.FOR)
AGAINST = TieBreak(TieBreakKind.AGAINST)
FIXED = TieBreak(TieBreakKind.FIXED)


def top_set(scores: Sequence[int]) -> list:
    best = max(scores)
    return [c for c, s in enumerate(scores) if s == best]


def resolve_tie(tied: Sequence[int], tb: TieBreak, sigma_ref: Optional[Sequence[int]] = None) -> int:
    if len(tied) == 1:
        return tied[0]
    if tb.kind is TieBreakKind.FIXED:
        order = tb.reference if tb.reference is not None else range(max(tied) + 1)
        rank = {c: i for i, c in enumerate(order)}
        return min(tied, key=rank.__getitem__)
    if sigma_ref is None:
        raise MissingReference(f"tie-break '{tb.kind.value}' needs a reference order")
    rank = {c: i for i, c in enumerate(sigma_ref)}
    if tb.kind is TieBreakKind.FOR:
        return min(tied, key=rank.__getitem__)
    return max(tied, key=rank.__getitem__)


def winner(x, tb: TieBreak, sigma_ref: Optional[Sequence[int]] = None) -> int:
    """Index of the winning candidate for score vector ``x``.

    ``x`` may be a :class:`ScoringProfile` or any integer sequence.  Ties
    among the top scores go to the member ranked highest in the fixed
    reference (FIXED), highest in ``sigma_ref`` (FOR) or lowest in
    ``sigma_ref`` (AGAINST).
    """
    scores = x.scores if isinstance(x, ScoringProfile) else tuple(x)
    if not scores:
        raise PreconditionViolated("winner of an empty score vector")
    if tb.needs_reference and sigma_ref is None:
        raise MissingReference(f"tie-break '{tb.kind.value}' needs a reference order")
    return resolve_tie(top_set(scores), tb, sigma_ref)


def unanimously_prefers(truths: Iterable[Sequence[int]], a: int, b: int) -> bool:
    """True iff every preference ranks ``a`` strictly above ``b``."""
    if a == b:
        return False
    return all(list(p).index(a) < list(p).index(b) for p in truths)
