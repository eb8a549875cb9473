"""Closed-form classifiers for the four positional rules.

Each classifier inspects only the winner's margin and the tie structure of
a scoring profile, so it runs in O(m).  Characterisations that are only
sufficient report ``UNKNOWN`` instead of guessing ``MANIPULABLE``; the
``complete`` flag says which kind of answer the caller received.

The case tests follow the published characterisations verbatim.  Where
they disagree with :mod:`collusionlab.oracle` the estimate harness reports
the disagreement; nothing here silently patches a case.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import (
    AGAINST,
    FOR,
    Rule,
    RuleKind,
    ScoringProfile,
    TieBreak,
    TieBreakKind,
    InvalidK,
    PreconditionViolated,
    WrongRule,
)
from .oracle import Status


@dataclass(frozen=True)
class Classification:
    status: Status
    basis: str
    complete: bool

    def __post_init__(self):
        if self.status is Status.UNKNOWN and self.complete:
            raise ValueError("a complete characterisation never answers UNKNOWN")

    def to_dict(self) -> dict:
        return {"status": self.status.value, "basis": self.basis, "complete": self.complete}


def margin(scores: Sequence[int]) -> int:
    """Winner's lead over the runner-up; 0 when the top is tied."""
    ordered = sorted(scores, reverse=True)
    if len(ordered) < 2:
        return 0
    return ordered[0] - ordered[1]


def _all_equal(scores) -> bool:
    return max(scores) == min(scores)


def _single(complete=True) -> Classification:
    return Classification(Status.PROOF, "single-candidate", complete)


def _expect(x: ScoringProfile, *kinds: RuleKind):
    if x.rule.kind not in kinds:
        raise WrongRule(f"classifier does not handle {x.rule}")


def _check_c(c: int):
    if c < 1:
        raise PreconditionViolated("coalition size must be at least 1")


def classify_plurality(x: ScoringProfile, c: int, tb: TieBreak) -> Classification:
    """Plurality, any coalition size.

    Single voter: proof iff the scores are all within one (ties for the
    manipulator), all equal (ties against), the winner leads by two, or the
    winner is unique (ties against).  Coalitions of c > 1: proof iff the
    winner leads by at least c + 1.
    """
    _expect(x, RuleKind.PLURALITY)
    _check_c(c)
    s = x.scores
    if x.m == 1:
        return _single()
    lead = margin(s)
    if c > 1:
        if lead >= c + 1:
            return Classification(Status.PROOF, "margin>=c+1", True)
        return Classification(Status.MANIPULABLE, "none", True)
    if tb.kind is TieBreakKind.FOR and max(s) - min(s) <= 1:
        return Classification(Status.PROOF, "almost-equal", True)
    if tb.kind is TieBreakKind.AGAINST and _all_equal(s):
        return Classification(Status.PROOF, "all-equal", True)
    if lead >= 2:
        return Classification(Status.PROOF, "margin>=2", True)
    if tb.kind is TieBreakKind.AGAINST and lead >= 1:
        return Classification(Status.PROOF, "unique-max", True)
    if tb.kind is TieBreakKind.FIXED:
        return Classification(Status.UNKNOWN, "none", False)
    return Classification(Status.MANIPULABLE, "none", True)


def classify_kapproval(x: ScoringProfile, k: int, c: int, tb: TieBreak) -> Classification:
    _expect(x, RuleKind.KAPPROVAL)
    _check_c(c)
    if k != x.rule.k or not 1 < k < x.m:
        raise InvalidK(f"k-approval classifier needs 1 < k < m and k matching the rule, got k={k}")
    s = x.scores
    lead = margin(s)
    if c > 1:
        if lead >= 2 * c:
            return Classification(Status.PROOF, "margin>=2c", False)
        return Classification(Status.UNKNOWN, "none", False)
    if lead >= 2:
        return Classification(Status.PROOF, "margin>=2", True)
    if tb.kind is TieBreakKind.FOR and _all_equal(s):
        return Classification(Status.PROOF, "all-equal", True)
    if tb.kind is TieBreakKind.FIXED:
        return Classification(Status.UNKNOWN, "none", False)
    return Classification(Status.MANIPULABLE, "none", True)


def classify_veto(x: ScoringProfile, c: int, tb: TieBreak) -> Classification:
    # Sufficient conditions only; tb is accepted for a uniform signature.
    _expect(x, RuleKind.VETO)
    _check_c(c)
    s = x.scores
    if x.m == 1:
        return _single(False)
    if margin(s) >= c + 1:
        return Classification(Status.PROOF, "margin>=c+1", False)
    if c < x.m - 1 and _all_equal(s):
        return Classification(Status.PROOF, "all-equal", False)
    return Classification(Status.UNKNOWN, "none", False)


def classify_borda_sp(x: ScoringProfile) -> Classification:
    """Single-voter Borda: proof iff the winner leads by m, all scores are
    equal, or all but one candidate tie at the top with the last one point
    behind.  Tie-break agnostic."""
    _expect(x, RuleKind.BORDA)
    s = x.scores
    m = x.m
    if m == 1:
        return _single()
    if margin(s) >= m:
        return Classification(Status.PROOF, "margin>=m", True)
    if _all_equal(s):
        return Classification(Status.PROOF, "all-equal", True)
    top = max(s)
    below = [v for v in s if v != top]
    if len(below) == 1 and below[0] == top - 1:
        return Classification(Status.PROOF, "one-below", True)
    return Classification(Status.MANIPULABLE, "none", True)


def borda_sufficient_manipulable(profile: Sequence[Sequence[int]], l: int) -> bool:
    """True iff two distinct candidates sit in the top ``l`` of every vote.

    Needs ``(l - 1) * n < m``.  A True answer certifies manipulability for
    Borda once m is large enough that the all-equal and one-below proof
    cases are impossible; a False answer says nothing.
    """
    votes = [tuple(v) for v in profile]
    if not votes:
        raise PreconditionViolated("needs at least one vote")
    n, m = len(votes), len(votes[0])
    if l < 1 or (l - 1) * n >= m:
        raise PreconditionViolated(f"(l-1)*n < m fails for l={l}, n={n}, m={m}")
    common = set(votes[0][:l])
    for v in votes[1:]:
        common &= set(v[:l])
        if len(common) < 2:
            return False
    return len(common) >= 2


def classify(x: ScoringProfile, c: int, tb: TieBreak) -> Classification:
    """Dispatch on ``x.rule``."""
    kind = x.rule.kind
    if x.m == 1:
        _check_c(c)
        return _single()
    if kind is RuleKind.PLURALITY:
        return classify_plurality(x, c, tb)
    if kind is RuleKind.VETO:
        return classify_veto(x, c, tb)
    if kind is RuleKind.KAPPROVAL:
        if x.rule.k == 1:
            return classify_plurality(ScoringProfile(x.scores, x.n, Rule.plurality(x.m)), c, tb)
        return classify_kapproval(x, x.rule.k, c, tb)
    if c == 1:
        return classify_borda_sp(x)
    _check_c(c)
    return Classification(Status.UNKNOWN, "none", False)


__all__ = [
    "Classification",
    "classify",
    "classify_plurality",
    "classify_kapproval",
    "classify_veto",
    "classify_borda_sp",
    "borda_sufficient_manipulable",
    "margin",
    "FOR",
    "AGAINST",
]
