"""Brute-force ground truth for strategy-proofness and c-collusion-proofness.

A scoring profile ``x`` is c-manipulable when some coalition of ``c`` new
voters with truthful orders ``P`` can cast orders ``D`` such that every
member strictly prefers ``winner(x + tally(D))`` to ``winner(x + tally(P))``.
For/against tie-breaking is resolved against the first coalition member's
true order.

The search is exhaustive but not naive: deviation tallies are deduplicated
(only the multiset of cast orders matters), tallies are collapsed to their
tied-top sets, and truthful coalitions are grouped by their first member.
:func:`naive_status` keeps the literal double loop over ``L(C)^c x L(C)^c``
as a reference for small instances.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .core import (
    ScoringProfile,
    TieBreak,
    TieBreakKind,
    PreconditionViolated,
    make_score_vector,
    tally_votes,
    unanimously_prefers,
    winner,
)

DEFAULT_BUDGET = 10**8


class Status(str, enum.Enum):
    PROOF = "proof"
    MANIPULABLE = "manipulable"
    UNKNOWN = "unknown"
    BUDGET_EXCEEDED = "budget_exceeded"


class BudgetExceeded(Exception):
    def __init__(self, needed, budget):
        super().__init__(f"needs at least {needed} winner evaluations, budget is {budget}")
        self.needed = needed
        self.budget = budget


@dataclass(frozen=True)
class Budget:
    max_evaluations: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.max_evaluations < 1:
            raise PreconditionViolated("budget must allow at least one evaluation")


@dataclass(frozen=True)
class Witness:
    truths: tuple
    deviation: tuple
    truthful_winner: int
    deviated_winner: int

    def to_dict(self) -> dict:
        return {
            "truths": [list(p) for p in self.truths],
            "deviation": [list(d) for d in self.deviation],
            "truthful_winner": self.truthful_winner,
            "deviated_winner": self.deviated_winner,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Witness":
        return cls(
            tuple(tuple(p) for p in d["truths"]),
            tuple(tuple(p) for p in d["deviation"]),
            d["truthful_winner"],
            d["deviated_winner"],
        )


@dataclass(frozen=True)
class OracleVerdict:
    status: Status
    witness: Optional[Witness] = None
    evaluations: int = field(default=0, compare=False)


def replay_witness(x, witness: Witness, tb: TieBreak) -> bool:
    """Re-run a witness through :func:`core.winner`; True iff it is a real manipulation."""
    scores = x.scores if isinstance(x, ScoringProfile) else tuple(x)
    alpha = make_score_vector(x.rule)
    sigma_ref = witness.truths[0]
    add = lambda votes: [s + t for s, t in zip(scores, tally_votes(votes, alpha))]
    w_p = winner(add(witness.truths), tb, sigma_ref)
    w_d = winner(add(witness.deviation), tb, sigma_ref)
    return (
        w_p == witness.truthful_winner
        and w_d == witness.deviated_winner
        and unanimously_prefers(witness.truths, w_d, w_p)
    )


@dataclass(frozen=True)
class _Tables:
    orders: np.ndarray  # (F, m) every linear order, lexicographic
    pos: np.ndarray  # (F, m) pos[o, cand]
    inc: np.ndarray  # (F, m) score contribution of order o
    before: np.ndarray  # (F, m, m) before[o, a, b] = o ranks a above b


@lru_cache(maxsize=None)
def _tables(alpha: tuple) -> _Tables:
    m = len(alpha)
    orders = np.array(list(itertools.permutations(range(m))), dtype=np.int64).reshape(-1, m)
    pos = np.argsort(orders, axis=1)
    inc = np.asarray(alpha, dtype=np.int64)[pos]
    before = pos[:, :, None] < pos[:, None, :]
    return _Tables(orders, pos, inc, before)


@lru_cache(maxsize=64)
def _deviation_sums(alpha: tuple, c: int, budget: int):
    """Distinct tallies of ``c`` cast orders with one representative tuple each."""
    t = _tables(alpha)
    n_orders = len(t.orders)
    sums = np.zeros((1, len(alpha)), dtype=np.int64)
    reps = [()]
    for _ in range(c):
        if n_orders * len(sums) * n_orders > budget:
            raise BudgetExceeded(n_orders * len(sums) * n_orders, budget)
        cand = (sums[:, None, :] + t.inc[None, :, :]).reshape(-1, len(alpha))
        sums, first = np.unique(cand, axis=0, return_index=True)
        reps = [reps[i // n_orders] + (i % n_orders,) for i in first]
    return sums, tuple(reps)


def _resolve(masks: np.ndarray, prio: np.ndarray, kind: TieBreakKind) -> np.ndarray:
    """Vectorised tie resolution; ``prio`` is a position array broadcast against masks."""
    m = masks.shape[-1]
    if kind is TieBreakKind.AGAINST:
        return np.where(masks, prio, -1).argmax(axis=-1)
    return np.where(masks, prio, m + 1).argmin(axis=-1)


def _priorities(t: _Tables, tb: TieBreak) -> np.ndarray:
    """Per-reference priority rows: (F, m) for FOR/AGAINST, (1, m) for FIXED."""
    if tb.kind is TieBreakKind.FIXED:
        m = t.orders.shape[1]
        ref = tb.reference if tb.reference is not None else tuple(range(m))
        return np.argsort(np.asarray(ref))[None, :]
    return t.pos


def _top_masks(scores: np.ndarray) -> np.ndarray:
    return scores == scores.max(axis=-1, keepdims=True)


def _scores_of(x) -> tuple:
    if not isinstance(x, ScoringProfile):
        raise TypeError("oracle expects a ScoringProfile")
    return x.scores


class _Search:
    """Shared state for one (x, c, tie-break) oracle run."""

    def __init__(self, x: ScoringProfile, c: int, tb: TieBreak, budget: Budget):
        if c < 1:
            raise PreconditionViolated("coalition size must be at least 1")
        self.x = np.asarray(_scores_of(x), dtype=np.int64)
        self.alpha = make_score_vector(x.rule)
        self.c = c
        self.tb = tb
        self.t = _tables(self.alpha)
        n_orders = len(self.t.orders)
        self.n_rest = math.comb(n_orders + c - 2, c - 1)
        if n_orders * self.n_rest > budget.max_evaluations:
            raise BudgetExceeded(n_orders * self.n_rest, budget.max_evaluations)
        self.sums, self.reps = _deviation_sums(self.alpha, c, budget.max_evaluations)
        self.evaluations = n_orders * (len(self.sums) + self.n_rest)
        if self.evaluations > budget.max_evaluations:
            raise BudgetExceeded(self.evaluations, budget.max_evaluations)
        self.prio = _priorities(self.t, tb)

        masks = _top_masks(self.x[None, :] + self.sums)
        # Each deviation only matters through its tied-top set.
        self.masks, self.mask_rep = np.unique(masks, axis=0, return_index=True)
        # dev_winner[s, u]: winner for reference s and tie set u
        self.dev_winner = _resolve(self.masks[None, :, :], self.prio[:, None, :], tb.kind)
        if tb.kind is TieBreakKind.FIXED:
            self.dev_winner = np.broadcast_to(self.dev_winner, (n_orders, len(self.masks)))
        m = len(self.alpha)
        self.achievable = np.zeros((n_orders, m), dtype=bool)
        np.put_along_axis(self.achievable, self.dev_winner, True, axis=1)

    def deviation_for(self, s: int, target: int) -> tuple:
        u = int(np.flatnonzero(self.dev_winner[s] == target)[0])
        return self.reps[self.mask_rep[u]]

    def run(self) -> OracleVerdict:
        t = self.t
        n_orders, m = t.orders.shape
        rest = np.array(
            list(itertools.combinations_with_replacement(range(n_orders), self.c - 1)),
            dtype=np.int64,
        ).reshape(self.n_rest, self.c - 1)
        rest_tally = t.inc[rest].sum(axis=1) if self.c > 1 else np.zeros((1, m), dtype=np.int64)
        rest_before = (
            t.before[rest].all(axis=1) if self.c > 1 else np.ones((1, m, m), dtype=bool)
        )
        chunk = max(1, 2_000_000 // max(1, len(rest) * m))
        for lo in range(0, n_orders, chunk):
            sl = np.arange(lo, min(n_orders, lo + chunk))
            scores = self.x[None, None, :] + t.inc[sl][:, None, :] + rest_tally[None, :, :]
            prio = self.prio[sl] if self.prio.shape[0] > 1 else self.prio
            w = _resolve(_top_masks(scores), prio[:, None, :], self.tb.kind)
            first_ok = t.before[sl[:, None], :, w]  # (S, R, m): first member ranks a above w
            rest_ok = rest_before[np.arange(len(rest))[None, :], :, w]
            good = self.achievable[sl][:, None, :] & first_ok & rest_ok
            hit = good.any(axis=2)
            if hit.any():
                i, r = map(int, np.argwhere(hit)[0])
                s = int(sl[i])
                a = int(np.flatnonzero(good[i, r])[0])
                truths = (s,) + tuple(int(o) for o in rest[r])
                witness = Witness(
                    truths=tuple(tuple(int(v) for v in t.orders[o]) for o in truths),
                    deviation=tuple(tuple(int(v) for v in t.orders[o]) for o in self.deviation_for(s, a)),
                    truthful_winner=int(w[i, r]),
                    deviated_winner=a,
                )
                return OracleVerdict(Status.MANIPULABLE, witness, self.evaluations)
        return OracleVerdict(Status.PROOF, None, self.evaluations)


def collusion_oracle(
    x: ScoringProfile, c: int, tb: TieBreak, budget: Optional[Budget] = None
) -> OracleVerdict:
    """Decide c-collusion-proofness of ``x`` by exhaustive search.

    Returns ``BUDGET_EXCEEDED`` (and no witness) when the search would need
    more than ``budget.max_evaluations`` winner evaluations.
    """
    budget = budget or Budget()
    if x.m == 1:
        return OracleVerdict(Status.PROOF, None, 1)
    try:
        return _Search(x, c, tb, budget).run()
    except BudgetExceeded as exc:
        return OracleVerdict(Status.BUDGET_EXCEEDED, None, exc.needed)


def strategyproof_oracle(x: ScoringProfile, tb: TieBreak, budget: Optional[Budget] = None) -> OracleVerdict:
    return collusion_oracle(x, 1, tb, budget)


def achievable_winners(
    x: ScoringProfile, c: int, sigma_ref, tb: TieBreak, budget: Optional[Budget] = None
) -> frozenset:
    """Every winner some deviation of ``c`` new votes can produce.

    Raises :class:`BudgetExceeded` if the enumeration is too large.
    """
    budget = budget or Budget()
    if x.m == 1:
        return frozenset({0})
    search = _Search(x, c, tb, budget)
    s = int(np.flatnonzero((search.t.orders == np.asarray(sigma_ref)).all(axis=1))[0])
    return frozenset(int(a) for a in np.flatnonzero(search.achievable[s]))


def naive_status(x: ScoringProfile, c: int, tb: TieBreak) -> Status:
    """Literal enumeration of every (truth, deviation) pair.  Tiny instances only."""
    alpha = make_score_vector(x.rule)
    orders = list(itertools.permutations(range(x.m)))
    coalitions = list(itertools.product(orders, repeat=c))
    if len(coalitions) ** 2 > 10**7:
        raise PreconditionViolated("naive enumeration is limited to 10^7 pairs")
    outcome = {}
    for truths in coalitions:
        ref = truths[0]
        w_p = winner([s + t for s, t in zip(x.scores, tally_votes(truths, alpha))], tb, ref)
        for dev in coalitions:
            key = (dev, ref)
            if key not in outcome:
                outcome[key] = winner([s + t for s, t in zip(x.scores, tally_votes(dev, alpha))], tb, ref)
            if unanimously_prefers(truths, outcome[key], w_p):
                return Status.MANIPULABLE
    return Status.PROOF
