"""Named grids used by ``verify-bounds --preset`` and ``harness --preset``."""

from __future__ import annotations

from .core import OutOfRegime
from .count import BoundId, BoundSpec, bound_value
from .estimate import EXHAUSTIVE, BoundCheck, GridPoint

TIE_BREAKS = ("for", "against")


def _in_regime(spec: BoundSpec) -> bool:
    try:
        bound_value(spec)
    except OutOfRegime:
        return False
    return True


def bound_grid(max_n: int = 8, max_m: int = 4, max_c: int = 2) -> list:
    """Every in-regime exact check with n <= max_n, 2 <= m <= max_m, c <= max_c."""
    checks = []
    for m in range(2, max_m + 1):
        for n in range(1, max_n + 1):
            for c in range(1, max_c + 1):
                for bid in (BoundId.PLURALITY_CP, BoundId.VETO_CP):
                    spec = BoundSpec(bid, n, m, c=c)
                    if _in_regime(spec):
                        checks.extend(BoundCheck(spec, EXHAUSTIVE, tb) for tb in TIE_BREAKS)
            for bid in (BoundId.PLURALITY_E, BoundId.VETO_E, BoundId.VETO_F):
                spec = BoundSpec(bid, n, m)
                if _in_regime(spec):
                    checks.append(BoundCheck(spec, EXHAUSTIVE))
            for k in range(1, m):
                spec = BoundSpec(BoundId.KAPPROVAL_F, n, m, k=k)
                if _in_regime(spec):
                    checks.append(BoundCheck(spec, EXHAUSTIVE))
    return checks


def plurality_grid() -> list:
    return [
        GridPoint("plurality", m, n, c, tb)
        for m in (2, 3, 4) for n in range(1, 6) for c in (1, 2, 3) for tb in TIE_BREAKS
    ]


def kapproval_sp_grid() -> list:
    return [
        GridPoint("kapproval", m, n, 1, tb, k=2)
        for m in (3, 4, 5) for n in (1, 2, 3) for tb in TIE_BREAKS
    ]


def soundness_grid() -> list:
    points = [
        GridPoint("kapproval", m, n, 2, tb, k=2)
        for m in (3, 4) for n in range(1, 5) for tb in TIE_BREAKS
    ]
    points += [
        GridPoint("veto", m, n, c, tb)
        for m in (3, 4) for n in range(1, 5) for c in (1, 2) for tb in TIE_BREAKS
    ]
    return points


def borda_grid() -> list:
    return [GridPoint("borda", m, n, 1, tb) for m in (3, 4) for n in range(1, 5) for tb in TIE_BREAKS]


HARNESS_PRESETS = {
    "plurality": plurality_grid,
    "kapproval": kapproval_sp_grid,
    "soundness": soundness_grid,
    "borda": borda_grid,
    "paper-grid": lambda: plurality_grid() + kapproval_sp_grid() + soundness_grid() + borda_grid(),
}

BOUND_PRESETS = {
    "paper-grid": bound_grid,
}
