"""Grid-refinement bookkeeping shared by the scenario runner and the test suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .roughpath import coarsen

LEVELS = (256, 512, 1024, 2048)
# errors at or below this are treated as exactly preserved (round-off only)
EXACT_FLOOR = 1e-12
# harness slack on the extrapolated prediction for the finest grid
EXTRAPOLATION_SLACK = 2.0
# fitted orders below this are indistinguishable from stagnation over three doublings
MIN_ORDER = 0.1


def levels_of(p, levels=LEVELS):
    """Coarsenings of the fine rough path ``p`` onto each grid size in ``levels``."""
    return {n: coarsen(p, p.N // n) for n in levels}


def observed_order(ns, errs):
    """Least-squares slope of ``-log err`` against ``log N``."""
    ns = np.asarray(ns, dtype=float)
    errs = np.asarray(errs, dtype=float)
    return float(-np.polyfit(np.log(ns), np.log(errs), 1)[0])


def pairwise_orders(ns, errs):
    ns = np.asarray(ns, dtype=float)
    errs = np.asarray(errs, dtype=float)
    return np.log(errs[:-1] / errs[1:]) / np.log(ns[1:] / ns[:-1])


@dataclass
class RefinementFit:
    ns: tuple
    errs: tuple
    order: float
    bound: float
    vanishes: bool
    exact: bool = False


def vanishes_under_refinement(ns, errs, floor=EXACT_FLOOR, slack=EXTRAPOLATION_SLACK, min_order=MIN_ORDER):
    """Decide whether ``errs`` tends to zero along the grid sizes ``ns``.

    The error must decrease overall (fitted order at least ``min_order``,
    finest below coarsest) and the finest error must lie under ``slack`` times the value
    extrapolated from a power-law fit to the coarser levels. Errors that all
    sit at round-off level count as vanishing.
    """
    ns = tuple(int(n) for n in ns)
    errs = tuple(float(e) for e in errs)
    if max(errs) <= floor:
        return RefinementFit(ns, errs, float("inf"), floor, True, exact=True)
    safe = np.maximum(errs, floor)
    order = observed_order(ns, safe)
    slope, icpt = np.polyfit(np.log(ns[:-1]), np.log(safe[:-1]), 1)
    bound = slack * float(np.exp(icpt + slope * np.log(ns[-1])))
    ok = order >= min_order and errs[-1] < errs[0] and errs[-1] <= max(bound, floor)
    return RefinementFit(ns, errs, order, bound, bool(ok))


__all__ = ["EXACT_FLOOR", "LEVELS", "MIN_ORDER", "RefinementFit", "levels_of", "observed_order", "pairwise_orders",
           "vanishes_under_refinement"]
