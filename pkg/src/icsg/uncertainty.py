"""Nature's inner problem over a single interval row.

For a row with bounds lo <= p <= hi and sum(p) = 1 the expected value
sum(p * v) is optimised greedily: every successor starts at its lower bound
and the remaining budget is handed out in value order (ascending when
minimising, descending when maximising), each successor taking as much as its
upper bound allows.  Ties are broken by successor index so results are
reproducible.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapExceededError
from .model import IntervalDistribution

VERTEX_CAP = 12
VERTEX_TOL = 1e-10


@dataclass(frozen=True)
class Resolution:
    """One distribution chosen from an interval row."""

    succ: tuple[int, ...]
    probs: tuple[float, ...]
    value: float = math.nan
    provenance: tuple | None = None

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.succ, self.probs))

    def array(self, n_states: int) -> np.ndarray:
        out = np.zeros(n_states)
        out[list(self.succ)] = self.probs
        return out


def _expectation(p, v):
    # only positive-probability successors contribute, so 0 * inf never occurs
    total = 0.0
    for pi, vi in zip(p, v):
        if pi > 0:
            total += pi * vi
    return total


def solve_inner(row: IntervalDistribution, values, maximize: bool = False, provenance=None) -> Resolution:
    """Optimal resolution of ``row`` for the given successor values."""
    row.check_feasible()
    v = [float(values[t]) for t in row.succ]
    order = sorted(range(len(v)), key=(lambda k: -v[k]) if maximize else (lambda k: v[k]))
    p = list(row.lo)
    budget = 1.0 - math.fsum(row.lo)
    for k in order:
        if budget <= 0:
            break
        add = min(row.hi[k] - row.lo[k], budget)
        p[k] += add
        budget -= add
    return Resolution(row.succ, tuple(p), _expectation(p, v), provenance)


def solve_inner_batch(succ, lo, hi, mask, values, maximize: bool = False):
    """Vectorised greedy over many padded rows at once.

    Returns the (rows x width) probability matrix and the optimal expectation
    of every row.  Padding entries (``mask`` false) get zero probability.
    """
    v = np.asarray(values, dtype=float)[succ]
    v = np.where(mask, v, 0.0)
    keys = -v if maximize else v.copy()
    keys[~mask] = np.inf
    order = np.argsort(keys, axis=1, kind="stable")
    width = np.take_along_axis(hi - lo, order, axis=1)
    budget = 1.0 - lo.sum(axis=1)
    before = np.cumsum(width, axis=1) - width
    alloc = np.clip(budget[:, None] - before, 0.0, width)
    p = lo.copy()
    np.put_along_axis(p, order, np.take_along_axis(p, order, axis=1) + alloc, axis=1)
    with np.errstate(invalid="ignore"):
        expect = np.where(p > 0, p * v, 0.0).sum(axis=1)
    return p, expect


def enumerate_vertices(row: IntervalDistribution, cap: int = VERTEX_CAP) -> list[Resolution]:
    """All extreme points of {lo <= p <= hi, sum(p) = 1}.

    A vertex has every coordinate but at most one at a bound, so we try every
    bound pattern for n - 1 coordinates and solve for the free one.
    """
    n = len(row)
    if n > cap:
        raise CapExceededError(f"row has {n} successors, vertex enumeration cap is {cap}")
    row.check_feasible()
    lo, hi = np.array(row.lo), np.array(row.hi)
    found: list[np.ndarray] = []

    def add(p):
        if abs(p.sum() - 1.0) > 1e-9:
            return
        if any(np.max(np.abs(p - q)) <= VERTEX_TOL for q in found):
            return
        found.append(p)

    for free in range(n):
        others = [k for k in range(n) if k != free]
        for pattern in itertools.product((0, 1), repeat=len(others)):
            p = lo.copy()
            for k, bit in zip(others, pattern):
                p[k] = hi[k] if bit else lo[k]
            p[free] = 1.0 - p[others].sum()
            if lo[free] - 1e-12 <= p[free] <= hi[free] + 1e-12:
                p[free] = min(max(p[free], lo[free]), hi[free])
                add(p)
    found.sort(key=lambda q: tuple(q))
    return [Resolution(row.succ, tuple(float(x) for x in q)) for q in found]
