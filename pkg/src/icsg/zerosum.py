"""Zero-sum queries: robust value iteration (unbounded objectives) and robust
backward induction (bounded objectives).

Each update solves nature's inner problem for every row against the previous
value vector, assembles the per-state matrix game from the resulting
expectations and solves it.  Sweeps are Jacobi style: a sweep reads only the
previous vector, so states can be updated in any order or in parallel.
"""
from __future__ import annotations

import logging
import os
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionError, IcsgError, PropertyError
from .model import Icsg, check_valid
from .nfg import solve_matrix
from .properties import (ADVERSARIAL, BOUNDED_CUMULATIVE, BOUNDED_REACH, REACH, REACH_REWARD, Property)
from .uncertainty import Resolution, solve_inner_batch

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITERS = 100_000
DEFAULT_GAMMA = 1e-4


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("ICSG_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# qualitative precomputation on the support graph

def _predecessors(model: Icsg):
    t = model.table
    pred = [set() for _ in range(model.n_states)]
    for r in range(t.n_rows):
        s = int(t.row_state[r])
        for j in t.succ[r][t.mask[r]]:
            pred[int(j)].add(s)
    return pred


def _backward_reach(model: Icsg, sources, blocked=frozenset()):
    """States with a support-graph path into ``sources`` avoiding ``blocked``."""
    pred = _predecessors(model)
    seen = set(sources)
    todo = deque(seen)
    while todo:
        u = todo.popleft()
        for p in pred[u]:
            if p not in seen and p not in blocked:
                seen.add(p)
                todo.append(p)
    return seen


def precompute_cannot_reach(model: Icsg, target) -> frozenset[int]:
    """States from which ``target`` is unreachable whatever anybody does."""
    reach = _backward_reach(model, set(target))
    return frozenset(s for s in range(model.n_states) if s not in reach)


def precompute_not_almost_sure(model: Icsg, target) -> frozenset[int]:
    """States from which some joint behaviour avoids ``target`` with positive
    probability, i.e. the complement of "reached almost surely under every
    profile"."""
    t = model.table
    target = set(target)
    # largest set C outside the target in which some joint action keeps play in C
    C = set(range(model.n_states)) - target
    changed = True
    while changed:
        changed = False
        for s in sorted(C):
            rows = range(*t.rows_of(s).indices(t.n_rows))
            if not any(set(t.succ[r][t.mask[r]].tolist()) <= C for r in rows):
                C.discard(s)
                changed = True
    return frozenset(_backward_reach(model, C, blocked=target))


# ---------------------------------------------------------------------------
# stage games

def solve_matrix_extended(Z: np.ndarray):
    """solve_matrix for payoffs that may contain +inf or -inf (never both).

    A maximiser facing +inf entries spreads a little mass over every row, so
    the minimiser can only use columns free of +inf; symmetrically for -inf.
    """
    pos, neg = np.isposinf(Z), np.isneginf(Z)
    if pos.any() and neg.any():
        raise IcsgError("stage game mixes +inf and -inf payoffs")
    l, m = Z.shape
    if pos.any():
        cols = np.flatnonzero(~pos.any(axis=0))
        if cols.size == 0:
            y = np.zeros(m)
            y[0] = 1.0
            return np.inf, np.full(l, 1.0 / l), y
        v, x, ys = solve_matrix(Z[:, cols])
        y = np.zeros(m)
        y[cols] = ys
        return v, x, y
    if neg.any():
        rows = np.flatnonzero(~neg.any(axis=1))
        if rows.size == 0:
            x = np.zeros(l)
            x[0] = 1.0
            return -np.inf, x, np.full(m, 1.0 / m)
        v, xs, y = solve_matrix(Z[rows])
        x = np.zeros(l)
        x[rows] = xs
        return v, x, y
    return solve_matrix(Z)


@dataclass(frozen=True)
class Decision:
    """Mixed actions of both players at one state (and step)."""

    p1: np.ndarray
    p2: np.ndarray
    value: float


@dataclass
class ZsSolution:
    model: Icsg
    values: np.ndarray
    iterations: int
    converged: bool
    # memoryless: list over states; time-varying: list over steps of such lists
    decisions: list
    # nature's choice per row in table order, or a list of those per step
    nature: np.ndarray | list
    horizon: int | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def value(self) -> float:
        return float(self.values[self.model.initial])

    @property
    def time_varying(self) -> bool:
        return self.horizon is not None

    def decision(self, s: int, step: int | None = None) -> Decision | None:
        return self.decisions[step][s] if self.time_varying else self.decisions[s]

    def nature_row(self, s: int, joint: tuple[str, str], step: int | None = None) -> Resolution:
        P = self.nature[step] if self.time_varying else self.nature
        return nature_resolution(self.model, P, s, joint)


def nature_resolution(model: Icsg, P: np.ndarray, s: int, joint) -> Resolution:
    t = model.table
    r = int(t.offsets[s]) + model.joint_actions(s).index(tuple(joint))
    k = int(t.mask[r].sum())
    return Resolution(tuple(int(j) for j in t.succ[r, :k]), tuple(float(p) for p in P[r, :k]),
                      provenance=(s, tuple(joint)))


class _Setup:
    """Per-query constants: who optimises in which direction."""

    def __init__(self, model: Icsg, prop: Property):
        if not prop.zero_sum:
            raise PropertyError("zero-sum solver called with a nonzero-sum property")
        obj = prop.objective
        self.model = model
        self.objective = obj
        self.coalition = prop.coalition(model)
        self.cmax = obj.maximize
        self.nature_max = (not self.cmax) if prop.semantics == ADVERSARIAL else self.cmax
        self.threads = thread_count()

    def backup(self, V, rewards, states, fixed_P=None):
        """One Jacobi sweep over ``states``; other entries are copied."""
        t = self.model.table
        if fixed_P is None:
            P, E = solve_inner_batch(t.succ, t.lo, t.hi, t.mask, V, self.nature_max)
        else:
            P = fixed_P
            v = np.where(t.mask, np.asarray(V, dtype=float)[t.succ], 0.0)
            with np.errstate(invalid="ignore"):
                E = np.where(P > 0, P * v, 0.0).sum(axis=1)
        z = E if rewards is None else E + rewards
        new = np.array(V, dtype=float)
        decisions = [None] * self.model.n_states
        if self.threads > 1 and len(states) > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                results = list(pool.map(lambda s: self.solve_state(s, z), states))
        else:
            results = [self.solve_state(s, z) for s in states]
        for s, d in zip(states, results):
            new[s] = d.value
            decisions[s] = d
        return new, P, decisions

    def solve_state(self, s, z) -> Decision:
        t = self.model.table
        n1, n2 = t.shapes[s]
        Z = z[t.rows_of(s)].reshape(n1, n2)
        if self.coalition == 1:
            Z = Z.T
        if not self.cmax:
            Z = -Z
        v, x, y = solve_matrix_extended(Z)
        if not self.cmax:
            v = -v
        p1, p2 = (x, y) if self.coalition == 0 else (y, x)
        return Decision(p1, p2, float(v))


def state_update(model: Icsg, s: int, prev, prop: Property):
    """Single robust Bellman update at state ``s``.

    Returns (value, Decision, {joint action: Resolution}).  Target pinning and
    horizon bookkeeping are the caller's business.
    """
    setup = _Setup(model, prop)
    obj = prop.objective
    rewards = model.reward_rows(obj.reward) if obj.reward is not None else None
    prev = np.asarray(prev, dtype=float)
    _, P, decisions = setup.backup(prev, rewards, [s])
    rows = {j: nature_resolution(model, P, s, j) for j in model.joint_actions(s)}
    d = decisions[s]
    return d.value, d, rows


def _relative_change(new, old) -> float:
    same = new == old  # covers matching infinities
    with np.errstate(invalid="ignore", divide="ignore"):
        diff = np.abs(new - old)
        rel = np.where(np.abs(new) > 0, diff / np.abs(new), diff)
    rel = np.where(same, 0.0, rel)
    return float(rel.max()) if rel.size else 0.0


def _iterate(setup, V, active, rewards, tol, max_iters, fixed_P=None):
    iterations, change, converged = 0, 0.0, False
    P, decisions = None, [None] * setup.model.n_states
    if not active:
        _, P, _ = setup.backup(V, rewards, [], fixed_P)
        return V, P, decisions, 0, 0.0, True
    while iterations < max_iters:
        new, P, decisions = setup.backup(V, rewards, active, fixed_P)
        iterations += 1
        change = _relative_change(new, V)
        V = new
        if change < tol:
            converged = True
            break
    if not converged:
        log.warning("value iteration stopped at the iteration cap (%d) with relative change %.3g",
                    max_iters, change)
    return V, P, decisions, iterations, change, converged


def _finish(model, start, diag):
    diag["mode"] = "CSG" if model.nominal else "ICSG"
    diag["wall_time"] = time.perf_counter() - start
    return diag


def solve_reach(model: Icsg, prop: Property, *, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS,
                nature=None) -> ZsSolution:
    start = time.perf_counter()
    check_valid(model)
    setup = _Setup(model, prop)
    obj = prop.objective
    if obj.kind != REACH:
        raise PropertyError("solve_reach needs an unbounded reachability objective")
    T = model.target(obj.target)
    U = precompute_cannot_reach(model, T)
    V = np.zeros(model.n_states)
    V[list(T)] = 1.0
    active = [s for s in range(model.n_states) if s not in T and s not in U]
    V, P, dec, it, change, conv = _iterate(setup, V, active, None, tol, max_iters, nature)
    diag = {"iterations": it, "max_relative_change": change, "converged": conv,
            "convergence": "heuristic" if conv else "iteration-cap"}
    return ZsSolution(model, V, it, conv, dec, P, None, _finish(model, start, diag))


def _check_negative_rewards(model: Icsg, rewards: np.ndarray, T):
    """Refuse models where a negative reward can be collected forever: from
    every state with a negative reward, play must reach the target or a
    zero-reward trap almost surely under every profile."""
    t = model.table
    neg = set(int(s) for s in t.row_state[rewards < 0])
    if not neg:
        return
    zero = set(range(model.n_states)) - set(int(s) for s in t.row_state[rewards != 0])
    # zero-reward traps: largest zero-reward set closed under every enabled row
    Z = set(zero)
    changed = True
    while changed:
        changed = False
        for s in sorted(Z):
            rows = range(*t.rows_of(s).indices(t.n_rows))
            if not all(set(t.succ[r][t.mask[r]].tolist()) <= Z for r in rows):
                Z.discard(s)
                changed = True
    bad = neg & precompute_not_almost_sure(model, set(T) | Z)
    if bad:
        names = ", ".join(model.states[s] for s in sorted(bad))
        raise AssumptionError(
            "negative rewards at states that may avoid both the target and zero-reward traps: " + names)


def solve_reach_reward(model: Icsg, prop: Property, *, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS,
                       gamma=DEFAULT_GAMMA, nature=None) -> ZsSolution:
    """Expected reward until the target: first iterate with every zero reward
    replaced by ``gamma`` from below, then refine under the true rewards."""
    start = time.perf_counter()
    check_valid(model)
    setup = _Setup(model, prop)
    obj = prop.objective
    if obj.kind != REACH_REWARD:
        raise PropertyError("solve_reach_reward needs a reachability reward objective")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    T = model.target(obj.target)
    r = np.asarray(model.reward_rows(obj.reward))
    _check_negative_rewards(model, r, T)
    Uinf = precompute_not_almost_sure(model, T)
    V = np.zeros(model.n_states)
    V[list(Uinf)] = np.inf
    active = [s for s in range(model.n_states) if s not in T and s not in Uinf]
    r_gamma = np.where(r == 0, gamma, r)
    V, _, _, it1, _, conv1 = _iterate(setup, V, active, r_gamma, tol, max_iters, nature)
    V, P, dec, it2, change, conv2 = _iterate(setup, V, active, r, tol, max_iters, nature)
    conv = conv1 and conv2
    diag = {"iterations": it1 + it2, "phase1_iterations": it1, "phase2_iterations": it2,
            "max_relative_change": change, "converged": conv, "gamma": gamma,
            "convergence": "heuristic" if conv else "iteration-cap"}
    return ZsSolution(model, V, it1 + it2, conv, dec, P, None, _finish(model, start, diag))


def solve_bounded(model: Icsg, prop: Property, *, nature=None) -> ZsSolution:
    """Exactly k backward sweeps; decisions and nature rows are per step."""
    start = time.perf_counter()
    check_valid(model)
    setup = _Setup(model, prop)
    obj = prop.objective
    k = obj.horizon
    if obj.kind not in (BOUNDED_REACH, BOUNDED_CUMULATIVE) or k is None or k < 0:
        raise PropertyError("solve_bounded needs a bounded objective with horizon k >= 0")
    if nature is not None and len(nature) < k:
        raise IcsgError(f"nature strategy covers {len(nature)} steps, horizon is {k}")
    S = model.n_states
    if obj.kind == BOUNDED_REACH:
        T = model.target(obj.target)
        V = np.zeros(S)
        V[list(T)] = 1.0
        active = [s for s in range(S) if s not in T]
        rewards = None
    else:
        V = np.zeros(S)
        active = list(range(S))
        rewards = np.asarray(model.reward_rows(obj.reward))
    decisions, natures = [None] * k, [None] * k
    for step in range(k - 1, -1, -1):
        V, P, dec = setup.backup(V, rewards, active, None if nature is None else nature[step])
        decisions[step], natures[step] = dec, P
    diag = {"iterations": k, "converged": True, "convergence": "exact"}
    return ZsSolution(model, V, k, True, decisions, natures, k, _finish(model, start, diag))


def solve_zero_sum(model: Icsg, prop: Property, *, tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS,
                   gamma=DEFAULT_GAMMA) -> ZsSolution:
    kind = prop.objective.kind
    if kind == REACH:
        return solve_reach(model, prop, tol=tol, max_iters=max_iters)
    if kind == REACH_REWARD:
        return solve_reach_reward(model, prop, tol=tol, max_iters=max_iters, gamma=gamma)
    return solve_bounded(model, prop)


def evaluate_under_nature(model: Icsg, nature, prop: Property, *, tol=DEFAULT_TOL,
                          max_iters=DEFAULT_MAX_ITERS, gamma=DEFAULT_GAMMA) -> np.ndarray:
    """Values of the nominal game obtained by fixing nature's choices.

    ``nature`` is a (rows x width) probability array in table order, or a list
    of those per step for bounded objectives (e.g. ``ZsSolution.nature``).
    """
    t = model.table
    steps = nature if prop.objective.finite else [nature]
    for P in steps:
        P = np.asarray(P)
        if P.shape != t.lo.shape:
            raise IcsgError("nature strategy does not resolve every (state, joint action) row")
        if np.any(P[t.mask] < t.lo[t.mask] - 1e-9) or np.any(P[t.mask] > t.hi[t.mask] + 1e-9):
            raise IcsgError("nature strategy leaves the interval bounds")
        if np.any(np.abs(np.where(t.mask, P, 0.0).sum(axis=1) - 1.0) > 1e-9):
            raise IcsgError("nature strategy rows must sum to 1")
    kind = prop.objective.kind
    if kind == REACH:
        sol = solve_reach(model, prop, tol=tol, max_iters=max_iters, nature=nature)
    elif kind == REACH_REWARD:
        sol = solve_reach_reward(model, prop, tol=tol, max_iters=max_iters, gamma=gamma, nature=nature)
    else:
        sol = solve_bounded(model, prop, nature=nature)
    return sol.values
