"""Slow brute-force reference implementations for testing.

Everything here works by enumeration: nature's choices are taken from the
vertices of each interval row, each fixed choice turns the game into an
ordinary concurrent stochastic game, and that game is evaluated directly.
None of it shares code with the solvers beyond the matrix-game LP and the
vertex enumeration, which are tested separately.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceededError
from .model import Icsg, IntervalDistribution, model_from_dict, validate
from .nfg import BimatrixGame, MixedProfile, solve_matrix
from .properties import ADVERSARIAL, BOUNDED_CUMULATIVE, BOUNDED_REACH, REACH, REACH_REWARD, Property
from .uncertainty import enumerate_vertices

MAX_RESOLUTIONS = 10**6


# ---------------------------------------------------------------------------
# random tiny games

@dataclass(frozen=True)
class TinyGameSpec:
    seed: int = 0
    max_states: int = 4
    max_actions: int = 2
    max_successors: int = 3
    width: tuple[float, float] = (0.0, 0.2)
    # rows beyond this product of vertex counts are made point intervals
    max_resolutions: int = 16
    # every row of a non-goal state gets a "goal" successor
    stopping: bool = False


def random_tiny_icsg(spec: TinyGameSpec) -> Icsg:
    """A small random valid game; identical output for identical specs.

    Labels ``goal``, ``g1``, ``g2``; state rewards ``r`` (positive), ``r1``
    and ``r2``; rows are sampled around a center on a 1/20 grid and widened
    by a random width.
    """
    rng = np.random.default_rng(spec.seed)
    n = int(rng.integers(2, spec.max_states + 1))
    states = [f"s{i}" for i in range(n)]
    acts = {"p1": [f"a{i}" for i in range(spec.max_actions)], "p2": [f"b{i}" for i in range(spec.max_actions)]}
    goal = sorted(rng.choice(n, int(rng.integers(1, n)), replace=False).tolist())
    g1 = [int(rng.integers(n))]
    g2 = [int(rng.integers(n))]

    enabled, transitions = {}, []
    budget = 1
    for s in range(n):
        entry = {}
        for p in ("p1", "p2"):
            k = int(rng.integers(0, spec.max_actions + 1))
            if k:
                entry[p] = acts[p][:k]
        if entry:
            enabled[states[s]] = entry
        for a in entry.get("p1", [None]):
            for b in entry.get("p2", [None]):
                c = int(rng.integers(1, min(spec.max_successors, n) + 1))
                succ = sorted(rng.choice(n, c, replace=False).tolist())
                if spec.stopping and s not in goal and not set(succ) & set(goal):
                    succ[int(rng.integers(c))] = goal[int(rng.integers(len(goal)))]
                    succ = sorted(set(succ))
                    c = len(succ)
                units = 1 + rng.multinomial(20 - c, np.full(c, 1.0 / c))
                center = units / 20.0
                w = float(rng.uniform(*spec.width))
                lo = [round(max(p - w, 0.01), 4) for p in center]
                hi = [round(min(p + w, 1.0), 4) for p in center]
                if c == 1:
                    lo, hi = [1.0], [1.0]
                row = {states[t]: [l, h] for t, l, h in zip(succ, lo, hi)}
                count = _vertex_count(row)
                if budget * count > spec.max_resolutions:
                    row = {states[t]: float(p) for t, p in zip(succ, center)}
                    count = 1
                budget *= count
                transitions.append({"from": states[s], "action": [a, b], "row": row})

    def rewards(lo_, hi_):
        return {"state": {st: round(float(rng.uniform(lo_, hi_)), 2) for st in states}}

    model = model_from_dict({
        "players": ["p1", "p2"],
        "states": states,
        "initial": "s0",
        "actions": acts,
        "enabled": enabled,
        "transitions": transitions,
        "rewards": {"r": rewards(0.5, 2.0), "r1": rewards(0.0, 1.0), "r2": rewards(0.0, 1.0)},
        "labels": {"goal": [states[i] for i in goal], "g1": [states[i] for i in g1],
                   "g2": [states[i] for i in g2]},
    })
    assert not validate(model)
    return model


def _vertex_count(row) -> int:
    d = IntervalDistribution.from_mapping({k: tuple(v) if isinstance(v, list) else v
                                           for k, v in enumerate(row.values())})
    return len(enumerate_vertices(d))


# ---------------------------------------------------------------------------
# helpers

def _rows(model: Icsg):
    """[(state, joint, [vertex probability vectors over all states])]."""
    out = []
    for s in range(model.n_states):
        for joint in model.joint_actions(s):
            verts = [res.array(model.n_states) for res in enumerate_vertices(model.row(s, joint))]
            out.append((s, joint, verts))
    return out


def _resolution_product(rows, steps, cap):
    total = 1
    for _, _, v in rows:
        total *= len(v) ** steps
        if total > cap:
            raise CapExceededError(f"more than {cap} vertex resolutions")
    per_step = list(itertools.product(*[range(len(v)) for _, _, v in rows]))
    return itertools.product(per_step, repeat=steps), total


def _kernel(model, rows, choice):
    """Fixed transition kernel: (state, joint) -> probability vector."""
    return {(s, j): verts[c] for (s, j, verts), c in zip(rows, choice)}


def _matrix(model, s, fn):
    c1, c2 = model.choices(s)
    return np.array([[fn((a, b)) for b in c2] for a in c1])


def _stage_value(Z, coalition, maximize):
    if coalition == 1:
        Z = Z.T
    if not maximize:
        Z = -Z
    v = solve_matrix(Z)[0]
    return v if maximize else -v


# ---------------------------------------------------------------------------
# zero-sum oracle

def _csg_value(model, kernel, prop, coalition, horizon_cap, tol):
    obj = prop.objective
    S = model.n_states
    r = None
    if obj.reward is not None:
        rs = model.reward(obj.reward)
        r = {(s, j): rs.total(s, j) for s in range(S) for j in model.joint_actions(s)}
    T = model.target(obj.target) if obj.target is not None else frozenset()

    def sweep(V, pin):
        new = np.empty(S)
        for s in range(S):
            if pin(s) is not None:
                new[s] = pin(s)
                continue
            Z = _matrix(model, s, lambda j: (r[(s, j)] if r else 0.0) + kernel[(s, j)] @ V)
            new[s] = _stage_value(Z, coalition, obj.maximize)
        return new

    if obj.kind == REACH:
        V = np.array([1.0 if s in T else 0.0 for s in range(S)])
        pin = lambda s: 1.0 if s in T else None  # noqa: E731
    else:
        V = np.zeros(S)
        pin = lambda s: 0.0 if s in T else None  # noqa: E731
    for _ in range(horizon_cap):
        new = sweep(V, pin)
        if np.max(np.abs(new - V)) < tol:
            return new
        if np.max(new) > 1e9:
            return np.where(new > 1e6, np.inf, new)
        V = new
    return V


def oracle_zs_value(model: Icsg, prop: Property, horizon_cap: int = 100_000, tol: float = 1e-9,
                    max_resolutions: int = MAX_RESOLUTIONS) -> float:
    """Nature-first robust value: best over every vertex resolution of the
    value of the induced ordinary game (per step for bounded objectives)."""
    obj = prop.objective
    coalition = model.player_index(prop.players[0])
    rows = _rows(model)
    nature_min = obj.maximize == (prop.semantics == ADVERSARIAL)
    best = np.inf if nature_min else -np.inf
    if obj.finite:
        combos, _ = _resolution_product(rows, obj.horizon, max_resolutions)
        for combo in combos:
            v = _timed_value(model, rows, combo, prop, coalition)
            best = min(best, v) if nature_min else max(best, v)
        return float(best)
    combos, _ = _resolution_product(rows, 1, max_resolutions)
    for (choice,) in combos:
        v = _csg_value(model, _kernel(model, rows, choice), prop, coalition, horizon_cap, tol)[model.initial]
        best = min(best, v) if nature_min else max(best, v)
    return float(best)


def _timed_value(model, rows, combo, prop, coalition):
    """Backward induction with kernel combo[h] used at step h."""
    obj = prop.objective
    S = model.n_states
    k = obj.horizon
    T = model.target(obj.target) if obj.target is not None else frozenset()
    rs = model.reward(obj.reward) if obj.reward is not None else None
    if obj.kind == BOUNDED_REACH:
        V = np.array([1.0 if s in T else 0.0 for s in range(S)])
    else:
        V = np.zeros(S)
    for h in range(k - 1, -1, -1):
        kern = _kernel(model, rows, combo[h])
        new = np.empty(S)
        for s in range(S):
            if obj.kind == BOUNDED_REACH and s in T:
                new[s] = 1.0
                continue
            Z = _matrix(model, s, lambda j: (rs.total(s, j) if rs else 0.0) + kern[(s, j)] @ V)
            new[s] = _stage_value(Z, coalition, obj.maximize)
        V = new
    return float(V[model.initial])


# ---------------------------------------------------------------------------
# bimatrix oracle

def oracle_support_enumeration(game: BimatrixGame, tol: float = 1e-9) -> list[MixedProfile]:
    """Textbook equal-size support enumeration; exact for nondegenerate games."""
    A, B = game.payoff1, game.payoff2
    l, m = A.shape
    out = []
    for k in range(1, min(l, m) + 1):
        for I in itertools.combinations(range(l), k):
            for J in itertools.combinations(range(m), k):
                y = _indifferent(A[np.ix_(I, J)])
                x = _indifferent(B[np.ix_(I, J)].T)
                if x is None or y is None:
                    continue
                xf, yf = np.zeros(l), np.zeros(m)
                xf[list(I)], yf[list(J)] = x, y
                if (A @ yf).max() > xf @ A @ yf + tol or (xf @ B).max() > xf @ B @ yf + tol:
                    continue
                out.append(MixedProfile.of(game, xf, yf))
    return out


def _indifferent(M):
    """Strictly positive mixture over columns of M making all rows equal."""
    k = M.shape[0]
    sys = np.zeros((k + 1, k + 1))
    sys[:k, :k] = M
    sys[:k, k] = -1.0
    sys[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    try:
        sol = np.linalg.solve(sys, rhs)
    except np.linalg.LinAlgError:
        return None
    p = sol[:k]
    return p if np.all(p > 0) else None


# ---------------------------------------------------------------------------
# robust equilibrium oracle

def oracle_stage_bounds(stage, profile: MixedProfile) -> tuple[float, float]:
    """Largest pure-deviation gain per player over every vertex combination
    of the stage's rows, computed by evaluating each combination in full.

    For a stage with uncertain continuation, the deviated play is credited
    with the continuation gain bound and each weight change is valued at the
    end of the continuation range that favours the deviator.
    """
    n1, n2 = stage.shape
    S = stage.query.model.n_states
    verts = [[res.array(S) for res in enumerate_vertices(r)] for r in stage.rows]
    x, y = profile.x, profile.y
    base_w = np.outer(x, y).ravel()
    best = [-np.inf, -np.inf]
    for choice in itertools.product(*[range(len(v)) for v in verts]):
        P = [verts[k][c] for k, c in enumerate(choice)]
        for l in (0, 1):
            imm = stage.immediate(l)
            if stage.pinned[l] is None:
                hi, lo, g = stage.continuation(l)
            for a in range(stage.shape[l]):
                dev = np.zeros((n1, n2))
                if l == 0:
                    dev[a, :] = y
                else:
                    dev[:, a] = x
                dev = dev.ravel()
                if stage.pinned[l] is not None:
                    total = float((dev - base_w).sum() * stage.pinned[l])
                else:
                    total = 0.0
                    for k in range(n1 * n2):
                        d = dev[k] - base_w[k]
                        v = P[k] @ (hi if d > 0 else lo)
                        total += d * (imm[k] + v) + dev[k] * (P[k] @ g)
                best[l] = max(best[l], total)
    return best[0], best[1]


@dataclass
class RneVerdict:
    ok: bool
    gain: float = -np.inf
    player: int | None = None
    state: int | None = None
    step: int | None = None
    flags: tuple | None = None
    resolution: list = field(default_factory=list)


def _profile_fn(profile):
    """Normalise a profile into a function (state, step, flags) -> (x, y)."""
    from .nonzerosum import NzSolution, PlayerProgress, DONE, ACTIVE
    if isinstance(profile, NzSolution):
        def fn(s, h, flags):
            c = profile.profile(s, h, PlayerProgress(tuple(DONE if f else ACTIVE for f in flags)))
            return None if c is None else (c.profile.x, c.profile.y)
        return fn
    if callable(profile):
        return profile
    return lambda s, h, flags: profile.get(s)


def oracle_rne_check(model: Icsg, profile, epsilon: float, prop: Property, horizon_cap: int = 200,
                     max_resolutions: int = MAX_RESOLUTIONS) -> RneVerdict:
    """Check a profile against the robust equilibrium definition by brute force.

    For every vertex resolution (per step when both objectives are bounded,
    fixed otherwise) each player's best response is computed exactly by
    backward induction over (state, reached flags, step), which covers every
    pure deviation; the profile passes when no player gains more than
    epsilon anywhere.  Unbounded objectives are truncated at ``horizon_cap``
    steps.  ``profile`` is an NzSolution, a callable (state, step, flags) ->
    (x, y), or a dict state -> (x, y); a missing entry means uniform play.
    """
    objs = prop.ordered(model)
    fn = _profile_fn(profile)
    finite = all(o.finite for o in objs)
    H = max((o.horizon if o.finite else horizon_cap) for o in objs)
    rows = _rows(model)
    steps = H if finite else 1
    combos, _ = _resolution_product(rows, steps, max_resolutions)
    worst = RneVerdict(True)
    for combo in combos:
        if finite:
            kernels = [_kernel(model, rows, c) for c in combo]
        else:
            kernels = [_kernel(model, rows, combo[0])] * H
        v = _check_fixed(model, objs, fn, kernels, H, finite)
        if v.gain > worst.gain:
            worst = v
            kern = kernels[v.step]
            worst.resolution = [(model.states[s], j, tuple(float(q) for q in kern[(s, j)][kern[(s, j)] > 0]))
                                for s, j, _ in rows]
    worst.ok = worst.gain <= epsilon + 1e-9
    return worst


def _check_fixed(model, objs, fn, kernels, H, finite) -> RneVerdict:
    S = model.n_states
    info = []
    for o in objs:
        T = model.target(o.target) if o.target is not None else frozenset()
        rs = model.reward(o.reward) if o.reward is not None else None
        info.append((o, T, rs))

    def close(flags, s, h):
        out = list(flags)
        for l, (o, T, _) in enumerate(info):
            if s in T and o.kind in (REACH, BOUNDED_REACH, REACH_REWARD):
                if o.kind != BOUNDED_REACH or h <= o.horizon:
                    out[l] = 1
        return tuple(out)

    def immediate(l, s, j, h, flags):
        o, _, rs = info[l]
        if o.kind == BOUNDED_CUMULATIVE:
            return rs.total(s, j) if h < o.horizon else 0.0
        if o.kind == REACH_REWARD:
            return rs.total(s, j) if not flags[l] else 0.0
        return 0.0

    # only objectives with a target carry a "reached" flag
    flag_sets = list(itertools.product(*[(0, 1) if o.target is not None else (0,) for o, _, _ in info]))
    # terminal values at step H
    W = [{}, {}]
    B = [{}, {}]
    for s in range(S):
        for f in flag_sets:
            fc = close(f, s, H)
            for l in (0, 1):
                o = info[l][0]
                val = float(fc[l]) if o.kind in (REACH, BOUNDED_REACH) else 0.0
                W[l][(s, f)] = B[l][(s, f)] = val
    worst = RneVerdict(True)
    for h in range(H - 1, -1, -1):
        kern = kernels[h]
        nW, nB = [{}, {}], [{}, {}]
        for s in range(S):
            c1, c2 = model.choices(s)
            for f in flag_sets:
                fc = close(f, s, h)
                xy = fn(s, h if finite else None, fc)
                x, y = xy if xy is not None else (np.full(len(c1), 1 / len(c1)), np.full(len(c2), 1 / len(c2)))
                for l in (0, 1):
                    U = np.empty((len(c1), len(c2)))
                    UB = np.empty((len(c1), len(c2)))
                    for i, a in enumerate(c1):
                        for k, b in enumerate(c2):
                            p = kern[(s, (a, b))]
                            imm = immediate(l, s, (a, b), h, fc)
                            U[i, k] = imm + sum(p[t] * W[l][(t, fc)] for t in np.flatnonzero(p))
                            UB[i, k] = imm + sum(p[t] * B[l][(t, fc)] for t in np.flatnonzero(p))
                    nW[l][(s, f)] = w = float(x @ U @ y)
                    nB[l][(s, f)] = b = float((UB @ y).max() if l == 0 else (x @ UB).max())
                    if b - w > worst.gain:
                        worst = RneVerdict(True, b - w, l, s, h, fc)
        W, B = nW, nB
    return worst
