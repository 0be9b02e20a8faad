"""Nonzero-sum queries: robust social-welfare-optimal equilibria.

At every state nature picks, per joint action, the distribution minimising
the sum of both players' continuation values (maximising it under controlled
semantics).  The resulting bimatrix game is solved for its extreme
equilibria, each candidate is checked for robustness by bounding the gain of
every pure deviation over all distributions nature could pick, and the
surviving candidate with the highest welfare is played.

Progress bookkeeping: a player whose reachability target has been hit is
"done" (value pinned at 1, or 0 further reward for reward objectives); a
player who can no longer reach the target is "hopeless" (value 0).  The
solver keeps one value vector per combination of player statuses.
"""
from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import PropertyError
from .model import Icsg, check_valid
from .nfg import BimatrixGame, MixedProfile, enumerate_ne, select_swne
from .properties import (ADVERSARIAL, BOUNDED_CUMULATIVE, BOUNDED_REACH, REACH, REACH_REWARD, Property)
from .uncertainty import Resolution, solve_inner, solve_inner_batch
from .zerosum import (DEFAULT_MAX_ITERS, DEFAULT_TOL, _relative_change, precompute_cannot_reach,
                      precompute_not_almost_sure)

log = logging.getLogger(__name__)

ACTIVE, DONE, HOPELESS = 0, 1, 2
EPS_SLACK = 1e-9
DEFAULT_EPSILON_INFINITE = 1e-6
DEFAULT_EPSILON_FINITE = 0.0


@dataclass(frozen=True)
class PlayerProgress:
    """Status of each player: ACTIVE, DONE (target reached) or HOPELESS."""

    status: tuple[int, int] = (ACTIVE, ACTIVE)

    @property
    def D(self) -> frozenset[int]:
        return frozenset(i for i, s in enumerate(self.status) if s == DONE)

    @property
    def E(self) -> frozenset[int]:
        return frozenset(i for i, s in enumerate(self.status) if s == HOPELESS)

    def __str__(self):
        return f"D={{{','.join(str(i + 1) for i in sorted(self.D))}}} E={{{','.join(str(i + 1) for i in sorted(self.E))}}}"


@dataclass(frozen=True)
class _Player:
    kind: str
    target: frozenset[int]
    hopeless: frozenset[int]
    rewards: np.ndarray | None
    horizon: int | None


class NzQuery:
    """A nonzero-sum property resolved against a model."""

    def __init__(self, model: Icsg, prop: Property, epsilon: float | None = None):
        if prop.zero_sum:
            raise PropertyError("nonzero-sum solver called with a zero-sum property")
        objs = prop.ordered(model)
        if objs[0].finite != objs[1].finite:
            raise PropertyError("mixed-horizon nonzero-sum properties are not supported")
        self.model = model
        self.prop = prop
        self.finite = objs[0].finite
        self.nature_max = prop.semantics != ADVERSARIAL
        if epsilon is None:
            epsilon = prop.epsilon_ne
        if epsilon is None:
            epsilon = DEFAULT_EPSILON_FINITE if self.finite else DEFAULT_EPSILON_INFINITE
        self.epsilon = float(epsilon)
        players = []
        for o in objs:
            o.check(model)
            T = model.target(o.target) if o.target is not None else frozenset()
            U = precompute_cannot_reach(model, T) if o.kind in (REACH, BOUNDED_REACH) else frozenset()
            r = np.asarray(model.reward_rows(o.reward)) if o.reward is not None else None
            players.append(_Player(o.kind, T, U, r, o.horizon))
        self.players = tuple(players)
        self.horizon = max(o.horizon for o in objs) if self.finite else None

    def closure(self, progress: PlayerProgress, s: int, step: int | None = None) -> PlayerProgress:
        """Statuses after entering state ``s`` (at ``step`` for bounded objectives)."""
        status = list(progress.status)
        for l, p in enumerate(self.players):
            if status[l] != ACTIVE or p.kind == BOUNDED_CUMULATIVE:
                continue
            if s in p.target and (p.horizon is None or step is None or step <= p.horizon):
                status[l] = DONE
            elif s in p.hopeless:
                status[l] = HOPELESS
        return PlayerProgress(tuple(status))

    def pinned(self, l: int, progress: PlayerProgress, step: int | None) -> float | None:
        """Player l's fixed value, or None when it still depends on play."""
        p, st = self.players[l], progress.status[l]
        if st == DONE:
            return 1.0 if p.kind in (REACH, BOUNDED_REACH) else 0.0
        if st == HOPELESS:
            return 0.0
        if p.horizon is not None and step is not None and step >= p.horizon:
            return 0.0
        return None

    def contexts(self) -> list[PlayerProgress]:
        options = []
        for p in self.players:
            if p.kind in (REACH, BOUNDED_REACH):
                options.append((ACTIVE, DONE, HOPELESS))
            elif p.kind == REACH_REWARD:
                options.append((ACTIVE, DONE))
            else:
                options.append((ACTIVE,))
        return [PlayerProgress(st) for st in itertools.product(*options)]


@dataclass
class Stage:
    """The bimatrix game at one state plus what is needed to bound deviations."""

    query: NzQuery
    state: int
    game: BimatrixGame
    nature: list[Resolution]  # welfare-optimal row per joint action, row-major
    rows: list                # IntervalDistribution per joint action, row-major
    pinned: tuple[float | None, float | None]
    prev: tuple[np.ndarray, np.ndarray]
    step: int | None = None
    # per player (hi, lo, gain): range of the profile's continuation value
    # over nature's choices and a bound on the deviation gain still available
    # after this step; (prev, prev, 0) when the continuation is certain
    bounds: tuple | None = None

    def continuation(self, l: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self.bounds is None:
            return self.prev[l], self.prev[l], np.zeros_like(self.prev[l])
        return self.bounds[l]

    @property
    def shape(self):
        return self.game.shape

    def immediate(self, l: int) -> np.ndarray:
        r = self.query.players[l].rewards
        if r is None:
            return np.zeros(len(self.rows))
        return r[self.query.model.table.rows_of(self.state)]


@dataclass
class CandidateProfile:
    profile: MixedProfile
    nature: list[Resolution]
    bounds: tuple[float, float]
    witnesses: tuple  # per player: (pure action index, {row: Resolution}) attaining the bound
    accepted: bool
    # per player (hi, lo, gain) at this state once the profile is played
    value_bounds: tuple | None = None


def build_stage_bimatrix(query: NzQuery, s: int, prev_v1, prev_v2, progress: PlayerProgress = PlayerProgress(),
                         step: int | None = None, bounds=None) -> Stage:
    model = query.model
    t = model.table
    sl = t.rows_of(s)
    n1, n2 = t.shapes[s]
    prev = (np.asarray(prev_v1, dtype=float), np.asarray(prev_v2, dtype=float))
    welfare = prev[0] + prev[1]
    P, _ = solve_inner_batch(t.succ[sl], t.lo[sl], t.hi[sl], t.mask[sl], welfare, query.nature_max)
    joints = model.joint_actions(s)
    rows = [model.row(s, j) for j in joints]
    nature = [Resolution(r.succ, tuple(float(p) for p in P[k, :len(r)]), provenance=(s, j))
              for k, (r, j) in enumerate(zip(rows, joints))]
    pinned = tuple(query.pinned(l, progress, step) for l in (0, 1))
    payoffs = []
    for l in (0, 1):
        if pinned[l] is not None:
            payoffs.append(np.full((n1, n2), pinned[l]))
            continue
        cont = np.array([sum(p * prev[l][j] for j, p in zip(res.succ, res.probs)) for res in nature])
        r = query.players[l].rewards
        z = cont + (r[sl] if r is not None else 0.0)
        payoffs.append(z.reshape(n1, n2))
    stage = Stage(query, s, BimatrixGame(payoffs[0], payoffs[1]), nature, rows, pinned, prev, step, bounds)
    return stage


def _row_weights(stage: Stage, l: int, c_dev: float, c_base: float):
    """Continuation weight vector of one row in the deviation gain.

    Under a common nature, gain = (c_dev - c_base) * (r + P . v) + c_dev * P . g
    where v is the profile's continuation value and g the continuation gain;
    v is replaced by its upper or lower bound according to the sign.
    """
    hi, lo, g = stage.continuation(l)
    d = c_dev - c_base
    w = d * (hi if d > 0 else lo) if d != 0.0 else np.zeros_like(hi)
    if c_dev:
        w = w + c_dev * g
    return d, w


def _deviation(stage: Stage, profile: MixedProfile, deviator: int, action: int):
    """Largest gain, over nature's choices, of switching ``deviator`` to a pure action.

    Each row contributes (c_dev - c_base) * r_k + max_P P . w_k with weights
    from ``_row_weights``: one inner problem per row.  For a certain
    continuation this is the exact one-shot gain with net coefficient
    c_dev - c_base.
    """
    n1, n2 = stage.shape
    x, y = profile.x, profile.y
    const = stage.pinned[deviator]
    imm = stage.immediate(deviator)
    gain = 0.0
    chosen = {}
    for i in range(n1):
        for j in range(n2):
            k = i * n2 + j
            if deviator == 0:
                c_dev, c_base = (y[j] if i == action else 0.0), x[i] * y[j]
            else:
                c_dev, c_base = (x[i] if j == action else 0.0), x[i] * y[j]
            if c_dev == c_base == 0.0:
                continue
            if const is not None:
                gain += (c_dev - c_base) * const
                continue
            d, w = _row_weights(stage, deviator, c_dev, c_base)
            res = solve_inner(stage.rows[k], w, maximize=True, provenance=stage.nature[k].provenance)
            chosen[k] = res
            gain += d * imm[k] + res.value
    return gain, chosen


def deviation_gain(stage: Stage, profile: MixedProfile, deviator: int, action: int) -> float:
    """sup over nature of u_i(profile with ``deviator`` playing ``action``) - u_i(profile)."""
    return _deviation(stage, profile, deviator, action)[0]


def annotate(stage: Stage, profile: MixedProfile, epsilon: float) -> CandidateProfile:
    bounds, witnesses = [], []
    for l in (0, 1):
        best = (-np.inf, None, None)
        for a in range(stage.shape[l]):
            g, chosen = _deviation(stage, profile, l, a)
            if g > best[0]:
                best = (g, a, chosen)
        bounds.append(best[0])
        witnesses.append((best[1], best[2]))
    accepted = bounds[0] <= epsilon + EPS_SLACK and bounds[1] <= epsilon + EPS_SLACK
    return CandidateProfile(profile, stage.nature, tuple(bounds), tuple(witnesses), accepted)


def filter_rne(stage: Stage, equilibria: list[MixedProfile], epsilon: float) -> list[CandidateProfile]:
    """Candidates whose worst-case deviation gain is within epsilon for both players."""
    out = []
    for p in equilibria:
        c = annotate(stage, p, epsilon)
        if c.accepted:
            out.append(c)
    return out


@dataclass
class NoRne:
    state: int
    step: int | None
    progress: PlayerProgress
    candidates: list[CandidateProfile] = field(default_factory=list)


def value_bounds(stage: Stage, candidate: CandidateProfile) -> tuple:
    """Per player (hi, lo, gain) at the stage's state once ``candidate`` is
    played: the range of the player's value over nature's choices and the
    largest deviation gain available from here on."""
    t = stage.query.model.table
    sl = t.rows_of(stage.state)
    profile = candidate.profile
    n1, n2 = stage.shape
    out = []
    for l in (0, 1):
        if stage.pinned[l] is not None:
            out.append((stage.pinned[l], stage.pinned[l], 0.0))
            continue
        hi, lo, _ = stage.continuation(l)
        imm = stage.immediate(l)
        _, up = solve_inner_batch(t.succ[sl], t.lo[sl], t.hi[sl], t.mask[sl], hi, True)
        _, dn = solve_inner_batch(t.succ[sl], t.lo[sl], t.hi[sl], t.mask[sl], lo, False)
        up = (imm + up).reshape(n1, n2)
        dn = (imm + dn).reshape(n1, n2)
        out.append((float(profile.x @ up @ profile.y), float(profile.x @ dn @ profile.y),
                    max(float(candidate.bounds[l]), 0.0)))
    return tuple(out)


def nz_state_update(query: NzQuery, s: int, prev_v1, prev_v2, progress: PlayerProgress = PlayerProgress(),
                    step: int | None = None, bounds=None):
    """(v1, v2, CandidateProfile) at state s, or NoRne.

    ``bounds`` holds per player (hi, lo, gain) continuation vectors; without
    them the continuation is taken as certain (hi = lo = prev, gain = 0).
    """
    stage = build_stage_bimatrix(query, s, prev_v1, prev_v2, progress, step, bounds)
    eqs = enumerate_ne(stage.game, query.epsilon)
    annotated = [annotate(stage, p, query.epsilon) for p in eqs]
    accepted = [c for c in annotated if c.accepted]
    if not accepted:
        return NoRne(s, step, progress, annotated)
    best = select_swne([c.profile for c in accepted])
    chosen = next(c for c in accepted if c.profile is best)
    chosen.value_bounds = value_bounds(stage, chosen)
    return best.u1, best.u2, chosen


@dataclass
class NzSolution:
    query: NzQuery
    values: dict  # PlayerProgress -> (v1, v2) arrays
    bounds: dict  # PlayerProgress -> ((hi1, lo1, g1), (hi2, lo2, g2)) arrays
    # finite: (step, progress) -> {state: CandidateProfile}; infinite: progress -> {...}
    strategies: dict
    iterations: int
    converged: bool
    diagnostics: dict = field(default_factory=dict)

    @property
    def model(self):
        return self.query.model

    @property
    def v1(self) -> np.ndarray:
        return self.values[PlayerProgress()][0]

    @property
    def v2(self) -> np.ndarray:
        return self.values[PlayerProgress()][1]

    @property
    def value(self) -> tuple[float, float]:
        s = self.model.initial
        return float(self.v1[s]), float(self.v2[s])

    def profile(self, s: int, step: int | None = None,
                progress: PlayerProgress = PlayerProgress()) -> CandidateProfile | None:
        """Decision at state s for a history with the given statuses (None if
        every player's outcome is already fixed there)."""
        c = self.query.closure(progress, s, step)
        key = (step, c) if self.query.finite else c
        return self.strategies.get(key, {}).get(s)


@dataclass
class NoRneReport:
    state: int
    state_name: str
    step: int | None
    progress: PlayerProgress
    candidates: list[CandidateProfile]
    diagnostics: dict = field(default_factory=dict)

    @property
    def message(self):
        at = f" at step {self.step}" if self.step is not None else ""
        return f"no robust equilibrium at state {self.state_name}{at} ({self.progress})"


def _layer(query: NzQuery, prev: dict, step: int | None):
    """Values for every (state, progress) given continuation vectors ``prev``.

    ``prev`` maps a progress to eight vectors (v1, v2, hi1, lo1, g1, hi2, lo2, g2).
    Returns (values dict of the same shape, strategies dict) or a NoRne.
    """
    model = query.model
    S = model.n_states
    ctxs = query.contexts()
    out = {c: tuple(np.zeros(S) for _ in range(8)) for c in ctxs}
    strategies: dict = {}
    cache = {}
    for s in range(S):
        for c in ctxs:
            cc = query.closure(c, s, step)
            if (s, cc) not in cache:
                pins = [query.pinned(l, cc, step) for l in (0, 1)]
                if all(p is not None for p in pins):
                    cache[(s, cc)] = (pins[0], pins[1], pins[0], pins[0], 0.0, pins[1], pins[1], 0.0)
                else:
                    v1, v2, *rest = prev[cc]
                    res = nz_state_update(query, s, v1, v2, cc, step, bounds=(tuple(rest[:3]), tuple(rest[3:])))
                    if isinstance(res, NoRne):
                        return res
                    b1, b2 = res[2].value_bounds
                    cache[(s, cc)] = (res[0], res[1], *b1, *b2)
                    strategies.setdefault(cc, {})[s] = res[2]
            for vec, val in zip(out[c], cache[(s, cc)]):
                vec[s] = val
    return out, strategies


def _split(full: dict):
    return ({c: v[:2] for c, v in full.items()},
            {c: (v[2:5], v[5:8]) for c, v in full.items()})


def nz_solve(model: Icsg, prop: Property, *, epsilon: float | None = None, tol=DEFAULT_TOL,
             max_iters=DEFAULT_MAX_ITERS):
    """Robust social-welfare-optimal equilibrium values, or a NoRneReport."""
    start = time.perf_counter()
    check_valid(model)
    query = NzQuery(model, prop, epsilon)
    diag = {"epsilon": query.epsilon, "mode": "CSG" if model.nominal else "ICSG"}
    if not query.finite:
        for l, p in enumerate(query.players):
            if precompute_not_almost_sure(model, p.target):
                log.warning("player %d's target is not reached almost surely under every profile; "
                            "values may not converge", l + 1)
                diag["stopping"] = False
    S = model.n_states

    def report(nr: NoRne):
        diag["wall_time"] = time.perf_counter() - start
        return NoRneReport(nr.state, model.states[nr.state], nr.step, nr.progress, nr.candidates, diag)

    zero = {c: tuple(np.zeros(S) for _ in range(8)) for c in query.contexts()}
    if query.finite:
        k = query.horizon
        res = _layer(query, zero, k)
        values = res[0]
        strategies = {}
        for step in range(k - 1, -1, -1):
            res = _layer(query, values, step)
            if isinstance(res, NoRne):
                return report(res)
            values, strat = res
            for c, m in strat.items():
                strategies[(step, c)] = m
        diag.update(iterations=k, converged=True, convergence="exact", wall_time=time.perf_counter() - start)
        return NzSolution(query, *_split(values), strategies, k, True, diag)

    # initial vectors: only the pinned statuses contribute
    values = {}
    for c in query.contexts():
        v1, v2 = np.zeros(S), np.zeros(S)
        for s in range(S):
            cc = query.closure(c, s)
            v1[s] = query.pinned(0, cc, None) or 0.0
            v2[s] = query.pinned(1, cc, None) or 0.0
        values[c] = (v1, v2, v1.copy(), v1.copy(), np.zeros(S), v2.copy(), v2.copy(), np.zeros(S))
    strategies, iterations, change, converged = {}, 0, 0.0, False
    while iterations < max_iters:
        res = _layer(query, values, None)
        if isinstance(res, NoRne):
            return report(res)
        new, strategies = res
        iterations += 1
        old_w = np.concatenate([values[c][0] + values[c][1] for c in values])
        new_w = np.concatenate([new[c][0] + new[c][1] for c in values])
        change = _relative_change(new_w, old_w)
        values = new
        if change < tol:
            converged = True
            break
    diag.update(iterations=iterations, converged=converged, max_relative_change=change,
                convergence="heuristic" if converged else "iteration-cap",
                wall_time=time.perf_counter() - start)
    return NzSolution(query, *_split(values), strategies, iterations, converged, diag)
