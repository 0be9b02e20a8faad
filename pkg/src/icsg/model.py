"""Interval concurrent stochastic game (ICSG) data model.

States, players and actions are strings at the boundary and dense integer
indices inside the solvers.  Every model object is immutable once built, so
it can be shared between worker threads without copying.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import InfeasibleRowError, ModelError

IDLE = "⊥"
FEAS_TOL = 1e-9
DELTA_FLOOR = 1e-12


@dataclass(frozen=True)
class IntervalDistribution:
    """Sparse interval row: successor index -> [lo, hi], sorted by successor."""

    succ: tuple[int, ...]
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    @classmethod
    def from_mapping(cls, entries: Mapping[int, tuple[float, float] | float]) -> "IntervalDistribution":
        succ, lo, hi = [], [], []
        for t in sorted(entries):
            b = entries[t]
            l, h = (b, b) if isinstance(b, (int, float)) else b
            succ.append(int(t))
            lo.append(float(l))
            hi.append(float(h))
        return cls(tuple(succ), tuple(lo), tuple(hi))

    def __len__(self):
        return len(self.succ)

    @property
    def is_point(self) -> bool:
        return all(l == h for l, h in zip(self.lo, self.hi))

    def check_feasible(self, where=""):
        slo, shi = math.fsum(self.lo), math.fsum(self.hi)
        if slo > 1 + FEAS_TOL or shi < 1 - FEAS_TOL:
            raise InfeasibleRowError(
                f"infeasible interval row{(' ' + where) if where else ''}: "
                f"sum(lo)={slo:.12g}, sum(hi)={shi:.12g}"
            )


@dataclass(frozen=True)
class RewardStructure:
    """State rewards (dense, one per state) plus sparse action rewards."""

    state: tuple[float, ...]
    action: Mapping[tuple[int, tuple[str, str]], float] = field(default_factory=dict)

    def total(self, s: int, joint: tuple[str, str]) -> float:
        return self.state[s] + self.action.get((s, joint), 0.0)


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    state: str | None = None
    action: tuple[str, str] | None = None
    successor: str | None = None

    def __str__(self):
        where = []
        if self.state is not None:
            where.append(f"state {self.state}")
        if self.action is not None:
            where.append(f"action ({self.action[0]}, {self.action[1]})")
        if self.successor is not None:
            where.append(f"successor {self.successor}")
        return f"{self.kind}: {self.message}" + (f" [{', '.join(where)}]" if where else "")


@dataclass(frozen=True)
class RowTable:
    """Padded array view of all rows, used by the vectorised inner solver.

    Rows of state ``s`` occupy ``offsets[s]:offsets[s+1]`` in row-major order
    over (player-1 choice, player-2 choice).
    """

    offsets: np.ndarray
    shapes: tuple[tuple[int, int], ...]
    succ: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    mask: np.ndarray
    row_state: np.ndarray

    @property
    def n_rows(self):
        return self.succ.shape[0]

    def rows_of(self, s: int) -> slice:
        return slice(int(self.offsets[s]), int(self.offsets[s + 1]))


@dataclass(frozen=True)
class Icsg:
    players: tuple[str, str]
    states: tuple[str, ...]
    initial: int
    actions: tuple[tuple[str, ...], tuple[str, ...]]
    # enabled[s][i]: actions of player i at state s; empty means idle
    enabled: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...]
    transitions: Mapping[tuple[int, tuple[str, str]], IntervalDistribution]
    rewards: Mapping[str, RewardStructure] = field(default_factory=dict)
    labels: Mapping[str, frozenset[int]] = field(default_factory=dict)
    nominal: bool = field(default=False, compare=False)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def choices(self, s: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
        a1, a2 = self.enabled[s]
        return (a1 or (IDLE,), a2 or (IDLE,))

    def joint_actions(self, s: int) -> list[tuple[str, str]]:
        c1, c2 = self.choices(s)
        return [(a, b) for a in c1 for b in c2]

    def row(self, s: int, joint: tuple[str, str]) -> IntervalDistribution:
        return self.transitions[(s, tuple(joint))]

    def state_index(self, name: str) -> int:
        return self._state_pos[name]

    def player_index(self, name: str) -> int:
        if name not in self.players:
            raise ModelError(f"unknown player {name!r}")
        return self.players.index(name)

    def target(self, label: str) -> frozenset[int]:
        if label not in self.labels:
            raise ModelError(f"unknown label {label!r}")
        return self.labels[label]

    def reward(self, name: str) -> RewardStructure:
        if name not in self.rewards:
            raise ModelError(f"unknown reward structure {name!r}")
        return self.rewards[name]

    @cached_property
    def _state_pos(self):
        return {name: i for i, name in enumerate(self.states)}

    @cached_property
    def table(self) -> RowTable:
        shapes, offsets, rows = [], [0], []
        for s in range(self.n_states):
            c1, c2 = self.choices(s)
            shapes.append((len(c1), len(c2)))
            for a in c1:
                for b in c2:
                    rows.append(self.transitions[(s, (a, b))])
            offsets.append(len(rows))
        width = max((len(r) for r in rows), default=1)
        n = len(rows)
        succ = np.zeros((n, width), dtype=np.intp)
        lo = np.zeros((n, width))
        hi = np.zeros((n, width))
        mask = np.zeros((n, width), dtype=bool)
        for k, r in enumerate(rows):
            m = len(r)
            succ[k, :m] = r.succ
            lo[k, :m] = r.lo
            hi[k, :m] = r.hi
            mask[k, :m] = True
        offsets = np.asarray(offsets, dtype=np.intp)
        row_state = np.repeat(np.arange(self.n_states), np.diff(offsets))
        for a in (succ, lo, hi, mask, offsets, row_state):
            a.setflags(write=False)
        return RowTable(offsets, tuple(shapes), succ, lo, hi, mask, row_state)

    @cached_property
    def _reward_cache(self):
        return {}

    def reward_rows(self, name: str) -> np.ndarray:
        """Total reward r(s, a) for every row of ``table``, in table order."""
        if name not in self._reward_cache:
            rs = self.reward(name)
            arr = np.array([rs.total(s, j) for s in range(self.n_states) for j in self.joint_actions(s)],
                           dtype=float)
            arr.setflags(write=False)
            self._reward_cache[name] = arr
        return self._reward_cache[name]

def validate(model: Icsg) -> list[Violation]:
    """Check every structural invariant; an empty list means the model is valid."""
    out: list[Violation] = []
    S = model.n_states
    names = model.states

    def dupes(kind, seq):
        seen = set()
        for x in seq:
            if x in seen:
                out.append(Violation("duplicate-id", f"duplicate {kind} identifier {x!r}"))
            seen.add(x)

    if len(model.players) != 2:
        out.append(Violation("players", "exactly two players are required"))
    dupes("player", model.players)
    dupes("state", names)
    for i, acts in enumerate(model.actions):
        dupes(f"action of player {i + 1}", acts)
        if IDLE in acts:
            out.append(Violation("reserved-id", f"player {i + 1} declares the reserved idle action"))
    if S == 0:
        out.append(Violation("states", "model has no states"))
        return out
    if not 0 <= model.initial < S:
        out.append(Violation("initial", "initial state index out of range"))
    if len(model.enabled) != S:
        out.append(Violation("enabled", "enabled table does not cover every state"))
        return out

    expected = set()
    for s in range(S):
        for i in (0, 1):
            for a in model.enabled[s][i]:
                if a not in model.actions[i]:
                    out.append(Violation("enabled", f"action {a!r} is not an action of player {i + 1}",
                                         state=names[s]))
        for joint in model.joint_actions(s):
            expected.add((s, joint))
            if (s, joint) not in model.transitions:
                out.append(Violation("missing-transition", "enabled joint action has no transition entry",
                                     state=names[s], action=joint))

    for key, row in model.transitions.items():
        s, joint = key
        if not 0 <= s < S:
            out.append(Violation("transition", f"transition from unknown state index {s}"))
            continue
        if key not in expected:
            out.append(Violation("extra-transition", "transition entry for a joint action that is not enabled",
                                 state=names[s], action=joint))
        if len(row) == 0:
            out.append(Violation("empty-row", "row has no successors", state=names[s], action=joint))
            continue
        if list(row.succ) != sorted(set(row.succ)):
            out.append(Violation("row-order", "successors must be unique and sorted", state=names[s], action=joint))
        for t, l, h in zip(row.succ, row.lo, row.hi):
            succ_name = names[t] if 0 <= t < S else str(t)
            if not 0 <= t < S:
                out.append(Violation("successor", "successor index out of range", state=names[s], action=joint,
                                     successor=succ_name))
            if not (0.0 <= l <= 1.0 and 0.0 <= h <= 1.0):
                out.append(Violation("range", f"bounds [{l}, {h}] outside [0, 1]", state=names[s], action=joint,
                                     successor=succ_name))
            if l > h:
                out.append(Violation("order", f"lower bound {l} exceeds upper bound {h}", state=names[s],
                                     action=joint, successor=succ_name))
            if (l == 0.0) != (h == 0.0) or (l == 0.0 and h == 0.0):
                out.append(Violation("graph-preservation", f"interval [{l}, {h}] mixes zero and positive support",
                                     state=names[s], action=joint, successor=succ_name))
        slo, shi = math.fsum(row.lo), math.fsum(row.hi)
        if slo > 1 + FEAS_TOL or shi < 1 - FEAS_TOL:
            out.append(Violation("feasibility", f"sum(lo)={slo:.12g}, sum(hi)={shi:.12g}", state=names[s],
                                 action=joint))

    for name, rs in model.rewards.items():
        if len(rs.state) != S:
            out.append(Violation("reward", f"reward {name!r} does not cover every state"))
        for (s, joint) in rs.action:
            if (s, joint) not in expected:
                out.append(Violation("reward", f"reward {name!r} on a joint action that is not enabled",
                                     state=names[s] if 0 <= s < S else str(s), action=joint))
        if not all(math.isfinite(v) for v in list(rs.state) + list(rs.action.values())):
            out.append(Violation("reward", f"reward {name!r} has non-finite entries"))
    for name, members in model.labels.items():
        if any(not 0 <= t < S for t in members):
            out.append(Violation("label", f"label {name!r} refers to an unknown state"))
    return out


def check_valid(model: Icsg) -> Icsg:
    problems = validate(model)
    if problems:
        shown = "; ".join(str(v) for v in problems[:5])
        more = f" (+{len(problems) - 5} more)" if len(problems) > 5 else ""
        raise ModelError(f"invalid model: {shown}{more}", problems)
    return model


def embed_csg(model: Icsg) -> Icsg:
    """Tag a point-interval model as a nominal CSG. Errors on real intervals."""
    check_valid(model)
    if not model.transitions:
        raise ModelError("model has no transitions")
    for (s, joint), row in model.transitions.items():
        if not row.is_point:
            raise ModelError(f"non-point interval at state {model.states[s]}, action {joint}")
    return replace(model, nominal=True)


def perturb(model: Icsg, eps: float) -> Icsg:
    """Widen every probability strictly between 0 and 1 to [p - eps, p + eps].

    ``eps = 0`` is accepted and yields the same rows without the nominal tag.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    check_valid(model)
    rows = {}
    for (s, joint), row in model.transitions.items():
        if not row.is_point:
            raise ModelError(f"perturb needs a point-interval model; state {model.states[s]}, action {joint}")
        lo, hi = [], []
        for p in row.lo:
            if 0.0 < p < 1.0:
                lo.append(max(p - eps, DELTA_FLOOR))
                hi.append(min(p + eps, 1.0))
            else:
                lo.append(p)
                hi.append(p)
        new = IntervalDistribution(row.succ, tuple(lo), tuple(hi))
        new.check_feasible(f"at state {model.states[s]}, action ({joint[0]}, {joint[1]})")
        rows[(s, joint)] = new
    return replace(model, transitions=rows, nominal=False)


def support_graph(model: Icsg) -> dict[int, dict[tuple[str, str], frozenset[int]]]:
    """state -> joint action -> successors with positive upper bound."""
    g: dict[int, dict[tuple[str, str], frozenset[int]]] = {s: {} for s in range(model.n_states)}
    for (s, joint), row in model.transitions.items():
        g[s][joint] = frozenset(t for t, h in zip(row.succ, row.hi) if h > 0)
    return g


# ---------------------------------------------------------------------------
# JSON model format

def _joint(raw, where) -> tuple[str, str]:
    if not isinstance(raw, (list, tuple)) or len(raw) != 2:
        raise ModelError(f"{where}: action must be a pair")
    return tuple(IDLE if a is None else str(a) for a in raw)


def model_from_dict(d: Mapping) -> Icsg:
    try:
        players = tuple(d["players"])
        states = tuple(d["states"])
        pos = {n: i for i, n in enumerate(states)}
        if len(pos) != len(states):
            raise ModelError("duplicate state identifiers")

        def idx(name, where):
            if name not in pos:
                raise ModelError(f"{where}: unknown state {name!r}")
            return pos[name]

        initial = idx(d["initial"], "initial")
        actions = tuple(tuple(d.get("actions", {}).get(p, ())) for p in players)
        en = d.get("enabled", {})
        for name in en:
            idx(name, "enabled")
        enabled = tuple(
            tuple(tuple(en.get(name, {}).get(p, ())) for p in players) for name in states
        )
        transitions = {}
        for k, t in enumerate(d.get("transitions", [])):
            where = f"transition #{k}"
            s = idx(t["from"], where)
            joint = _joint(t["action"], where)
            entries = {}
            for succ_name, b in t["row"].items():
                j = idx(succ_name, where)
                l, h = (b, b) if isinstance(b, (int, float)) else b
                if l == 0 and h == 0:
                    continue
                entries[j] = (float(l), float(h))
            if (s, joint) in transitions:
                raise ModelError(f"{where}: duplicate entry for state {t['from']}, action {joint}")
            transitions[(s, joint)] = IntervalDistribution.from_mapping(entries)
        rewards = {}
        for name, r in d.get("rewards", {}).items():
            sr = [0.0] * len(states)
            for sname, v in r.get("state", {}).items():
                sr[idx(sname, f"reward {name}")] = float(v)
            ar = {}
            for e in r.get("action", []):
                key = (idx(e["from"], f"reward {name}"), _joint(e["action"], f"reward {name}"))
                ar[key] = ar.get(key, 0.0) + float(e["value"])
            rewards[name] = RewardStructure(tuple(sr), ar)
        labels = {name: frozenset(idx(s, f"label {name}") for s in members)
                  for name, members in d.get("labels", {}).items()}
    except KeyError as e:
        raise ModelError(f"missing field {e.args[0]!r} in model description") from None
    except (TypeError, ValueError) as e:
        raise ModelError(f"malformed model description: {e}") from None
    return Icsg(players, states, initial, actions, enabled, transitions, rewards, labels)


def model_to_dict(model: Icsg) -> dict:
    names = model.states
    enabled = {}
    for s, name in enumerate(names):
        entry = {p: list(model.enabled[s][i]) for i, p in enumerate(model.players) if model.enabled[s][i]}
        if entry:
            enabled[name] = entry
    transitions = []
    for s in range(model.n_states):
        for joint in model.joint_actions(s):
            if (s, joint) not in model.transitions:
                continue
            r = model.transitions[(s, joint)]
            row = {names[t]: (float(l) if l == h else [float(l), float(h)]) for t, l, h in zip(r.succ, r.lo, r.hi)}
            transitions.append({"from": names[s], "action": list(joint), "row": row})
    rewards = {}
    for name, rs in model.rewards.items():
        entry = {"state": {names[s]: float(v) for s, v in enumerate(rs.state) if v != 0.0}}
        acts = [{"from": names[s], "action": list(j), "value": float(v)}
                for (s, j), v in sorted(rs.action.items())]
        if acts:
            entry["action"] = acts
        rewards[name] = entry
    return {
        "players": list(model.players),
        "states": list(names),
        "initial": names[model.initial],
        "actions": {p: list(model.actions[i]) for i, p in enumerate(model.players)},
        "enabled": enabled,
        "transitions": transitions,
        "rewards": rewards,
        "labels": {name: [names[s] for s in sorted(m)] for name, m in model.labels.items()},
    }


def load_model(path: str | Path) -> Icsg:
    with open(path, encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ModelError(f"{path}: not valid JSON ({e})") from None
    return model_from_dict(data)


def dump_model(model: Icsg, path: str | Path | None = None) -> str:
    text = json.dumps(model_to_dict(model), indent=1, ensure_ascii=False) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text

