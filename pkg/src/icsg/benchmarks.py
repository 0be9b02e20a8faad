"""Built-in example games.

``robot`` is a small grid-world coordination game; the rest are the tiny
hand-drawn games used as worked examples throughout the docs and tests.
"""
from __future__ import annotations

import itertools

from .model import Icsg, model_from_dict


def fig_b1() -> Icsg:
    """Bounded-reach example where nature's best reply changes between steps."""
    row = {"s0": [0.2, 0.5], "s1": [0.1, 0.3], "s2": [0.5, 0.7]}
    return model_from_dict({
        "players": ["p1", "p2"],
        "states": ["s0", "s1", "s2"],
        "initial": "s0",
        "actions": {"p1": ["a", "b"], "p2": ["a", "b"]},
        "enabled": {"s0": {"p1": ["a", "b"], "p2": ["a", "b"]}},
        "transitions": [
            {"from": "s0", "action": ["a", "a"], "row": row},
            {"from": "s0", "action": ["a", "b"], "row": row},
            {"from": "s0", "action": ["b", "a"], "row": {"s1": 1.0}},
            {"from": "s0", "action": ["b", "b"], "row": {"s1": 1.0}},
            {"from": "s1", "action": [None, None], "row": {"s1": 1.0}},
            {"from": "s2", "action": [None, None], "row": {"s2": 1.0}},
        ],
        "labels": {"goal": ["s2"]},
    })


def fig_a1() -> Icsg:
    """A game with a unique robust equilibrium (a1, b1)."""
    return model_from_dict({
        "players": ["p1", "p2"],
        "states": ["s0", "s1", "s2"],
        "initial": "s0",
        "actions": {"p1": ["a1", "a2"], "p2": ["b1", "b2"]},
        "enabled": {"s0": {"p1": ["a1", "a2"], "p2": ["b1", "b2"]}},
        "transitions": [
            {"from": "s0", "action": ["a1", "b1"], "row": {"s1": [0.1, 0.3], "s2": [0.7, 0.9]}},
            {"from": "s0", "action": ["a2", "b1"], "row": {"s2": 1.0}},
            {"from": "s0", "action": ["a1", "b2"], "row": {"s1": 1.0}},
            {"from": "s0", "action": ["a2", "b2"], "row": {"s1": 1.0}},
            {"from": "s1", "action": [None, None], "row": {"s1": 1.0}},
            {"from": "s2", "action": [None, None], "row": {"s2": 1.0}},
        ],
        "rewards": {"r1": {"state": {}, "action": [
            {"from": "s0", "action": ["a1", "b1"], "value": 1.0},
            {"from": "s0", "action": ["a1", "b2"], "value": 1.0},
        ]}},
        "labels": {"g2": ["s2"]},
    })


def fig_a2() -> Icsg:
    """A game without any robust equilibrium for k = 2.

    Transitions out of s0 depend on player 2's action only, so player 1 is
    idle there: giving each (player-1, player-2) pair its own row would let
    nature resolve p differently per player-1 action.
    """
    row = {"s1": [0.1, 0.9], "s2": [0.1, 0.9]}
    return model_from_dict({
        "players": ["p1", "p2"],
        "states": ["s0", "s1", "s2"],
        "initial": "s0",
        "actions": {"p1": ["a1", "a2"], "p2": ["b1", "b2"]},
        "enabled": {"s0": {"p2": ["b1", "b2"]}},
        "transitions": [
            {"from": "s0", "action": [None, b], "row": row} for b in ("b1", "b2")
        ] + [
            {"from": "s1", "action": [None, None], "row": {"s1": 1.0}},
            {"from": "s2", "action": [None, None], "row": {"s1": 1.0}},
        ],
        "labels": {"g1": ["s1"], "g2": ["s2"]},
    })


def one_shot() -> Icsg:
    """One-shot game whose (B,B) payoff depends on an uncertain p in [0.2, 0.4].

    Payoffs are state rewards collected one step after the joint choice, so
    the objective pair is R{"r1"}[ C<=2 ] + R{"r2"}[ C<=2 ].  Under (B,B)
    play moves to ``xBB`` (worth (2, 0)) with probability p and to ``yBB``
    (worth (0, 1)) otherwise, giving expected payoffs (2p, 1 - p).
    """
    terminal = {"tAA": (1.0, 1.0), "tAB": (0.2, 0.2), "tBA": (0.2, 0.7), "xBB": (2.0, 0.0), "yBB": (0.0, 1.0)}
    states = ["s0", *terminal, "done"]
    trans = [
        {"from": "s0", "action": ["A", "A"], "row": {"tAA": 1.0}},
        {"from": "s0", "action": ["A", "B"], "row": {"tAB": 1.0}},
        {"from": "s0", "action": ["B", "A"], "row": {"tBA": 1.0}},
        {"from": "s0", "action": ["B", "B"], "row": {"xBB": [0.2, 0.4], "yBB": [0.6, 0.8]}},
    ]
    trans += [{"from": s, "action": [None, None], "row": {"done": 1.0}} for s in terminal]
    trans.append({"from": "done", "action": [None, None], "row": {"done": 1.0}})
    return model_from_dict({
        "players": ["p1", "p2"],
        "states": states,
        "initial": "s0",
        "actions": {"p1": ["A", "B"], "p2": ["A", "B"]},
        "enabled": {"s0": {"p1": ["A", "B"], "p2": ["A", "B"]}},
        "transitions": trans,
        "rewards": {
            "r1": {"state": {s: r[0] for s, r in terminal.items() if r[0]}},
            "r2": {"state": {s: r[1] for s, r in terminal.items() if r[1]}},
        },
        "labels": {"done": ["done"]},
    })


MOVES = {"N": (0, 1), "S": (0, -1), "E": (1, 0), "W": (-1, 0)}


def _move(pos, move, l):
    """Outcome distribution of one robot move: 0.8 intended, 0.1 per lateral
    slip, slips off the grid leave the robot in place."""
    dx, dy = MOVES[move]
    x, y = pos
    out = {}

    def add(p, q):
        out[p] = out.get(p, 0.0) + q

    add((x + dx, y + dy), 0.8)
    for sx, sy in ((dy, dx), (-dy, -dx)):
        t = (x + sx, y + sy)
        add(t if 0 <= t[0] < l and 0 <= t[1] < l else pos, 0.1)
    return out


def robot(l: int = 3) -> Icsg:
    """Two robots on an l x l grid heading for opposite corners.

    Robot 1 starts at (0, 0) and wants (l-1, l-1); robot 2 starts at
    (l-1, l-1) and wants (0, 0).  A state is the pair of positions, so there
    are l**4 states; co-located pairs are absorbing collision states labelled
    ``crash``.  A robot at its goal stays there idle.  Labels ``g1``/``g2``
    mark (non-collision) states where robot 1/2 is at its goal; reward
    ``steps`` is 1 in every state where some robot is still moving.
    """
    l = int(l)
    if l < 2:
        raise ValueError("robot grid size must be at least 2")
    cells = [(x, y) for x in range(l) for y in range(l)]
    goal1, goal2 = (l - 1, l - 1), (0, 0)

    def name(p1, p2):
        return f"r{p1[0]}{p1[1]}_{p2[0]}{p2[1]}" if l <= 10 else f"r{p1}_{p2}"

    def moves(pos, goal):
        if pos == goal:
            return []
        return [m for m, (dx, dy) in MOVES.items() if 0 <= pos[0] + dx < l and 0 <= pos[1] + dy < l]

    states, enabled, trans, steps = [], {}, [], {}
    g1, g2, crash = [], [], []
    for p1, p2 in itertools.product(cells, cells):
        s = name(p1, p2)
        states.append(s)
        if p1 == p2:
            crash.append(s)
            trans.append({"from": s, "action": [None, None], "row": {s: 1.0}})
            continue
        if p1 == goal1:
            g1.append(s)
        if p2 == goal2:
            g2.append(s)
        m1, m2 = moves(p1, goal1), moves(p2, goal2)
        if m1 or m2:
            steps[s] = 1.0
        entry = {}
        if m1:
            entry["p1"] = m1
        if m2:
            entry["p2"] = m2
        if entry:
            enabled[s] = entry
        for a in (m1 or [None]):
            d1 = _move(p1, a, l) if a else {p1: 1.0}
            for b in (m2 or [None]):
                d2 = _move(p2, b, l) if b else {p2: 1.0}
                row = {}
                for q1, w1 in d1.items():
                    for q2, w2 in d2.items():
                        t = name(q1, q2)
                        row[t] = row.get(t, 0.0) + w1 * w2
                trans.append({"from": s, "action": [a, b], "row": row})
    return model_from_dict({
        "players": ["p1", "p2"],
        "states": states,
        "initial": name((0, 0), (l - 1, l - 1)),
        "actions": {"p1": list(MOVES), "p2": list(MOVES)},
        "enabled": enabled,
        "transitions": trans,
        "rewards": {"steps": {"state": steps}},
        "labels": {"g1": g1, "g2": g2, "crash": crash},
    })


GENERATORS = {
    "robot": robot,
    "fig_a1": fig_a1,
    "fig_a2": fig_a2,
    "fig_b1": fig_b1,
    "one_shot": one_shot,
}


def gen_benchmark(name: str, **params) -> Icsg:
    if name not in GENERATORS:
        raise ValueError(f"unknown benchmark {name!r}; choose from {', '.join(GENERATORS)}")
    try:
        return GENERATORS[name](**params)
    except TypeError as e:
        raise ValueError(f"bad parameters for {name}: {e}") from None
