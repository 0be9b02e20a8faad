"""Objectives, properties and the small property language.

Zero-sum::

    <<p1>> Pmax=? [ F "goal" ]
    <<p1>> Pmin=? [ F<=5 "goal" ]
    <<p2>> Rmin=? {"time"} [ F "goal" ]
    <<p1>> Rmax=? {"coins"} [ C<=10 ]

Nonzero-sum (one objective per player, in the order the players are named)::

    <<p1:p2>>max=? ( P[ F<=4 "g1" ] + R{"r2"}[ C<=4 ] )
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace

from .errors import PropertyError
from .model import Icsg

BOUNDED_REACH = "bounded_reach"
BOUNDED_CUMULATIVE = "bounded_cumulative"
REACH = "reach"
REACH_REWARD = "reach_reward"

ADVERSARIAL = "adversarial"
CONTROLLED = "controlled"


@dataclass(frozen=True)
class Objective:
    kind: str
    direction: str = "max"
    target: str | None = None
    reward: str | None = None
    horizon: int | None = None

    @property
    def finite(self) -> bool:
        return self.kind in (BOUNDED_REACH, BOUNDED_CUMULATIVE)

    @property
    def maximize(self) -> bool:
        return self.direction == "max"

    @property
    def is_reach(self) -> bool:
        return self.kind in (BOUNDED_REACH, REACH)

    def check(self, model: Icsg):
        if self.target is not None:
            model.target(self.target)
        if self.reward is not None:
            model.reward(self.reward)
        if self.horizon is not None and self.horizon < 0:
            raise PropertyError("horizon must be non-negative")

    def __str__(self):
        if self.kind == BOUNDED_REACH:
            return f'P[ F<={self.horizon} "{self.target}" ]'
        if self.kind == REACH:
            return f'P[ F "{self.target}" ]'
        if self.kind == BOUNDED_CUMULATIVE:
            return f'R{{"{self.reward}"}}[ C<={self.horizon} ]'
        return f'R{{"{self.reward}"}}[ F "{self.target}" ]'


@dataclass(frozen=True)
class Property:
    """A zero-sum query (one objective, a coalition player) or a nonzero-sum
    query (one objective per player)."""

    objectives: tuple[Objective, ...]
    players: tuple[str, ...]
    semantics: str = ADVERSARIAL
    epsilon_ne: float | None = None
    text: str = ""

    @property
    def zero_sum(self) -> bool:
        return len(self.objectives) == 1

    @property
    def objective(self) -> Objective:
        return self.objectives[0]

    def with_options(self, semantics=None, epsilon_ne=None) -> "Property":
        p = self
        if semantics is not None:
            if semantics not in (ADVERSARIAL, CONTROLLED):
                raise PropertyError(f"unknown uncertainty semantics {semantics!r}")
            p = replace(p, semantics=semantics)
        if epsilon_ne is not None:
            if epsilon_ne < 0:
                raise PropertyError("epsilon must be non-negative")
            p = replace(p, epsilon_ne=float(epsilon_ne))
        return p

    def coalition(self, model: Icsg) -> int:
        """Index of the coalition player of a zero-sum property."""
        return model.player_index(self.players[0])

    def ordered(self, model: Icsg) -> tuple[Objective, Objective]:
        """Nonzero-sum objectives in the model's player order."""
        idx = [model.player_index(n) for n in self.players]
        if sorted(idx) != [0, 1]:
            raise PropertyError("a nonzero-sum property must name both players")
        o1, o2 = self.objectives
        return (o2, o1) if idx == [1, 0] else (o1, o2)

    def check(self, model: Icsg):
        if self.zero_sum:
            self.coalition(model)
        else:
            self.ordered(model)
        for o in self.objectives:
            o.check(model)


def zero_sum(coalition: str, objective: Objective, semantics: str = ADVERSARIAL) -> Property:
    return Property((objective,), (coalition,), semantics)


def nonzero_sum(obj1: Objective, obj2: Objective, players=("p1", "p2"), semantics: str = ADVERSARIAL,
                epsilon_ne: float | None = None) -> Property:
    if obj1.finite != obj2.finite:
        raise PropertyError("mixed finite/infinite-horizon nonzero-sum objectives are not supported")
    return Property((obj1, obj2), tuple(players), semantics, epsilon_ne)


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<string>"[^"]*")
  | (?P<int>\d+)
  | (?P<op><<|>>|<=|=\?|[\[\](){}:+])
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
""", re.VERBOSE)


def _tokens(text):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise PropertyError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            out.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokens(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, value=None, kind=None):
        k, v, pos = self.toks[self.i]
        if (value is not None and v != value) or (kind is not None and k != kind):
            want = repr(value) if value is not None else kind
            got = repr(v) if k != "end" else "end of input"
            raise PropertyError(f"expected {want}, found {got}", pos)
        self.i += 1
        return v

    def string(self):
        return self.take(kind="string")[1:-1]

    def path(self, reward: bool):
        """Path formula inside [...]: F "l", F<=K "l", or C<=K (rewards only)."""
        self.take("[")
        _, word, pos = self.peek()
        horizon = None
        if word == "F":
            self.take("F")
            if self.peek()[1] == "<=":
                self.take("<=")
                horizon = int(self.take(kind="int"))
            label = self.string()
            self.take("]")
            if reward:
                if horizon is not None:
                    raise PropertyError("bounded reachability rewards are not supported", pos)
                return REACH_REWARD, label, None
            return (BOUNDED_REACH if horizon is not None else REACH), label, horizon
        if word == "C" and reward:
            self.take("C")
            self.take("<=")
            horizon = int(self.take(kind="int"))
            self.take("]")
            return BOUNDED_CUMULATIVE, None, horizon
        raise PropertyError("expected 'F' or 'C'" if reward else "expected 'F'", pos)

    def coalition(self):
        self.take("<<")
        names = [self.take(kind="word")]
        while self.peek()[1] == ":":
            self.take(":")
            names.append(self.take(kind="word"))
        self.take(">>")
        return names

    def parse(self):
        names = self.coalition()
        if len(names) == 1:
            prop = self.zero_sum(names[0])
        elif len(names) == 2:
            prop = self.nonzero_sum(names)
        else:
            raise PropertyError("at most two players may be named", self.toks[0][2])
        self.take(kind="end")
        return prop

    def zero_sum(self, name):
        k, word, pos = self.peek()
        m = re.fullmatch(r"([PR])(max|min)", word) if k == "word" else None
        if m is None:
            raise PropertyError("expected Pmax, Pmin, Rmax or Rmin", pos)
        self.take()
        self.take("=?")
        reward = None
        if m.group(1) == "R":
            self.take("{")
            reward = self.string()
            self.take("}")
        kind, label, horizon = self.path(reward is not None)
        obj = Objective(kind, m.group(2), label, reward, horizon)
        return ("zs", name, obj)

    def objective(self):
        k, word, pos = self.peek()
        if word == "P":
            self.take("P")
            kind, label, horizon = self.path(False)
            return Objective(kind, "max", label, None, horizon)
        if word == "R":
            self.take("R")
            self.take("{")
            reward = self.string()
            self.take("}")
            kind, label, horizon = self.path(True)
            return Objective(kind, "max", label, reward, horizon)
        raise PropertyError("expected P[...] or R{...}[...]", pos)

    def nonzero_sum(self, names):
        pos = self.peek()[2]
        self.take("max")
        self.take("=?")
        self.take("(")
        o1 = self.objective()
        self.take("+")
        o2 = self.objective()
        self.take(")")
        if o1.finite != o2.finite:
            raise PropertyError(
                "mixed-horizon nonzero-sum properties (one bounded, one unbounded objective) "
                "are not supported", pos)
        return ("nz", names, (o1, o2))


def parse_property(text: str, model: Icsg | None = None) -> Property:
    """Parse a property string; with a model, names are checked against it."""
    tag, names, body = _Parser(text).parse()
    if tag == "zs":
        prop = Property((body,), (names,), text=text)
    else:
        prop = Property(tuple(body), tuple(names), text=text)
    if model is not None:
        prop.check(model)
    return prop
