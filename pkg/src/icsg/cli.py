"""Command-line interface.

    icsg check MODEL --prop TEXT [--uncertainty adversarial|controlled] [--epsilon-ne E]
               [--tol T] [--max-iters N] [--gamma G] [--values] [--strategy OUT] [--json]
    icsg perturb MODEL --eps E -o OUT
    icsg gen NAME [--param k=v]... -o OUT

MODEL is a JSON model file or, when no such file exists, the name of a
built-in benchmark (``fig_b1``, ``robot`` ...).  Exit status is 0 on
success, 2 when no robust equilibrium exists and 1 on any error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .benchmarks import GENERATORS, gen_benchmark
from .errors import IcsgError
from .model import Icsg, check_valid, dump_model, load_model, perturb
from .nonzerosum import NoRneReport, NzSolution, nz_solve
from .oracle import oracle_zs_value
from .properties import ADVERSARIAL, CONTROLLED, Property, parse_property
from .zerosum import DEFAULT_GAMMA, DEFAULT_MAX_ITERS, DEFAULT_TOL, ZsSolution, solve_zero_sum

EXIT_OK, EXIT_ERROR, EXIT_NO_RNE = 0, 1, 2


def num(x):
    """A float rounded to 12 significant digits; infinities become strings so
    the output stays valid JSON."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(f"{x:.12g}")


@dataclass
class QueryResult:
    prop: str
    mode: str
    value: float | tuple[float, float] | None
    values: dict | None = None
    strategy: dict | None = None
    diagnostics: dict = field(default_factory=dict)
    no_rne: dict | None = None

    @property
    def exit_code(self) -> int:
        return EXIT_NO_RNE if self.no_rne is not None else EXIT_OK

    def to_dict(self) -> dict:
        d = {"property": self.prop, "mode": self.mode, "diagnostics": _clean(self.diagnostics)}
        if self.value is not None:
            d["value"] = [num(v) for v in self.value] if isinstance(self.value, tuple) else num(self.value)
        if self.values is not None:
            d["values"] = self.values
        if self.no_rne is not None:
            d["no_rne"] = self.no_rne
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, ensure_ascii=False)

    def to_text(self) -> str:
        lines = [f"property: {self.prop}", f"mode: {self.mode}"]
        if self.no_rne is not None:
            lines.append(f"result: {self.no_rne['message']}")
        elif isinstance(self.value, tuple):
            lines.append("value: (" + ", ".join(f"{v:.12g}" for v in self.value) + ")")
        else:
            lines.append(f"value: {self.value:.12g}")
        for k in sorted(self.diagnostics):
            if k == "mode":
                continue
            v = self.diagnostics[k]
            lines.append(f"{k}: {v:.12g}" if isinstance(v, float) else f"{k}: {v}")
        if self.values is not None:
            lines.append("values:")
            for s, v in self.values.items():
                lines.append(f"  {s}: {v}")
        return "\n".join(lines)


def _clean(d: dict) -> dict:
    return {k: num(v) if isinstance(v, (float, np.floating)) else v for k, v in d.items()}


# ---------------------------------------------------------------------------
# strategy bundles

def _dist(actions, probs):
    return {a: num(p) for a, p in zip(actions, probs) if p > 0}


def _resolution(model: Icsg, res) -> dict:
    return {model.states[j]: num(p) for j, p in zip(res.succ, res.probs)}


def _zs_bundle(sol: ZsSolution) -> dict:
    model = sol.model
    p1, p2 = model.players
    steps = range(sol.horizon) if sol.time_varying else [None]
    entries = []
    for step in steps:
        for s in range(model.n_states):
            dec = sol.decision(s, step)
            if dec is None:
                continue
            c1, c2 = model.choices(s)
            e = {"state": model.states[s],
                 "players": {p1: _dist(c1, dec.p1), p2: _dist(c2, dec.p2)},
                 "nature": {",".join(j): _resolution(model, sol.nature_row(s, j, step))
                            for j in model.joint_actions(s)}}
            if step is not None:
                e["step"] = step
            entries.append(e)
    return {"time_varying": sol.time_varying, "entries": entries}


def _nz_bundle(sol: NzSolution) -> dict:
    model = sol.model
    p1, p2 = model.players
    entries = []
    for key in sorted(sol.strategies, key=str):
        step, progress = key if sol.query.finite else (None, key)
        for s, cand in sorted(sol.strategies[key].items()):
            c1, c2 = model.choices(s)
            e = {"state": model.states[s], "progress": str(progress),
                 "players": {p1: _dist(c1, cand.profile.x), p2: _dist(c2, cand.profile.y)},
                 "nature": {",".join(j): _resolution(model, r)
                            for j, r in zip(model.joint_actions(s), cand.nature)}}
            if step is not None:
                e["step"] = step
            entries.append(e)
    return {"time_varying": sol.query.finite, "entries": entries}


# ---------------------------------------------------------------------------
# operations

def resolve_model(spec: str) -> Icsg:
    """Load a model file, falling back to a built-in benchmark name."""
    p = Path(spec)
    if p.exists() or spec not in GENERATORS:
        return load_model(p)
    return gen_benchmark(spec)


def run_check(model: Icsg | str, prop_text: str, *, uncertainty: str = ADVERSARIAL,
              epsilon_ne: float | None = None, tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS,
              gamma: float = DEFAULT_GAMMA, values: bool = False, strategy: bool = False) -> QueryResult:
    if isinstance(model, str):
        model = resolve_model(model)
    check_valid(model)
    prop = parse_property(prop_text, model).with_options(uncertainty, epsilon_ne)
    mode = "CSG" if model.nominal else f"ICSG-{prop.semantics}"
    if prop.zero_sum:
        sol = solve_zero_sum(model, prop, tol=tol, max_iters=max_iters, gamma=gamma)
        res = QueryResult(prop_text, mode, sol.value, diagnostics=dict(sol.diagnostics))
        if values:
            res.values = {s: num(v) for s, v in zip(model.states, sol.values)}
        if strategy:
            res.strategy = _zs_bundle(sol)
        return res
    sol = nz_solve(model, prop, epsilon=prop.epsilon_ne, tol=tol, max_iters=max_iters)
    if isinstance(sol, NoRneReport):
        report = {"message": sol.message, "state": sol.state, "state_name": sol.state_name,
                  "step": sol.step, "progress": str(sol.progress),
                  "candidates": [{"x": [num(v) for v in c.profile.x], "y": [num(v) for v in c.profile.y],
                                  "bounds": [num(b) for b in c.bounds]} for c in sol.candidates]}
        return QueryResult(prop_text, mode, None, diagnostics=dict(sol.diagnostics), no_rne=report)
    res = QueryResult(prop_text, mode, sol.value, diagnostics=dict(sol.diagnostics))
    if values:
        res.values = {s: [num(a), num(b)] for s, a, b in zip(model.states, sol.v1, sol.v2)}
    if strategy:
        res.strategy = _nz_bundle(sol)
    return res


def run_perturb(model: Icsg | str, eps: float, out: str | Path) -> Icsg:
    if isinstance(model, str):
        model = resolve_model(model)
    check_valid(model)
    pert = perturb(model, eps)
    dump_model(pert, out)
    return pert


def _params(pairs):
    out = {}
    for p in pairs or []:
        if "=" not in p:
            raise ValueError(f"--param expects k=v, got {p!r}")
        k, v = p.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="icsg", description="Robust verification of interval concurrent stochastic games.")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="solve a zero-sum or nonzero-sum query")
    c.add_argument("model")
    c.add_argument("--prop", required=True)
    c.add_argument("--uncertainty", choices=[ADVERSARIAL, CONTROLLED], default=ADVERSARIAL)
    c.add_argument("--epsilon-ne", type=float, default=None)
    c.add_argument("--tol", type=float, default=DEFAULT_TOL)
    c.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    c.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    c.add_argument("--values", action="store_true", help="include per-state values")
    c.add_argument("--strategy", metavar="OUT", help="write the strategy bundle to OUT")
    c.add_argument("--json", action="store_true")

    p = sub.add_parser("perturb", help="widen every non-0/1 probability into an interval")
    p.add_argument("model")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("-o", "--output", required=True)

    g = sub.add_parser("gen", help="write a built-in benchmark model")
    g.add_argument("name", choices=sorted(GENERATORS))
    g.add_argument("--param", action="append", metavar="k=v")
    g.add_argument("-o", "--output", required=True)

    # test surface, deliberately undocumented in --help
    o = sub.add_parser("oracle")
    o.add_argument("model")
    o.add_argument("--prop", required=True)
    o.add_argument("--uncertainty", choices=[ADVERSARIAL, CONTROLLED], default=ADVERSARIAL)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "check":
            start = time.perf_counter()
            res = run_check(args.model, args.prop, uncertainty=args.uncertainty, epsilon_ne=args.epsilon_ne,
                            tol=args.tol, max_iters=args.max_iters, gamma=args.gamma, values=args.values,
                            strategy=args.strategy is not None)
            res.diagnostics.setdefault("wall_time", time.perf_counter() - start)
            if args.strategy and res.strategy is not None:
                Path(args.strategy).write_text(json.dumps(res.strategy, sort_keys=True, indent=1,
                                                          ensure_ascii=False) + "\n")
            print(res.to_json() if args.json else res.to_text())
            if res.no_rne is not None:
                print(res.no_rne["message"], file=sys.stderr)
            return res.exit_code
        if args.command == "perturb":
            run_perturb(args.model, args.eps, args.output)
            return EXIT_OK
        if args.command == "gen":
            dump_model(gen_benchmark(args.name, **_params(args.param)), args.output)
            return EXIT_OK
        if args.command == "oracle":
            model = resolve_model(args.model)
            prop: Property = parse_property(args.prop, model).with_options(args.uncertainty)
            print(f"{oracle_zs_value(model, prop):.12g}")
            return EXIT_OK
    except (IcsgError, ValueError, OSError) as e:
        print(f"icsg: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
