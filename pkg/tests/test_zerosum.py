import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from icsg.benchmarks import fig_a1, fig_b1
from icsg.errors import AssumptionError, IcsgError
from icsg.model import embed_csg, model_from_dict, model_to_dict
from icsg.oracle import TinyGameSpec, oracle_zs_value, random_tiny_icsg
from icsg.properties import CONTROLLED, parse_property
from icsg.zerosum import (evaluate_under_nature, precompute_cannot_reach, precompute_not_almost_sure,
                          solve_bounded, solve_reach, solve_reach_reward, solve_zero_sum, state_update)


def chain(reward=1.0):
    """s0 moves to goal with p in [0.7, 0.9] and stays put otherwise."""
    return model_from_dict({
        "players": ["p1", "p2"], "states": ["s0", "goal"], "initial": "s0",
        "transitions": [
            {"from": "s0", "action": [None, None], "row": {"s0": [0.1, 0.3], "goal": [0.7, 0.9]}},
            {"from": "goal", "action": [None, None], "row": {"goal": 1.0}},
        ],
        "rewards": {"r": {"state": {"s0": reward}}},
        "labels": {"goal": ["goal"]},
    })


def test_cannot_reach_fig_a1():
    m = fig_a1()
    assert precompute_cannot_reach(m, {2}) == {1}
    assert precompute_cannot_reach(m, {1}) == {2}


def test_not_almost_sure():
    assert precompute_not_almost_sure(chain(), {1}) == set()
    # in fig_a1 play can stay away from s2 forever from s0 and s1
    assert precompute_not_almost_sure(fig_a1(), {2}) == {0, 1}


def test_fig_b1_state_updates():
    m = fig_b1()
    p = parse_property('<<p1>> Pmax=? [ F<=2 "goal" ]', m)
    v, dec, rows = state_update(m, 0, [0, 0, 1], p)
    assert v == pytest.approx(0.5)
    # s0 and s1 tie at 0, so the spare mass lands on s0
    assert rows[("a", "a")].probs == pytest.approx((0.4, 0.1, 0.5))
    v, dec, rows = state_update(m, 0, [0.5, 0, 1], p)
    assert v == pytest.approx(0.6)
    assert dec.p1[0] == pytest.approx(1.0)
    assert rows[("a", "b")].probs == pytest.approx((0.2, 0.3, 0.5))


def test_fig_b1_bounded_values():
    m = fig_b1()
    for k, want in [(0, 0.0), (1, 0.5), (2, 0.6)]:
        sol = solve_zero_sum(m, parse_property(f'<<p1>> Pmax=? [ F<={k} "goal" ]', m))
        assert sol.value == pytest.approx(want)
        assert sol.diagnostics["convergence"] == "exact"


def test_k_zero_on_target_is_one():
    m = fig_b1()
    m2 = model_from_dict({**model_to_dict(m), "initial": "s2"})
    assert solve_bounded(m2, parse_property('<<p1>> Pmax=? [ F<=0 "goal" ]')).value == 1.0
    assert solve_bounded(m, parse_property('<<p1>> Pmax=? [ F<=0 "goal" ]')).value == 0.0
    assert solve_bounded(fig_a1(), parse_property('<<p1>> Rmax=? {"r1"} [ C<=0 ]')).value == 0.0


@pytest.mark.parametrize("direction,semantics,want", [
    ("min", "adversarial", 1 / 0.7), ("max", "adversarial", 1 / 0.9),
    ("min", "controlled", 1 / 0.9), ("max", "controlled", 1 / 0.7),
])
def test_reach_reward_chain(direction, semantics, want):
    m = chain()
    p = parse_property(f'<<p1>> R{direction}=? {{"r"}} [ F "goal" ]', m).with_options(semantics)
    sol = solve_reach_reward(m, p)
    assert sol.value == pytest.approx(want, rel=1e-5)


def test_reach_reward_infinite_when_target_avoidable():
    m = fig_a1()
    p = parse_property('<<p1>> Rmin=? {"r1"} [ F "g2" ]', m)
    sol = solve_zero_sum(m, p)
    assert math.isinf(sol.values[1]) and math.isinf(sol.value)


def test_zero_rewards_solved_via_gamma_phase():
    sol = solve_reach_reward(chain(0.0), parse_property('<<p1>> Rmin=? {"r"} [ F "goal" ]'))
    assert sol.value == pytest.approx(0.0, abs=1e-9)
    assert sol.diagnostics["phase1_iterations"] > 0


def test_negative_rewards_refused():
    m = fig_a1()
    bad = model_from_dict({**model_to_dict(m), "rewards": {"r": {"state": {"s1": -1.0}}}})
    with pytest.raises(AssumptionError):
        solve_reach_reward(bad, parse_property('<<p1>> Rmin=? {"r"} [ F "g2" ]'))
    with pytest.raises(ValueError):
        solve_reach_reward(chain(), parse_property('<<p1>> Rmin=? {"r"} [ F "goal" ]'), gamma=0)


def test_reach_on_target_is_one():
    m = model_from_dict({**model_to_dict(chain()), "initial": "goal"})
    assert solve_reach(m, parse_property('<<p1>> Pmin=? [ F "goal" ]')).value == 1.0


def test_evaluate_under_nature_reproduces_value():
    m = fig_b1()
    p = parse_property('<<p1>> Pmax=? [ F<=2 "goal" ]', m)
    sol = solve_zero_sum(m, p)
    assert evaluate_under_nature(m, sol.nature, p)[0] == pytest.approx(sol.value)


def test_suboptimal_nature_helps_the_coalition():
    m = fig_b1()
    t = m.table
    p = parse_property('<<p1>> Pmax=? [ F<=2 "goal" ]', m)
    robust = solve_zero_sum(m, p).value
    fav = solve_zero_sum(m, p.with_options(CONTROLLED)).nature
    assert evaluate_under_nature(m, fav, p)[0] >= robust - 1e-12
    bad = [np.where(t.mask, t.hi, 0.0)] * 2
    with pytest.raises(IcsgError):
        evaluate_under_nature(m, bad, p)


def test_nature_strategy_shape_checked():
    m = fig_b1()
    p = parse_property('<<p1>> Pmax=? [ F "goal" ]', m)
    with pytest.raises(IcsgError):
        evaluate_under_nature(m, np.zeros((1, 1)), p)


def test_reach_iterates_are_probabilities_and_monotone():
    prev = None
    for cap in (1, 2, 4, 8, 50):
        sol = solve_reach(fig_b1(), parse_property('<<p1>> Pmax=? [ F "goal" ]'), max_iters=cap)
        assert np.all((sol.values >= 0) & (sol.values <= 1))
        if prev is not None:
            assert np.all(sol.values >= prev - 1e-12)
        prev = sol.values


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**5), st.sampled_from(["Pmax", "Pmin"]), st.sampled_from(["adversarial", "controlled"]))
def test_bounded_reach_matches_oracle(seed, op, sem):
    m = random_tiny_icsg(TinyGameSpec(seed=seed, max_states=4, max_resolutions=8))
    p = parse_property(f'<<p1>> {op}=? [ F<=3 "goal" ]', m).with_options(sem)
    assert solve_zero_sum(m, p).value == pytest.approx(oracle_zs_value(m, p), abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**5))
def test_controlled_dominates_adversarial(seed):
    m = random_tiny_icsg(TinyGameSpec(seed=seed, max_states=4))
    p = parse_property('<<p1>> Pmax=? [ F<=3 "goal" ]', m)
    adv = solve_zero_sum(m, p).values
    ctl = solve_zero_sum(m, p.with_options(CONTROLLED)).values
    assert np.all(ctl >= adv - 1e-9)


def test_reach_reward_from_target_is_zero():
    m = model_from_dict({**model_to_dict(chain()), "initial": "goal"})
    assert solve_reach_reward(m, parse_property('<<p1>> Rmin=? {"r"} [ F "goal" ]')).value == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_point_rows_match_nominal_oracle(seed):
    m = embed_csg(random_tiny_icsg(TinyGameSpec(seed=seed, width=(0.0, 0.0))))
    p = parse_property('<<p1>> Pmax=? [ F "goal" ]', m)
    assert solve_zero_sum(m, p).value == pytest.approx(oracle_zs_value(m, p), abs=1e-4)
