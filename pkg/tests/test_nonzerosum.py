import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from icsg.benchmarks import one_shot, fig_a1, fig_a2
from icsg.errors import PropertyError
from icsg.model import IntervalDistribution, embed_csg, model_from_dict
from icsg.nfg import MixedProfile, enumerate_ne
from icsg.nonzerosum import (ACTIVE, DONE, HOPELESS, NoRne, NoRneReport, NzQuery, PlayerProgress, Stage, annotate,
                             build_stage_bimatrix, deviation_gain, filter_rne, nz_solve, nz_state_update)
from icsg.oracle import TinyGameSpec, random_tiny_icsg
from icsg.properties import parse_property

ONE_SHOT_PROP = '<<p1:p2>>max=? ( R{"r1"}[ C<=2 ] + R{"r2"}[ C<=2 ] )'


def one_shot_stage(epsilon=0.05):
    m = one_shot()
    q = NzQuery(m, parse_property(ONE_SHOT_PROP, m), epsilon)
    v1 = np.array(m.reward("r1").state)
    v2 = np.array(m.reward("r2").state)
    return build_stage_bimatrix(q, 0, v1, v2, step=1)


def test_one_shot_stage_payoffs_use_welfare_minimising_nature():
    st_ = one_shot_stage()
    # nature picks p = 0.2 under (B, B): welfare 2p + 1 - p is increasing in p
    assert st_.game.payoff1[1, 1] == pytest.approx(0.4) and st_.game.payoff2[1, 1] == pytest.approx(0.8)


def test_one_shot_pure_aa_has_no_profitable_deviation():
    st_ = one_shot_stage()
    aa = MixedProfile.of(st_.game, [1, 0], [1, 0])
    assert deviation_gain(st_, aa, 0, 1) <= -0.3
    assert deviation_gain(st_, aa, 1, 1) <= -0.3
    assert annotate(st_, aa, 0.0).accepted


def test_one_shot_bb_rejected_only_past_its_slack():
    st_ = one_shot_stage()
    bb = MixedProfile.of(st_.game, [0, 1], [0, 1])
    # player 1 gains nothing by leaving; player 2's best deviation is worth 0.7 - 1 + p <= 0.1
    c = annotate(st_, bb, 0.05)
    assert c.bounds[1] == pytest.approx(0.1)
    assert not c.accepted and annotate(st_, bb, 0.1).accepted


def test_one_shot_solution():
    m = one_shot()
    sol = nz_solve(m, parse_property(ONE_SHOT_PROP, m), epsilon=0.05)
    assert sol.value == pytest.approx((1.0, 1.0))
    c = sol.profile(0, 0)
    assert c.profile.x.tolist() == [1, 0] and c.profile.y.tolist() == [1, 0]


def test_fig_a1_finite_variant():
    m = fig_a1()
    sol = nz_solve(m, parse_property('<<p1:p2>>max=? ( R{"r1"}[ C<=1 ] + P[ F<=1 "g2" ] )', m))
    assert sol.value == pytest.approx((1.0, 0.7))
    c = sol.profile(0, 0)
    assert c.profile.x.tolist() == [1, 0] and c.profile.y.tolist() == [1, 0]


def test_fig_a2_reports_state_and_progress():
    m = fig_a2()
    res = nz_solve(m, parse_property('<<p1:p2>>max=? ( P[ F<=2 "g1" ] + P[ F<=2 "g2" ] )', m))
    assert isinstance(res, NoRneReport)
    assert res.state_name == "s0" and res.candidates
    assert all(not c.accepted for c in res.candidates)
    assert "s0" in res.message and "D={} E={}" in res.message


def test_both_players_done_is_pinned():
    m = model_from_dict({
        "players": ["p1", "p2"], "states": ["s0"], "initial": "s0",
        "transitions": [{"from": "s0", "action": [None, None], "row": {"s0": 1.0}}],
        "labels": {"g1": ["s0"], "g2": ["s0"]},
    })
    for text in ('<<p1:p2>>max=? ( P[ F<=3 "g1" ] + P[ F<=3 "g2" ] )',
                 '<<p1:p2>>max=? ( P[ F "g1" ] + P[ F "g2" ] )'):
        sol = nz_solve(m, parse_property(text, m))
        assert sol.value == (1.0, 1.0)


def test_statuses_and_pins():
    m = fig_a1()
    q = NzQuery(m, parse_property('<<p1:p2>>max=? ( P[ F "g2" ] + P[ F "g2" ] )', m))
    assert q.closure(PlayerProgress(), 2).status == (DONE, DONE)
    assert q.closure(PlayerProgress(), 1).status == (HOPELESS, HOPELESS)
    assert q.closure(PlayerProgress(), 0).status == (ACTIVE, ACTIVE)
    assert q.pinned(0, PlayerProgress((DONE, ACTIVE)), None) == 1.0
    assert q.pinned(1, PlayerProgress((DONE, HOPELESS)), None) == 0.0
    assert q.epsilon == 1e-6


def test_epsilon_defaults_and_override():
    m = fig_a1()
    finite = parse_property('<<p1:p2>>max=? ( P[ F<=2 "g2" ] + P[ F<=2 "g2" ] )', m)
    assert NzQuery(m, finite).epsilon == 0.0
    assert NzQuery(m, finite.with_options(epsilon_ne=0.1)).epsilon == 0.1
    assert NzQuery(m, finite, 0.2).epsilon == 0.2
    with pytest.raises(PropertyError):
        NzQuery(m, parse_property('<<p1>> Pmax=? [ F "g2" ]', m))


def random_stage(seed, epsilon=0.05):
    m = random_tiny_icsg(TinyGameSpec(seed=seed, max_actions=3, max_resolutions=4))
    q = NzQuery(m, parse_property('<<p1:p2>>max=? ( R{"r1"}[ C<=1 ] + R{"r2"}[ C<=1 ] )', m), epsilon)
    s = max(range(m.n_states), key=lambda k: len(m.joint_actions(k)))
    prev = np.random.default_rng(seed).uniform(0, 1, size=(2, m.n_states))
    return q, s, prev


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**5))
def test_selected_profile_has_best_welfare(seed):
    q, s, prev = random_stage(seed)
    res = nz_state_update(q, s, prev[0], prev[1], step=0)
    if isinstance(res, NoRne):
        return
    stage = build_stage_bimatrix(q, s, prev[0], prev[1], step=0)
    ok = filter_rne(stage, enumerate_ne(stage.game, q.epsilon), q.epsilon)
    assert res[0] + res[1] >= max(c.profile.u1 + c.profile.u2 for c in ok) - 1e-12


def _widened(stage: Stage, extra: float) -> Stage:
    rows = [IntervalDistribution(r.succ, tuple(max(l - extra, 1e-3) for l in r.lo),
                                 tuple(min(h + extra, 1.0) for h in r.hi)) if len(r) > 1 else r
            for r in stage.rows]
    return Stage(stage.query, stage.state, stage.game, stage.nature, rows, stage.pinned, stage.prev, stage.step)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**5), st.floats(0.0, 0.2))
def test_widening_never_shrinks_deviation_gains(seed, extra):
    q, s, prev = random_stage(seed)
    stage = build_stage_bimatrix(q, s, prev[0], prev[1], step=0)
    wide = _widened(stage, extra)
    rng = np.random.default_rng(seed)
    p = MixedProfile.of(stage.game, rng.dirichlet(np.ones(stage.shape[0])), rng.dirichlet(np.ones(stage.shape[1])))
    for l in (0, 1):
        for a in range(stage.shape[l]):
            assert deviation_gain(wide, p, l, a) >= deviation_gain(stage, p, l, a) - 1e-9
    if annotate(wide, p, q.epsilon).accepted:
        assert annotate(stage, p, q.epsilon).accepted


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**5))
def test_zero_width_keeps_exactly_the_nash_set(seed):
    # embed_csg refuses anything but point rows
    m = embed_csg(random_tiny_icsg(TinyGameSpec(seed=seed, max_actions=3, width=(0.0, 0.0))))
    q = NzQuery(m, parse_property('<<p1:p2>>max=? ( R{"r1"}[ C<=1 ] + R{"r2"}[ C<=1 ] )', m), 0.0)
    s = max(range(m.n_states), key=lambda k: len(m.joint_actions(k)))
    prev = np.random.default_rng(seed).uniform(0, 1, size=(2, m.n_states))
    stage = build_stage_bimatrix(q, s, prev[0], prev[1], step=0)
    eqs = enumerate_ne(stage.game)
    assert len(filter_rne(stage, eqs, 0.0)) == len(eqs)
