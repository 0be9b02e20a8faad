"""Two small nonzero-sum games: one where robustness prunes an equilibrium
and one where no robust equilibrium exists at all."""
import numpy as np

from icsg import NoRneReport, gen_benchmark, nz_solve, parse_property
from icsg.nfg import MixedProfile
from icsg.nonzerosum import NzQuery, annotate, build_stage_bimatrix


def one_shot():
    m = gen_benchmark("one_shot")
    prop = parse_property('<<p1:p2>>max=? ( R{"r1"}[ C<=2 ] + R{"r2"}[ C<=2 ] )', m)
    q = NzQuery(m, prop, 0.05)
    stage = build_stage_bimatrix(q, 0, np.array(m.reward("r1").state), np.array(m.reward("r2").state), step=1)
    for name, x, y in [("(A,A)", [1, 0], [1, 0]), ("(B,B)", [0, 1], [0, 1])]:
        c = annotate(stage, MixedProfile.of(stage.game, x, y), q.epsilon)
        print(f"{name}: worst-case gains {c.bounds[0]:+.3f} {c.bounds[1]:+.3f} -> "
              f"{'kept' if c.accepted else 'rejected'}")
    print("values:", nz_solve(m, prop, epsilon=0.05).value)


def hopeless():
    m = gen_benchmark("fig_a2")
    res = nz_solve(m, parse_property('<<p1:p2>>max=? ( P[ F<=2 "g1" ] + P[ F<=2 "g2" ] )', m))
    assert isinstance(res, NoRneReport)
    print(res.message)


if __name__ == "__main__":
    one_shot()
    hopeless()
