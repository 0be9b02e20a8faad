"""How much does interval uncertainty cost a robot?

Solves the grid game once with exact probabilities and then with every
probability widened by eps, for a growing eps.
"""
from icsg import gen_benchmark, parse_property, perturb, solve_zero_sum

PROP = '<<p1>> Pmax=? [ F<=6 "g1" ]'


def main():
    nominal = gen_benchmark("robot", l=3)
    prop = parse_property(PROP, nominal)
    print(f"{'eps':>6}  {'adversarial':>12}  {'controlled':>11}")
    for eps in (0.0, 0.01, 0.02, 0.05, 0.1):
        m = perturb(nominal, eps)
        adv = solve_zero_sum(m, prop).value
        ctl = solve_zero_sum(m, prop.with_options("controlled")).value
        print(f"{eps:6.2f}  {adv:12.6f}  {ctl:11.6f}")


if __name__ == "__main__":
    main()
