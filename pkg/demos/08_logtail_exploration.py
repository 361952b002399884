"""Exploratory: is the polynomial decay rate sharp under log-tail measures?

When only the weak tail condition holds (the strong one fails), the one-sided
regime guarantees *at least* polynomial decay of the not-yet-settled
probability.  It is an open question whether that is also an upper bound for
measures whose mass near 1 vanishes only logarithmically.  This script builds
such a measure -- a reproduction density with tail mass ~ log(1/x)^-2 near 1
-- checks that the strong functionals are indeed infinite while the weak ones
are finite, and compares polynomial and exponential fits of the measured
decay curve.  No conclusion is asserted; the numbers are food for thought.
"""

import math

from lwf import (
    MeasureSpec,
    ModelParams,
    SelectionFn,
    decay_rate_experiment,
    integrability_report,
)

XI = 2.0
SCALE = 0.02


def logtail_density(r):
    # tail mass of [1-x, 1) behaves like SCALE * log(1/x)^-XI
    u = -math.log1p(-r)
    return SCALE * XI * u ** (-XI - 1.0) / (1.0 - r)


LAM = MeasureSpec(
    atoms=[(0.3, 0.2)],
    density=logtail_density,
    support_interval=(0.0, 1.0),
    density_support=(0.5, 1.0 - 1e-6),
)
PARAMS = ModelParams(LAM, None, SelectionFn([-1.5]))


def main():
    for gamma in (0.5, 1.5):
        rep = integrability_report(PARAMS, gamma)
        print(f"gamma={gamma}: regime={rep.regime}  "
              f"w(r^-2 lambda)={rep.w_gamma_lambda:.4g}  "
              f"s(r^-2 lambda)={rep.s_gamma_lambda:.4g}")
    print("the weak functional is finite below the tail exponent minus one,")
    print("the strong one never is: only the polynomial guarantee applies.\n")

    rep = decay_rate_experiment(PARAMS, 0.5, rho=0.5, t_grid=[2, 4, 8, 16, 32, 64],
                                reps=4000, seed=80, mode="theta01", band="poly")
    print("P(state above t^-0.5) over t:")
    print("  t:", "  ".join(f"{t:g}" for t in rep.t_grid))
    print("  p:", "  ".join(f"{p:.4f}" for p in rep.probs))
    for label, fit in (("exp  log p ~ t     ", rep.exp_fit),
                       ("poly log p ~ log t ", rep.poly_fit)):
        if fit is not None:
            print(f"  {label} slope {fit['slope']:+.3f}  r2 {fit['r2']:.3f}")


if __name__ == "__main__":
    main()
