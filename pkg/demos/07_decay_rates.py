"""How fast the 'not yet settled' probabilities die out.

Three experiments:

* one-sided regime: the chance of being farther than t^-rho from the
  almost-sure target boundary,
* both-boundaries regime: the chance of sitting outside both exponentially
  shrinking boundary bands -- this one decays exponentially whatever the
  measure tails look like,
* coupled dual pairs: the chance of not having merged yet, whose exponential
  decay is the engine behind the band result.

Each curve is fitted both as log p ~ t and log p ~ log t; the r-squared
values say which shape the data prefers.
"""

from lwf import (
    MeasureSpec,
    ModelParams,
    SelectionFn,
    decay_rate_experiment,
    merge_decay_curve,
)

ONE_SIDED = ModelParams(MeasureSpec(atoms=[(0.5, 0.1)]), None, SelectionFn([-2.0]))
SLOW_NEUTRAL = ModelParams(MeasureSpec(atoms=[(0.5, 0.2)]), None, SelectionFn([0.0]))


def show(name, rep):
    print(f"=== {name}")
    print("  t:", "  ".join(f"{t:g}" for t in rep.t_grid))
    print("  p:", "  ".join(f"{p:.4f}" for p in rep.probs))
    for label, fit in (("exponential", rep.exp_fit), ("polynomial", rep.poly_fit)):
        if fit is None:
            print(f"  {label:<12} fit: not enough positive points")
        else:
            print(f"  {label:<12} fit: slope {fit['slope']:+.3f}  "
                  f"r2 {fit['r2']:.3f}")
    print()


def main():
    show("one-sided regime, distance above t^-0.5 from the target boundary",
         decay_rate_experiment(ONE_SIDED, 0.5, rho=0.5, t_grid=[2, 4, 8, 16, 32],
                               reps=6000, seed=70, mode="theta01", band="poly"))
    show("both-boundaries regime, outside both exp(-0.3 t) bands",
         decay_rate_experiment(SLOW_NEUTRAL, 0.5, rho=0.3,
                               t_grid=[5, 10, 15, 20, 25, 30, 35, 40],
                               reps=6000, seed=71, mode="theta2"))
    show("coupled dual pairs not yet merged",
         merge_decay_curve(SLOW_NEUTRAL, 0.2, 0.8,
                           t_grid=[5, 10, 15, 20, 25, 30, 35, 40],
                           reps=6000, seed=72))


if __name__ == "__main__":
    main()
