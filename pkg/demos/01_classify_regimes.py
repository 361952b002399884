"""Classify the four canonical parameter regimes.

The long-run behavior of the process is decided by the signs of two boundary
balance values: each compares the selective and environmental push at one
boundary against the neutral pull (the coalescence impact).  This script
builds one model per regime and prints the full classification report,
including the weak/strong tail functionals that control decay rates.
"""

from lwf import MeasureSpec, ModelParams, SelectionFn, integrability_report

MODELS = {
    "one-sided, favors the all-A state": ModelParams(
        MeasureSpec(atoms=[(0.5, 0.1)]), None, SelectionFn([-2.0])),
    "one-sided, favors the all-a state": ModelParams(
        MeasureSpec(atoms=[(0.5, 0.1)]), None, SelectionFn([2.0])),
    "neutral: both boundaries reachable": ModelParams(
        MeasureSpec(atoms=[(0.5, 1.0)]), None, SelectionFn([0.0])),
    "weak balancing selection: coexistence": ModelParams(
        MeasureSpec(atoms=[(0.5, 0.25)]), None, SelectionFn([1.0, -2.0])),
}


def main():
    for name, params in MODELS.items():
        report = integrability_report(params, gamma=1.0)
        print(f"=== {name}")
        print(report.to_text())
        print()
    print("Note the last model: selection alone keeps both types alive, which")
    print("needs a frequency-dependent sigma (a constant sigma always makes at")
    print("least one boundary reachable, because the two balance values then")
    print("sum to a negative number).")


if __name__ == "__main__":
    main()
