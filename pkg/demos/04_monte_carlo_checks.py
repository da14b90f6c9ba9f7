"""Verify the statistical guarantees empirically (reduced trial counts).

Each experiment redraws the random transform per trial with a fixed vector
pair, runs the real mapping pipeline, and compares empirical rates against
theory with explicit tolerances. The full-scale versions live in
tests/test_acceptance.py.

Run:  python demos/04_monte_carlo_checks.py   (~1 minute)
"""

from sphx import ExperimentMode, ExperimentSpec
from sphx.simulate import (
    run_cdf_experiment,
    run_domination_experiment,
    run_error_experiment,
    run_phase_experiment,
)
from sphx import threshold_h

# Type I errors: a document planted at lambda - eps_minus should sneak
# past the mu(lambda) cutoff with probability ~ P(N >= eta) = 5%.
spec = ExperimentSpec(
    mode=ExperimentMode.TYPE_I, kind="gaussian",
    m=2**14, r=0.45, lam=0.9, eta=1.645, trials=4000, seed=1,
)
cell = run_error_experiment(spec).cells[0]
print(f"type I rate: {cell.empirical:.4f}  target {cell.theory:.4f} "
      f"+- {cell.tolerance:.4f}  (binomial-exact {cell.extra['binomial_exact']:.4f})")

# Same spec through the structured transform: same behaviour.
cell = run_error_experiment(ExperimentSpec(
    mode=ExperimentMode.TYPE_I, kind="structured", d=100,
    m=2**14, r=0.45, lam=0.9, eta=1.645, trials=4000, seed=2,
)).cells[0]
print(f"structured:  {cell.empirical:.4f}  same band -> "
      f"{'ok' if cell.passed else 'OUT OF BAND'}")

# The biased control (sparse input to the cosine transform) breaks the
# type I / type II symmetry; this is why the input must be dense.
rates = {}
for mode in (ExperimentMode.TYPE_I, ExperimentMode.TYPE_II):
    rates[mode] = run_error_experiment(ExperimentSpec(
        mode=mode, kind="biased-structured", d=100,
        m=2**14, r=0.45, lam=0.9, eta=1.645, trials=4000, seed=3,
    )).cells[0].empirical
print(f"biased control: type I {rates[ExperimentMode.TYPE_I]:.4f} vs "
      f"type II {rates[ExperimentMode.TYPE_II]:.4f}  <- asymmetric")

# The normalized score's CDF sits within 1/sqrt(mu m) of the normal CDF.
cell = run_cdf_experiment(ExperimentSpec(
    mode=ExperimentMode.SCORE_CDF, kind="gaussian",
    m=2**14, r=0.45, lam=0.9, trials=4000, seed=4,
)).cells[0]
print(f"\nCDF sup gap: {cell.empirical:.4f} <= {cell.tolerance:.4f}")

# Below the phase boundary (lambda < 2r - 1) scores vanish entirely.
report = run_phase_experiment(ExperimentSpec(
    mode=ExperimentMode.PHASE_TRANSITION, kind="gaussian",
    m=(2**12, 2**14), r=0.5, lam=-0.2, trials=4000, seed=5,
))
for cell in report.cells:
    print(f"phase m={cell.params['m']}: P(S!=0) = {cell.empirical:.2e} "
          f"<= Markov bound {cell.theory:.2e} (+tol)")

# Higher true similarity stochastically dominates lower, at every count.
cell = run_domination_experiment(
    0.3, 0.8, h=threshold_h(2**12, 0.45), m=2**12, trials=2000, seed=6,
).cells[0]
print(f"\ndomination holds: {cell.passed} "
      f"(worst tail-probability excess {cell.empirical:.4f})")
