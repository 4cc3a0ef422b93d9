"""Which stimulus design copes better with noisy interpolation data?

Each trial corrupts the RTIMs of both designs with the same multiplicative
noise, recovers theta from each, and records the ratio of the relative
errors (derivative design over value-only design). A ratio below one means
the derivative design did better. Trials are then binned by noise size.

The full study uses 300 trials and takes several minutes on one core, so
this script defaults to 40. Pass a number to change it, for example
``python3 demos/03_noise_study.py 300``.
"""

import sys

import numpy as np

from lftrecover import RecoveryConfig
from lftrecover.experiment import (
    REFERENCE_TABLE,
    bin_table,
    build_example_plant,
    build_xi_designs,
    ratio_fractions,
    run_monte_carlo,
)

n_trials = int(sys.argv[1]) if len(sys.argv) > 1 else 40
plant = build_example_plant()
designs = build_xi_designs(sigma=-0.05, omegas=(4.4799, 4.4179, 4.5306))
cfg = RecoveryConfig(init_theta=np.array([1.0, 10.0]), lambda1=2.0, lambda2=10.0, step=0.05,
                     eps_it=1e-10, max_iter=2500)

records = run_monte_carlo(plant, designs["spec0"], designs["spec1"], cfg,
                          n_trials=n_trials, noise_std=0.17, seed=2024)
frac = ratio_fractions(records)
print(f"{n_trials} trials")
print(f"  fraction with damping-error ratio below 1:   {frac['r_zeta_lt_1']:.3f}")
print(f"  fraction with frequency-error ratio below 1: {frac['r_omega_lt_1']:.3f}")

table = bin_table(records)
edges = table["edges"]
labels = [f"[{a:.2f},{b:.2f})" for a, b in zip(edges[:-1], edges[1:])] + ["overflow"]
print(f"\n{'noise norm':>14} {'trials':>7} {'zeta<1':>7} {'omega<1':>8}")
for i, label in enumerate(labels):
    print(f"{label:>14} {table['total'][i]:>7} {table['r_zeta_lt_1'][i]:>7} {table['r_omega_lt_1'][i]:>8}")
print("\nreference counts for 300 trials:")
for key in ("total", "r_zeta_lt_1", "r_omega_lt_1"):
    print(f"  {key:>12}: {REFERENCE_TABLE[key]}")
