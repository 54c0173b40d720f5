"""
Evaluating a trial allocation
=============================

Compares a tuned allocation of 40 trial locations against an equal split,
for unrelated genotypes on the five-zone maize network.
"""

import numpy as np

from trialalloc import (CriterionSpec, Design, DesignProblem, Identity,
                        SubRegionProfile, VarianceComponents)

V = np.array([
    [567.0, 254.0, 239.0, 485.0, 328.0],
    [254.0, 155.0, 118.0, 240.0, 162.0],
    [239.0, 118.0, 155.0, 226.0, 153.0],
    [485.0, 240.0, 226.0, 488.0, 310.0],
    [328.0, 162.0, 153.0, 310.0, 215.0],
])
ell = np.array([813685.0, 432716.0, 477365.0, 995298.0, 1174818.0])

vc = VarianceComponents(sigma2_omega=31.0, sigma2_tau=18.0, sigma2_gamma=160.0,
                        sigma2_phi_plus_err_over_L=333.0, H=3)
profile = SubRegionProfile(V=V, ell=ell)
problem = DesignProblem(vc, profile, Identity(K=31))
print("evaluation path:", problem.path_used.value)

# An exact design is an integer count per sub-region; its weights are the
# counts divided by J.  value() bundles the criterion value, the summed
# prediction-error variance, and the gradient in one call.
tuned = Design.exact(np.array([13, 6, 8, 12, 1]))
equal = Design.exact(np.array([8, 8, 8, 8, 8]))

for name, design in (("tuned", tuned), ("equal split", equal)):
    val = problem.value(design)
    print(f"{name:>12}: counts {tuple(int(c) for c in design.counts)}"
          f"  mse_trace {val.mse_trace:9.1f}  phi {val.phi:.4f}")

# The gradient says how the criterion responds to shifting weight toward
# each zone.  At the equal split, the most negative entries mark the zones
# that are starved relative to their genetic variance.
grad = problem.gradient(equal)
order = np.argsort(grad)
print("\nzones ranked by marginal benefit at the equal split:",
      [int(i) + 1 for i in order])

# Weighting the criterion by zone size changes what "good" means: zone 5 is
# genetically quiet but huge, so the weighted criterion values it more.  The
# two designs below are each optimal for one of the criteria — and each
# criterion prefers its own.
weighted = DesignProblem(vc, profile, Identity(K=31),
                         CriterionSpec(weighting="weighted"))
for_size = Design.exact(np.array([14, 3, 6, 15, 2]))
print()
for name, design in (("tuned for variance", tuned),
                     ("tuned for zone size", for_size)):
    print(f"{name:>20}: standard phi {problem.phi(design):8.4f}"
          f"   weighted phi {weighted.phi(design):12.1f}")

# Approximate designs carry continuous weights instead of counts; any
# nonnegative weights summing to one will do, including zero weight on a
# zone that gets no locations at all.
sparse = Design.approximate(np.array([0.4, 0.0, 0.1, 0.5, 0.0]), J=40)
print("\nphi with two empty zones:", round(problem.phi(sparse), 4))
