"""
Building blocks: variance components, sub-regions, kinship
===========================================================

Walks through the three ingredients every allocation problem needs and
prints the intermediate quantities so you can see what the library does
with them.
"""

import numpy as np

from trialalloc import (BlockCompoundSymmetry, CompoundSymmetry, Identity,
                        SubRegionProfile, VarianceComponents, asv,
                        effective_error_constant, materialize,
                        sigma2_alpha_for_unit_asv)

# ------------------------------------------------------------------
# Variance components.  The trial network is observed over H years, and
# the residual layer can be given either as a precomputed composite or as
# separate trial-mean and plot-error pieces with L replicates.
vc = VarianceComponents(sigma2_omega=31.0, sigma2_tau=18.0, sigma2_gamma=160.0,
                        sigma2_phi_plus_err_over_L=333.0, H=3,
                        model_variant="cross_classified")
same = VarianceComponents.from_separate(sigma2_omega=31.0, sigma2_tau=18.0,
                                        sigma2_gamma=160.0, sigma2_phi=300.0,
                                        sigma2_err=99.0, L=3, H=3)
print("composite residual:", vc.sigma2_phi_plus_err_over_L,
      "== from_separate:", same.sigma2_phi_plus_err_over_L)

# The single scalar that the criterion algebra actually consumes.  For the
# cross-classified layout it includes the genotype-by-location interaction;
# the nested layout folds everything into one composite.
print("effective error constant, cross-classified:",
      effective_error_constant(vc))
nested = VarianceComponents(sigma2_omega=31.0, sigma2_tau=18.0,
                            sigma2_gamma=160.0,
                            sigma2_phi_plus_err_over_L=493.0, H=3,
                            model_variant="nested")
print("effective error constant, nested:", effective_error_constant(nested))

# ------------------------------------------------------------------
# The sub-region profile: a P x P genetic covariance matrix V across
# sub-regions, plus optional size coefficients used by the weighted
# criterion.  This is a five-zone maize network.
V = np.array([
    [567.0, 254.0, 239.0, 485.0, 328.0],
    [254.0, 155.0, 118.0, 240.0, 162.0],
    [239.0, 118.0, 155.0, 226.0, 153.0],
    [485.0, 240.0, 226.0, 488.0, 310.0],
    [328.0, 162.0, 153.0, 310.0, 215.0],
])
ell = np.array([813685.0, 432716.0, 477365.0, 995298.0, 1174818.0])
profile = SubRegionProfile(V=V, ell=ell)
print("\nsub-regions:", profile.P,
      "| largest genetic variance in zone", int(np.argmax(np.diag(V))) + 1,
      "| largest size coefficient in zone", int(np.argmax(ell)) + 1)

# ------------------------------------------------------------------
# Kinship.  Identity means unrelated genotypes; compound symmetry makes
# every pair equally related; the family-block structure groups f families
# of m sibs with within-family correlation r.
unrelated = Identity(K=31)
exchangeable = CompoundSymmetry(K=31, sigma2_alpha=1.0, r=0.25)
s2a = sigma2_alpha_for_unit_asv(30, 5, 0.5)
families = BlockCompoundSymmetry(f=6, m=5, sigma2_alpha=s2a, r=0.5)

# asv() is the average semivariance: the scale on which different kinship
# structures are comparable.  The unit-asv calibration above makes the
# family-block structure directly comparable with Identity (asv == 1).
for name, kin in (("identity", unrelated), ("compound symmetry", exchangeable),
                  ("family blocks", families)):
    print(f"asv({name}) = {asv(materialize(kin)):.6f}")

print("\nfamily-block variance scale for unit asv:", round(s2a, 6))
