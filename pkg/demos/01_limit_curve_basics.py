"""Limit curves for threshold policies on data from a known past policy.

Data come from the unconfounded two-covariate design with c = 1. For three
target policies we certify a loss level ell_alpha that a new unit's loss
stays below with probability at least 1 - alpha.
"""
import numpy as np

from policylimits import ThresholdPolicy, informativeness, limit_curve, split_dataset
from policylimits import synthdata as sd

data = sd.gen_unconfounded(sd.UnconfoundedConfig(c=1.0, n=1000, seed=0))
ds = data.dataset
print(f"{len(ds)} samples, treated share {ds.a.mean():.2f}")
print(f"largest inverse propensity under c=1: {sd.max_inverse_propensity(1.0):.2f}")

#
# The past policy is known here, so gamma = 1 is a credible assumption.
#
nominal = sd.SigmoidPastPolicy(1.0)
split = split_dataset(ds, seed=1)
alphas = np.round(np.arange(1, 20) * 0.05, 2)

print("\nalpha  " + "  ".join(f"tau={t:<4}" for t in (0.0, 0.5, 1.0)))
curves = {t: limit_curve(ds, ThresholdPolicy(t), nominal, 1.0, alphas, split) for t in (0.0, 0.5, 1.0)}
for j, a in enumerate(alphas):
    print(f"{a:5.2f}  " + "  ".join(f"{curves[t].ells[j]:8.3f}" for t in curves))

#
# tau = 0 treats nobody and tau = 1 treats everybody. The mixed policy
# treats units with small x1 * x2, where treatment has the lower mean loss.
#
for t, c in curves.items():
    print(f"tau={t}: informativeness {informativeness(c):.2f}, ell at alpha=0.1: {c.ells[1]:.3f}")

#
# Raising gamma widens the weight bounds, so limits can only grow.
#
for gamma in (1.0, 1.5, 2.0, 3.0):
    c = limit_curve(ds, ThresholdPolicy(0.5), nominal, gamma, alphas, split)
    print(f"gamma={gamma}: ell_0.1 = {c.ells[1]:.3f}, ell_0.5 = {c.ells[9]:.3f}")
