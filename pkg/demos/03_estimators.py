"""Point estimates of the target policy's loss: IPW, regression and doubly robust.

These estimate the mean and the cdf of the loss under the target policy
but carry no finite-sample guarantee. The IPW cdf is also the basis of the
benchmark quantile that the coverage studies compare against.
"""
import numpy as np
from scipy.stats import norm

from policylimits import (
    ThresholdPolicy, cdf_quantile, dr_cdf, dr_mean, ipw_cdf, ipw_mean, rm_cdf, rm_mean,
)
from policylimits import synthdata as sd
from policylimits.core import make_rng

ds = sd.gen_unconfounded(sd.UnconfoundedConfig(c=1.0, n=2000, seed=3)).dataset
policy = ThresholdPolicy(0.5)
nominal = sd.SigmoidPastPolicy(1.0)

#
# Ground truth by direct simulation from the target distribution.
#
target = sd.draw_target_losses(make_rng(4), 500_000, policy)
print(f"true mean {target.mean():.4f}")

#
# A deliberately crude outcome model: the mean loss ignores x2.
#
def mean_model(a, X):
    return np.where(a == 0, 1 - 0.5 * X[:, 0], 0.5 * X[:, 0])


def cdf_model(ell, a, X):
    return norm.cdf((ell - mean_model(a, X)) / 0.4)


print(f"IPW {ipw_mean(ds, policy, nominal):.4f}")
print(f"RM  {rm_mean(ds, policy, mean_model):.4f}  (biased by the crude model)")
print(f"DR  {dr_mean(ds, policy, nominal, mean_model):.4f}  (weights correct the model)")

grid = np.linspace(-0.5, 1.5, 5)
F_ipw, F_rm, F_dr = ipw_cdf(ds, policy, nominal), rm_cdf(ds, policy, cdf_model), dr_cdf(ds, policy, nominal, cdf_model)
print("\n  ell    true    IPW     RM      DR")
for ell in grid:
    print(f"{ell:5.2f}  {(target <= ell).mean():.3f}  {F_ipw(ell):.3f}  {F_rm(ell):.3f}  {F_dr(ell):.3f}")

print(f"\nIPW 0.9-quantile {cdf_quantile(F_ipw, 0.1, np.unique(ds.loss)):.3f}, "
      f"true {np.quantile(target, 0.9):.3f}")
