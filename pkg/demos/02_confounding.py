"""What happens when the past policy also looked at an unobserved variable.

The confounded design pushes units with small unobserved U (and so small
loss) towards treatment, with odds shifted by gamma0 = 2. The nominal model
ignores U, so limit curves computed with gamma = 1 are too optimistic about
treating everybody. Allowing gamma >= gamma0 restores validity.
"""
import numpy as np

from policylimits import CoverageConfig, compare_methods, odds_divergence, treat_all
from policylimits import harness as h
from policylimits import synthdata as sd

t = sd.design_threshold(c=0.5, gamma0=2.0, pilot_n=100_000, seed=0)
print(f"threshold t(X) at quantile {t.q} of U | X")

data = sd.gen_confounded(sd.ConfoundedConfig(gamma0=2.0, c=0.5, n=2000, seed=1), t)
div = odds_divergence(data.true_propensity(), data.nominal_propensity())
print(f"odds divergence of the nominal model: max {div.max():.6f}")

#
# Coverage study: 200 training sets of 250 samples, 500 fresh target
# losses each. A negative gap means the limit is exceeded more often
# than alpha allows.
#
scenario = h.SyntheticScenario(treat_all(), "confounded", c=0.5, n=250, gamma0=2.0, threshold=t)
alphas = (0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9)
cfg = CoverageConfig(runs=200, test_draws_per_run=500, alpha_grid=alphas, gamma_grid=(1.0, 2.0, 3.0),
                     master_seed=0)
proposed, benchmark = compare_methods(scenario, cfg)

print("\nalpha  " + "  ".join(f"gamma={g:<4}" for g in proposed.gammas) + "  IPW benchmark")
for j, a in enumerate(alphas):
    row = "  ".join(f"{proposed.gap[g, j]:+10.3f}" for g in range(len(proposed.gammas)))
    print(f"{a:5.2f}  {row}  {benchmark.gap[0, j]:+10.3f}")

print("\nmean informativeness:", np.round(proposed.informativeness_mean, 3))
