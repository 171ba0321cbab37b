"""Show the three quadratic bounds doing their job.

Each bound touches its target at the expansion point and stays on one side
of it everywhere else; this script samples random probe points and reports
the worst-case violation (which should be zero up to round-off) and the mean
slack.
"""

import numpy as np

from slnrbeam.surrogates import (
    evaluate_log_minorant,
    ratio_quadratic_minorant,
    softmin_majorant,
)

rng = np.random.default_rng(3)
dim = 4
chi_bar = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
x_bar = 1.2

print("Expansion point: ||chi_bar||^2 =", round(float(np.vdot(chi_bar, chi_bar).real), 4),
      " x_bar =", x_bar)
print()

probes = 20_000

# 1) minorant of ln(1 + ||chi||^2 / x)
slack = []
for _ in range(probes):
    chi = (rng.standard_normal(dim) + 1j * rng.standard_normal(dim)) * rng.uniform(0, 2)
    x = rng.uniform(1e-2, 6.0)
    target = np.log1p(np.vdot(chi, chi).real / x)
    slack.append(target - evaluate_log_minorant(chi_bar, x_bar, chi, x))
slack = np.array(slack)
print(f"log-ratio minorant: worst violation {min(slack.min(), 0):.2e}, "
      f"mean slack {slack.mean():.3f}")

# 2) minorant of the plain ratio ||chi||^2 / x
bound = ratio_quadratic_minorant(chi_bar, x_bar)
slack = []
for _ in range(probes):
    chi = (rng.standard_normal(dim) + 1j * rng.standard_normal(dim)) * rng.uniform(0, 2)
    x = rng.uniform(1e-2, 6.0)
    slack.append(np.vdot(chi, chi).real / x - bound.evaluate(chi, x))
slack = np.array(slack)
print(f"ratio minorant:     worst violation {min(slack.min(), 0):.2e}, "
      f"mean slack {slack.mean():.3f}")

# 3) majorant of the smoothed minimum over a user group
chis_bar = [rng.standard_normal(dim) + 1j * rng.standard_normal(dim) for _ in range(3)]
xs_bar = [1.0, 0.5, 2.0]
c = 0.1
soft = softmin_majorant(chis_bar, xs_bar, c)
slack = []
for _ in range(probes):
    chis = [(rng.standard_normal(dim) + 1j * rng.standard_normal(dim)) * rng.uniform(0, 2)
            for _ in range(3)]
    xs = [rng.uniform(1e-2, 6.0) for _ in range(3)]
    target = np.log(sum(1.0 / (1.0 + np.vdot(ch, ch).real / (c * x))
                        for ch, x in zip(chis, xs)))
    slack.append(soft.evaluate(chis, xs) - target)
slack = np.array(slack)
print(f"soft-min majorant:  worst violation {min(slack.min(), 0):.2e}, "
      f"mean slack {slack.mean():.3f}")
