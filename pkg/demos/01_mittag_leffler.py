"""Mittag-Leffler function: closed forms and the three evaluation branches.

E_alpha(-x) interpolates between exp(-x) (alpha = 1) and the slow algebraic
decay x**(-1) / Gamma(1 - alpha) for alpha < 1. This script checks the
closed forms and shows which branch the dispatcher picks.
"""

import numpy as np
from scipy.special import erfcx, gamma

from tfdlab.mittag_leffler import mittag_leffler, mittag_leffler_report

x = np.linspace(0, 10, 6)
print("alpha = 1 is the exponential:")
print(f"  max |E_1(-x) - exp(-x)| = {np.abs(mittag_leffler(1.0, -x) - np.exp(-x)).max():.2e}")
print("alpha = 1/2 is exp(x^2) erfc(x):")
print(f"  max gap = {np.abs(mittag_leffler(0.5, -x) - erfcx(x)).max():.2e}")
print("alpha = 2 on -z^2 is cos(z):")
print(f"  max gap = {np.abs(mittag_leffler(2.0, -x**2) - np.cos(x)).max():.2e}")

print("\nheavy tails for alpha < 1 (value, leading asymptotic 1/(x Gamma(1-alpha))):")
for alpha in (0.3, 0.6, 0.9):
    v = mittag_leffler(alpha, -100.0)
    print(f"  alpha={alpha}: E(-100) = {v:.6e}   asymptote {1 / (100 * gamma(1 - alpha)):.6e}")

rep = mittag_leffler_report(0.4, np.array([-0.5, -5.0, -9.5, -12.0, -200.0]))
print("\nbranch selection for alpha = 0.4:")
for z, m, e in zip([-0.5, -5.0, -9.5, -12.0, -200.0], rep["methods"], rep["errors"]):
    print(f"  z = {z:7.1f}  ->  {m:10s}  error estimate {e:.1e}")
