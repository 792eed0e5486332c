"""The macroscopic profile and the sign of the current.

On the macro scale the current is fixed by the cubic g(m) = (beta-1) m - beta m^3/3:
j = g(mu) - g(mu0).  Because g decreases above the spinodal point, a reservoir
below the plateau value drives a positive current, i.e. against the gradient.
"""
import numpy as np

from uphill.macro import macro_current, macro_profile
from uphill.model import mean_field_root, spinodal_threshold

beta = 2.0
mu0 = mean_field_root(beta, 0.1)
print(f"m*(beta) = {spinodal_threshold(beta):.6f},  mu0 = m_(beta,0.1) = {mu0:.6f}")

for mu in (0.75, 0.8, 0.9, mu0, 0.99):
    j = macro_current(mu0, mu, beta)
    kind = "uphill" if j > 0 else ("none" if j == 0 else "downhill")
    print(f"  mu = {mu:.4f}:  j_macro = {j:+.6f}  ({kind})")

prof = macro_profile(mu0, 0.8, beta, n_points=11)
print(f"\nprofile for mu = 0.8 (relation residual {np.max(np.abs(prof.relation_residual())):.1e})")
for r, m, s in zip(prof.r, prof.m, prof.slope()):
    print(f"  r = {r:.1f}   m = {m:.6f}   dm/dr = {s:+.4f}")
