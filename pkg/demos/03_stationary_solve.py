"""Stationary profile on the half line at the default configuration.

The solver first tries the Picard loop h = T m, m = Newton(h) from the glued
profile m0.  At eps = 0.02 the field T m0 already dips below the spinodal
field near the reservoir, so it falls back to continuation in the current.
"""
import numpy as np

from uphill.macro import macro_profile
from uphill.model import ModelParams
from uphill.instanton import compute_instanton
from uphill.stationary import HalfLineSystem, apply_T, build_m0, solve_stationary

params = ModelParams()          # beta=2, kappa=0.1, eps=0.02, mu=0.8
inst = compute_instanton(params.beta, params.kappa, 0.05)

system = HalfLineSystem(params, 0.05)
mac = macro_profile(inst.at(params.epsilon ** -0.5), params.mu, params.beta)
m0 = build_m0(inst, mac, params, system.grid)
h0 = apply_T(m0, mac.j_macro, params, system.grid)
print(f"h0 at the reservoir edge: {h0.values[-1]:+.4f} (j_macro = {mac.j_macro:.6f})")

sol = solve_stationary(params, instanton=inst)
r = sol.report
print(f"route: {r.flags},  outer iterations {r.iterations_outer}, "
      f"inner Newton steps {r.iterations_inner_total}")
print(f"nu = m(1/eps) = {r.nu:.6f} for j = {r.j:.6f}")
print(f"res_m = {r.residual_fixed_point:.1e}, res_h = {r.residual_field:.1e}, "
      f"sup|I - j eps| = {r.flux_deviation:.1e}")
print(f"first Newton correction from m0: |phi_1| = {r.phi1:.4f}")

m = sol.full_m()
print(f"antisymmetry defect {np.max(np.abs(m + m[::-1])):.1e}")
print("\n    x        m0          m")
for x in (0.025, 1.025, 5.025, 10.025, 25.025, 40.025, 49.975):
    i = int(np.argmin(np.abs(sol.x - x)))
    print(f"{sol.x[i]:7.3f}  {m0[i]:.6f}  {sol.m[i]:.6f}")
