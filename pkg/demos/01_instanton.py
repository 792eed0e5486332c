"""The kappa-instanton: relaxation, limits at the origin and at infinity, tail.

Run:  python demos/01_instanton.py
"""
import math

from uphill.instanton import compute_instanton, ordering_bound_check, ordering_bound_constant

beta, kappa = 2.0, 0.1

inst = compute_instanton(beta, kappa, dx=0.05)
bar = compute_instanton(beta, 0.0, dx=0.05)

print(f"relaxed in {inst.steps} steps of the semigroup (t = {inst.time}), "
      f"sup|dm/dt| = {inst.residual:.2e}")
print(f"plateau        {inst.plateau:.10f}")
print(f"m_(beta,kappa) {inst.m_beta_kappa:.10f}")

# the field makes the profile jump at x = 0; the first node sees the jump at O(dx)
print(f"\nfirst node       {inst.origin_limit:.5f}")
print(f"extrapolated     {inst.origin_extrapolated:.5f}")
print(f"tanh(beta kappa) {math.tanh(beta * kappa):.5f}")

print(f"\ntail: m_(beta,kappa) - m(x) ~ {inst.decay_prefactor:.3f} exp(-{inst.decay_rate:.3f} x)"
      f"  (fit residual {inst.tail.residual:.1e})")

print(f"\nordering against the kappa = 0 profile: bound constant "
      f"{ordering_bound_constant(beta, kappa):.6f}, min margin {ordering_bound_check(inst, bar):.2e}")

print("\n    x     m_kappa    m_bar")
for x in (0.025, 0.5, 1.0, 2.0, 4.0, 8.0):
    print(f"{x:6.3f}  {inst.at(x):9.6f}  {bar.at(x):9.6f}")
