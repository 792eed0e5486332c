"""Shooting on the current, and persistence of the uphill current as kappa -> 0."""
from uphill.model import ModelParams
from uphill.shooting import kappa_sweep, solve_for_mu, uphill_lower_bound

params = ModelParams()

for mu in (0.8, 0.99):
    res = solve_for_mu(mu, params)
    print(f"mu = {mu}:  j = {res.j_solution:+.6f}  (j_macro {res.j_macro:+.6f}), "
          f"nu = {res.nu_achieved:.7f}, {len(res.evaluations)} boundary-value evaluations")

print(f"\nkappa-independent floor: {uphill_lower_bound(0.8, params.beta):.6f}")
for e in kappa_sweep([0.1, 0.05, 0.02, 0.01], 0.8, params):
    print(f"  kappa = {e.kappa:<5}  j = {e.j:.6f}  nu = {e.nu:.7f}")
