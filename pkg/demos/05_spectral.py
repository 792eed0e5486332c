"""Perron eigenvalue of the linearization at the instanton, and sup diagnostics."""
from uphill.instanton import compute_instanton
from uphill.macro import macro_profile
from uphill.model import ModelParams
from uphill.spectral import compute_diagnostics, spectral_analysis
from uphill.stationary import HalfLineSystem, apply_T, build_m0

beta = 2.0
bar = compute_instanton(beta, 0.0, 0.05)
print(f"kappa = 0: lambda = {spectral_analysis(bar).lam:.8f}  (translation mode)")
for kappa in (0.05, 0.1, 0.2):
    res = spectral_analysis(compute_instanton(beta, kappa, 0.05))
    print(f"kappa = {kappa}: lambda = {res.lam:.6f}  bound {res.bound_quadratic:.6f}  "
          f"margin {res.margin:+.4f}")

inst = compute_instanton(beta, 0.1, 0.05)
print("\n  eps     eta0 (window)  eta0 (pointwise)  pi0")
for eps in (0.04, 0.02, 0.01, 0.005):
    params = ModelParams(epsilon=eps)
    system = HalfLineSystem(params, 0.05)
    mac = macro_profile(inst.at(eps ** -0.5), params.mu, beta)
    m0 = build_m0(inst, mac, params, system.grid)
    d = compute_diagnostics(m0, apply_T(m0, mac.j_macro, params, system.grid), bar, system)
    print(f"  {eps:<6}  {d.eta0:.5f}        {d.eta0_pointwise:.5f}           {d.pi0:.4f}")
print(f"small-eps limit of the pointwise ratio: {d.eta_kappa:.5f}")
