"""Shooting on the current: find ``j`` with ``m(eps^{-1}; j) = mu``.

The boundary value ``nu(j)`` is read off the last node of the converged
stationary profile.  It decreases with ``j``, so bisection over a
straddling bracket needs nothing beyond continuity of ``j -> nu``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .grid import KernelSpec
from .instanton import InstantonResult, compute_instanton
from .macro import macro_current
from .model import ModelParams, mean_field_root
from .stationary import Continuation, HalfLineSystem, SolverError, StationarySolution


class ShootingError(SolverError):
    pass


@dataclass
class ShootingResult:
    mu_target: float
    j_solution: float
    nu_achieved: float
    bracket: tuple[float, float]
    j_macro: float
    mu0: float
    evaluations: list = field(default_factory=list)
    lipschitz_estimate: float = math.nan
    solution: StationarySolution | None = field(default=None, repr=False)

    @property
    def residual(self) -> float:
        r = self.solution.report
        return max(r.residual_fixed_point, r.residual_field)

    def as_dict(self) -> dict:
        return {
            "mu_target": self.mu_target, "j_solution": self.j_solution,
            "nu_achieved": self.nu_achieved, "bracket": list(self.bracket),
            "j_macro": self.j_macro, "mu0": self.mu0,
            "lipschitz_estimate": self.lipschitz_estimate,
            "evaluations": [list(e) for e in self.evaluations],
            "residual": self.residual,
        }


class BoundaryMap:
    """``j -> nu(j)`` for fixed parameters, sharing one continuation branch."""

    def __init__(self, params: ModelParams, dx: float = 0.05, kernel: KernelSpec | None = None,
                 instanton: InstantonResult | None = None, max_step: float = 0.02):
        self.params = params
        self.system = HalfLineSystem(params, dx, kernel)
        self.instanton = instanton or compute_instanton(params.beta, params.kappa, dx,
                                                        kernel=self.system.kernel)
        self.branch = Continuation(self.system, self.instanton, max_step=max_step)
        self.evaluations: list[tuple[float, float]] = []

    @property
    def mu0(self) -> float:
        return self.instanton.at(self.params.epsilon ** -0.5)

    def solve(self, j: float) -> StationarySolution:
        return self.branch.solve(j)

    def __call__(self, j: float) -> float:
        nu = self.solve(j).report.nu
        self.evaluations.append((float(j), float(nu)))
        return nu


def boundary_value(j: float, params: ModelParams, dx: float = 0.05,
                   boundary_map: BoundaryMap | None = None) -> float:
    """Last-node value ``nu`` of the stationary solution carrying current ``j``."""
    bmap = boundary_map or BoundaryMap(params, dx)
    return bmap(j)


def _lipschitz(evals) -> float:
    best = 0.0
    for (j1, n1), (j2, n2) in zip(evals[:-1], evals[1:]):
        if j1 != j2:
            best = max(best, abs(n2 - n1) / abs(j2 - j1))
    return best


def solve_for_mu(mu: float, params: ModelParams, tol_shoot: float = 1e-6, dx: float = 0.05,
                 kernel: KernelSpec | None = None, instanton: InstantonResult | None = None,
                 max_bisections: int = 80) -> ShootingResult:
    """Bisection on ``j`` until ``|nu(j) - mu| <= tol_shoot``.

    The bracket starts at ``j_macro(mu0, mu) +- |j_macro|/2`` (``+-0.01``
    when ``j_macro`` vanishes) and each side that fails to straddle is
    doubled up to ``10 |j_macro|``.  An endpoint past the fold of the
    solution branch is replaced by bisection between it and the last
    solvable current.
    """
    from .model import spinodal_threshold

    if not spinodal_threshold(params.beta) + 0.01 < mu < 1.0 - 1e-4:
        raise ValueError("mu must lie in (m*(beta) + 0.01, 1 - 1e-4)")
    params = replace(params, mu=mu)
    bmap = BoundaryMap(params, dx, kernel, instanton)
    mu0 = bmap.mu0
    jm = macro_current(mu0, mu, params.beta)
    width = 0.5 * abs(jm) if abs(jm) > 1e-8 else 0.01
    cap = 10.0 * abs(jm) if abs(jm) > 1e-8 else 0.2

    def f(j):
        return bmap(j) - mu

    def find_end(sign):
        # nu decreases in j: the lower end needs f >= 0, the upper end f <= 0
        def ok(v):
            return v >= 0 if sign < 0 else v <= 0

        inside, w = jm, width
        while True:
            target = jm + sign * w
            try:
                v = f(target)
            except SolverError:
                # target lies past a fold: bisect between the last solvable point and it
                bad = target
                while abs(bad - inside) > 1e-9 * max(1.0, abs(jm)):
                    mid = 0.5 * (inside + bad)
                    try:
                        v = f(mid)
                    except SolverError:
                        bad = mid
                        continue
                    if ok(v):
                        return mid, v
                    inside = mid
                raise ShootingError(
                    f"nu(j) does not reach mu={mu} before the fold of the branch near j={bad:.6g}"
                ) from None
            if ok(v):
                return target, v
            inside = target
            w *= 2.0
            if w > cap:
                raise ShootingError("bracket expansion exceeded 10 |j_macro| without straddle")

    lo, f_lo = find_end(-1)
    hi, f_hi = find_end(+1)
    bracket = (lo, hi)
    if abs(f_lo) <= tol_shoot:
        j, fj = lo, f_lo
    elif abs(f_hi) <= tol_shoot:
        j, fj = hi, f_hi
    else:
        for _ in range(max_bisections):
            j = 0.5 * (lo + hi)
            fj = f(j)
            if abs(fj) <= tol_shoot:
                break
            if fj > 0:
                lo, f_lo = j, fj
            else:
                hi, f_hi = j, fj
        else:
            raise ShootingError(f"bisection did not reach |nu - mu| <= {tol_shoot}")
        bracket = (lo, hi)
    sol = bmap.solve(j)
    return ShootingResult(
        mu_target=mu, j_solution=j, nu_achieved=sol.report.nu, bracket=bracket,
        j_macro=jm, mu0=mu0, evaluations=list(bmap.evaluations),
        lipschitz_estimate=_lipschitz(bmap.evaluations), solution=sol,
    )


@dataclass
class SweepEntry:
    kappa: float
    j: float
    nu: float
    residual: float
    result: ShootingResult | None = field(default=None, repr=False)


def uphill_lower_bound(mu: float, beta: float) -> float:
    """Half of ``g(mu) - g(m_beta)``, the kappa-independent floor for ``j``."""
    return 0.5 * macro_current(mean_field_root(beta, 0.0), mu, beta)


def kappa_sweep(kappa_list, mu: float, params: ModelParams, tol_shoot: float = 1e-6,
                dx: float = 0.05) -> list[SweepEntry]:
    """Shooting solutions at each ``kappa`` (input order kept)."""
    m_beta = mean_field_root(params.beta, 0.0)
    from .model import spinodal_threshold

    if not spinodal_threshold(params.beta) < mu < m_beta:
        raise ValueError(f"sweep needs mu in (m*(beta), m_beta) = "
                         f"({spinodal_threshold(params.beta):.6f}, {m_beta:.6f})")
    out = []
    for kappa in kappa_list:
        if kappa < 0.005:
            raise ValueError(f"kappa={kappa} below the resolvable floor 0.005")
        res = solve_for_mu(mu, replace(params, kappa=float(kappa)), tol_shoot, dx)
        out.append(SweepEntry(kappa=float(kappa), j=res.j_solution, nu=res.nu_achieved,
                              residual=res.residual, result=res))
    return out
