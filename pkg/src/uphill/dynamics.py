"""Conservative gradient dynamics on the full interval, used as an oracle.

    dm/dt = -dI/dx,    I = -chi_beta(m) d h_tilde/dx,
    h_tilde = arctanh(m)/beta - h_ext - J_b * m,

discretized by finite volumes: nodes are cell centres and ``I`` lives on
the ``N + 1`` cell faces.  The face mobility is the harmonic mean of the
two adjacent nodal values, so that a steady state carrying current
``I = j eps`` has exactly the field increments ``-j eps dx (c_i + c_{i+1})/2``
(``c = 1/chi``) used by the stationary solver.

The two outer faces are closed in one of three ways:

``"flux"``
    the prescribed current ``j eps`` enters on the left and leaves on the right;
``"reservoir"``
    one-sided difference to the reservoir value of ``h_tilde`` half a cell
    beyond the edge;
``"closed"``
    zero flux.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .grid import KernelSpec, build_grid, convolve_boundary, get_kernel, kernel_weights
from .model import ARCTANH_CLAMP, ModelParams, free_energy, safe_arctanh

CLOSURES = ("flux", "reservoir", "closed")
C_STAB = 0.1


class DynamicsError(RuntimeError):
    pass


@dataclass
class DynamicsState:
    m: np.ndarray
    t: float = 0.0
    dt: float = math.nan
    flux: np.ndarray | None = None
    dt_max: float = math.nan
    clamped: bool = False


class DynamicsProblem:
    """Parameters, discretization and boundary closure of the evolution."""

    def __init__(self, params: ModelParams, j: float = 0.0, dx: float = 0.05,
                 closure: str = "flux", kernel: KernelSpec | None = None):
        if closure not in CLOSURES:
            raise ValueError(f"closure must be one of {CLOSURES}, got {closure!r}")
        self.params = params
        self.j = j
        self.closure = closure
        self.grid = build_grid(params.epsilon, dx)
        self.weights = kernel_weights(kernel or get_kernel(), self.grid)
        self.boundary = self.weights.boundary_mass()
        self.W = self.weights.matrix()
        self.h_ext = params.kappa * np.sign(self.grid.nodes)
        N = self.grid.size
        self._diff = sparse.diags([-np.ones(N - 1), np.ones(N - 1)], [0, 1], shape=(N - 1, N),
                                  format="csr")
        self._div = sparse.diags([-np.ones(N), np.ones(N)], [0, 1], shape=(N, N + 1),
                                 format="csr") / dx

    @property
    def dx(self) -> float:
        return self.grid.dx

    @property
    def explicit_dt_max(self) -> float:
        return C_STAB * self.dx ** 2

    @property
    def h_reservoir(self) -> float:
        """``h_tilde`` deep inside the right reservoir (the left one is its negative)."""
        p = self.params
        return math.atanh(p.mu) / p.beta - p.kappa - p.mu

    def h_tilde(self, m) -> tuple[np.ndarray, bool]:
        p = self.params
        at, clamped = safe_arctanh(m)
        conv = convolve_boundary(self.weights, self.boundary, m, p.mu, -p.mu)
        return at / p.beta - self.h_ext - conv, clamped

    def _chi(self, m):
        return self.params.beta * (1.0 - m * m)

    def flux(self, m) -> np.ndarray:
        """Current on the ``N + 1`` faces."""
        m = np.asarray(m, dtype=float)
        ht, _ = self.h_tilde(m)
        chi = self._chi(m)
        dx = self.dx
        out = np.empty(m.size + 1)
        out[1:-1] = -_harmonic(chi[:-1], chi[1:]) * np.diff(ht) / dx
        if self.closure == "flux":
            out[0] = out[-1] = self.j * self.params.epsilon
        elif self.closure == "closed":
            out[0] = out[-1] = 0.0
        else:
            chi_res = self._chi(self.params.mu)
            hr = self.h_reservoir
            out[-1] = -_harmonic(chi[-1], chi_res) * (hr - ht[-1]) / (0.5 * dx)
            out[0] = -_harmonic(chi_res, chi[0]) * (ht[0] + hr) / (0.5 * dx)
        return out

    def rate(self, m) -> np.ndarray:
        """``dm/dt = -(I_{i+1/2} - I_{i-1/2}) / dx``."""
        return -(self._div @ self.flux(m))

    def flux_jacobian(self, m) -> sparse.csr_matrix:
        """``dI/dm`` as an ``(N + 1) x N`` sparse matrix."""
        p = self.params
        m = np.asarray(m, dtype=float)
        N, dx = m.size, self.dx
        ht, _ = self.h_tilde(m)
        chi = self._chi(m)
        dchi = -2.0 * p.beta * m
        a = 1.0 / (p.beta * (1.0 - np.clip(m * m, 0.0, 1.0 - ARCTANH_CLAMP)))
        dht = (sparse.diags(a) - self.W).tocsr()
        cl, cr = chi[:-1], chi[1:]
        cbar = _harmonic(cl, cr)
        dl = 2.0 * cr ** 2 / (cl + cr) ** 2 * dchi[:-1]
        dr = 2.0 * cl ** 2 / (cl + cr) ** 2 * dchi[1:]
        g = np.diff(ht) / dx
        interior = (-sparse.diags(cbar / dx) @ self._diff @ dht
                    - sparse.diags(g) @ sparse.diags([dl, dr], [0, 1], shape=(N - 1, N)))
        top = sparse.csr_matrix((1, N))
        bottom = sparse.csr_matrix((1, N))
        if self.closure == "reservoir":
            chi_res = self._chi(p.mu)
            hr = self.h_reservoir
            h2 = 0.5 * dx
            cR = _harmonic(chi[-1], chi_res)
            dcR = 2.0 * chi_res ** 2 / (chi[-1] + chi_res) ** 2 * dchi[-1]
            row = cR / h2 * dht[N - 1]
            row = row.tolil()
            row[0, N - 1] -= (hr - ht[-1]) / h2 * dcR
            bottom = row.tocsr()
            cL = _harmonic(chi_res, chi[0])
            dcL = 2.0 * chi_res ** 2 / (chi[0] + chi_res) ** 2 * dchi[0]
            row = (-cL / h2 * dht[0]).tolil()
            row[0, 0] -= (ht[0] + hr) / h2 * dcL
            top = row.tocsr()
        return sparse.vstack([top, interior, bottom]).tocsr()

    def free_energy(self, m) -> float:
        return free_energy(m, self.h_ext, self.params.mu, self.weights, self.params.beta)


def _harmonic(a, b):
    return 2.0 * a * b / (a + b)


def flux(m, problem: DynamicsProblem) -> np.ndarray:
    """Face currents of the profile ``m`` under ``problem``'s closure."""
    return problem.flux(m)


def step(state: DynamicsState, problem: DynamicsProblem, dt: float | None = None) -> DynamicsState:
    """One explicit finite-volume step; ``dt`` defaults to ``0.1 dx^2``."""
    dt_max = problem.explicit_dt_max
    dt = dt_max if dt is None else dt
    if dt > dt_max * (1 + 1e-12):
        raise ValueError(f"dt={dt} exceeds the explicit bound {dt_max}")
    I = problem.flux(state.m)
    m = state.m - dt * (I[1:] - I[:-1]) / problem.dx
    if not np.all(np.isfinite(m)) or np.max(np.abs(m)) >= 1.0 - ARCTANH_CLAMP:
        raise DynamicsError(f"profile left (-1, 1) at t={state.t + dt}")
    return DynamicsState(m=m, t=state.t + dt, dt=dt, flux=I, dt_max=dt_max)


def implicit_step(state: DynamicsState, problem: DynamicsProblem, dt: float,
                  tol: float = 1e-13, max_newton: int = 12) -> tuple[DynamicsState, int]:
    """Backward Euler step solved by Newton; returns the state and the Newton count."""
    m_old = state.m
    m = m_old.copy()
    N = m.size
    eye = sparse.identity(N, format="csr")
    for k in range(1, max_newton + 1):
        G = m - m_old - dt * problem.rate(m)
        Jg = (eye + dt * (problem._div @ problem.flux_jacobian(m))).tocsc()
        delta = spsolve(Jg, -G)
        if not np.all(np.isfinite(delta)):
            raise DynamicsError("singular Jacobian in implicit step")
        m = m + delta
        if np.max(np.abs(m)) >= 1.0 - ARCTANH_CLAMP:
            raise DynamicsError("implicit iterate left (-1, 1)")
        if np.max(np.abs(delta)) <= tol:
            break
    else:
        raise DynamicsError("Newton did not converge in the implicit step")
    return DynamicsState(m=m, t=state.t + dt, dt=dt, flux=problem.flux(m),
                         dt_max=problem.explicit_dt_max), k


@dataclass
class RelaxResult:
    m: np.ndarray
    flux: np.ndarray
    t: float
    steps: int
    converged: bool
    rate: float
    times: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    rates: list = field(default_factory=list)

    def energy_increases(self, slack: float = 0.0) -> list:
        """Checkpoint indices where the free energy went up by more than ``slack``."""
        e = np.asarray(self.energies)
        return [int(i) + 1 for i in np.nonzero(np.diff(e) > slack)[0]]


def relax(problem: DynamicsProblem, init, t_max: float = 1e9, tol: float = 1e-10,
          dt0: float = 1e-2, dt_growth: float = 2.0, dt_ceiling: float = 1e8,
          max_steps: int = 10_000) -> RelaxResult:
    """Evolve to a steady state ``sup |dm/dt| <= tol`` with adaptive backward Euler.

    The step doubles after every easy Newton solve and halves after a
    failed one.  The free energy is recorded after every accepted step.
    """
    m = np.array(init, dtype=float)
    if m.shape != (problem.grid.size,):
        raise ValueError("initial profile does not match the grid")
    state = DynamicsState(m=m, t=0.0, dt=dt0, flux=problem.flux(m),
                          dt_max=problem.explicit_dt_max)
    r = float(np.max(np.abs(problem.rate(m))))
    out = RelaxResult(m=m, flux=state.flux, t=0.0, steps=0, converged=r <= tol, rate=r,
                      times=[0.0], energies=[problem.free_energy(m)], rates=[r])
    dt = dt0
    steps = 0
    while not out.converged and state.t < t_max and steps < max_steps:
        try:
            new, its = implicit_step(state, problem, min(dt, t_max - state.t))
        except DynamicsError:
            dt *= 0.5
            if dt < 1e-12:
                raise
            continue
        steps += 1
        state = new
        r = float(np.max(np.abs(problem.rate(state.m))))
        out.times.append(state.t)
        out.energies.append(problem.free_energy(state.m))
        out.rates.append(r)
        out.converged = r <= tol
        if its <= 4:
            dt = min(dt * dt_growth, dt_ceiling)
    out.m, out.flux, out.t, out.steps, out.rate = state.m, state.flux, state.t, steps, r
    return out


def perturb(m, amplitude: float = 0.05, seed: int = 0, clip: float = 0.995) -> np.ndarray:
    """Odd uniform noise ``amplitude * U(-1, 1)`` added node-wise, clipped to ``|m| <= clip``."""
    m = np.asarray(m, dtype=float)
    rng = np.random.default_rng(seed)
    half = m.size // 2
    noise = amplitude * rng.uniform(-1.0, 1.0, half)
    out = m + np.concatenate([-noise[::-1], noise])
    return np.clip(out, -clip, clip)
