"""Linearization at the instanton and the sup diagnostics of the first iterate.

``A^(kappa) = p^(kappa)(x) J(x, y)`` with ``p^(kappa) = beta (1 - m^(kappa)^2)``
is entrywise nonnegative, so power iteration from a positive vector picks
out its Perron pair.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.ndimage import minimum_filter1d

from .grid import KernelSpec, get_kernel, kernel_weights
from .instanton import InstantonResult
from .model import mean_field_root
from .stationary import HalfLineSystem, OperatorMatrix


def build_A_kappa(instanton: InstantonResult, kernel: KernelSpec | None = None) -> OperatorMatrix:
    """``p^(kappa)(x_i) w_ij`` on the auxiliary grid, zero outside ``[-L, L]``."""
    kernel = kernel or get_kernel()
    w = kernel_weights(kernel, instanton.grid)
    m = instanton.profile
    p = instanton.beta * (1.0 - m * m)
    return OperatorMatrix(p=p, base=w.matrix(), lower=w.band, upper=w.band)


@dataclass
class SpectralResult:
    lam: float
    eigvec: np.ndarray = field(repr=False)
    iterations: int
    converged: bool
    last_gap: float
    residual: float
    bound_quadratic: float = math.nan
    margin: float = math.nan
    satisfied: bool | None = None


def _matvec(A):
    if isinstance(A, OperatorMatrix):
        return A.matvec
    if sparse.issparse(A):
        return lambda v: A @ v
    A = np.asarray(A, dtype=float)
    return lambda v: A @ v


def power_iteration(A, tol: float = 1e-12, max_iter: int = 100_000) -> SpectralResult:
    """Rayleigh-quotient power iteration from the all-ones vector.

    The eigenvector is normalized to sup-norm one.  Non-convergence is
    reported through ``converged=False`` together with the last gap.
    """
    mv = _matvec(A)
    n = A.base.shape[0] if isinstance(A, OperatorMatrix) else A.shape[0]
    v = np.ones(n)
    lam_old, gap = math.nan, math.inf
    k = 0
    for k in range(1, max_iter + 1):
        w = mv(v)
        lam = float(v @ w / (v @ v))
        top = float(np.max(np.abs(w)))
        if top == 0.0:
            return SpectralResult(0.0, v, k, True, 0.0, 0.0)
        v = w / top
        gap = abs(lam - lam_old)
        if gap <= tol:
            break
        lam_old = lam
    w = mv(v)
    lam = float(v @ w / (v @ v))
    residual = float(np.max(np.abs(w - lam * v)))
    return SpectralResult(lam=lam, eigvec=v, iterations=k, converged=gap <= tol,
                          last_gap=gap, residual=residual)


def quadratic_bound(beta: float, kappa: float) -> float:
    """``1 - kappa tanh(beta kappa) (1 - m_{beta,kappa}^2)``."""
    mbk = mean_field_root(beta, kappa)
    return 1.0 - kappa * math.tanh(beta * kappa) * (1.0 - mbk * mbk)


def eta_kappa(beta: float, kappa: float) -> float:
    """``1 - beta kappa tanh(beta kappa) (1 - m_{beta,kappa}^2)``, the small-eps limit of eta0."""
    mbk = mean_field_root(beta, kappa)
    return 1.0 - beta * kappa * math.tanh(beta * kappa) * (1.0 - mbk * mbk)


def linear_bound(beta: float, kappa: float, delta: float, instanton_zero: InstantonResult) -> float:
    """``1 - (kappa/2) m_bar(delta) (1 - m_{beta,kappa}^2)`` for a user-chosen ``delta``.

    Reported only; ``delta`` is left unquantified by the theory.
    """
    mbk = mean_field_root(beta, kappa)
    return 1.0 - 0.5 * kappa * instanton_zero.at(delta) * (1.0 - mbk * mbk)


def check_eigen_bound(result: SpectralResult, beta: float, kappa: float,
                      tolerance: float = 1e-3) -> tuple[bool, float]:
    """Compare ``lambda`` with the quadratic bound; returns ``(satisfied, margin)``."""
    bound = quadratic_bound(beta, kappa)
    margin = bound - result.lam
    result.bound_quadratic = bound
    result.margin = margin
    result.satisfied = bool(margin >= -tolerance)
    return result.satisfied, margin


def spectral_analysis(instanton: InstantonResult, tol: float = 1e-12,
                      tolerance: float = 1e-3) -> SpectralResult:
    res = power_iteration(build_A_kappa(instanton), tol=tol)
    check_eigen_bound(res, instanton.beta, instanton.kappa, tolerance)
    return res


@dataclass
class DiagnosticsBundle:
    eta0: float
    pi0: float
    gamma0: float
    eta0_pointwise: float
    eta_kappa: float
    argmax_eta0: float = math.nan

    def as_dict(self) -> dict:
        return {"eta0": self.eta0, "pi0": self.pi0, "gamma0": self.gamma0,
                "eta0_pointwise": self.eta0_pointwise, "eta_kappa": self.eta_kappa,
                "argmax_eta0": self.argmax_eta0}


def compute_diagnostics(m0, h0, instanton_zero: InstantonResult,
                        system: HalfLineSystem) -> DiagnosticsBundle:
    """``eta0``, ``pi0`` and ``gamma0`` for ``p_{m0,h0}``.

    ``eta0 = sup p_{m0,h0}(x) / p_bar(y)`` over ``|x| < eps^{-1/2}``,
    ``|y - x| <= 1``; ``pi0 = sup p_{m0,h0}(x)`` over
    ``eps^{-1/2}/2 <= |x| <= eps^{-1}``.  Both profiles are odd, so the gains
    are even and the positive half suffices.  ``eta0_pointwise`` restricts
    to ``y = x``, the comparison the limit ``eta_kappa`` is built on.
    """
    params = system.params
    eps = params.epsilon
    if instanton_zero.kappa != 0.0 or instanton_zero.grid.dx != system.dx:
        raise ValueError("need the kappa = 0 instanton on a grid with the solver's dx")
    h0 = getattr(h0, "values", h0)
    p = system.gain(np.asarray(m0, dtype=float), np.asarray(h0, dtype=float))
    x = system.x
    m_bar = instanton_zero.profile
    p_bar = instanton_zero.beta * (1.0 - m_bar * m_bar)
    n = system.band
    # min of p_bar over the window |y - x| <= 1 (n nodes each side), aligned to positive nodes
    win_min = minimum_filter1d(p_bar, size=2 * n + 1, mode="nearest")
    half = instanton_zero.grid.half_size
    inner = x < eps ** -0.5
    k = int(inner.sum())
    if half < k + n:
        raise ValueError("kappa = 0 instanton grid too short for the eta0 window")
    ratio = p[:k] / win_min[half:half + k]
    i = int(np.argmax(ratio))
    eta0 = float(ratio[i])
    eta_pt = float(np.max(p[:k] / p_bar[half:half + k]))
    outer = (x >= 0.5 * eps ** -0.5) & (x <= 1.0 / eps)
    pi0 = float(np.max(p[outer]))
    return DiagnosticsBundle(eta0=eta0, pi0=pi0, gamma0=max(eta0, pi0), eta0_pointwise=eta_pt,
                             eta_kappa=eta_kappa(params.beta, params.kappa),
                             argmax_eta0=float(x[i]))
