"""Thermodynamic scalars of the mean-field model and the free-energy functional."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, KernelWeights, convolve

ARCTANH_CLAMP = 1e-12


def spinodal_threshold(beta: float) -> float:
    """``m*(beta) = sqrt(1 - 1/beta)``."""
    if not beta > 1.0:
        raise ValueError(f"beta must exceed 1, got {beta}")
    return math.sqrt(1.0 - 1.0 / beta)


def entropy(m):
    """Binary entropy of a spin with mean ``m``; zero at ``|m| = 1``."""
    m = np.asarray(m, dtype=float)
    if np.any(np.abs(m) > 1.0):
        raise ValueError("entropy is defined for |m| <= 1")
    a = (1.0 + m) / 2.0
    b = (1.0 - m) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        s = -np.where(a > 0, a * np.log(a), 0.0) - np.where(b > 0, b * np.log(b), 0.0)
    return s if s.ndim else float(s)


def susceptibility(m, beta: float):
    """``chi_beta(m) = beta (1 - m^2)``."""
    m = np.asarray(m, dtype=float)
    out = beta * (1.0 - m * m)
    return out if out.ndim else float(out)


def safe_arctanh(m, clamp: float = ARCTANH_CLAMP):
    """``arctanh`` with ``|m|`` clamped to ``1 - clamp``; returns ``(value, clamped)``."""
    m = np.asarray(m, dtype=float)
    lim = 1.0 - clamp
    clamped = bool(np.any(np.abs(m) > lim))
    return np.arctanh(np.clip(m, -lim, lim)), clamped


def mean_field_root(beta: float, kappa: float = 0.0, tol: float = 1e-12) -> float:
    """Positive root of ``m = tanh(beta (m + kappa))`` by bisection.

    For ``beta > 1`` the map ``m - tanh(beta (m + kappa))`` is negative on
    ``[m*(beta), root)`` and positive up to 1, so ``[m*(beta), 1]`` always
    brackets the root.
    """
    if not beta > 1.0:
        raise ValueError(f"beta must exceed 1, got {beta}")
    if kappa < 0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")

    def f(m):
        return m - math.tanh(beta * (m + kappa))

    lo, hi = spinodal_threshold(beta), 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    root = lo if abs(f(lo)) <= abs(f(hi)) else hi
    assert abs(f(root)) <= tol, (beta, kappa, f(root))
    return root


@dataclass(frozen=True)
class DerivedScalars:
    m_star: float
    m_beta: float
    m_beta_kappa: float


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters: inverse temperature, field strength, inverse half-length, reservoir value."""

    beta: float = 2.0
    kappa: float = 0.1
    epsilon: float = 0.02
    mu: float = 0.8

    def __post_init__(self):
        errors = validate_params(self.beta, self.kappa, self.epsilon, self.mu)
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def derived(self) -> DerivedScalars:
        return DerivedScalars(
            m_star=spinodal_threshold(self.beta),
            m_beta=mean_field_root(self.beta, 0.0),
            m_beta_kappa=mean_field_root(self.beta, self.kappa),
        )


def validate_params(beta, kappa, epsilon, mu) -> list[str]:
    """Every violated parameter constraint, as messages."""
    errors = []
    if not beta > 1.0:
        errors.append("beta must exceed 1")
    if not kappa >= 0.0:
        errors.append("kappa must be >= 0")
    if not 0.0 < epsilon < 1.0:
        errors.append("epsilon must lie in (0, 1)")
    if beta > 1.0:
        ms = spinodal_threshold(beta)
        if not ms < mu < 1.0:
            errors.append(f"mu must lie in (m*(beta), 1) = ({ms:.4f}, 1)")
    return errors


def free_energy(m, h_ext, mu: float, weights: KernelWeights, beta: float) -> float:
    """Midpoint-quadrature value of the Ginzburg-Landau functional with ``+-mu`` reservoirs.

    ``m`` and ``h_ext`` are sampled on ``weights.grid``; the reservoirs sit
    at ``-mu`` on the left and ``+mu`` on the right.
    """
    grid: Grid = weights.grid
    m = np.asarray(m, dtype=float)
    h_ext = np.asarray(h_ext, dtype=float)
    if m.shape != (grid.size,) or h_ext.shape != (grid.size,):
        raise ValueError("profile, field and grid sizes differ")
    bm = weights.boundary_mass()
    dx = grid.dx
    local = -entropy(m) / beta - h_ext * m
    pair = -0.5 * m * convolve(weights, m)
    reservoir = -m * (bm.plus * mu - bm.minus * mu)
    return float(np.sum(local + pair + reservoir) * dx)
