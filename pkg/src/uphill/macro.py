"""Macroscopic outer profile on ``[eps^{-1/2}, eps^{-1}]``.

In the macroscopic variable ``r in [0, 1]`` the stationary profile obeys

    j r = g(m(r)) - g(mu0),    g(m) = (beta - 1) m - (beta / 3) m^3,

with ``m(0) = mu0`` and ``m(1) = mu``.  Above the spinodal ``g`` is strictly
decreasing, so each ``r`` has a single root between ``mu0`` and ``mu``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .grid import Grid
from .model import spinodal_threshold


def g_cubic(m, beta: float):
    m = np.asarray(m, dtype=float)
    out = (beta - 1.0) * m - beta / 3.0 * m ** 3
    return out if out.ndim else float(out)


def _check_metastable(beta: float, *values):
    ms = spinodal_threshold(beta)
    for v in values:
        if not ms < v < 1.0:
            raise ValueError(f"magnetization {v} must lie in (m*(beta), 1) = ({ms:.6f}, 1)")


def macro_current(mu0: float, mu: float, beta: float) -> float:
    """``j_macro = g(mu) - g(mu0)``; positive (uphill) when ``mu < mu0``."""
    _check_metastable(beta, mu0, mu)
    return (beta - 1.0) * (mu - mu0) - beta / 3.0 * (mu ** 3 - mu0 ** 3)


@dataclass
class MacroProfile:
    mu0: float
    mu: float
    beta: float
    j_macro: float
    r: np.ndarray
    m: np.ndarray

    def relation_residual(self) -> np.ndarray:
        """``j r - [g(m(r)) - g(mu0)]`` at every grid point."""
        return self.j_macro * self.r - (g_cubic(self.m, self.beta) - g_cubic(self.mu0, self.beta))

    def slope(self, m=None):
        """``dm/dr = -j / (1 - chi_beta(m))`` evaluated on the profile (or at ``m``)."""
        m = self.m if m is None else np.asarray(m, dtype=float)
        return -self.j_macro / (1.0 - self.beta * (1.0 - m * m))

    def __call__(self, r):
        return PchipInterpolator(self.r, self.m)(r)


def solve_relation(target, mu0: float, mu: float, beta: float, iters: int = 200) -> np.ndarray:
    """Vectorized bisection for ``g(m) - g(mu0) = target`` with ``m`` between ``mu0`` and ``mu``."""
    target = np.asarray(target, dtype=float)
    lo = np.full(target.shape, min(mu0, mu))
    hi = np.full(target.shape, max(mu0, mu))
    g0 = g_cubic(mu0, beta)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        # g is decreasing: g(mid) - g0 > target means the root lies above mid
        above = g_cubic(mid, beta) - g0 > target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all(hi - lo <= 4e-16):
            break
    return 0.5 * (lo + hi)


def macro_profile(mu0: float, mu: float, beta: float, n_points: int = 101) -> MacroProfile:
    """Profile on ``n_points`` uniform ``r`` values in ``[0, 1]``."""
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    j = macro_current(mu0, mu, beta)
    r = np.linspace(0.0, 1.0, n_points)
    m = solve_relation(j * r, mu0, mu, beta)
    m[0], m[-1] = mu0, mu
    prof = MacroProfile(mu0=mu0, mu=mu, beta=beta, j_macro=j, r=r, m=m)
    res = np.max(np.abs(prof.relation_residual()))
    assert res <= 1e-12, f"macro relation residual {res}"
    return prof


def meso_to_macro(x, epsilon: float):
    """``r(x) = (eps x - sqrt(eps)) / (1 - sqrt(eps))``."""
    se = np.sqrt(epsilon)
    return (epsilon * np.asarray(x, dtype=float) - se) / (1.0 - se)


def rescale_to_meso(macro: MacroProfile, epsilon: float, grid: Grid | np.ndarray) -> np.ndarray:
    """Macro profile sampled at mesoscopic nodes in ``(eps^{-1/2}, eps^{-1}]``.

    ``grid`` may be a :class:`Grid` (all of its nodes in the window are used)
    or an explicit array of coordinates, each of which must lie in the window.
    Values come from an exact per-node solve of the cubic relation.
    """
    lo, hi = epsilon ** -0.5, 1.0 / epsilon
    if isinstance(grid, Grid):
        x = grid.nodes
        x = x[(x > lo) & (x <= hi)]
    else:
        x = np.asarray(grid, dtype=float)
        if np.any(x < lo - 1e-12) or np.any(x > hi + 1e-12):
            raise ValueError(f"nodes must lie in ({lo}, {hi}]")
    r = np.clip(meso_to_macro(x, epsilon), 0.0, 1.0)
    return solve_relation(macro.j_macro * r, macro.mu0, macro.mu, macro.beta)
