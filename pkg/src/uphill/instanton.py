"""Infinite-volume instanton under a Heaviside field, built by relaxing the semigroup.

The profile is evolved with explicit Euler steps of

    dm/dt = -m + tanh(beta [(J * m)(x) + kappa sign(x)])

on the positive half of a large auxiliary grid ``[-L, L]``.  The negative
half is always the odd reflection, so antisymmetry holds exactly.  Kernel
mass falling beyond ``+-L`` sees the value of the outermost node.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .grid import Grid, KernelSpec, KernelWeights, correlate_padded, get_kernel, kernel_weights
from .model import mean_field_root


def _half_convolve(half: np.ndarray, stencil: np.ndarray) -> np.ndarray:
    n = (stencil.size - 1) // 2
    return correlate_padded(half, stencil, -half[:n][::-1], half[-1])


def tail_rate_estimate(beta: float, kappa: float, stencil: np.ndarray, dx: float) -> float:
    """Decay rate of the linearization about the plateau ``m_{beta,kappa}``.

    Solves ``p sum_k s_k exp(theta k dx) = 1`` with ``p = beta (1 - m^2)``,
    the discrete characteristic equation of ``delta = p J * delta``.
    """
    m = mean_field_root(beta, kappa)
    p = beta * (1.0 - m * m)
    n = (stencil.size - 1) // 2
    k = np.arange(-n, n + 1) * dx

    def f(theta):
        return p * np.sum(stencil * np.cosh(theta * k)) - 1.0

    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
    return optimize.brentq(f, 0.0, hi, xtol=1e-14)


def initial_condition(beta: float, kappa: float, grid: Grid) -> np.ndarray:
    """Odd ramp ``x m_{beta,kappa}`` on ``[0, 1]`` with plateau ``m_{beta,kappa}`` beyond."""
    mbk = mean_field_root(beta, kappa)
    x = grid.nodes
    return np.sign(x) * mbk * np.minimum(np.abs(x), 1.0)


@dataclass
class TailFit:
    prefactor: float
    rate: float
    residual: float
    fittable: bool = True
    window: tuple[float, float] = (math.nan, math.nan)


def fit_tail(x, profile, m_limit: float, lo: float = 1e-12, hi: float = 1e-3,
             floor: float = 1e-14) -> TailFit:
    """Least-squares fit of ``log|m_limit - m(x)| = log c - theta x`` on ``x > 0``.

    The window keeps the points whose gap lies in ``[lo, hi]``; gaps under
    ``floor`` are treated as numerical zero.  Fewer than three usable
    points yields ``fittable=False``.
    """
    x = np.asarray(x, dtype=float)
    gap = np.abs(m_limit - np.asarray(profile, dtype=float))
    sel = (x > 0) & (gap >= max(lo, floor)) & (gap <= hi)
    if sel.sum() < 3:
        return TailFit(math.nan, math.nan, math.nan, fittable=False)
    xs, ys = x[sel], np.log(gap[sel])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    return TailFit(prefactor=math.exp(intercept), rate=-slope,
                   residual=float(np.sqrt(np.mean(resid ** 2))),
                   fittable=bool(-slope > 0), window=(float(xs[0]), float(xs[-1])))


@dataclass
class InstantonResult:
    grid: Grid
    profile: np.ndarray
    beta: float
    kappa: float
    m_beta_kappa: float
    origin_limit: float
    origin_extrapolated: float
    tail: TailFit
    converged: bool
    residual: float
    time: float
    steps: int
    history: list = field(default_factory=list, repr=False)

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def half(self) -> np.ndarray:
        return self.profile[self.grid.half_size:]

    @property
    def plateau(self) -> float:
        return float(self.profile[-1])

    @property
    def decay_rate(self) -> float:
        return self.tail.rate

    @property
    def decay_prefactor(self) -> float:
        return self.tail.prefactor

    def fixed_point_residual(self, weights: KernelWeights | None = None) -> float:
        weights = weights or kernel_weights(get_kernel(), self.grid)
        h = self.half
        rhs = np.tanh(self.beta * (_half_convolve(h, weights.stencil) + self.kappa))
        return float(np.max(np.abs(rhs - h)))

    def at(self, x: float) -> float:
        """Monotone cubic interpolation of the profile."""
        from scipy.interpolate import PchipInterpolator

        if x <= 0:
            return -self.at(-x)
        xs = self.grid.positive_nodes
        return float(PchipInterpolator(xs, self.half)(x))


def _step_half(half, beta, kappa, stencil, dt):
    drift = -half + np.tanh(beta * (_half_convolve(half, stencil) + kappa))
    return half + dt * drift, drift


def semigroup(init, beta: float, kappa: float, weights: KernelWeights, t: float,
              dt: float = 0.5) -> np.ndarray:
    """``S_t m`` for an odd initial profile on ``weights.grid`` (``t`` a multiple of ``dt``)."""
    grid = weights.grid
    half = np.array(np.asarray(init, dtype=float)[grid.half_size:])
    steps = int(round(t / dt))
    if abs(steps * dt - t) > 1e-9 * max(1.0, t):
        raise ValueError("t must be a multiple of dt")
    for _ in range(steps):
        half, _ = _step_half(half, beta, kappa, weights.stencil, dt)
    return np.concatenate([-half[::-1], half])


def evolve_semigroup(init, beta: float, kappa: float, weights: KernelWeights,
                     dt: float = 0.5, t_max: float = 1e5, tol: float = 1e-10,
                     check_every: int = 50) -> InstantonResult:
    """Relax ``init`` under the semigroup until ``sup |dm/dt| <= tol``.

    Non-convergence within ``t_max`` is reported through ``converged=False``.
    Monotonicity in ``x`` is asserted every ``check_every`` steps.
    """
    if not 0.0 < dt <= 1.0:
        raise ValueError(f"dt must lie in (0, 1], got {dt}")
    grid = weights.grid
    init = np.asarray(init, dtype=float)
    half = np.array(init[grid.half_size:])
    if not np.allclose(init[:grid.half_size], -half[::-1], atol=1e-14):
        raise ValueError("initial profile must be antisymmetric")
    rate = math.inf
    steps, t = 0, 0.0
    history = []
    while t < t_max:
        half, drift = _step_half(half, beta, kappa, weights.stencil, dt)
        steps += 1
        t += dt
        rate = float(np.max(np.abs(drift)))
        if steps % check_every == 0:
            history.append((t, rate))
            if np.any(np.diff(half) < -1e-12):
                raise AssertionError(f"monotonicity lost at t={t}")
        if rate <= tol:
            break
    profile = np.concatenate([-half[::-1], half])
    mbk = mean_field_root(beta, kappa)
    x = grid.nodes
    tail = fit_tail(x, profile, mbk)
    return InstantonResult(
        grid=grid, profile=profile, beta=beta, kappa=kappa, m_beta_kappa=mbk,
        origin_limit=float(half[0]),
        origin_extrapolated=float(1.5 * half[0] - 0.5 * half[1]),
        tail=tail, converged=rate <= tol, residual=rate, time=t, steps=steps,
        history=history,
    )


def auxiliary_grid(beta: float, kappa: float, dx: float, kernel: KernelSpec | None = None,
                   min_length: float = 20.0) -> Grid:
    """Grid ``[-L, L]`` with ``L = max(min_length, 4/theta)`` rounded up to a whole unit."""
    kernel = kernel or get_kernel()
    from .grid import kernel_stencil

    theta = tail_rate_estimate(beta, kappa, kernel_stencil(kernel, dx), dx)
    L = max(min_length, math.ceil(4.0 / theta))
    return Grid(half_length=float(L), dx=dx)


def compute_instanton(beta: float, kappa: float, dx: float = 0.05, tol: float = 1e-10,
                      dt: float = 0.5, kernel: KernelSpec | None = None,
                      min_length: float = 20.0) -> InstantonResult:
    """Instanton ``m^(kappa)`` from the ramp initial condition."""
    kernel = kernel or get_kernel()
    grid = auxiliary_grid(beta, kappa, dx, kernel, min_length)
    weights = kernel_weights(kernel, grid)
    return evolve_semigroup(initial_condition(beta, kappa, grid), beta, kappa, weights,
                            dt=dt, tol=tol)


def _is_odd_nondecreasing(m, grid: Grid) -> bool:
    h = m[grid.half_size:]
    return (np.allclose(m[:grid.half_size], -h[::-1], atol=1e-14)
            and bool(np.all(np.diff(m) >= -1e-14)))


def comparison_check(m_low, m_high, beta: float, kappa: float, weights: KernelWeights,
                     t_probe: float, dt: float = 0.5, slack: float = 1e-10) -> bool:
    """Does ``S_t m_high >= S_t m_low`` persist on ``x >= 0`` after ``t_probe``?"""
    grid = weights.grid
    m_low = np.asarray(m_low, dtype=float)
    m_high = np.asarray(m_high, dtype=float)
    if not (_is_odd_nondecreasing(m_low, grid) and _is_odd_nondecreasing(m_high, grid)):
        raise ValueError("inputs must be antisymmetric and nondecreasing")
    pos = grid.nodes > 0
    if np.any(m_high[pos] < m_low[pos]):
        raise ValueError("m_high must dominate m_low on x >= 0")
    lo = semigroup(m_low, beta, kappa, weights, t_probe, dt)
    hi = semigroup(m_high, beta, kappa, weights, t_probe, dt)
    return bool(np.all(hi[pos] - lo[pos] >= -slack))


def ordering_bound_constant(beta: float, kappa: float) -> float:
    """``beta (1 - m_{beta,kappa}^2) kappa``."""
    mbk = mean_field_root(beta, kappa)
    return beta * (1.0 - mbk * mbk) * kappa


def ordering_bound_check(inst_kappa: InstantonResult, inst_zero: InstantonResult) -> float:
    """Minimum over ``x >= 0`` of ``m^(kappa) - m_bar - beta (1 - m_{beta,kappa}^2) kappa``."""
    if inst_kappa.grid != inst_zero.grid:
        raise ValueError("instantons live on different grids")
    if inst_kappa.beta != inst_zero.beta or inst_zero.kappa != 0.0:
        raise ValueError("need the kappa = 0 instanton at the same beta")
    c = ordering_bound_constant(inst_kappa.beta, inst_kappa.kappa)
    return float(np.min(inst_kappa.half - inst_zero.half - c))
