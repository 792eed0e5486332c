"""Stationary profiles with a prescribed current.

The unknowns are odd, so everything is computed on the positive staggered
nodes ``x_i = (i + 1/2) dx``, ``i < M = 1/(eps dx)``.  On that half-line the
boundary-corrected convolution of the odd extension reads

    (J_b * m)(x_i) = sum_j B_ij m_j + r_i,
    B_ij = s[j - i] - s[i + j + 1],    r_i = b_plus(x_i) mu,

(the second term of ``B`` is the reflected copy of the negative half), and
``B`` keeps the band of the kernel.  The system solved is

    m = tanh(beta [(J_b * m) + h]),    h = T m,
    (T m)(x) = kappa - j eps int_0^x dy / chi_beta(m(y)).

``h`` is held fixed while Newton solves for ``m``; the outer loop refreshes
``h`` from the latest ``m``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse

from .grid import Grid, KernelSpec, KernelWeights, build_grid, convolve_boundary, get_kernel, kernel_weights, reflect_odd
from .instanton import InstantonResult
from .macro import MacroProfile, rescale_to_meso
from .model import ARCTANH_CLAMP, ModelParams, safe_arctanh, spinodal_threshold


class SolverError(RuntimeError):
    """A stationary solve left its regime of validity."""


class DegenerateSusceptibility(ValueError):
    pass


class LinearSolveError(SolverError):
    """``(I - A)`` could not be inverted reliably.

    The smallest singular value of ``I - A`` is computed on first access
    (dense SVD, so only for moderate sizes).
    """

    def __init__(self, message, operator: "OperatorMatrix | None" = None):
        super().__init__(message)
        self.operator = operator
        self._sv = None

    @property
    def smallest_singular_value(self) -> float:
        if self._sv is None:
            self._sv = _smallest_sv(self.operator) if self.operator is not None else math.nan
        return self._sv


class NewtonDivergence(SolverError):
    pass


class OuterDivergence(SolverError):
    pass


# ---------------------------------------------------------------- structures


@dataclass
class FieldProfile:
    """Effective field ``h = kappa sign(x) + h_tilde`` sampled at ``x``."""

    x: np.ndarray
    values: np.ndarray
    kappa: float

    @property
    def h_ext(self) -> np.ndarray:
        return self.kappa * np.sign(self.x)

    @property
    def h_tilde(self) -> np.ndarray:
        return self.values - self.h_ext


def _banded(mat, lower: int, upper: int) -> np.ndarray:
    """``solve_banded`` storage: ``ab[upper + i - j, j] = a[i, j]``."""
    N = mat.shape[0]
    ab = np.zeros((lower + upper + 1, N))
    for k in range(-lower, upper + 1):
        d = mat.diagonal(k)
        if k >= 0:
            ab[upper - k, k:] = d
        else:
            ab[upper - k, :N + k] = d
    return ab


@dataclass
class OperatorMatrix:
    """``A = diag(p) B`` with ``B`` banded of half-widths ``(lower, upper)``."""

    p: np.ndarray
    base: sparse.csr_matrix
    lower: int
    upper: int
    _base_banded: np.ndarray | None = field(default=None, repr=False)
    _rows: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_matrix(cls, a, lower: int | None = None, upper: int | None = None):
        """Wrap an arbitrary (banded) matrix with unit gain."""
        a = sparse.csr_matrix(a)
        coo = a.tocoo()
        off = coo.col - coo.row
        lower = int(max(0, -off.min())) if lower is None and off.size else (lower or 0)
        upper = int(max(0, off.max())) if upper is None and off.size else (upper or 0)
        return cls(p=np.ones(a.shape[0]), base=a, lower=lower, upper=upper)

    @property
    def matrix(self) -> sparse.csr_matrix:
        return sparse.diags(self.p) @ self.base

    def matvec(self, v) -> np.ndarray:
        return self.p * (self.base @ v)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def resolvent_banded(self) -> np.ndarray:
        """Banded storage of ``I - A``."""
        if self._base_banded is None:
            self._base_banded = _banded(self.base, self.lower, self.upper)
            N = self.base.shape[0]
            rows = np.arange(N)[None, :] + np.arange(self.lower + self.upper + 1)[:, None] - self.upper
            self._rows = np.clip(rows, 0, N - 1)
        ab = -self._base_banded * self.p[self._rows]
        ab[self.upper] += 1.0
        return ab


@dataclass
class NewtonTrace:
    corrections: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    def contraction_fit(self, cutoff: float = 0.1, floor: float = 1e-13):
        """Fit ``log|phi_{k+1}| = q log|phi_k| + log r`` over usable pairs.

        Returns ``(q, r)``, or ``(nan, nan)`` with fewer than two pairs.
        """
        c = np.asarray(self.corrections, dtype=float)
        pairs = [(a, b) for a, b in zip(c[:-1], c[1:]) if floor < b and a < cutoff and floor < a]
        if len(pairs) < 2:
            return math.nan, math.nan
        a, b = np.log(np.array(pairs)).T
        q, logr = np.polyfit(a, b, 1)
        return float(q), float(math.exp(logr))


@dataclass
class SolveReport:
    j: float
    nu: float = math.nan
    residual_fixed_point: float = math.nan
    residual_field: float = math.nan
    flux_deviation: float = math.nan
    iterations_outer: int = 0
    iterations_inner_total: int = 0
    converged: bool = False
    field_increments: list = field(default_factory=list)
    alpha: float = math.nan
    alpha_increments: list = field(default_factory=list)
    inner_traces: list = field(default_factory=list, repr=False)
    phi1: float = math.nan
    m1_minus_m0: float = math.nan
    h1_minus_h0: float = math.nan
    eta0: float = math.nan
    pi0: float = math.nan
    flags: list = field(default_factory=list)

    def as_dict(self) -> dict:
        keys = ["j", "nu", "residual_fixed_point", "residual_field", "flux_deviation",
                "iterations_outer", "iterations_inner_total", "converged", "phi1",
                "m1_minus_m0", "h1_minus_h0", "alpha", "eta0", "pi0"]
        out = {k: getattr(self, k) for k in keys}
        out["field_increments"] = list(self.field_increments)
        out["alpha_increments"] = list(self.alpha_increments)
        out["flags"] = list(self.flags)
        return out


# ---------------------------------------------------------------- half-line system


class HalfLineSystem:
    """Discretized operators of the stationary problem on the positive half."""

    def __init__(self, params: ModelParams, dx: float = 0.05, kernel: KernelSpec | None = None):
        if params.mu <= spinodal_threshold(params.beta) + 0.01:
            raise ValueError("mu too close to the spinodal threshold (needs mu > m*(beta) + 0.01)")
        self.params = params
        self.kernel = kernel or get_kernel()
        self.grid: Grid = build_grid(params.epsilon, dx)
        self.weights: KernelWeights = kernel_weights(self.kernel, self.grid)
        self.boundary = self.weights.boundary_mass()
        M = self.grid.half_size
        W = self.weights.matrix()
        pos = W[M:, :]
        self.B = (pos[:, M:] - pos[:, :M][:, ::-1]).tocsr()
        self.B.eliminate_zeros()
        self.reservoir = (self.boundary.plus * params.mu - self.boundary.minus * params.mu)[M:]
        self._template: OperatorMatrix | None = None

    @property
    def x(self) -> np.ndarray:
        return self.grid.positive_nodes

    @property
    def dx(self) -> float:
        return self.grid.dx

    @property
    def band(self) -> int:
        return self.grid.band

    def conv(self, m) -> np.ndarray:
        """``J_b * m`` on the positive nodes for the odd extension of ``m``."""
        return self.B @ m + self.reservoir

    def field_argument(self, m, h) -> np.ndarray:
        return self.params.beta * (self.conv(m) + h)

    def gain(self, m, h) -> np.ndarray:
        """``p_{m,h} = beta / cosh^2(beta [(J_b * m) + h])``."""
        return self.params.beta / np.cosh(self.field_argument(m, h)) ** 2

    def operator(self, m, h) -> OperatorMatrix:
        op = OperatorMatrix(p=self.gain(m, h), base=self.B, lower=self.band, upper=self.band)
        if self._template is None:
            op.resolvent_banded()
            self._template = op
        op._base_banded, op._rows = self._template._base_banded, self._template._rows
        return op

    def fixed_point_defect(self, m, h) -> np.ndarray:
        return np.tanh(self.field_argument(m, h)) - m


# ---------------------------------------------------------------- operations


def antisymmetric_extend(m_half) -> np.ndarray:
    """Full-grid profile ``[-m[::-1], m]`` from the positive-node values."""
    return reflect_odd(m_half)


def build_m0(instanton: InstantonResult, macro: MacroProfile, params: ModelParams,
             grid: Grid, seam_tol: float = 1e-10) -> np.ndarray:
    """Glued profile: instanton on ``(0, eps^{-1/2}]``, rescaled macro profile beyond.

    Returns the values on the positive nodes of ``grid``.
    """
    eps = params.epsilon
    seam = eps ** -0.5
    if instanton.grid.dx != grid.dx:
        raise ValueError("instanton and solver grids must share dx")
    if instanton.grid.half_length < seam + 1.0:
        raise ValueError("instanton grid does not cover (0, eps^{-1/2}]")
    mu0 = instanton.at(seam)
    if abs(macro.mu0 - mu0) > seam_tol:
        raise ValueError(f"seam mismatch: macro mu0={macro.mu0!r}, instanton={mu0!r}")
    x = grid.positive_nodes
    inner = x <= seam
    m0 = np.empty_like(x)
    k = int(inner.sum())
    m0[inner] = instanton.half[:k]
    m0[~inner] = rescale_to_meso(macro, eps, x[~inner])
    return m0


def inverse_susceptibility(m, beta: float, clamp: float = ARCTANH_CLAMP) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if np.any(np.abs(m) >= 1.0 - clamp):
        raise DegenerateSusceptibility("|m| reached 1 - clamp; chi_beta degenerates")
    return 1.0 / (beta * (1.0 - m * m))


def apply_T(m, j: float, params: ModelParams, grid: Grid) -> FieldProfile:
    """``T m`` on the positive nodes by cumulative midpoint quadrature from ``0+``.

    Node ``x_i`` is the midpoint of ``[x_i - dx/2, x_i + dx/2]``, so the
    integral up to ``x_i`` is the sum over earlier cells plus half of the
    current one.
    """
    c = inverse_susceptibility(m, params.beta)
    dx = grid.dx
    integral = (np.cumsum(c) - 0.5 * c) * dx
    values = params.kappa - j * params.epsilon * integral
    return FieldProfile(x=grid.positive_nodes, values=values, kappa=params.kappa)


def weighted_norm(f, alpha: float, epsilon: float, x) -> float:
    """``sup_x exp(-alpha eps x) |f(x)|`` over the positive nodes ``x``."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    f = np.asarray(f, dtype=float)
    x = np.asarray(x, dtype=float)
    return float(np.max(np.exp(-alpha * epsilon * x) * np.abs(f)))


def linearized_solve(A: OperatorMatrix, rhs, neumann_probe: int = 0) -> np.ndarray:
    """Solve ``(I - A) phi = rhs`` with a banded LU factorization.

    ``neumann_probe > 0`` additionally sums that many Neumann terms and
    refuses the result if both disagree, which flags a spectral radius at
    or beyond one.
    """
    rhs = np.asarray(rhs, dtype=float)
    scale = float(np.max(np.abs(rhs))) if rhs.size else 0.0
    if scale == 0.0:
        return np.zeros_like(rhs)
    ab = A.resolvent_banded()
    try:
        phi = linalg.solve_banded((A.lower, A.upper), ab, rhs, check_finite=True)
    except (linalg.LinAlgError, ValueError):
        raise LinearSolveError("banded solve of (I - A) failed", A) from None
    res = phi - A.matvec(phi) - rhs
    if not np.all(np.isfinite(phi)) or np.max(np.abs(res)) > 1e-12 * scale:
        # one step of iterative refinement before giving up
        phi = phi - linalg.solve_banded((A.lower, A.upper), ab, res)
        res = phi - A.matvec(phi) - rhs
        if not np.all(np.isfinite(phi)) or np.max(np.abs(res)) > 1e-12 * scale:
            raise LinearSolveError("(I - A) is numerically singular", A)
    if neumann_probe:
        series = neumann_series(A, rhs, neumann_probe)
        if np.max(np.abs(series - phi)) > 1e-6 * np.max(np.abs(phi)):
            raise LinearSolveError("Neumann probe disagrees with the direct solve", A)
    return phi


def neumann_series(A: OperatorMatrix, rhs, terms: int) -> np.ndarray:
    """``sum_{k < terms} A^k rhs``."""
    term = np.asarray(rhs, dtype=float).copy()
    total = term.copy()
    for _ in range(terms - 1):
        term = A.matvec(term)
        total += term
    return total


def _smallest_sv(A: OperatorMatrix) -> float:
    n = A.base.shape[0]
    if n > 4000:
        return math.nan
    return float(linalg.svdvals(np.eye(n) - A.dense())[-1])


def inner_newton(m_init, h, system: HalfLineSystem, tol: float = 1e-12,
                 max_iter: int = 40) -> tuple[np.ndarray, NewtonTrace]:
    """Newton iteration for ``m = tanh(beta [(J_b * m) + h])`` at fixed ``h``.

    Each correction solves ``(I - A_{m,h}) phi = tanh(...) - m``.  Iteration
    stops once ``|phi|_inf <= tol`` or the defect itself is below ``tol``.
    """
    h = h.values if isinstance(h, FieldProfile) else np.asarray(h, dtype=float)
    m = np.array(m_init, dtype=float)
    trace = NewtonTrace()
    for k in range(max_iter):
        defect = system.fixed_point_defect(m, h)
        trace.residuals.append(float(np.max(np.abs(defect))))
        if trace.residuals[-1] <= tol * 1e-2:
            break
        phi = linearized_solve(system.operator(m, h), defect)
        size = float(np.max(np.abs(phi)))
        trace.corrections.append(size)
        m = m + phi
        if np.max(np.abs(m)) >= 1.0 - ARCTANH_CLAMP:
            raise NewtonDivergence("Newton iterate left (-1, 1)")
        if size <= tol:
            trace.residuals.append(float(np.max(np.abs(system.fixed_point_defect(m, h)))))
            break
        c = trace.corrections
        if len(c) > 5 and c[-1] >= c[-2]:
            raise NewtonDivergence(f"corrections stopped decreasing: {c[-3:]}")
    else:
        raise NewtonDivergence(f"no convergence in {max_iter} Newton steps")
    return m, trace


@dataclass
class StationarySolution:
    system: HalfLineSystem
    m: np.ndarray
    h: FieldProfile
    report: SolveReport
    m0: np.ndarray | None = None

    @property
    def x(self) -> np.ndarray:
        return self.system.x

    def full_m(self) -> np.ndarray:
        return antisymmetric_extend(self.m)

    def full_h(self) -> np.ndarray:
        return antisymmetric_extend(self.h.values)


def outer_iterate(m0, system: HalfLineSystem, j: float, tol_outer: float = 1e-10,
                  tol_inner: float = 1e-12, max_outer: int = 200,
                  alpha: float | None = None) -> tuple[np.ndarray, FieldProfile, SolveReport]:
    """Alternate ``h_n = T m_n`` and ``m_{n+1} = Newton(h_n)``.

    Stops when ``|h_{n+1} - h_n|_inf <= tol_outer``; three consecutive
    non-contracting increments (after the first few) abort with
    :class:`OuterDivergence`.  Increments are also recorded in the
    ``alpha``-weighted norm as a diagnostic.
    """
    params, grid = system.params, system.grid
    report = SolveReport(j=j)
    m = np.array(m0, dtype=float)
    h = apply_T(m, j, params, grid)
    h_first = h
    growth = 0
    diffs = []
    for n in range(1, max_outer + 1):
        m_new, trace = inner_newton(m, h, system, tol=tol_inner)
        report.inner_traces.append(trace)
        report.iterations_inner_total += len(trace.corrections)
        if n == 1:
            report.phi1 = trace.corrections[0] if trace.corrections else 0.0
            report.m1_minus_m0 = float(np.max(np.abs(m_new - m)))
        h_new = apply_T(m_new, j, params, grid)
        if n == 1:
            report.h1_minus_h0 = float(np.max(np.abs(h_new.values - h_first.values)))
        diffs.append(h_new.values - h.values)
        inc = float(np.max(np.abs(diffs[-1])))
        report.field_increments.append(inc)
        m, h = m_new, h_new
        report.iterations_outer = n
        if inc <= tol_outer:
            report.converged = True
            break
        incs = report.field_increments
        if len(incs) > 4 and incs[-1] >= incs[-2]:
            growth += 1
            if growth >= 3:
                raise OuterDivergence(f"outer increments not contracting: {incs[-4:]}")
        else:
            growth = 0
    if not report.converged:
        report.flags.append("outer-max-iterations")
    report.alpha = _diagnostic_alpha(report) if alpha is None else alpha
    report.alpha_increments = [weighted_norm(d, report.alpha, params.epsilon, system.x)
                               for d in diffs]
    report.nu = float(m[-1])
    res = residual(antisymmetric_extend(m), antisymmetric_extend(h.values), system, j)
    report.residual_fixed_point, report.residual_field, report.flux_deviation = res
    return m, h, report


def _diagnostic_alpha(report: SolveReport) -> float:
    """``alpha = 2 r0 c''`` from the observed Newton constant and field-increment ratio."""
    r0 = math.nan
    for tr in report.inner_traces:
        q, r = tr.contraction_fit()
        if np.isfinite(r):
            r0 = r
            break
    c2 = report.h1_minus_h0 / report.m1_minus_m0 if report.m1_minus_m0 > 0 else math.nan
    alpha = 2.0 * r0 * c2
    return float(alpha) if np.isfinite(alpha) and alpha > 0 else 1.0


def residual(m, h, system: HalfLineSystem, j: float) -> tuple[float, float, float]:
    """``(res_m, res_h, flux_dev)`` for full-grid odd ``m`` and ``h``.

    ``flux_dev`` is the sup over interior nodes of ``|I - j eps|`` with
    ``I = -chi_beta(m) dh_tilde/dx`` by centered differences, where
    ``h_tilde = arctanh(m)/beta - h_ext - J_b * m``.
    """
    params, grid, w = system.params, system.grid, system.weights
    m = np.asarray(m, dtype=float)
    h = np.asarray(h, dtype=float)
    conv = convolve_boundary(w, system.boundary, m, params.mu, -params.mu)
    res_m = float(np.max(np.abs(m - np.tanh(params.beta * (conv + h)))))
    M = grid.half_size
    Th = antisymmetric_extend(apply_T(m[M:], j, params, grid).values)
    res_h = float(np.max(np.abs(h - Th)))
    flux = stationary_flux(m, system)
    flux_dev = float(np.max(np.abs(flux[1:-1] - j * params.epsilon)))
    return res_m, res_h, flux_dev


def stationary_flux(m, system: HalfLineSystem) -> np.ndarray:
    """Nodal current ``-chi_beta(m) dh_tilde/dx`` (one-sided at the two edges)."""
    params, grid = system.params, system.grid
    m = np.asarray(m, dtype=float)
    conv = convolve_boundary(system.weights, system.boundary, m, params.mu, -params.mu)
    at, _ = safe_arctanh(m)
    ht = at / params.beta - params.kappa * np.sign(grid.nodes) - conv
    grad = np.gradient(ht, grid.dx)
    return -params.beta * (1.0 - m * m) * grad


def first_correction(m0, h0, system: HalfLineSystem) -> np.ndarray:
    """First Newton correction ``phi_1`` from ``m0`` at the field ``h0 = T m0``."""
    h0 = h0.values if isinstance(h0, FieldProfile) else np.asarray(h0, dtype=float)
    return linearized_solve(system.operator(m0, h0), system.fixed_point_defect(m0, h0))


def plateau_start(instanton: InstantonResult, system: HalfLineSystem) -> np.ndarray:
    """Instanton on its grid, continued by the plateau ``m_{beta,kappa}`` beyond."""
    m = np.full(system.x.size, instanton.m_beta_kappa)
    k = min(instanton.half.size, m.size)
    m[:k] = instanton.half[:k]
    return m


class Continuation:
    """Stationary solutions along the branch ``j -> (m_j, h_j)`` starting at ``j = 0``.

    Every solve warm-starts from the closest solved current with a secant
    predictor through the two closest solutions on the same side, and the
    step in ``j`` adapts (halving on failure, growing by 1.5 on success).
    Past a fold of the branch the march stalls and :class:`SolverError`
    is raised.
    """

    def __init__(self, system: HalfLineSystem, instanton: InstantonResult,
                 max_step: float = 0.02, min_step: float = 1e-5,
                 tol_outer: float = 1e-10, tol_inner: float = 1e-12):
        self.system = system
        self.max_step = max_step
        self.min_step = min_step
        self.tol_outer = tol_outer
        self.tol_inner = tol_inner
        self.solves = 0
        self._cache: dict[float, StationarySolution] = {}
        self._add(0.0, plateau_start(instanton, system))

    def _add(self, j, guess) -> StationarySolution:
        m, h, report = outer_iterate(guess, self.system, j, tol_outer=self.tol_outer,
                                     tol_inner=self.tol_inner)
        self.solves += 1
        if not report.converged:
            raise SolverError(f"outer loop did not converge at j={j}")
        sol = StationarySolution(system=self.system, m=m, h=h, report=report)
        self._cache[float(j)] = sol
        return sol

    @property
    def currents(self) -> list:
        return sorted(self._cache)

    def _predict(self, j_from: float, j_to: float) -> np.ndarray:
        side = [c for c in self._cache if (c - j_from) * (j_to - j_from) <= 0 and c != j_from]
        m_a = self._cache[j_from].m
        if not side:
            return m_a.copy()
        j_b = min(side, key=lambda c: abs(c - j_from))
        m_b = self._cache[j_b].m
        return m_a + (m_a - m_b) * (j_to - j_from) / (j_from - j_b)

    def solve(self, j: float) -> StationarySolution:
        j = float(j)
        if j in self._cache:
            return self._cache[j]
        cur = min(self._cache, key=lambda c: abs(c - j))
        step = min(self.max_step, abs(j - cur))
        direction = math.copysign(1.0, j - cur)
        while cur != j:
            nxt = j if abs(j - cur) <= step else cur + direction * step
            try:
                sol = self._add(nxt, self._predict(cur, nxt))
            except (SolverError, DegenerateSusceptibility, FloatingPointError):
                step *= 0.5
                if step < self.min_step:
                    raise SolverError(f"continuation stalled at j={cur:.6g} toward j={j:.6g} "
                                      "(fold of the solution branch)") from None
                continue
            cur = nxt
            step = min(self.max_step, 1.5 * step)
        sol.report.flags.append("continuation")
        return sol


def solve_stationary(params: ModelParams, j: float | None = None, dx: float = 0.05,
                     kernel: KernelSpec | None = None, tol_outer: float = 1e-10,
                     tol_inner: float = 1e-12, instanton: InstantonResult | None = None,
                     continuation: Continuation | None = None,
                     system: HalfLineSystem | None = None) -> StationarySolution:
    """Full pipeline: instanton, macro profile, glued ``m0`` and the outer loop.

    ``j`` defaults to the macroscopic current.  The outer loop is started
    from ``m0`` first; when that fails (the field ``T m0`` can fall below the
    spinodal field near the reservoir when ``eps`` is not small) the
    solution is reached by continuation in ``j`` from ``j = 0`` instead.
    The report always carries ``phi1``, the first correction from ``m0``.
    """
    from .instanton import compute_instanton
    from .macro import macro_profile

    system = system or (continuation.system if continuation else HalfLineSystem(params, dx, kernel))
    if instanton is None:
        instanton = compute_instanton(params.beta, params.kappa, system.dx, kernel=system.kernel)
    mu0 = instanton.at(params.epsilon ** -0.5)
    macro = macro_profile(mu0, params.mu, params.beta)
    m0 = build_m0(instanton, macro, params, system.grid)
    if j is None:
        j = macro.j_macro
    h0 = apply_T(m0, j, params, system.grid)
    try:
        phi1 = float(np.max(np.abs(first_correction(m0, h0, system))))
    except LinearSolveError:
        phi1 = math.nan
    try:
        if continuation is not None:
            raise SolverError("continuation requested")
        m, h, report = outer_iterate(m0, system, j, tol_outer=tol_outer, tol_inner=tol_inner)
        if not report.converged:
            raise SolverError("outer loop did not converge from m0")
        report.flags.append("direct")
        sol = StationarySolution(system=system, m=m, h=h, report=report, m0=m0)
    except (SolverError, DegenerateSusceptibility):
        continuation = continuation or Continuation(system, instanton, tol_outer=tol_outer,
                                                    tol_inner=tol_inner)
        found = continuation.solve(j)
        report = found.report
        report.m1_minus_m0 = math.nan
        report.h1_minus_h0 = math.nan
        sol = StationarySolution(system=system, m=found.m, h=found.h, report=report, m0=m0)
    report.phi1 = phi1
    return sol
