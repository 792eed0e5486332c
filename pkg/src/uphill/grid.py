"""Staggered grids, the interaction kernel and discrete convolutions.

The domain ``[-L, L]`` is cut into cells of width ``dx`` and every cell is
represented by its midpoint, so there is never a node at ``x = 0``.  The
kernel is sampled once into a symmetric stencil of half-width ``n = 1/dx``;
all convolutions on a uniform staggered grid are correlations with that
stencil after padding the profile with whatever lives outside the domain
(reservoir values, a reflected copy, or the edge value).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate


def _mollifier(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


@dataclass(frozen=True)
class KernelSpec:
    """Even, compactly supported kernel ``J(0, x)`` on ``[-1, 1]``.

    ``shape`` need not be normalized; :attr:`norm` rescales it so the
    integral is one.
    """

    shape: Callable[[np.ndarray], np.ndarray] = _mollifier
    name: str = "mollifier"
    norm: float = field(init=False)

    def __post_init__(self):
        total, _ = integrate.quad(lambda t: float(self.shape(np.array(t))), -1.0, 1.0,
                                  epsabs=1e-14, epsrel=1e-14, limit=200)
        object.__setattr__(self, "norm", 1.0 / total)

    def __call__(self, x):
        return self.norm * self.shape(np.asarray(x, dtype=float))

    @property
    def peak(self) -> float:
        return float(self(0.0))


KERNELS = {"mollifier": KernelSpec}


def get_kernel(name: str = "mollifier") -> KernelSpec:
    try:
        return KERNELS[name]()
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; choose from {sorted(KERNELS)}") from None


def _integer_ratio(a: float, b: float, what: str) -> int:
    q = a / b
    n = int(round(q))
    if n < 1 or abs(q - n) > 1e-8 * max(1.0, q):
        raise ValueError(f"{what} must be an integer, got {q!r}")
    return n


@dataclass(frozen=True)
class Grid:
    """Staggered symmetric grid on ``[-half_length, half_length]``."""

    half_length: float
    dx: float

    def __post_init__(self):
        n = _integer_ratio(1.0, self.dx, "1/dx")
        if n < 10:
            raise ValueError(f"dx must be 1/n with n >= 10, got dx={self.dx}")
        _integer_ratio(self.half_length, self.dx, "half_length/dx")

    @property
    def band(self) -> int:
        """Kernel half-width in nodes."""
        return int(round(1.0 / self.dx))

    @property
    def size(self) -> int:
        return 2 * int(round(self.half_length / self.dx))

    @property
    def half_size(self) -> int:
        return self.size // 2

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.size) + 0.5) * self.dx - self.half_length

    @property
    def positive_nodes(self) -> np.ndarray:
        return (np.arange(self.half_size) + 0.5) * self.dx

    @property
    def epsilon(self) -> float:
        return 1.0 / self.half_length


def build_grid(epsilon: float, dx: float) -> Grid:
    """Grid on ``[-1/epsilon, 1/epsilon]`` with ``2/(epsilon*dx)`` nodes."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    return Grid(half_length=1.0 / epsilon, dx=dx)


def kernel_stencil(kernel: KernelSpec, dx: float) -> np.ndarray:
    """Midpoint samples ``J(k dx) dx`` for ``k = -n..n``, renormalized to mass one."""
    n = int(round(1.0 / dx))
    s = kernel(np.arange(-n, n + 1) * dx) * dx
    return s / s.sum()


@dataclass(frozen=True)
class BoundaryMass:
    """Kernel mass falling beyond the right (``plus``) and left (``minus``) edges."""

    plus: np.ndarray
    minus: np.ndarray


@dataclass(frozen=True)
class KernelWeights:
    """Banded weights ``w_ij = s[j - i]`` restricted to the nodes of ``grid``."""

    grid: Grid
    stencil: np.ndarray

    @property
    def band(self) -> int:
        return (self.stencil.size - 1) // 2

    def matrix(self):
        """Interior weights as a sparse matrix (no boundary mass)."""
        from scipy import sparse

        n, N = self.band, self.grid.size
        offsets = np.arange(-n, n + 1)
        diags = [np.full(N - abs(k), self.stencil[k + n]) for k in offsets]
        return sparse.diags(diags, offsets, shape=(N, N), format="csr")

    def boundary_mass(self) -> BoundaryMass:
        n, N = self.band, self.grid.size
        tail = np.concatenate([np.cumsum(self.stencil[::-1])[::-1][1:], [0.0]])
        # tail[k + n] = sum of stencil entries with offset > k
        plus = np.zeros(N)
        minus = np.zeros(N)
        for i in range(max(0, N - n), N):
            plus[i] = tail[(N - 1 - i) + n]
        for i in range(min(n, N)):
            minus[i] = tail[i + n]
        return BoundaryMass(plus=plus, minus=minus)


def kernel_weights(kernel: KernelSpec, grid: Grid) -> KernelWeights:
    return KernelWeights(grid=grid, stencil=kernel_stencil(kernel, grid.dx))


def correlate_padded(values: np.ndarray, stencil: np.ndarray, left, right) -> np.ndarray:
    """``sum_k s[k] v[i + k]`` with ``v`` extended by ``left``/``right`` pads.

    Scalars are broadcast to constant pads of the stencil half-width.
    """
    n = (stencil.size - 1) // 2
    left = np.broadcast_to(np.asarray(left, dtype=float), (n,))
    right = np.broadcast_to(np.asarray(right, dtype=float), (n,))
    ext = np.concatenate([left, values, right])
    # the stencil is symmetric, so convolution and correlation agree
    return np.convolve(ext, stencil, mode="valid")


def _check_shape(weights: KernelWeights, profile) -> np.ndarray:
    m = np.asarray(profile, dtype=float)
    if m.shape != (weights.grid.size,):
        raise ValueError(f"profile has shape {m.shape}, grid needs ({weights.grid.size},)")
    return m


def convolve(weights: KernelWeights, profile) -> np.ndarray:
    """``J * m`` with zero contribution from outside the grid."""
    m = _check_shape(weights, profile)
    return correlate_padded(m, weights.stencil, 0.0, 0.0)


def convolve_boundary(weights: KernelWeights, boundary_mass: BoundaryMass, profile,
                      m_right: float, m_left: float) -> np.ndarray:
    """``J_b * m``: interior weights plus reservoir masses times the reservoir values."""
    m = _check_shape(weights, profile)
    return (correlate_padded(m, weights.stencil, 0.0, 0.0)
            + boundary_mass.plus * m_right + boundary_mass.minus * m_left)


def reflect_odd(half: np.ndarray) -> np.ndarray:
    """Full odd profile from its values on the positive staggered nodes."""
    half = np.asarray(half, dtype=float)
    return np.concatenate([-half[::-1], half])


def write_profile_csv(path, x, m, header=("x", "m")) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for xi, mi in zip(x, m):
            w.writerow([f"{xi:.17g}", f"{mi:.17g}"])


def read_profile_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["x", "m"]:
        raise ValueError(f"{path}: expected header 'x,m'")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    if data.size == 0:
        return np.empty(0), np.empty(0)
    return data[:, 0], data[:, 1]
