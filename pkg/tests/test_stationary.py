import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import sparse
from scipy.optimize import brentq

from uphill.grid import build_grid
from uphill.macro import macro_profile, meso_to_macro
from uphill.model import ModelParams, mean_field_root
from uphill.stationary import (DegenerateSusceptibility, HalfLineSystem, LinearSolveError,
                               OperatorMatrix, SolverError, antisymmetric_extend, apply_T,
                               build_m0, inner_newton, linearized_solve, neumann_series,
                               outer_iterate, residual, solve_stationary, stationary_flux,
                               weighted_norm)

M_BETA_KAPPA = 0.9730156866523543


@pytest.fixture(scope="module")
def system(params):
    return HalfLineSystem(params, 0.05)


@pytest.fixture(scope="module")
def glued(params, inst_kappa, system):
    mac = macro_profile(inst_kappa.at(params.epsilon ** -0.5), params.mu, params.beta)
    return build_m0(inst_kappa, mac, params, system.grid), mac


def random_banded(n, band, norm, seed):
    rng = np.random.default_rng(seed)
    offsets = list(range(-band, band + 1))
    diags = [rng.uniform(-1, 1, n - abs(k)) for k in offsets]
    a = sparse.diags(diags, offsets, shape=(n, n), format="csr")
    rows = np.asarray(abs(a).sum(axis=1)).ravel()
    return OperatorMatrix.from_matrix(sparse.diags(norm / rows) @ a, band, band)


def test_linearized_solve_trivial_cases():
    zero = OperatorMatrix.from_matrix(sparse.csr_matrix((6, 6)), 1, 1)
    rhs = np.arange(6.0)
    assert np.array_equal(linearized_solve(zero, rhs), rhs)
    A = random_banded(30, 3, 0.5, 0)
    assert np.array_equal(linearized_solve(A, np.zeros(30)), np.zeros(30))


@pytest.mark.parametrize("seed", range(4))
def test_linearized_solve_neumann_oracle(seed):
    A = random_banded(200, 5, 0.5, seed)
    rhs = np.ones(200)
    phi = linearized_solve(A, rhs)
    assert np.max(np.abs(phi - neumann_series(A, rhs, 40))) <= 1e-10
    linearized_solve(A, rhs, neumann_probe=60)


def test_linearized_solve_singular():
    n = 20
    # rows of a stochastic matrix: (I - A) annihilates constants
    a = sparse.diags([0.5 * np.ones(n - 1), 0.5 * np.ones(n - 1)], [-1, 1], shape=(n, n)).tolil()
    a[0, 1] = 1.0
    a[n - 1, n - 2] = 1.0
    A = OperatorMatrix.from_matrix(a.tocsr(), 1, 1)
    with pytest.raises(LinearSolveError) as info:
        linearized_solve(A, np.linspace(-1, 1, n) ** 3 + 1)
    assert info.value.smallest_singular_value < 1e-8


def test_apply_T(params, system):
    x = system.x
    m = np.full(x.size, 0.85)
    h0 = apply_T(m, 0.0, params, system.grid)
    assert np.all(h0.values == params.kappa)
    j = 0.1
    h = apply_T(m, j, params, system.grid).values
    c = 1 / (2 * (1 - 0.85 ** 2))
    # exact for a constant profile: h(x) = kappa - j eps c x
    assert np.allclose(h, params.kappa - j * params.epsilon * c * x, atol=1e-13)
    assert h[-1] == pytest.approx(params.kappa - j * c, abs=j * params.epsilon * c * 0.05)
    with pytest.raises(DegenerateSusceptibility):
        apply_T(np.full(x.size, 1.0), j, params, system.grid)


def test_weighted_norm(system):
    x = system.x
    f = np.sin(x)
    assert weighted_norm(f, 0.0, 0.02, x) == np.max(np.abs(f))
    assert weighted_norm(np.ones_like(x), 1.0, 0.02, x) == pytest.approx(math.exp(-0.02 * x[0]))
    with pytest.raises(ValueError):
        weighted_norm(f, -1.0, 0.02, x)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=50))
def test_antisymmetric_extend(half):
    full = antisymmetric_extend(np.array(half))
    assert full.size == 2 * len(half)
    assert np.array_equal(full, -full[::-1])


def test_refuses_near_spinodal():
    with pytest.raises(ValueError):
        HalfLineSystem(ModelParams(mu=0.71), 0.05)


def test_build_m0(params, inst_kappa, glued, system):
    m0, mac = glued
    x = system.x
    deep = (x > 4) & (x < params.epsilon ** -0.5)
    assert np.max(np.abs(m0[deep] - M_BETA_KAPPA)) <= 1e-6
    # the last node sits half a cell inside the reservoir edge
    r_last = meso_to_macro(x[-1], params.epsilon)
    g = lambda m: m - 2 / 3 * m ** 3
    oracle = brentq(lambda m: mac.j_macro * r_last - (g(m) - g(mac.mu0)), 0.79, mac.mu0,
                    xtol=1e-15)
    assert m0[-1] == pytest.approx(oracle, abs=1e-13)
    assert abs(m0[-1] - params.mu) < 1e-3
    bad = macro_profile(0.95, params.mu, params.beta)
    with pytest.raises(ValueError):
        build_m0(inst_kappa, bad, params, system.grid)


def test_plateau_is_interior_fixed_point():
    m_beta = mean_field_root(2.0)
    system = HalfLineSystem(ModelParams(kappa=0.0, mu=m_beta), 0.05)
    x = system.x
    m = np.full(x.size, m_beta)
    defect = system.fixed_point_defect(m, np.zeros(x.size))
    assert np.max(np.abs(defect[x > 1])) <= 1e-12
    assert np.max(np.abs(defect[x < 1])) > 0.1  # the odd reflection is felt near 0


def test_direct_route_fails_at_default_eps(params, glued, system):
    # T m0 falls below the spinodal field near the reservoir at eps = 0.02
    m0, mac = glued
    with pytest.raises(SolverError):
        outer_iterate(m0, system, mac.j_macro)


def test_direct_route_at_zero_current(params, inst_kappa, system):
    x = system.x
    m0 = np.interp(x, inst_kappa.grid.positive_nodes, inst_kappa.half)
    m, h, rep = outer_iterate(m0, system, 0.0)
    assert rep.converged and rep.residual_fixed_point <= 1e-10
    assert np.all(h.values == params.kappa)


def test_default_solution(solution, params):
    r = solution.report
    assert r.converged and "continuation" in r.flags
    assert r.residual_fixed_point <= 1e-8 and r.residual_field <= 1e-8
    assert r.flux_deviation <= 5 * 0.05 ** 2
    assert r.j == pytest.approx(0.09979222717722924, abs=1e-15)
    # nu(j_macro) = mu + O(sqrt(eps))
    assert abs(r.nu - params.mu) <= math.sqrt(params.epsilon)
    assert r.nu == pytest.approx(0.803450776571, abs=1e-8)  # regression value
    m, h = solution.full_m(), solution.full_h()
    assert np.max(np.abs(m + m[::-1])) == 0 and np.max(np.abs(h + h[::-1])) == 0
    assert r.phi1 == pytest.approx(0.3413161, abs=1e-6)


def test_residual_recomputed(solution):
    res_m, res_h, flux_dev = residual(solution.full_m(), solution.full_h(), solution.system,
                                      solution.report.j)
    assert res_m <= 1e-10 and res_h <= 1e-14 and flux_dev <= 1e-4


def test_residual_probe(solution):
    system = solution.system
    m, h = solution.full_m(), solution.full_h()
    M = system.grid.half_size
    i = M + int(np.argmin(np.abs(system.x - 5.0)))
    m[i] += 0.01
    res_m, _, _ = residual(m, h, system, solution.report.j)
    p = system.gain(solution.m, solution.h.values)[i - M]
    s0 = system.weights.stencil[system.band]
    assert res_m == pytest.approx(0.01 * (1 - p * s0), abs=1e-5)


def test_inner_newton_quadratic(solution):
    qs = [t.contraction_fit()[0] for t in solution.report.inner_traces]
    qs = [q for q in qs if not math.isnan(q)]
    assert qs and np.median(qs) >= 1.8


def test_inner_newton_from_solution(solution):
    m, trace = inner_newton(solution.m, solution.h, solution.system)
    assert np.max(np.abs(m - solution.m)) <= 1e-9
    assert len(trace.corrections) <= 2


def test_flux_second_order_away_from_origin(params):
    # the profile jumps at x = 0 when kappa > 0, so the origin node is only first order
    errs = []
    for dx in (0.1, 0.05, 0.025):
        sol = solve_stationary(params, j=0.0997922, dx=dx)
        x = sol.system.grid.nodes
        flux = stationary_flux(sol.full_m(), sol.system)[1:-1] - 0.0997922 * params.epsilon
        errs.append(np.max(np.abs(flux[np.abs(x[1:-1]) > 1.5])))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios > 3.3)


def test_solution_at_other_grid(params):
    sol = solve_stationary(params, dx=0.1)
    assert sol.report.converged
    assert build_grid(params.epsilon, 0.1).size == sol.full_m().size
