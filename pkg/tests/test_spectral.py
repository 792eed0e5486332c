import math

import numpy as np
import pytest
from scipy import sparse
from scipy.sparse.linalg import eigs

from uphill.instanton import compute_instanton
from uphill.macro import macro_profile
from uphill.model import ModelParams
from uphill.spectral import (build_A_kappa, check_eigen_bound, compute_diagnostics, eta_kappa,
                             linear_bound, power_iteration, quadratic_bound, spectral_analysis)
from uphill.stationary import HalfLineSystem, apply_T, build_m0

M_BETA = 0.9575040240772688
M_BETA_KAPPA = 0.9730156866523543


def test_power_iteration_small_matrix():
    res = power_iteration(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert res.converged and res.lam == pytest.approx(3.0, abs=1e-12)
    assert np.allclose(res.eigvec, [1.0, 1.0])
    sp = power_iteration(sparse.csr_matrix([[2.0, 1.0], [1.0, 2.0]]))
    assert sp.lam == pytest.approx(3.0, abs=1e-12)


def test_power_iteration_reports_nonconvergence():
    res = power_iteration(np.array([[1.0, 0.0], [0.0, 0.999]]) + 1e-3, max_iter=3)
    assert not res.converged and math.isfinite(res.last_gap)


def test_operator_row_sums(inst_zero):
    A = build_A_kappa(inst_zero)
    rows = A.row_sums()
    x = inst_zero.grid.nodes
    centre = np.abs(x) < 0.1
    assert np.max(rows[centre]) == pytest.approx(2.0, abs=0.01)
    plateau = (np.abs(x) > 5) & (np.abs(x) < 15)
    assert np.allclose(rows[plateau], 2 * (1 - M_BETA ** 2), atol=1e-6)
    assert 2 * (1 - M_BETA ** 2) == pytest.approx(0.1665, abs=2e-4)  # quoted to 3 digits


def test_translation_mode(inst_zero):
    res = spectral_analysis(inst_zero)
    assert abs(res.lam - 1.0) <= 5e-3
    assert res.bound_quadratic == 1.0 and abs(res.margin) <= 5e-3
    assert np.min(res.eigvec) >= 0


@pytest.mark.parametrize("kappa", [0.05, 0.1, 0.2])
def test_eigen_bound(kappa):
    inst = compute_instanton(2.0, kappa, 0.05)
    A = build_A_kappa(inst)
    res = power_iteration(A)
    ok, margin = check_eigen_bound(res, 2.0, kappa)
    assert ok and margin > 0
    # independent oracle: ARPACK on the same matrix
    lam = eigs(A.matrix, k=1, which="LR", return_eigenvectors=False)[0].real
    assert res.lam == pytest.approx(lam, abs=1e-9)


def test_bound_values():
    assert quadratic_bound(2.0, 0.1) == pytest.approx(
        1 - 0.1 * math.tanh(0.2) * (1 - M_BETA_KAPPA ** 2), abs=1e-15)
    assert quadratic_bound(2.0, 0.1) == pytest.approx(0.998949, abs=1e-6)
    assert quadratic_bound(2.0, 0.2) < quadratic_bound(2.0, 0.1)
    assert quadratic_bound(2.0, 0.0) == 1.0
    assert eta_kappa(2.0, 0.1) == pytest.approx(0.9978983288976794, abs=1e-14)


def test_linear_bound(inst_zero):
    b = linear_bound(2.0, 0.1, 1.0, inst_zero)
    assert 0.99 < b < 1


@pytest.fixture(scope="module")
def default_diag(params, inst_kappa, inst_zero):
    system = HalfLineSystem(params, 0.05)
    mac = macro_profile(inst_kappa.at(params.epsilon ** -0.5), params.mu, params.beta)
    m0 = build_m0(inst_kappa, mac, params, system.grid)
    h0 = apply_T(m0, mac.j_macro, params, system.grid)
    return compute_diagnostics(m0, h0, inst_zero, system)


def test_diagnostics_regression(default_diag):
    d = default_diag
    # frozen values; the windowed sup is dominated by p near 0 against p_bar one unit out
    assert d.eta0 == pytest.approx(9.683808375, abs=1e-6)
    assert d.argmax_eta0 == pytest.approx(0.025)
    assert d.eta0_pointwise == pytest.approx(1.019363508, abs=1e-6)
    assert d.pi0 == pytest.approx(0.893628095, abs=1e-6)
    assert d.pi0 < 1
    assert d.pi0 >= 2 * (1 - 0.8 ** 2)  # p on the macro branch at the reservoir
    assert d.gamma0 == max(d.eta0, d.pi0)


def test_pointwise_eta_approaches_limit(inst_kappa, inst_zero):
    vals = []
    for eps in (0.04, 0.01):
        params = ModelParams(epsilon=eps)
        system = HalfLineSystem(params, 0.05)
        mac = macro_profile(inst_kappa.at(eps ** -0.5), params.mu, params.beta)
        m0 = build_m0(inst_kappa, mac, params, system.grid)
        h0 = apply_T(m0, mac.j_macro, params, system.grid)
        vals.append(compute_diagnostics(m0, h0, inst_zero, system).eta0_pointwise)
    assert vals[1] < vals[0]
    assert vals[1] < eta_kappa(2.0, 0.1)


def test_self_ratio_configuration(inst_zero):
    params = ModelParams(kappa=0.0, mu=M_BETA, epsilon=0.04)
    system = HalfLineSystem(params, 0.05)
    m0 = np.interp(system.x, inst_zero.grid.positive_nodes, inst_zero.half)
    h0 = np.zeros_like(m0)
    d = compute_diagnostics(m0, h0, inst_zero, system)
    assert math.isfinite(d.eta0) and d.eta0 >= 1.0
    assert d.eta0_pointwise == pytest.approx(1.0, abs=1e-6)


def test_diagnostics_rejects_wrong_instanton(inst_kappa, params):
    system = HalfLineSystem(params, 0.05)
    with pytest.raises(ValueError):
        compute_diagnostics(system.x * 0, system.x * 0, inst_kappa, system)
