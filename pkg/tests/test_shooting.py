import numpy as np
import pytest

from uphill.model import ModelParams
from uphill.shooting import (BoundaryMap, boundary_value, kappa_sweep, solve_for_mu,
                             uphill_lower_bound)

M_BETA_KAPPA = 0.9730156866523543


@pytest.fixture(scope="module")
def uphill(params, inst_kappa):
    return solve_for_mu(0.8, params, instanton=inst_kappa)


def test_uphill_solution(uphill):
    assert uphill.j_solution > 0
    assert abs(uphill.j_solution - uphill.j_macro) / uphill.j_macro <= 0.25
    assert abs(uphill.nu_achieved - 0.8) <= 1e-6
    assert uphill.j_solution == pytest.approx(0.10164726686, abs=1e-8)  # regression value
    assert uphill.residual <= 1e-8


def test_bracket_and_lipschitz(uphill):
    lo, hi = uphill.bracket
    assert lo <= uphill.j_solution <= hi
    evals = sorted(uphill.evaluations)
    nus = [n for _, n in evals]
    assert np.all(np.diff(nus) <= 1e-12)  # nu decreases in j
    L = uphill.lipschitz_estimate
    for (j1, n1), (j2, n2) in zip(uphill.evaluations[:-1], uphill.evaluations[1:]):
        assert abs(n2 - n1) <= L * abs(j2 - j1) + 1e-15
    assert 0 < L < 10


def test_downhill(params, inst_kappa):
    res = solve_for_mu(0.99, params, instanton=inst_kappa)
    assert res.j_solution < 0
    assert abs(res.nu_achieved - 0.99) <= 1e-6


def test_plateau_reservoir_gives_zero_current(params, inst_kappa):
    res = solve_for_mu(M_BETA_KAPPA, params, instanton=inst_kappa)
    assert abs(res.j_solution) <= 1e-5


def test_boundary_value(params, inst_kappa):
    bmap = BoundaryMap(params, instanton=inst_kappa)
    nu0 = boundary_value(0.0, params, boundary_map=bmap)
    # without current the field stays flat: the bulk sits on the plateau and only a
    # boundary layer of kernel width feels the reservoir at mu
    sol = bmap.solve(0.0)
    bulk = (sol.x > 5) & (sol.x < 1 / params.epsilon - 4)
    assert np.max(np.abs(sol.m[bulk] - M_BETA_KAPPA)) <= 1e-8
    assert params.mu < nu0 < M_BETA_KAPPA
    assert bmap(0.05) > bmap(0.1)


def test_preconditions(params):
    with pytest.raises(ValueError):
        solve_for_mu(0.712, params)
    with pytest.raises(ValueError):
        kappa_sweep([0.1], 0.96, params)
    with pytest.raises(ValueError):
        kappa_sweep([0.001], 0.8, params)


def test_lower_bound_oracle():
    g = lambda m: m - 2 / 3 * m ** 3
    assert uphill_lower_bound(0.8, 2.0) == pytest.approx(0.5 * (g(0.8) - g(0.9575040240772688)),
                                                         abs=1e-14)
    assert uphill_lower_bound(0.8, 2.0) == pytest.approx(0.043199005, abs=1e-9)


def test_sweep_keeps_order_and_sign(params):
    out = kappa_sweep([0.05, 0.1], 0.8, params)
    assert [e.kappa for e in out] == [0.05, 0.1]
    assert all(e.j > uphill_lower_bound(0.8, 2.0) for e in out)
    # j grows with kappa (mu0 = m_{beta,kappa} grows)
    assert out[1].j > out[0].j
