import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uphill.dynamics import (DynamicsError, DynamicsProblem, DynamicsState, flux, implicit_step,
                             perturb, relax, step)
from uphill.grid import convolve_boundary, reflect_odd
from uphill.instanton import initial_condition
from uphill.model import ModelParams, mean_field_root


@pytest.fixture(scope="module")
def problem(params, solution):
    return DynamicsProblem(params, solution.report.j, 0.05, closure="flux")


def test_stationary_flux_uniform(problem, solution, params):
    I = flux(solution.full_m(), problem)
    assert np.max(np.abs(I - solution.report.j * params.epsilon)) <= 1e-9
    assert np.max(np.abs(problem.rate(solution.full_m()))) <= 1e-9


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_flux_even_for_odd_profiles(seed):
    params = ModelParams(epsilon=0.1)
    prob = DynamicsProblem(params, 0.0, 0.1, closure="reservoir")
    rng = np.random.default_rng(seed)
    m = reflect_odd(np.sort(rng.uniform(-0.9, 0.9, prob.grid.half_size)))
    I = prob.flux(m)
    assert np.allclose(I, I[::-1], atol=1e-13)


def test_explicit_step(problem, solution):
    state = DynamicsState(m=solution.full_m())
    new = step(state, problem)
    assert new.dt == problem.explicit_dt_max
    assert np.max(np.abs(new.m - state.m)) <= new.dt * 1e-8 / problem.dx
    with pytest.raises(ValueError):
        step(state, problem, dt=2 * problem.explicit_dt_max)


@pytest.mark.parametrize("closure", ["flux", "reservoir", "closed"])
def test_flux_jacobian_finite_differences(closure):
    params = ModelParams(epsilon=0.1)
    prob = DynamicsProblem(params, 0.05, 0.1, closure=closure)
    rng = np.random.default_rng(7)
    m = np.clip(initial_condition(2.0, 0.1, prob.grid) + 0.05 * rng.uniform(-1, 1, prob.grid.size),
                -0.99, 0.99)
    J = prob.flux_jacobian(m).toarray()
    d = 1e-6
    for i in rng.choice(prob.grid.size, 12, replace=False).tolist() + [0, prob.grid.size - 1]:
        e = np.zeros_like(m)
        e[i] = d
        fd = (prob.flux(m + e) - prob.flux(m - e)) / (2 * d)
        assert np.max(np.abs(fd - J[:, i])) <= 1e-6 * max(1, np.max(np.abs(fd)))


def test_energy_gradient_is_h_tilde(problem, solution):
    m = perturb(solution.full_m(), 0.05, seed=4)
    ht, _ = problem.h_tilde(m)
    d = 1e-6
    for i in (0, 37, 1000, 1999):
        e = np.zeros_like(m)
        e[i] = d
        fd = (problem.free_energy(m + e) - problem.free_energy(m - e)) / (2 * d)
        assert fd == pytest.approx(ht[i] * problem.dx, abs=1e-8)


def test_open_system_boundary_power(problem, solution, params):
    # dF/dt = -dissipation + j eps (h_tilde_left - h_tilde_right); the second term is positive
    m = perturb(reflect_odd(solution.m0), 0.05, seed=0)
    ht, _ = problem.h_tilde(m)
    dFdt = float(np.sum(ht * problem.rate(m)) * problem.dx)
    I = problem.flux(m)
    dissipation = float(-np.sum(I[1:-1] * np.diff(ht)))
    boundary = solution.report.j * params.epsilon * (ht[0] - ht[-1])
    assert dissipation > 0 and boundary > 0
    assert dFdt == pytest.approx(-dissipation + boundary, rel=1e-9)


def test_relax_from_stationary_returns_immediately(problem, solution):
    run = relax(problem, solution.full_m())
    assert run.converged and run.steps == 0


def test_relax_from_perturbed_m0(problem, solution):
    init = perturb(reflect_odd(solution.m0), 0.05, seed=0)
    run = relax(problem, init)
    assert run.converged
    assert np.max(np.abs(run.m - solution.full_m())) <= 1e-6
    assert np.allclose(run.flux, solution.report.j * 0.02, atol=1e-9)


@pytest.mark.slow
def test_relax_from_glued_m0(problem, solution):
    run = relax(problem, reflect_odd(solution.m0))
    assert run.converged and np.max(np.abs(run.m - solution.full_m())) <= 1e-5


def test_closed_box_conserves_mass_and_dissipates():
    params = ModelParams(epsilon=0.1)
    prob = DynamicsProblem(params, 0.0, 0.1, closure="closed")
    m = perturb(initial_condition(2.0, 0.1, prob.grid), 0.1, seed=2)
    run = relax(prob, m, t_max=1e4)
    assert abs(run.m.sum() - m.sum()) <= 1e-10
    assert len(run.energies) > 10 and not run.energy_increases(slack=1e-12)
    # one small implicit step is also dissipative on its own
    new, _ = implicit_step(DynamicsState(m=m), prob, 1e-3)
    assert prob.free_energy(new.m) < prob.free_energy(m)


def test_kappa_zero_relaxes_to_instanton_like_profile():
    m_beta = mean_field_root(2.0)
    params = ModelParams(kappa=0.0, mu=m_beta, epsilon=0.1)
    prob = DynamicsProblem(params, 0.0, 0.1, closure="flux")
    run = relax(prob, initial_condition(2.0, 0.0, prob.grid))
    assert run.converged
    fixed = np.tanh(2.0 * convolve_boundary(prob.weights, prob.boundary, run.m, m_beta, -m_beta))
    assert np.max(np.abs(run.m - fixed)) <= 1e-6
    assert np.allclose(run.m, -run.m[::-1], atol=1e-9)


def test_perturb_is_odd_and_deterministic():
    m = np.linspace(-0.99, 0.99, 40)
    a, b = perturb(m, 0.05, seed=1), perturb(m, 0.05, seed=1)
    assert np.array_equal(a, b)
    assert np.allclose(a, -a[::-1], atol=0)
    assert np.max(np.abs(a)) <= 0.995


def test_bad_inputs(params):
    with pytest.raises(ValueError):
        DynamicsProblem(params, closure="periodic")
    prob = DynamicsProblem(ModelParams(epsilon=0.1), 0.0, 0.1)
    with pytest.raises(ValueError):
        relax(prob, np.zeros(3))
    with pytest.raises(DynamicsError):
        step(DynamicsState(m=np.full(prob.grid.size, 0.99999999999999)), prob,
             dt=prob.explicit_dt_max)
