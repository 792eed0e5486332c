"""Independent check: the conservative dynamics relaxes onto the solver's profile.

The free energy is not a Lyapunov function of the driven system: the current
entering and leaving at the edges does work on it.  In a closed box it is.
"""
import numpy as np

from uphill.dynamics import DynamicsProblem, perturb, relax
from uphill.grid import reflect_odd
from uphill.model import ModelParams
from uphill.stationary import solve_stationary

params = ModelParams()
sol = solve_stationary(params)
problem = DynamicsProblem(params, sol.report.j, 0.05, closure="flux")

init = perturb(reflect_odd(sol.m0), 0.05, seed=0)
run = relax(problem, init)
print(f"converged: {run.converged} after {run.steps} implicit steps, t = {run.t:.3g}")
print(f"sup |m_dyn - m_solver| = {np.max(np.abs(run.m - sol.full_m())):.2e}")
print(f"face currents: {run.flux.min():.8f} .. {run.flux.max():.8f}  (j eps = {sol.report.j * 0.02:.8f})")
e = np.asarray(run.energies)
print(f"F: start {e[0]:.5f}, min {e.min():.5f}, end {e[-1]:.5f}; "
      f"{len(run.energy_increases())} of {e.size - 1} steps raised F")

closed = DynamicsProblem(params, 0.0, 0.05, closure="closed")
run = relax(closed, init, t_max=1e3)
e = np.asarray(run.energies)
print(f"\nclosed box: mass drift {abs(run.m.sum() - init.sum()):.1e}, "
      f"F never increases: {not run.energy_increases(slack=1e-12)}")
