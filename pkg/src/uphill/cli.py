"""Command-line front end: configuration, dispatch and persistence.

Configuration is a flat ``key = value`` text file, optionally overridden by
command-line flags of the same name (``tol_inner`` <-> ``--tol-inner``).
All floats written to disk use 17 significant digits, so profiles
round-trip exactly and identical configs give byte-identical files.

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 acceptance failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .grid import KERNELS, build_grid, get_kernel, read_profile_csv, reflect_odd, write_profile_csv
from .model import ModelParams, spinodal_threshold, validate_params

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_ACCEPTANCE = 0, 2, 3, 4
COMMANDS = ("instanton", "macro", "solve", "shoot", "sweep", "spectral", "relax", "verify")


class ConfigError(ValueError):
    """Every problem found in a configuration, one message each."""

    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


@dataclass
class RunConfig:
    beta: float = 2.0
    kappa: float = 0.1
    epsilon: float = 0.02
    mu: float = 0.8
    dx: float = 0.05
    dt: float = 0.5
    tol: float | None = None          # command default when unset
    tol_inner: float = 1e-12
    tol_outer: float = 1e-10
    alpha: float | None = None
    kernel: str = "mollifier"
    seed: int = 0
    j: float | None = None
    mu0: float | None = None
    points: int = 101
    kappas: tuple = (0.1, 0.05, 0.02, 0.01)
    tmax: float = 1e9
    closure: str = "flux"
    amplitude: float = 0.05
    init: str | None = None
    out: str | None = None
    profile: str | None = None
    criteria: tuple = ()
    diagnostics: bool = False

    @property
    def params(self) -> ModelParams:
        return ModelParams(beta=self.beta, kappa=self.kappa, epsilon=self.epsilon, mu=self.mu)

    def snapshot(self) -> dict:
        d = asdict(self)
        d["kappas"] = list(self.kappas)
        d["criteria"] = list(self.criteria)
        return d


def _float(s):
    return float(s)


def _opt_float(s):
    return None if str(s).strip().lower() in ("", "none") else float(s)


def _int(s):
    f = float(s)
    if f != int(f):
        raise ValueError
    return int(f)


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError


def _str(s):
    return str(s).strip()


def _opt_str(s):
    s = str(s).strip()
    return s or None


def _floats(s):
    return tuple(float(v) for v in str(s).split(",") if v.strip())


def _ints(s):
    return tuple(_int(v) for v in str(s).split(",") if v.strip())


_PARSERS = {
    "beta": (_float, "float"), "kappa": (_float, "float"), "epsilon": (_float, "float"),
    "mu": (_float, "float"), "dx": (_float, "float"), "dt": (_float, "float"),
    "tol": (_opt_float, "float"), "tol_inner": (_float, "float"), "tol_outer": (_float, "float"),
    "alpha": (_opt_float, "float"), "kernel": (_str, "string"), "seed": (_int, "integer"),
    "j": (_opt_float, "float"), "mu0": (_opt_float, "float"), "points": (_int, "integer"),
    "kappas": (_floats, "comma-separated floats"), "tmax": (_float, "float"),
    "closure": (_str, "string"), "amplitude": (_float, "float"), "init": (_opt_str, "path"),
    "out": (_opt_str, "path"), "profile": (_opt_str, "path"),
    "criteria": (_ints, "comma-separated integers"), "diagnostics": (_bool, "boolean"),
}
assert set(_PARSERS) == {f.name for f in fields(RunConfig)}


def read_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError([f"line {n}: expected 'key = value', got {raw.strip()!r}"])
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def _constraints(cfg: RunConfig) -> list[str]:
    errors = validate_params(cfg.beta, cfg.kappa, cfg.epsilon, cfg.mu)
    if not cfg.dx > 0:
        errors.append("dx must be positive")
    elif 0 < cfg.epsilon < 1:
        try:
            build_grid(cfg.epsilon, cfg.dx)
        except ValueError as exc:
            errors.append(f"dx: {exc}")
    for name in ("dt", "tol_inner", "tol_outer", "tmax"):
        if not getattr(cfg, name) > 0:
            errors.append(f"{name} must be positive")
    for name in ("tol", "alpha"):
        v = getattr(cfg, name)
        if v is not None and not v > 0:
            errors.append(f"{name} must be positive")
    if cfg.kernel not in KERNELS:
        errors.append(f"kernel must be one of {sorted(KERNELS)}")
    if cfg.closure not in ("flux", "reservoir", "closed"):
        errors.append("closure must be one of flux, reservoir, closed")
    if cfg.points < 3:
        errors.append("points must be at least 3")
    if not 0 <= cfg.amplitude < 1:
        errors.append("amplitude must lie in [0, 1)")
    if cfg.seed < 0:
        errors.append("seed must be >= 0")
    if not cfg.kappas:
        errors.append("kappas must not be empty")
    for k in cfg.kappas:
        if k < 0.005:
            errors.append(f"kappas: {k} is below the resolvable floor 0.005")
    for c in cfg.criteria:
        if not 1 <= c <= 12:
            errors.append(f"criteria: {c} is not in 1..12")
    if cfg.mu0 is not None and cfg.beta > 1 and not spinodal_threshold(cfg.beta) < cfg.mu0 < 1:
        errors.append("mu0 must lie in (m*(beta), 1)")
    return errors


def _as_text(value) -> str:
    if isinstance(value, (list, tuple)):
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def parse_config(args: dict | None = None, file=None) -> RunConfig:
    """Merge a config file and explicit overrides into a validated :class:`RunConfig`.

    ``args`` wins over ``file``; keys with value ``None`` are ignored.
    Raises :class:`ConfigError` listing every unknown key, type error and
    constraint violation.
    """
    raw = {}
    if file is not None:
        raw.update(read_config_text(Path(file).read_text()))
    raw.update({k: v for k, v in (args or {}).items() if v is not None})
    errors, values = [], {}
    for key, value in raw.items():
        if key not in _PARSERS:
            errors.append(f"unknown key {key!r}")
            continue
        conv, kind = _PARSERS[key]
        try:
            values[key] = conv(_as_text(value))
        except (TypeError, ValueError):
            errors.append(f"{key}: expected {kind}, got {value!r}")
            continue
        if isinstance(values[key], float) and not math.isfinite(values[key]):
            errors.append(f"{key}: must be finite")
    # constraints are checked on the well-typed keys even when others failed
    values = {k: v for k, v in values.items() if not (isinstance(v, float) and not math.isfinite(v))}
    cfg = RunConfig(**values)
    errors += _constraints(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg


# -- serialization -----------------------------------------------------------

def _num(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats at 17 significant digits and non-finite values as null."""
    pad, inner = " " * indent * _level, " " * indent * (_level + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        return "[" + ", ".join(to_json(v, indent, _level + 1) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def write_json(path, obj) -> None:
    Path(path).write_text(to_json(obj) + "\n")


def write_table_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(_num(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class ExperimentRecord:
    command: str
    config: dict
    input_hash: str
    reports: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    exit_code: int = EXIT_OK

    def as_dict(self, timings: bool = True) -> dict:
        d = {"command": self.command, "config": self.config, "input_hash": self.input_hash,
             "reports": self.reports, "outputs": self.outputs, "exit_code": self.exit_code}
        if timings:
            d["timings"] = self.timings
        return d


def content_hash(cfg: RunConfig, command: str) -> str:
    """sha256 over the command, the canonical config and any input file."""
    h = hashlib.sha256()
    h.update(command.encode())
    h.update(to_json(cfg.snapshot()).encode())
    if cfg.init:
        h.update(Path(cfg.init).read_bytes())
    return h.hexdigest()


# -- commands ----------------------------------------------------------------

def _instanton(cfg, kappa=None, timings=None):
    from .instanton import compute_instanton

    t0 = time.perf_counter()
    inst = compute_instanton(cfg.beta, cfg.kappa if kappa is None else kappa, cfg.dx,
                             tol=cfg.tol or 1e-10, dt=cfg.dt, kernel=get_kernel(cfg.kernel))
    if timings is not None:
        timings[f"instanton_kappa={inst.kappa}"] = time.perf_counter() - t0
    return inst


def cmd_instanton(cfg, rec):
    from .instanton import ordering_bound_check, ordering_bound_constant

    inst = _instanton(cfg, timings=rec.timings)
    report = {
        "beta": cfg.beta, "kappa": cfg.kappa, "dx": cfg.dx, "half_length": inst.grid.half_length,
        "converged": inst.converged, "steps": inst.steps, "residual": inst.residual,
        "m_beta_kappa": inst.m_beta_kappa, "plateau": inst.plateau,
        "plateau_error": abs(inst.plateau - inst.m_beta_kappa),
        "origin_limit": inst.origin_limit, "origin_extrapolated": inst.origin_extrapolated,
        "tanh_beta_kappa": math.tanh(cfg.beta * cfg.kappa),
        "theta": inst.decay_rate, "tail_prefactor": inst.decay_prefactor,
        "tail_fit_residual": inst.tail.residual,
    }
    if cfg.kappa > 0:
        inst0 = _instanton(cfg, kappa=0.0, timings=rec.timings)
        report["ordering_constant"] = ordering_bound_constant(cfg.beta, cfg.kappa)
        report["ordering_margin"] = ordering_bound_check(inst, inst0)
    rec.reports["instanton"] = report
    if cfg.out:
        write_profile_csv(cfg.out, inst.x, inst.profile)
        rec.outputs.append(cfg.out)


def _mu0(cfg, inst=None):
    if cfg.mu0 is not None:
        return cfg.mu0
    inst = inst or _instanton(cfg)
    return inst.at(cfg.epsilon ** -0.5)


def cmd_macro(cfg, rec):
    from .macro import macro_profile

    mu0 = _mu0(cfg)
    prof = macro_profile(mu0, cfg.mu, cfg.beta, cfg.points)
    rec.reports["macro"] = {"mu0": mu0, "mu": cfg.mu, "beta": cfg.beta, "j_macro": prof.j_macro,
                            "max_relation_residual": float(np.max(np.abs(prof.relation_residual())))}
    if cfg.out:
        write_profile_csv(cfg.out, prof.r, prof.m, header=("r", "m"))
        rec.outputs.append(cfg.out)


def _solve(cfg, rec):
    from .stationary import solve_stationary

    inst = _instanton(cfg, timings=rec.timings)
    t0 = time.perf_counter()
    sol = solve_stationary(cfg.params, j=cfg.j, dx=cfg.dx, kernel=get_kernel(cfg.kernel),
                           tol_outer=cfg.tol or cfg.tol_outer, tol_inner=cfg.tol_inner,
                           instanton=inst)
    rec.timings["solve"] = time.perf_counter() - t0
    return sol, inst


def _solve_report(sol) -> dict:
    r = sol.report
    return {
        "j": r.j, "nu": r.nu,
        "residuals": {"res_m": r.residual_fixed_point, "res_h": r.residual_field,
                      "flux_deviation": r.flux_deviation},
        "iterations": {"outer": r.iterations_outer, "inner_total": r.iterations_inner_total},
        "converged": r.converged, "eta0": r.eta0, "pi0": r.pi0, "phi1": r.phi1,
        "alpha": r.alpha, "flags": list(r.flags),
    }


def cmd_solve(cfg, rec):
    from .spectral import compute_diagnostics
    from .stationary import apply_T

    sol, _ = _solve(cfg, rec)
    inst0 = _instanton(cfg, kappa=0.0, timings=rec.timings)
    h0 = apply_T(sol.m0, sol.report.j, cfg.params, sol.system.grid)
    diag = compute_diagnostics(sol.m0, h0, inst0, sol.system)
    sol.report.eta0, sol.report.pi0 = diag.eta0, diag.pi0
    report = _solve_report(sol)
    rec.reports["solve"] = report
    if cfg.out:
        write_json(cfg.out, report)
        rec.outputs.append(cfg.out)
    if cfg.profile:
        write_profile_csv(cfg.profile, sol.system.grid.nodes, sol.full_m())
        rec.outputs.append(cfg.profile)


def cmd_shoot(cfg, rec):
    from .shooting import solve_for_mu

    inst = _instanton(cfg, timings=rec.timings)
    t0 = time.perf_counter()
    res = solve_for_mu(cfg.mu, cfg.params, tol_shoot=cfg.tol or 1e-6, dx=cfg.dx,
                       kernel=get_kernel(cfg.kernel), instanton=inst)
    rec.timings["shoot"] = time.perf_counter() - t0
    report = res.as_dict()
    rec.reports["shoot"] = report
    if cfg.out:
        write_json(cfg.out, report)
        rec.outputs.append(cfg.out)
    if cfg.profile:
        write_profile_csv(cfg.profile, res.solution.system.grid.nodes, res.solution.full_m())
        rec.outputs.append(cfg.profile)


def cmd_sweep(cfg, rec):
    from .shooting import kappa_sweep, uphill_lower_bound

    kappas = sorted(cfg.kappas, reverse=True)
    t0 = time.perf_counter()
    entries = kappa_sweep(kappas, cfg.mu, cfg.params, tol_shoot=cfg.tol or 1e-6, dx=cfg.dx)
    rec.timings["sweep"] = time.perf_counter() - t0
    rows = [(e.kappa, e.j, e.nu, e.residual) for e in entries]
    rec.reports["sweep"] = {"rows": [list(r) for r in rows],
                            "lower_bound": uphill_lower_bound(cfg.mu, cfg.beta)}
    if cfg.out:
        write_table_csv(cfg.out, ("kappa", "j", "nu", "residual"), rows)
        rec.outputs.append(cfg.out)


def cmd_spectral(cfg, rec):
    from .spectral import linear_bound, spectral_analysis

    inst = _instanton(cfg, timings=rec.timings)
    res = spectral_analysis(inst)
    report = {"kappa": cfg.kappa, "lambda": res.lam, "bound": res.bound_quadratic,
              "margin": res.margin, "satisfied": res.satisfied, "iterations": res.iterations,
              "converged": res.converged, "eigen_residual": res.residual,
              "eigvec_min": float(np.min(res.eigvec))}
    if cfg.diagnostics:
        from .macro import macro_profile
        from .spectral import compute_diagnostics
        from .stationary import HalfLineSystem, apply_T, build_m0

        inst0 = _instanton(cfg, kappa=0.0, timings=rec.timings)
        report["linear_bound_delta_1"] = linear_bound(cfg.beta, cfg.kappa, 1.0, inst0)
        system = HalfLineSystem(cfg.params, cfg.dx, get_kernel(cfg.kernel))
        mac = macro_profile(_mu0(cfg, inst), cfg.mu, cfg.beta)
        m0 = build_m0(inst, mac, cfg.params, system.grid)
        h0 = apply_T(m0, mac.j_macro if cfg.j is None else cfg.j, cfg.params, system.grid)
        report["diagnostics"] = compute_diagnostics(m0, h0, inst0, system).as_dict()
    rec.reports["spectral"] = report
    if cfg.out:
        write_json(cfg.out, report)
        rec.outputs.append(cfg.out)


def cmd_relax(cfg, rec):
    from .dynamics import DynamicsProblem, perturb, relax
    from .macro import macro_current

    problem = DynamicsProblem(cfg.params, 0.0, cfg.dx, cfg.closure, get_kernel(cfg.kernel))
    if cfg.init:
        x, m = read_profile_csv(cfg.init)
        if m.shape != problem.grid.nodes.shape or np.max(np.abs(x - problem.grid.nodes)) > 1e-9:
            raise ValueError(f"dynamics: profile in {cfg.init} does not match the grid "
                             f"(N={problem.grid.size}, dx={cfg.dx})")
        inst = None
    else:
        from .macro import macro_profile
        from .stationary import build_m0

        inst = _instanton(cfg, timings=rec.timings)
        mac = macro_profile(_mu0(cfg, inst), cfg.mu, cfg.beta)
        m = perturb(reflect_odd(build_m0(inst, mac, cfg.params, build_grid(cfg.epsilon, cfg.dx))),
                    cfg.amplitude, cfg.seed)
    problem.j = cfg.j if cfg.j is not None else macro_current(_mu0(cfg, inst), cfg.mu, cfg.beta)
    t0 = time.perf_counter()
    run = relax(problem, m, t_max=cfg.tmax, tol=cfg.tol or 1e-10)
    rec.timings["relax"] = time.perf_counter() - t0
    rec.reports["relax"] = {
        "j": problem.j, "closure": cfg.closure, "converged": run.converged, "t": run.t,
        "steps": run.steps, "rate": run.rate, "energy_initial": run.energies[0],
        "energy_final": run.energies[-1], "energy_increases": len(run.energy_increases()),
        "flux_mean": float(np.mean(run.flux)),
    }
    if cfg.out:
        write_profile_csv(cfg.out, problem.grid.nodes, run.m)
        rec.outputs.append(cfg.out)


def cmd_verify(cfg, rec):
    from .acceptance import AcceptanceContext, run_acceptance

    ctx = AcceptanceContext(cfg.beta, cfg.kappa, cfg.epsilon, cfg.mu, cfg.dx, cfg.seed)
    results = run_acceptance(list(cfg.criteria) or None, ctx, echo=lambda s: print(s, file=sys.stderr))
    rec.reports["verify"] = {str(r.number): {"name": r.name, "passed": r.passed,
                                             "details": r.details} for r in results}
    for r in results:
        rec.timings[f"criterion_{r.number}"] = r.seconds
    if cfg.out:
        write_json(cfg.out, rec.reports["verify"])
        rec.outputs.append(cfg.out)
    if not all(r.passed for r in results):
        rec.exit_code = EXIT_ACCEPTANCE


_DISPATCH = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def run_command(config: RunConfig, command: str) -> ExperimentRecord:
    """Run one command; solver exceptions propagate to the caller."""
    if command not in _DISPATCH:
        raise ConfigError([f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}"])
    rec = ExperimentRecord(command=command, config=config.snapshot(),
                           input_hash=content_hash(config, command))
    t0 = time.perf_counter()
    _DISPATCH[command](config, rec)
    rec.timings["total"] = time.perf_counter() - t0
    return rec


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat 'key = value' config file")
    for f in fields(RunConfig):
        flag = "--from" if f.name == "init" else "--" + f.name.replace("_", "-")
        if f.name == "diagnostics":
            common.add_argument(flag, dest=f.name, nargs="?", const="true", default=None)
        else:
            common.add_argument(flag, dest=f.name, default=None, metavar=f.name.upper())
    parser = argparse.ArgumentParser(prog="uphill", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    from .dynamics import DynamicsError
    from .stationary import SolverError

    ns = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    try:
        cfg = parse_config(overrides, ns.config)
    except ConfigError as exc:
        for msg in exc.messages:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rec = run_command(cfg, ns.command)
    except (SolverError, DynamicsError) as exc:
        print(f"solver failure [{type(exc).__module__.split('.')[-1]}] "
              f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(to_json(rec.as_dict()))
    return rec.exit_code


if __name__ == "__main__":
    sys.exit(main())
