"""Scenario runner: ``sim <task> --config scenario.json``.

A scenario names a model from the catalog, its parameters (rates quoted as
omega/2pi in kHz) and task options.  The runner validates it against the
shipped JSON schema, converts to rad/s, dispatches the task and renders a
report as an aligned table, CSV or JSON.  Floats are printed with nine
significant digits so identical configs give byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Any, Callable

import jsonschema
import numpy as np

from . import analytics, fock, gaussian, models
from .gaussian import CovarianceState, GaussianSystem
from .models import KHZ

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY = 4

SCHEMA_VERSION = "1"
TASKS = ("steady", "evolve", "gap", "sweep", "verify", "params")
FORMATS = ("table", "csv", "json")

MODEL_KEYS = {
    "single-cavity-ideal": ("beta", "r", "theta", "kappa_a", "kappa_b"),
    "single-cavity-general": ("beta_r1", "beta_s1", "beta_r2", "beta_s2", "N1", "N2",
                              "delta_a_eff", "delta_b_eff", "kappa_a", "kappa_b"),
    "single-mode": ("beta", "r", "theta", "kappa"),
    "cascaded": ("beta", "r", "theta", "kappa", "eta"),
    "reduced": ("beta", "r", "theta", "kappa"),
}
CAVITY_MODES = {
    "single-cavity-ideal": ("a", "b"),
    "single-cavity-general": ("a", "b"),
    "single-mode": ("a",),
    "cascaded": ("a1", "b1", "a2", "b2"),
    "reduced": (),
}
DEFAULT_PAIR = {
    "single-mode": ("a", "c1"),
}
RATE_KEYS = frozenset({"beta", "kappa", "kappa_a", "kappa_b", "beta_r1", "beta_s1", "beta_r2",
                       "beta_s2", "delta_a_eff", "delta_b_eff", "g", "Omega", "Delta",
                       "gamma", "omega_1"})
METRICS = ("V_Xsum", "V_Xdiff", "V_Psum", "V_Pdiff", "purity", "n_cav_total")


class ConfigError(ValueError):
    """Invalid scenario; maps to exit code 2."""


class NumericalFailure(RuntimeError):
    """Unstable system or a solver that did not converge; maps to exit code 3."""


@dataclass
class Report:
    title: str
    columns: tuple[str, ...]
    rows: list[dict[str, Any]]
    failed: bool = False
    notes: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# configuration


@lru_cache(maxsize=1)
def load_schema() -> dict:
    text = resources.files("atomsqueeze").joinpath("schema", "scenario-v1.json").read_text()
    return json.loads(text)


def _field_path(error: jsonschema.ValidationError) -> str:
    path = ".".join(str(p) for p in error.absolute_path)
    return path or "<root>"


def validate_config(config: Any) -> None:
    """Raise :class:`ConfigError` naming the offending field and invariant."""
    validator = jsonschema.Draft202012Validator(load_schema())
    error = jsonschema.exceptions.best_match(validator.iter_errors(config))
    if error is None:
        return
    message = f"config field '{_field_path(error)}': {error.message}"
    hint = error.schema.get("description") if isinstance(error.schema, dict) else None
    if hint:
        message += f" ({hint})"
    raise ConfigError(message)


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    validate_config(config)
    return config


def _to_si(params: dict) -> dict:
    return {k: (v * KHZ if k in RATE_KEYS else v) for k, v in params.items()}


def build_system(model: str, params: dict) -> GaussianSystem:
    """Gaussian system for catalog ``model`` with SI (rad/s) parameters."""
    p = dict(params)
    try:
        if model == "single-cavity-ideal":
            return models.build_single_cavity_ideal(models.IdealParams(**p))
        if model == "single-cavity-general":
            return models.build_single_cavity_general(models.GeneralRamanParams(**p))
        if model == "single-mode":
            return models.build_single_mode(**p)
        if model == "cascaded":
            return models.build_cascaded(models.CascadeParams(**p))
        if model == "reduced":
            return models.build_reduced_adiabatic(**p)
    except ValueError as exc:
        raise ConfigError(f"parameters: {exc}") from exc
    raise ConfigError(f"config field 'model': unknown model {model!r}")


@dataclass(frozen=True)
class Scenario:
    model: str
    params: dict  # rad/s
    options: dict
    physical: dict | None

    @property
    def pair(self) -> tuple[str, str]:
        if "modes" in self.options:
            return tuple(self.options["modes"])
        return DEFAULT_PAIR.get(self.model, ("c1", "c2"))

    def system(self) -> GaussianSystem:
        return build_system(self.model, self.params)


def scenario_from_config(config: dict, task: str) -> Scenario:
    if config.get("task", task) != task:
        raise ConfigError(f"config field 'task': file says {config['task']!r} but "
                          f"the command line asks for {task!r}")
    physical = config.get("physical")
    if task == "params":
        if physical is None:
            raise ConfigError("config field 'physical': required by the params task")
        return Scenario(config.get("model", ""), {}, config.get("options", {}), _to_si(physical))
    for key in ("model", "parameters"):
        if key not in config:
            raise ConfigError(f"config field '{key}': required by the {task} task")
    scenario = Scenario(config["model"], _to_si(config["parameters"]),
                        config.get("options", {}), physical)
    labels = scenario.system().labels
    for mode in scenario.pair:
        if mode not in labels:
            raise ConfigError(f"config field 'options.modes': {mode!r} is not a mode of "
                              f"{scenario.model} (modes: {', '.join(labels)})")
    return scenario


# ---------------------------------------------------------------------------
# tasks


def pair_metrics(state: CovarianceState, pair: tuple[str, str],
                 cavities: tuple[str, ...]) -> dict[str, float]:
    v = gaussian.epr_variances(state, *pair)
    return {
        "V_Xsum": v.x_sum, "V_Xdiff": v.x_diff, "V_Psum": v.p_sum, "V_Pdiff": v.p_diff,
        "purity": gaussian.purity(state),
        "n_cav_total": sum(gaussian.occupation(state, c) for c in cavities),
    }


def _steady(system: GaussianSystem) -> CovarianceState:
    try:
        return gaussian.steady_state(gaussian.assemble_generator(system))
    except gaussian.NotHurwitz as exc:
        raise NumericalFailure(f"no steady state: {exc}") from exc


def task_steady(sc: Scenario, jobs: int) -> Report:
    state = _steady(sc.system())
    cavities = CAVITY_MODES[sc.model]
    row = pair_metrics(state, sc.pair, cavities)
    v = gaussian.EPRVariances(row["V_Xsum"], row["V_Xdiff"], row["V_Psum"], row["V_Pdiff"])
    pair_state = state.reduced(sc.pair)
    row.update({
        "V_best": v.best(),
        "dB_Xsum": analytics.to_db(v.x_sum),
        "dB_best": analytics.to_db(v.best()),
        "pair_purity": gaussian.purity(pair_state),
        "log_negativity": gaussian.log_negativity(pair_state, [sc.pair[0]]),
    })
    for c in cavities:
        row[f"n_{c}"] = gaussian.occupation(state, c)
    return Report(f"steady {sc.model} ({sc.pair[0]}, {sc.pair[1]})", tuple(row), [row])


def task_evolve(sc: Scenario, jobs: int) -> Report:
    if "t_final_us" not in sc.options:
        raise ConfigError("config field 'options.t_final_us': required by the evolve task")
    system = sc.system()
    gen = gaussian.assemble_generator(system)
    t_final = sc.options["t_final_us"] * 1e-6
    try:
        traj = gaussian.evolve(gen, gaussian.vacuum(system.labels), t_final,
                               n_samples=sc.options.get("samples", 101))
    except gaussian.IntegrationError as exc:
        raise NumericalFailure(str(exc)) from exc
    cavities = CAVITY_MODES[sc.model]
    rows = [{"t_us": t * 1e6, **pair_metrics(s, sc.pair, cavities)} for t, s in traj]
    return Report(f"evolve {sc.model}", ("t_us",) + METRICS, rows)


def _adiabatic_gamma(p: dict) -> float:
    return analytics.gamma_rate(p["beta"], p["r"], p["kappa"])


def task_gap(sc: Scenario, jobs: int) -> Report:
    gap = gaussian.spectral_gap(gaussian.assemble_generator(sc.system()))
    row: dict[str, Any] = {"gap_khz": gap / KHZ,
                           "relax_time_us": 1e6 / gap if gap > 0 else math.inf}
    p = sc.params
    if sc.model == "single-cavity-ideal" and p["kappa_a"] == p["kappa_b"]:
        lp = analytics.lambda_plus(p["kappa_a"], p["beta"], p["r"])
        row.update({"lambda_plus_khz": lp.rate / KHZ, "regime": lp.regime,
                    "rel_delta": abs(gap - lp.rate) / lp.rate})
    elif sc.model in ("cascaded", "reduced"):
        g = _adiabatic_gamma(p)
        row.update({"Gamma_khz": g / KHZ, "two_Gamma_khz": 2 * g / KHZ})
    if gap <= 0:
        row["stable"] = False
    return Report(f"gap {sc.model}", tuple(row), [row], failed=gap <= 0)


def sweep_grid(sc: Scenario) -> tuple[str, np.ndarray]:
    sweep = sc.options.get("sweep")
    if sweep is None:
        raise ConfigError("config field 'options.sweep': required by the sweep task")
    name = sweep["parameter"]
    if name not in MODEL_KEYS[sc.model]:
        raise ConfigError(f"config field 'options.sweep.parameter': {name!r} is not a "
                          f"parameter of {sc.model} ({', '.join(MODEL_KEYS[sc.model])})")
    return name, np.linspace(sweep["start"], sweep["stop"], sweep["steps"])


def task_sweep(sc: Scenario, jobs: int) -> Report:
    name, grid = sweep_grid(sc)
    scale = KHZ if name in RATE_KEYS else 1.0
    points = []
    for k, value in enumerate(grid):
        params = {**sc.params, name: float(value) * scale}
        try:
            points.append(build_system(sc.model, params))
        except ConfigError as exc:
            raise ConfigError(f"config field 'options.sweep' (grid point {k}, "
                              f"{name}={value:.9g}): {exc}") from exc
    cavities = CAVITY_MODES[sc.model]

    def solve(k: int) -> dict:
        try:
            state = _steady(points[k])
        except NumericalFailure as exc:
            raise NumericalFailure(f"grid point {k} ({name}={grid[k]:.9g}): {exc}") from exc
        return {name: float(grid[k]), **pair_metrics(state, sc.pair, cavities)}

    # Executor.map yields results in submission order, so rows stay in grid order.
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        rows = list(pool.map(solve, range(len(grid))))
    return Report(f"sweep {sc.model} over {name}", (name,) + METRICS, rows)


def _analytic_checks(sc: Scenario, state: CovarianceState, gap: float) -> list[dict]:
    """(check, value, reference, tol) rows comparing numerics with closed forms."""
    p, tol = sc.params, sc.options.get("analytic_tol")
    checks = []
    if sc.model in ("single-cavity-ideal", "reduced"):
        sq, anti = analytics.v_epr_ideal(p["r"])
        v = gaussian.epr_variances(state, "c1", "c2")
        # the single cavity squeezes X1+X2; the cascaded schemes squeeze X1-X2
        key = "x_sum" if sc.model == "single-cavity-ideal" else "x_diff"
        other = "x_diff" if key == "x_sum" else "x_sum"
        t = tol or 1e-6
        checks += [(f"V_{key}", getattr(v, key), sq, t * sq),
                   (f"V_{other}", getattr(v, other), anti, t * anti)]
        if sc.model == "single-cavity-ideal" and p["kappa_a"] == p["kappa_b"]:
            lp = analytics.lambda_plus(p["kappa_a"], p["beta"], p["r"]).rate
            checks.append(("gap_khz", gap / KHZ, lp / KHZ, t * lp / KHZ))
        elif sc.model == "reduced":
            g = _adiabatic_gamma(p)
            checks.append(("gap_khz", gap / KHZ, g / KHZ, t * g / KHZ))
    elif sc.model == "single-mode":
        eig = np.linalg.eigvalsh(state.block(["c1"]))
        sq, anti = (1 - p["r"]) / (1 + p["r"]), (1 + p["r"]) / (1 - p["r"])
        t = tol or 1e-6
        checks += [("V_c1_min", eig[0], sq, t * sq), ("V_c1_max", eig[1], anti, t * anti)]
    elif sc.model == "cascaded":
        ref = analytics.v_epr_cascaded(p["r"], p["eta"])
        t = tol if tol is not None else 4.0 * (p["beta"] / p["kappa"]) ** 2 + 1e-4
        checks.append(("V_x_diff", gaussian.epr_variances(state, "c1", "c2").x_diff, ref, t))
    elif sc.model == "single-cavity-general":
        gp = models.GeneralRamanParams(**p)
        report = models.check_matching_conditions(gp)
        if report.satisfied(1e-9) and not report.unstable:
            sq, _ = analytics.v_epr_ideal(report.r_effective)
            t = tol or 1e-6
            checks.append(("V_x_sum", gaussian.epr_variances(state, "c1", "c2").x_sum,
                           sq, t * sq))
    return [{"check": c, "value": v, "reference": r, "delta": abs(v - r), "tol": t,
             "pass": bool(abs(v - r) <= t)} for c, v, r, t in checks]


def _oracle_check(sc: Scenario, system: GaussianSystem, state: CovarianceState) -> dict:
    cutoffs = tuple(sc.options["oracle_cutoffs"])
    if len(cutoffs) != system.n_modes:
        raise ConfigError(f"config field 'options.oracle_cutoffs': need {system.n_modes} "
                          f"cutoffs ({', '.join(system.labels)}), got {len(cutoffs)}")
    try:
        cfg = fock.FockConfig(cutoffs)
        oracle = fock.moments(fock.steady_state(system, cfg))
    except (fock.TruncationError, ValueError) as exc:
        raise ConfigError(f"config field 'options.oracle_cutoffs': {exc}") from exc
    except fock.NotConverged as exc:
        raise NumericalFailure(str(exc)) from exc
    delta = float(np.abs(oracle.sigma - state.sigma).max())
    tol = sc.options.get("oracle_tol", 1e-2)
    return {"check": f"fock_oracle{list(cutoffs)}", "value": delta, "reference": 0.0,
            "delta": delta, "tol": tol, "pass": bool(delta <= tol)}


def task_verify(sc: Scenario, jobs: int) -> Report:
    system = sc.system()
    gen = gaussian.assemble_generator(system)
    state = _steady(system)
    rows = [{"check": "lyapunov_residual", "value": gaussian.lyapunov_residual(gen, state.sigma),
             "reference": 0.0, "tol": 1e-8 * max(1.0, np.linalg.norm(gen.D))}]
    rows[0]["delta"] = rows[0]["value"]
    rows.append({"check": "physicality_margin", "value": gaussian.physicality_margin(state),
                 "reference": 0.0, "delta": 0.0, "tol": 1e-8})
    rows[1]["delta"] = max(0.0, -rows[1]["value"])
    for row in rows:
        row["pass"] = bool(row["delta"] <= row["tol"])
    rows += _analytic_checks(sc, state, gaussian.spectral_gap(gen))
    if "oracle_cutoffs" in sc.options:
        rows.append(_oracle_check(sc, system, state))
    columns = ("check", "value", "reference", "delta", "tol", "pass")
    rows = [{c: row[c] for c in columns} for row in rows]
    return Report(f"verify {sc.model}", columns, rows,
                  failed=not all(row["pass"] for row in rows))


def task_params(sc: Scenario, jobs: int) -> Report:
    phys = sc.physical
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            est = models.estimate_physical(models.PhysicalParams(**phys))
        except ValueError as exc:
            raise ConfigError(f"config field 'physical': {exc}") from exc
    row = {
        "beta_single_khz": est.beta_single / KHZ,
        "beta_collective_khz": est.beta_collective / KHZ,
        "spont_rate_khz": est.spont_rate / KHZ,
        "stark_shift_khz": est.stark_shift / KHZ,
    }
    return Report("params", tuple(row), [row], notes=[str(w.message) for w in caught])


TASK_RUNNERS: dict[str, Callable[[Scenario, int], Report]] = {
    "steady": task_steady, "evolve": task_evolve, "gap": task_gap,
    "sweep": task_sweep, "verify": task_verify, "params": task_params,
}


# ---------------------------------------------------------------------------
# rendering


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating, int, np.integer)):
        return f"{float(value):.9g}"
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating, int, np.integer)):
        x = float(f"{float(value):.9g}")
        return x if math.isfinite(x) else None
    return value


def render(report: Report, fmt: str) -> str:
    if fmt == "json":
        doc = {"title": report.title, "ok": not report.failed,
               "rows": [{c: _json_value(row[c]) for c in report.columns} for row in report.rows]}
        if report.notes:
            doc["notes"] = report.notes
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(report.columns)
        for row in report.rows:
            writer.writerow([_cell(row[c]) for c in report.columns])
        return buf.getvalue()
    lines = [f"# {report.title}"]
    if len(report.rows) == 1 and "check" not in report.columns:
        width = max(len(c) for c in report.columns)
        lines += [f"{c:<{width}}  {_cell(report.rows[0][c])}" for c in report.columns]
    else:
        table = [list(report.columns)] + [[_cell(r[c]) for c in report.columns]
                                          for r in report.rows]
        widths = [max(len(line[k]) for line in table) for k in range(len(report.columns))]
        lines += ["  ".join(cell.rjust(w) for cell, w in zip(line, widths)) for line in table]
    lines += [f"note: {n}" for n in report.notes]
    if report.failed:
        lines.append("FAILED")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# entry points


def run(config: dict, task: str, output_format: str = "table", jobs: int = 1) -> tuple[int, str]:
    """Validate and execute ``config``; return (exit code, rendered report or error)."""
    try:
        if task not in TASKS:
            raise ConfigError(f"unknown task {task!r} (choose from {', '.join(TASKS)})")
        if output_format not in FORMATS:
            raise ConfigError(f"unknown format {output_format!r}")
        validate_config(config)
        scenario = scenario_from_config(config, task)
        report = TASK_RUNNERS[task](scenario, jobs)
    except ConfigError as exc:
        return EXIT_INVALID, f"validation error: {exc}"
    except (NumericalFailure, gaussian.NotHurwitz, gaussian.IntegrationError,
            fock.NotConverged, np.linalg.LinAlgError) as exc:
        return EXIT_NUMERICAL, f"numerical failure: {exc}"
    return (EXIT_VERIFY if report.failed else EXIT_OK), render(report, output_format)


def _default_jobs() -> int:
    raw = os.environ.get("SIM_JOBS", "1")
    try:
        jobs = int(raw)
    except ValueError:
        raise ConfigError(f"SIM_JOBS must be a positive integer, got {raw!r}") from None
    if jobs < 1:
        raise ConfigError(f"SIM_JOBS must be a positive integer, got {raw!r}")
    return jobs


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="sim", description="Two-mode atomic squeezing scenarios.")
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("--config", required=True, help="JSON scenario file")
    parser.add_argument("--format", choices=FORMATS, default="table")
    parser.add_argument("--out", help="write the report here instead of stdout")
    parser.add_argument("--jobs", type=int, help="parallel sweep workers (default $SIM_JOBS or 1)")
    args = parser.parse_args(argv)

    try:
        jobs = args.jobs if args.jobs is not None else _default_jobs()
        if jobs < 1:
            raise ConfigError(f"--jobs must be a positive integer, got {jobs}")
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"sim: validation error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    code, text = run(config, args.task, args.format, jobs)
    if code in (EXIT_INVALID, EXIT_NUMERICAL):
        print(f"sim: {text}", file=sys.stderr)
        return code
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
