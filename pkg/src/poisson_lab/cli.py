"""Batch command line: one JSON-configured experiment per invocation.

Usage::

    poisson-lab <subcommand> [--config PATH] [--seed U64] [--reps N]
                             [--out DIR] [--format csv|json]

Subcommands: ``simulate``, ``fidi``, ``tightness``, ``conditions``,
``oracle-tv``, ``limit-paths``. Exit status is 0 on success, 2 when the
configuration is rejected and 3 when the run itself fails.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import DomainError, __version__
from . import conditions as cond
from . import montecarlo as mc
from .distributions import (corrected_geometric_sum_pmf, poisson_binomial_pmf, poisson_pmf,
                            squared_rate_sum, tv_distance)
from .process import WindowSpec, build_path
from .schedules import (FAMILIES, KINDS, ScaleFunction, alternating_schedule,
                        inverse_log_rule, log_harmonic_schedule, log_interp_rule,
                        ratio_shift_schedule, stationary_schedule)

EXPERIMENTS = ("simulate", "fidi", "tightness", "conditions", "oracle_tv", "limit_paths")
EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3

_FAMILY_PARAMS = {
    "stationary": {},
    "log_harmonic": {"epsilon": None, "lambda_rule": "constant", "c": 1.0, "kn": "n"},
    "alternating": {"epsilon_n": None, "c": 1.0, "kn": "n-1"},
    "ratio_shift": {"lambda_rule": "constant", "c": 1.0},
}
_DEFAULTS = {
    "experiment": None,
    "schedule": "stationary",
    "kind": "bernoulli",
    "lambda": None,
    "params": {},
    "scale": "identity",
    "n_list": None,
    "times": [0.5, 1.0],
    "delta": [0.1, 0.05, 0.025],
    "eta": [0.5, 1.5],
    "reps": 10_000,
    "master_seed": 12345,
    "grid": 1000,
    "output": "results",
    "format": "csv",
}


class ConfigError(ValueError):
    """Configuration rejected; always maps to exit status 2."""


class SchemaError(ConfigError):
    pass


class ValidationError(ConfigError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    schedule: str
    kind: str
    lam: float
    params: dict
    scale: dict
    n_list: tuple
    times: tuple
    delta: tuple
    eta: tuple
    reps: int
    master_seed: int
    grid: int
    output: str
    format: str

    def semantic_dict(self) -> dict:
        """Every field that can change results (not the output location or format)."""
        d = dataclasses.asdict(self)
        d.pop("output")
        d.pop("format")
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def build_schedule(self, n_values=()):
        return _build_schedule(self.schedule, self.kind, self.lam, self.params, n_values)

    def build_scale(self) -> ScaleFunction:
        return _build_scale(self.scale)


def _build_schedule(family, kind, lam, params, n_values=()):
    if family == "stationary":
        return stationary_schedule(lam, kind, n_values)
    if family == "log_harmonic":
        lambda_n = log_interp_rule(lam, params["c"]) if params["lambda_rule"] == "log_interp" else None
        kn = None if params["kn"] == "n" else int(params["kn"])
        return log_harmonic_schedule(lam, params["epsilon"], lambda_n=lambda_n, kn=kn,
                                     kind=kind, n_values=n_values)
    if family == "alternating":
        eps = params["epsilon_n"]
        eps = inverse_log_rule(params["c"]) if eps == "inv_log" else float(eps)
        kn = None if params["kn"] == "n-1" else int(params["kn"])
        return alternating_schedule(lam, eps, kn=kn, kind=kind, n_values=n_values)
    lambda_n = log_interp_rule(lam, params["c"]) if params["lambda_rule"] == "log_interp" else None
    return ratio_shift_schedule(lam, lambda_n=lambda_n, kind=kind, n_values=n_values)


def _build_scale(spec: dict) -> ScaleFunction:
    name = spec["name"]
    if name == "identity":
        return ScaleFunction.identity()
    if name == "power":
        return ScaleFunction.power(spec["exponent"])
    return ScaleFunction.piecewise_linear(spec["knots"], spec["values"])


def _require(cond_ok, message):
    if not cond_ok:
        raise ValidationError(message)


def _number(value, key, integer=False):
    ok = isinstance(value, int) if integer else isinstance(value, (int, float))
    if isinstance(value, bool) or not ok:
        raise SchemaError(f"{key}: expected {'an integer' if integer else 'a number'}, got {value!r}")
    return int(value) if integer else float(value)


def _number_list(value, key, integer=False):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, list):
        raise SchemaError(f"{key}: expected a list, got {value!r}")
    return tuple(_number(v, key, integer) for v in value)


def _parse_params(family, raw):
    if not isinstance(raw, dict):
        raise SchemaError(f"params: expected an object, got {raw!r}")
    allowed = _FAMILY_PARAMS[family]
    for key in raw:
        if key not in allowed:
            raise SchemaError(f"params.{key}: unknown parameter for schedule {family!r}")
    params = dict(allowed)
    params.update(raw)
    for key, value in params.items():
        if value is None:
            raise SchemaError(f"params.{key}: required for schedule {family!r}")
    if family == "log_harmonic":
        params["epsilon"] = _number(params["epsilon"], "params.epsilon")
        _require(0 < params["epsilon"] < 1, "params.epsilon: ε ∈ (0,1)")
    if family == "alternating" and params["epsilon_n"] != "inv_log":
        params["epsilon_n"] = _number(params["epsilon_n"], "params.epsilon_n")
    if "lambda_rule" in params and params["lambda_rule"] not in ("constant", "log_interp"):
        raise SchemaError(f"params.lambda_rule: unknown rule {params['lambda_rule']!r}")
    if "c" in params:
        params["c"] = _number(params["c"], "params.c")
    return params


def _parse_scale(raw):
    if isinstance(raw, str):
        raw = {"name": raw}
    if not isinstance(raw, dict) or "name" not in raw:
        raise SchemaError(f"scale: expected a name or an object with 'name', got {raw!r}")
    keys = {"identity": {"name"}, "power": {"name", "exponent"},
            "piecewise_linear": {"name", "knots", "values"}}.get(raw["name"])
    if keys is None:
        raise SchemaError(f"scale.name: unknown scale function {raw['name']!r}")
    for key in raw:
        if key not in keys:
            raise SchemaError(f"scale.{key}: unknown key")
    for key in keys - set(raw):
        raise SchemaError(f"scale.{key}: required")
    spec = {"name": raw["name"]}
    if raw["name"] == "power":
        spec["exponent"] = _number(raw["exponent"], "scale.exponent")
        _require(spec["exponent"] > 0, "scale.exponent > 0")
    elif raw["name"] == "piecewise_linear":
        spec["knots"] = list(_number_list(raw["knots"], "scale.knots"))
        spec["values"] = list(_number_list(raw["values"], "scale.values"))
    try:
        _build_scale(spec)
    except DomainError as exc:
        raise ValidationError(f"scale: {exc}") from None
    return spec


def parse_config(text: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Parse and validate a JSON experiment document.

    ``overrides`` replaces top-level keys after parsing (used by the CLI flags).
    Unknown keys raise :class:`SchemaError`; out-of-domain values raise
    :class:`ValidationError`.
    """
    try:
        raw = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise SchemaError("config must be a JSON object")
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    for key in raw:
        if key not in _DEFAULTS:
            raise SchemaError(f"{key}: unknown configuration key")
    doc = dict(_DEFAULTS)
    doc.update(raw)

    experiment = doc["experiment"]
    if isinstance(experiment, str):
        experiment = experiment.replace("-", "_")
    if experiment not in EXPERIMENTS:
        raise SchemaError(f"experiment: expected one of {EXPERIMENTS}, got {doc['experiment']!r}")
    family = doc["schedule"]
    if family not in FAMILIES:
        raise SchemaError(f"schedule: expected one of {FAMILIES}, got {family!r}")
    if doc["kind"] not in KINDS:
        raise SchemaError(f"kind: expected one of {KINDS}, got {doc['kind']!r}")
    if doc["format"] not in ("csv", "json"):
        raise SchemaError(f"format: expected 'csv' or 'json', got {doc['format']!r}")
    if doc["lambda"] is None:
        raise SchemaError("lambda: required")
    lam = _number(doc["lambda"], "lambda")
    _require(lam > 0, "lambda > 0")

    if doc["n_list"] is None:
        if experiment != "limit_paths":
            raise SchemaError("n_list: required")
        doc["n_list"] = []
    n_list = _number_list(doc["n_list"], "n_list", integer=True)
    _require(experiment == "limit_paths" or len(n_list) > 0, "n_list non-empty")
    _require(all(n >= 1 for n in n_list), "n_list entries ≥ 1")
    times = _number_list(doc["times"], "times")
    _require(len(times) > 0 and all(0 < t <= 1 for t in times)
             and all(a < b for a, b in zip(times, times[1:])),
             "times strictly increasing in (0,1]")
    delta = _number_list(doc["delta"], "delta")
    _require(len(delta) > 0 and all(0 < d < 1 for d in delta), "delta ∈ (0,1)")
    eta = _number_list(doc["eta"], "eta")
    _require(len(eta) > 0 and all(e > 0 for e in eta), "eta > 0")
    reps = _number(doc["reps"], "reps", integer=True)
    _require(reps >= 1, "reps ≥ 1")
    if experiment in ("fidi", "tightness"):
        _require(reps >= mc.MIN_REPS, f"reps ≥ {mc.MIN_REPS} for {experiment}")
    seed = _number(doc["master_seed"], "master_seed", integer=True)
    _require(0 <= seed < 2 ** 64, "master_seed ∈ [0, 2^64)")
    grid = _number(doc["grid"], "grid", integer=True)
    _require(grid >= 100, "grid ≥ 100")
    if not isinstance(doc["output"], str) or not doc["output"]:
        raise SchemaError(f"output: expected a directory path, got {doc['output']!r}")

    params = _parse_params(family, doc["params"])
    scale = _parse_scale(doc["scale"])
    config = ExperimentConfig(experiment, family, doc["kind"], lam, params, scale, n_list,
                              times, delta, eta, reps, seed, grid, doc["output"], doc["format"])
    try:
        config.build_schedule(n_list)
    except DomainError as exc:
        raise ValidationError(f"schedule {family!r}: {exc}") from None
    return config


# -- tables ------------------------------------------------------------------

def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (tuple, list)):
        return ";".join(format_value(v) for v in value)
    return str(value)


def parse_value(text: str, kind: str):
    if text == "":
        return None
    if kind == "bool":
        return text == "true"
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    if kind == "tuple":
        return tuple(float(v) for v in text.split(";"))
    return text


def _kind_of(value) -> str:
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, (int, np.integer)):
        return "int"
    if isinstance(value, (float, np.floating)):
        return "float"
    if isinstance(value, (tuple, list)):
        return "tuple"
    return "str"


@dataclass
class Table:
    """Rows sharing a column schema; ``types`` maps column to a value kind."""

    columns: list
    types: dict
    rows: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([format_value(row[c]) for c in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        def plain(v):
            if isinstance(v, (tuple, list)):
                return [plain(x) for x in v]
            if isinstance(v, np.integer):
                return int(v)
            if isinstance(v, np.floating):
                return float(v)
            return v
        doc = {"columns": self.columns, "types": self.types,
               "rows": [{c: plain(row[c]) for c in self.columns} for row in self.rows]}
        return json.dumps(doc, indent=2) + "\n"


def table_from_records(records, types=None) -> Table:
    rows = [dataclasses.asdict(r) if dataclasses.is_dataclass(r) else dict(r) for r in records]
    columns = list(rows[0]) if rows else []
    inferred = dict(types or {})
    for c in columns:
        if c not in inferred:
            sample = next((r[c] for r in rows if r[c] is not None), "")
            inferred[c] = _kind_of(sample)
    return Table(columns, inferred, rows)


def read_csv_table(text: str, types: dict) -> list:
    return [{c: parse_value(v, types[c]) for c, v in row.items()}
            for row in csv.DictReader(io.StringIO(text))]


def read_json_table(text: str) -> list:
    doc = json.loads(text)
    out = []
    for row in doc["rows"]:
        out.append({c: tuple(v) if doc["types"][c] == "tuple" and v is not None else v
                    for c, v in row.items()})
    return out


# -- experiments ---------------------------------------------------------------

def _oracle_tv(config):
    schedule = config.build_schedule()
    kmax = int(config.lam + 10 * math.sqrt(config.lam) + 30)
    target = poisson_pmf(config.lam, kmax)
    rows = []
    for n in config.n_list:
        rates = schedule.rates(n)
        exact = (poisson_binomial_pmf(rates) if config.kind == "bernoulli"
                 else corrected_geometric_sum_pmf(rates, kmax))
        rows.append({"n": n, "row_sum": math.fsum(rates), "tv_exact": tv_distance(exact, target),
                     "squared_rate_sum": squared_rate_sum(rates)})
    return {"oracle_tv": table_from_records(rows)}


def _path_rows(rep, path):
    rows = [{"rep": rep, "time": 0.0, "value": int(path.value(0.0))}]
    for t, v in zip(path.jump_times, np.cumsum(path.jump_sizes)):
        if t > 0.0:
            rows.append({"rep": rep, "time": float(t), "value": int(v)})
    return rows


_PATH_TYPES = {"rep": "int", "time": "float", "value": "int"}


def _simulate(config):
    schedule = config.build_schedule()
    out = {}
    for n in config.n_list:
        tc = schedule.time_change(n)
        rows = []
        for start in range(0, config.reps, mc.CHUNK):
            block = mc.sample_rows(schedule, n, config.master_seed, start,
                                   min(mc.CHUNK, config.reps - start))
            for i, row in enumerate(block):
                rows.extend(_path_rows(start + i, build_path(row, tc)))
        out[f"simulate_n{n}"] = Table(list(_PATH_TYPES), dict(_PATH_TYPES), rows)
    return out


def _limit_paths(config):
    a = config.build_scale()
    rows = []
    for rep in range(config.reps):
        rows.extend(_path_rows(rep, mc.simulate_scaled_poisson(config.lam, a, config.master_seed, rep)))
    return {"limit_paths": Table(list(_PATH_TYPES), dict(_PATH_TYPES), rows)}


def fidi_rows(report: mc.FidiReport) -> list:
    indep = {r.j: r for r in report.independence}
    rows = []
    for inc in report.increments:
        ind = indep.get(inc.j)
        rows.append({
            "n": report.n, "j": inc.j, "t_start": inc.t_start, "t_end": inc.t_end,
            "index_start": inc.index_start, "index_end": inc.index_end,
            "target_mean": inc.target_mean, "empirical_mean": inc.empirical.mean(),
            "tv_empirical": inc.tv_empirical, "tv_exact": inc.tv_exact,
            "tv_empirical_vs_exact": inc.tv_empirical_vs_exact, "mc_budget": inc.mc_budget,
            "chi2_statistic": ind.statistic if ind else None,
            "chi2_dof": ind.dof if ind else None,
            "chi2_quantile_999": ind.quantile_999 if ind else None,
            "chi2_p_value": ind.p_value if ind else None,
        })
    return rows


_FIDI_TYPES = {"n": "int", "j": "int", "t_start": "float", "t_end": "float",
               "index_start": "int", "index_end": "int", "target_mean": "float",
               "empirical_mean": "float", "tv_empirical": "float", "tv_exact": "float",
               "tv_empirical_vs_exact": "float", "mc_budget": "float",
               "chi2_statistic": "float", "chi2_dof": "int", "chi2_quantile_999": "float",
               "chi2_p_value": "float"}
_TIGHTNESS_TYPES = {"n": "int", "delta": "float", "eta": "float", "m": "int", "reps": "int",
                    "exceed_count": "int", "exceed_rate": "float", "ci_halfwidth": "float",
                    "paper_bound": "float", "lam": "float", "clamped": "bool"}
_CONDITION_TYPES = {"condition_id": "str", "n": "int", "grid_resolution": "int",
                    "sup_discrepancy": "float", "analytic_bound": "float", "tolerance": "float",
                    "passed": "bool", "lam": "float", "worst_point": "tuple", "target": "str",
                    "delta": "float"}
SCHEMAS = {"oracle_tv": {"n": "int", "row_sum": "float", "tv_exact": "float",
                         "squared_rate_sum": "float"},
           "simulate": _PATH_TYPES, "limit_paths": _PATH_TYPES, "fidi": _FIDI_TYPES,
           "tightness": _TIGHTNESS_TYPES, "conditions": _CONDITION_TYPES}


def _fidi(config):
    schedule = config.build_schedule()
    a = config.build_scale()
    out = {}
    for n in config.n_list:
        report = mc.fidi_experiment(schedule, schedule.time_change(n), a, config.lam,
                                    config.times, n, config.reps, config.master_seed)
        out[f"fidi_n{n}"] = Table(list(_FIDI_TYPES), dict(_FIDI_TYPES), fidi_rows(report))
    return out


def _tightness(config):
    schedule = config.build_schedule()
    out = {}
    for n in config.n_list:
        reports = mc.tightness_sweep(schedule, schedule.time_change(n), config.lam, n,
                                     config.delta, config.eta, config.reps, config.master_seed)
        out[f"tightness_n{n}"] = table_from_records(reports, _TIGHTNESS_TYPES)
    return out


def condition_reports(config, n) -> list:
    schedule = config.build_schedule()
    a = config.build_scale()
    tc = schedule.time_change(n)
    letter = "G3" if config.kind == "corrected_geometric" else "F3"
    reports = [cond.check_scale_modulus(a, d, config.grid, condition_id=letter + "a")
               for d in config.delta]
    reports.append(cond.check_increment_convergence(schedule, tc, a, config.lam, n, config.grid))
    if config.schedule == "log_harmonic":
        reports.append(cond.check_log_harmonic_cap(schedule, n, config.grid))
    for d in config.delta:
        window = WindowSpec.from_time_change(tc, d, config.grid)
        if window.m > tc.k_total:
            continue
        for target in ("lambda_delta", "lambda_delta_a"):
            reports.append(cond.check_window_stationarity(schedule, window, config.lam,
                                                          target=target, a=a))
    return reports


def _conditions(config):
    return {f"conditions_n{n}": table_from_records(condition_reports(config, n), _CONDITION_TYPES)
            for n in config.n_list}


_RUNNERS = {"oracle_tv": _oracle_tv, "simulate": _simulate, "limit_paths": _limit_paths,
            "fidi": _fidi, "tightness": _tightness, "conditions": _conditions}


def run(config: ExperimentConfig) -> int:
    """Run one experiment and write its result files plus ``manifest.json``."""
    try:
        tables = _RUNNERS[config.experiment](config)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out_dir = Path(config.output)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        files = []
        for stem, table in tables.items():
            name = f"{stem}.{config.format}"
            text = table.to_csv() if config.format == "csv" else table.to_json()
            (out_dir / name).write_text(text)
            files.append(name)
        manifest = {
            "artifact_version": __version__,
            "experiment": config.experiment,
            "config_hash": config.config_hash(),
            "master_seed": config.master_seed,
            "files": files,
            "config": config.semantic_dict(),
        }
        (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    except OSError as exc:
        print(f"error: cannot write results to {out_dir}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="poisson-lab", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("simulate", "fidi", "tightness", "conditions", "oracle-tv", "limit-paths"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON experiment document")
        sp.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        sp.add_argument("--reps", type=int, help="number of replications")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--format", choices=("csv", "json"))
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    experiment = args.command.replace("-", "_")
    try:
        text = Path(args.config).read_text() if args.config else ""
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    overrides = {"master_seed": args.seed, "reps": args.reps, "output": args.out,
                 "format": args.format}
    try:
        raw = json.loads(text) if text.strip() else {}
        if isinstance(raw, dict) and raw.get("experiment", experiment).replace("-", "_") != experiment:
            raise ValidationError(f"experiment: config says {raw['experiment']!r}, "
                                  f"command is {args.command!r}")
        overrides["experiment"] = experiment
        config = parse_config(text, overrides)
    except (ConfigError, json.JSONDecodeError, AttributeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        return run(config)
    except Exception as exc:  # noqa: BLE001 - any runtime failure maps to exit 3
        print(f"error: run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
