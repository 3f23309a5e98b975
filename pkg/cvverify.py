#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
cvverify command-line front end
Features:
- Subcommands: plan, verify-state, verify-channel, validate-bounds, sweep, selftest
- Strict JSON parameter files with dotted-path diagnostics
- Runtime settings from config.yaml with .env / environment fallback
- Seed echoed into every artifact (OS entropy when not given)
- JSON reports on stdout or file, CSV tables for sweeps
- Exit codes: 0 ok, 1 verifier rejected in a majority of trials, 2 configuration error
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import os
import sys
import traceback
from typing import Any, Callable, Dict, List, Optional, Sequence

try:
    import yaml
    YAML_AVAILABLE = True
except ImportError:
    YAML_AVAILABLE = False
import backoff
import numpy as np
from dotenv import load_dotenv

import fock
import harness
import phasespace
import planner
import provers
import witness
from planner import PlanError, VerificationPlan
from provers import Target

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_CONFIG = 2
SUBCOMMANDS = ("plan", "verify-state", "verify-channel", "validate-bounds", "sweep", "selftest")

DEFAULT_RUNTIME: Dict[str, Dict[str, Any]] = {
    "logging": {"level": "INFO", "format": "%(asctime)s %(levelname)s %(message)s"},
    "runtime": {"threads": 1, "status_report_interval": 0, "include_timing": False},
    "reports": {"schema_version": harness.SCHEMA_VERSION},
    "fock": {"max_basis": fock.MAX_BASIS, "max_dense": fock.MAX_DENSE,
             "leakage_factor": harness.LEAKAGE_FACTOR},
    "planner": {"d0_scan_limit": planner.D0_SCAN_LIMIT},
}


class ConfigError(ValueError):
    """Invalid parameter file, reported with the offending field path"""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


# Runtime configuration

def load_runtime_config(base_dir: Optional[str] = None) -> Dict[str, Dict[str, Any]]:
    """Load runtime settings from config.yaml with fallback to environment variables"""
    base_dir = base_dir or os.path.dirname(os.path.abspath(__file__))
    config_path = os.path.join(base_dir, "config.yaml")
    runtime = copy.deepcopy(DEFAULT_RUNTIME)
    if YAML_AVAILABLE and os.path.exists(config_path):
        loaded = _load_yaml_config(config_path)
        for section, values in runtime.items():
            values.update({k: v for k, v in (loaded.get(section) or {}).items() if k in values})
    else:
        logging.debug("YAML config not available, using built-in defaults and environment variables")
    load_dotenv(dotenv_path=os.path.join(base_dir, ".env"))
    _apply_env(runtime)
    return runtime


def _load_yaml_config(config_path: str) -> Dict[str, Any]:
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            config = yaml.safe_load(f) or {}
    except Exception as e:
        raise ValueError(f"Failed to load config.yaml: {e}")
    required_sections = ["logging", "runtime", "reports"]
    for section in required_sections:
        if section not in config:
            raise ValueError(f"Missing required section '{section}' in config.yaml")
    return config


def _apply_env(runtime: Dict[str, Dict[str, Any]]):
    level = os.environ.get("CVVERIFY_LOG_LEVEL")
    if level:
        runtime["logging"]["level"] = level.upper()
    timing = os.environ.get("CVVERIFY_INCLUDE_TIMING")
    if timing:
        runtime["runtime"]["include_timing"] = timing.lower() in ("1", "true", "yes")
    threads = os.environ.get("CVVERIFY_THREADS")
    if threads:
        try:
            cap = int(threads)
        except ValueError:
            raise ValueError(f"CVVERIFY_THREADS must be an integer, got {threads!r}")
        runtime["runtime"]["threads"] = cap
        runtime["runtime"]["thread_cap"] = cap


def apply_runtime(runtime: Dict[str, Dict[str, Any]]):
    fock.MAX_BASIS = int(runtime["fock"]["max_basis"])
    fock.MAX_DENSE = int(runtime["fock"]["max_dense"])
    harness.LEAKAGE_FACTOR = float(runtime["fock"]["leakage_factor"])


def setup_logging(runtime: Dict[str, Dict[str, Any]], verbose: bool = False, quiet: bool = False):
    level = runtime["logging"]["level"]
    if verbose:
        level = "DEBUG"
    elif quiet:
        level = "WARNING"
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format=runtime["logging"]["format"],
        force=True,
    )


def resolve_threads(flag: Optional[int], runtime: Dict[str, Dict[str, Any]]) -> int:
    threads = flag if flag is not None else int(runtime["runtime"]["threads"])
    cap = runtime["runtime"].get("thread_cap")
    if cap is not None:
        threads = min(threads, int(cap))
    return max(1, threads)


# Parameter file schema

REQUIRED = object()
OPTIONAL = object()


def _join(path: str, key: Any) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else str(key)


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    return float(value)


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    return value


def _string(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(path, f"expected a string, got {value!r}")
    return value


def _optional(check: Callable[[Any, str], Any]) -> Callable[[Any, str], Any]:
    def inner(value: Any, path: str):
        return None if value is None else check(value, path)
    return inner


def _list_of(check: Callable[[Any, str], Any]) -> Callable[[Any, str], list]:
    def inner(value: Any, path: str):
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {value!r}")
        return [check(item, _join(path, i)) for i, item in enumerate(value)]
    return inner


def _complex_like(value: Any, path: str):
    if isinstance(value, list):
        if len(value) != 2:
            raise ConfigError(path, "complex values are [re, im]")
        return [_number(value[0], _join(path, 0)), _number(value[1], _join(path, 1))]
    return _number(value, path)


def _weights(value: Any, path: str) -> Dict[str, Any]:
    if not isinstance(value, dict) or not value:
        raise ConfigError(path, "expected a non-empty object of photon number -> amplitude")
    out = {}
    for key, amp in value.items():
        if not str(key).isdigit():
            raise ConfigError(_join(path, key), "photon numbers must be non-negative integers")
        out[str(key)] = _complex_like(amp, _join(path, key))
    return out


def _fields(data: Any, fields: Dict[str, tuple], path: str) -> Dict[str, Any]:
    if not isinstance(data, dict):
        raise ConfigError(path or "<root>", f"expected an object, got {data!r}")
    for key in data:
        if key not in fields:
            raise ConfigError(_join(path, key), "unknown key")
    out: Dict[str, Any] = {}
    for key, (check, default) in fields.items():
        sub = _join(path, key)
        if key in data:
            out[key] = check(data[key], sub)
        elif default is REQUIRED:
            raise ConfigError(sub, "missing required key")
        elif default is not OPTIONAL:
            out[key] = default
    return out


def _tagged(data: Any, path: str, tag: str, table: Dict[str, Dict[str, tuple]]) -> Dict[str, Any]:
    if not isinstance(data, dict):
        raise ConfigError(path, f"expected an object, got {data!r}")
    value = data.get(tag)
    if value not in table:
        raise ConfigError(_join(path, tag), f"expected one of {sorted(table)}, got {value!r}")
    fields = {tag: (_string, REQUIRED), **table[value]}
    return _fields(data, fields, path)


_edges = _list_of(_list_of(_integer))
_matrix = _list_of(_list_of(_number))

RECIPE_FIELDS: Dict[str, Dict[str, tuple]] = {
    "target": {},
    "vacuum": {},
    "coherent": {"alpha": (_complex_like, 0.0)},
    "thermal": {"nbar": (_number, REQUIRED)},
    "squeezed": {"xi": (_number, REQUIRED)},
    "tmsv": {"kappa": (_number, REQUIRED)},
    "gaussian": {"mean": (_list_of(_number), REQUIRED), "cov": (_matrix, REQUIRED)},
    "fock": {"n": (_integer, REQUIRED), "cutoff": (_integer, OPTIONAL)},
    "superposition": {"weights": (_weights, REQUIRED), "cutoff": (_integer, OPTIONAL)},
    "fock_thermal": {"nbar": (_number, REQUIRED), "cutoff": (_integer, OPTIONAL)},
    "hypergraph": {"edges": (_edges, REQUIRED), "xi": (_number, REQUIRED), "cutoff": (_integer, OPTIONAL)},
}


def _recipe(value: Any, path: str) -> Dict[str, Any]:
    return _tagged(value, path, "family", RECIPE_FIELDS)


def _recipes(value: Any, path: str):
    if isinstance(value, list):
        return _list_of(_recipe)(value, path)
    return _recipe(value, path)


def _component(value: Any, path: str) -> Dict[str, Any]:
    return _fields(value, {"weight": (_number, REQUIRED), "states": (_recipes, REQUIRED)}, path)


def _prover(value: Any, path: str) -> Dict[str, Any]:
    return _tagged(value, path, "kind", PROVER_FIELDS)


_capacity = (_integer, OPTIONAL)
PROVER_FIELDS: Dict[str, Dict[str, tuple]] = {
    "honest_iid": {"capacity": _capacity},
    "iid_wrong": {"state": (_recipe, REQUIRED), "capacity": _capacity},
    "classical_mixture": {"components": (_list_of(_component), REQUIRED), "capacity": _capacity},
    "markov_drift": {
        "family": (_string, REQUIRED),
        "step": (_number, REQUIRED),
        "start": (_number, 0.0),
        "clip": (_number, 5.0),
        "capacity": _capacity,
    },
    "energy_spiker": {
        "spike_prob": (_number, REQUIRED),
        "spike_state": (_recipe, REQUIRED),
        "capacity": _capacity,
    },
    "phase_randomized": {"inner": (_prover, REQUIRED)},
}
CHANNEL_PROVER_FIELDS: Dict[str, Dict[str, tuple]] = {
    "ideal": {"capacity": _capacity},
    "lossy": {"eta": (_number, REQUIRED), "capacity": _capacity},
    "noisy": {"nu": (_number, REQUIRED), "capacity": _capacity},
    "replace_with_vacuum": {"capacity": _capacity},
    "drifting": {"step": (_number, 0.01), "eta_min": (_number, 0.5), "capacity": _capacity},
}
TARGET_FIELDS: Dict[str, Dict[str, tuple]] = {
    "vacuum": {},
    "coherent": {"alpha": (_complex_like, 0.0)},
    "squeezed": {"xi": (_number, REQUIRED)},
    "tmsv": {"kappa": (_number, REQUIRED)},
    "gaussian": {"mean": (_list_of(_number), REQUIRED), "cov": (_matrix, REQUIRED)},
    "hypergraph": {"edges": (_edges, REQUIRED), "xi": (_number, REQUIRED)},
}
BENCHMARK_FIELDS: Dict[str, Dict[str, tuple]] = {
    "amplifier": {"lam": (_number, REQUIRED), "g": (_number, REQUIRED)},
    "attenuator_or_storage": {"lam": (_number, REQUIRED), "g": (_number, 1.0)},
    "purifier": {"lam": (_number, REQUIRED), "g": (_number, REQUIRED), "mu": (_number, REQUIRED)},
    "memory_multimode": {"lam": (_number, REQUIRED)},
    "cz_gate": {"lam": (_number, REQUIRED), "weight": (_number, 1.0)},
}
PLAN_FIELDS = {
    "k": (_integer, REQUIRED),
    "m": (_integer, REQUIRED),
    "epsilon": (_number, REQUIRED),
    "d0": (_optional(_integer), None),
    "N": (_optional(_integer), None),
    "L": (_optional(_integer), None),
}


def _plan_section(value: Any, path: str) -> Dict[str, Any]:
    return _fields(value, PLAN_FIELDS, path)


def _experiment(value: Any, path: str) -> str:
    if value not in ("completeness", "soundness"):
        raise ConfigError(path, f"expected 'completeness' or 'soundness', got {value!r}")
    return value


def _lemma(value: Any, path: str) -> str:
    if value not in ("serfling", "lemma1"):
        raise ConfigError(path, f"expected 'serfling' or 'lemma1', got {value!r}")
    return value


def _grid_cell(value: Any, path: str) -> Dict[str, Any]:
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected an object, got {value!r}")
    return {key: _number(v, _join(path, key)) if isinstance(v, float) else _integer(v, _join(path, key))
            for key, v in value.items()}


_seed = (_optional(_integer), None)
_trials = (_integer, 1)


def _state_run(value: Any, path: str) -> Dict[str, Any]:
    return _fields(value, {
        "target": (lambda v, p: _tagged(v, p, "family", TARGET_FIELDS), REQUIRED),
        "prover": (_prover, REQUIRED),
        "trials": _trials,
        "cutoff": (_integer, provers.DEFAULT_CUTOFF),
    }, path)


SWEEP_GRID_FIELDS = {
    "k": (_list_of(_integer), REQUIRED),
    "m": (_list_of(_integer), REQUIRED),
    "epsilon": (_list_of(_number), REQUIRED),
    "d0": (_list_of(_integer), OPTIONAL),
    "N": (_list_of(_integer), OPTIONAL),
    "L": (_list_of(_integer), OPTIONAL),
}

SCHEMAS: Dict[str, Dict[str, tuple]] = {
    "plan": PLAN_FIELDS,
    "verify-state": {
        "plan": (_plan_section, REQUIRED),
        "target": (lambda v, p: _tagged(v, p, "family", TARGET_FIELDS), REQUIRED),
        "prover": (_prover, REQUIRED),
        "experiment": (_experiment, "completeness"),
        "trials": _trials,
        "cutoff": (_integer, provers.DEFAULT_CUTOFF),
        "seed": _seed,
    },
    "verify-channel": {
        "plan": (_plan_section, REQUIRED),
        "benchmark": (lambda v, p: _tagged(v, p, "tag", BENCHMARK_FIELDS), REQUIRED),
        "prover": (lambda v, p: _tagged(v, p, "kind", CHANNEL_PROVER_FIELDS), REQUIRED),
        "experiment": (_experiment, "completeness"),
        "trials": _trials,
        "seed": _seed,
    },
    "validate-bounds": {
        "lemma": (_lemma, REQUIRED),
        "populations": (_integer, OPTIONAL),
        "grid": (_list_of(_grid_cell), OPTIONAL),
        "seed": _seed,
    },
    "sweep": {
        "grid": (lambda v, p: _fields(v, SWEEP_GRID_FIELDS, p), REQUIRED),
        "state_run": (_state_run, OPTIONAL),
        "seed": _seed,
    },
    "selftest": {"seed": _seed},
}


def normalize_config(raw: Any, subcommand: str) -> Dict[str, Any]:
    """Validate a parameter file and fill defaults (idempotent)"""
    if subcommand not in SCHEMAS:
        raise ConfigError("<root>", f"unknown subcommand {subcommand!r}")
    return _fields(raw, SCHEMAS[subcommand], "")


def load_config_file(path: str, subcommand: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(path, f"cannot read parameter file: {e}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(path, f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}")
    return normalize_config(raw, subcommand)


# Builders

def build_plan(section: Dict[str, Any], runtime: Dict[str, Dict[str, Any]]) -> VerificationPlan:
    desk = [section.get(key) for key in ("d0", "N", "L")]
    if all(v is None for v in desk):
        return planner.make_plan(
            section["k"], section["m"], section["epsilon"],
            limit=int(runtime["planner"]["d0_scan_limit"]),
        )
    if any(v is None for v in desk):
        raise ConfigError("plan", "d0, N and L must be given together for a desk plan")
    return planner.desk_plan(section["k"], section["m"], section["epsilon"], *desk)


def _alpha(value) -> complex:
    return complex(value[0], value[1]) if isinstance(value, list) else complex(value)


def build_target(section: Dict[str, Any], k: int, cutoff: int) -> Target:
    family = section["family"]
    if family == "hypergraph":
        return Target(witness.hypergraph_kind(section["edges"], section["xi"], k), cutoff)
    if family == "vacuum":
        state = phasespace.make_vacuum(k)
    elif family == "coherent":
        state = phasespace.direct_sum(*[phasespace.coherent_state(_alpha(section["alpha"]))] * k)
    elif family == "squeezed":
        state = phasespace.direct_sum(*[phasespace.squeezed_vacuum(section["xi"])] * k)
    elif family == "tmsv":
        state = phasespace.two_mode_squeezed(section["kappa"])
    else:
        state = phasespace.GaussianState(np.asarray(section["mean"]), np.asarray(section["cov"]))
    if state.modes != k:
        raise ConfigError("target", f"target has {state.modes} modes, plan has k={k}")
    return Target(witness.gaussian_state_kind(state), cutoff)


def build_benchmark(section: Dict[str, Any], k: int) -> witness.WitnessKind:
    tag = section["tag"]
    if tag == "amplifier":
        return witness.amplifier_kind(section["lam"], section["g"])
    if tag == "attenuator_or_storage":
        return witness.attenuator_kind(section["lam"], section["g"])
    if tag == "purifier":
        return witness.purifier_kind(section["lam"], section["g"], section["mu"])
    if tag == "memory_multimode":
        return witness.memory_kind(section["lam"], k)
    return witness.cz_gate_kind(section["lam"], section["weight"])


def resolve_seed(flag: Optional[int], config: Dict[str, Any]) -> int:
    if flag is not None:
        return flag
    if config.get("seed") is not None:
        return int(config["seed"])
    return int(np.random.SeedSequence().entropy) % 2 ** 64


# Output

def _json_default(value: Any):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


@backoff.on_exception(backoff.expo, OSError, max_tries=3)
def _write_text(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)


def emit_report(report: Dict[str, Any], path: Optional[str] = None):
    """Pretty-printed JSON with a trailing newline (stdout when no path)"""
    text = json.dumps(report, indent=2, ensure_ascii=False, default=_json_default) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    _write_text(path, text)
    logging.info(f"📄 Report written to {path}")


def write_csv(rows: Sequence[Dict[str, Any]], path: str, columns: Sequence[str] = harness.SWEEP_COLUMNS):
    @backoff.on_exception(backoff.expo, OSError, max_tries=3)
    def write():
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(columns), extrasaction="ignore")
            writer.writeheader()
            for row in rows:
                writer.writerow({key: "" if row.get(key) is None else row.get(key) for key in columns})

    write()
    logging.info(f"📄 Table written to {path} ({len(rows)} rows)")


# Subcommands

def _experiment_config(plan, kind, script, trials, seed, cutoff, args, runtime) -> harness.ExperimentConfig:
    return harness.ExperimentConfig(
        plan=plan,
        kind=kind,
        prover=script,
        trials=trials,
        master_seed=seed,
        threads=resolve_threads(args.threads, runtime),
        cutoff=cutoff,
        include_timing=bool(runtime["runtime"]["include_timing"]),
        status_interval=int(runtime["runtime"]["status_report_interval"]),
    )


def _verify_exit(report: Dict[str, Any]) -> int:
    rejected = report["trials"] - round(report["accept_rate"] * report["trials"])
    return EXIT_REJECTED if rejected * 2 > report["trials"] else EXIT_OK


def cmd_plan(args, runtime) -> int:
    config = load_config_file(args.config, "plan") if args.config else {}
    for key in ("k", "m", "epsilon", "d0", "N", "L"):
        value = getattr(args, key)
        if value is not None:
            config[key] = value
    config = normalize_config(config, "plan")
    plan = build_plan(config, runtime)
    emit_report(planner.plan_to_dict(plan), args.output)
    return EXIT_OK


def _override(config: Dict[str, Any], args, subcommand: str) -> Dict[str, Any]:
    if getattr(args, "trials", None) is not None:
        config["trials"] = args.trials
    return normalize_config(config, subcommand)


def cmd_verify_state(args, runtime) -> int:
    config = load_config_file(args.config, "verify-state")
    seed = resolve_seed(args.seed, config)
    config["seed"] = seed
    config = _override(config, args, "verify-state")
    plan = build_plan(config["plan"], runtime)
    target = build_target(config["target"], plan.k, config["cutoff"])
    script = provers.script_from_spec(config["prover"], target)
    experiment = _experiment_config(
        plan, target.kind, script, config["trials"], seed, config["cutoff"], args, runtime
    )
    report = harness.ExperimentRunner(experiment).run(config["experiment"])
    report["config"] = config
    emit_report(report, args.output)
    return _verify_exit(report)


def cmd_verify_channel(args, runtime) -> int:
    config = load_config_file(args.config, "verify-channel")
    seed = resolve_seed(args.seed, config)
    config["seed"] = seed
    config = _override(config, args, "verify-channel")
    plan = build_plan(config["plan"], runtime)
    kind = build_benchmark(config["benchmark"], plan.k)
    script = provers.channel_script_from_spec(config["prover"], kind)
    experiment = _experiment_config(
        plan, kind, script, config["trials"], seed, provers.DEFAULT_CUTOFF, args, runtime
    )
    report = harness.ExperimentRunner(experiment).run(config["experiment"])
    report["config"] = config
    emit_report(report, args.output)
    return _verify_exit(report)


def cmd_validate_bounds(args, runtime) -> int:
    config = load_config_file(args.config, "validate-bounds")
    config["seed"] = resolve_seed(args.seed, config)
    config = normalize_config(config, "validate-bounds")
    report = harness.validate_concentration(config["lemma"], config)
    report["config"] = config
    emit_report(report, args.output)
    return EXIT_OK


def cmd_sweep(args, runtime) -> int:
    config = load_config_file(args.config, "sweep")
    seed = resolve_seed(args.seed, config)
    config["seed"] = seed
    config = normalize_config(config, "sweep")
    experiment = None
    run = config.get("state_run")
    if run is not None:
        def experiment(plan: VerificationPlan) -> Dict[str, Any]:
            target = build_target(run["target"], plan.k, run["cutoff"])
            script = provers.script_from_spec(run["prover"], target)
            cell = _experiment_config(plan, target.kind, script, run["trials"], seed, run["cutoff"], args, runtime)
            return harness.ExperimentRunner(cell).run("soundness")
    table = harness.sweep(config["grid"], experiment)
    table["seed"] = seed
    table["config"] = config
    if args.csv:
        write_csv(table["rows"], args.csv)
    emit_report(table, args.output)
    return EXIT_OK


def run_selftest(seed: int) -> Dict[str, Any]:
    """Quick invariant subset: planner worked values, witness saturation, desk runs"""
    checks: List[Dict[str, Any]] = []

    def check(name: str, fn: Callable[[], bool]):
        try:
            passed = bool(fn())
            detail = None
        except Exception as e:
            passed, detail = False, str(e)
        logging.info(f"{'✅' if passed else '❌'} selftest {name}")
        checks.append({"name": name, "passed": passed, "detail": detail})

    check("compute_L_worked_value", lambda: planner.compute_L(1, 1, 0.1, 10) == 9738643)
    check("compute_R_worked_value", lambda: planner.compute_R(10 ** 6, 100) == 188)

    def feasibility() -> bool:
        for k in (1, 2):
            for m in (1, 2):
                for eps in (0.05, 0.1, 0.2):
                    plan = planner.make_plan(k, m, eps)
                    if not (planner.eq3_holds(k, m, eps, plan.d0) and planner.eq4_holds(k, eps, plan.d0, plan.N)):
                        return False
                    if planner.soundness_bound(plan).total > 3 * eps:
                        return False
        return True

    check("planner_feasibility_grid", feasibility)
    vacuum = phasespace.make_vacuum(1)
    check(
        "vacuum_witness_saturates",
        lambda: abs(witness.witness_expectation_oracle(witness.gaussian_state_kind(vacuum), vacuum) - 1.0) < 1e-8,
    )
    amp = witness.amplifier_kind(1.0, 2.0)
    check(
        "ideal_amplifier_witness",
        lambda: abs(witness.witness_expectation_oracle(amp, provers.ideal_channel(amp)) - 0.5) < 1e-8,
    )

    def desk_completeness() -> bool:
        plan = planner.desk_plan(1, 1, 0.2, 50, 2000, 600)
        target = Target(witness.gaussian_state_kind(vacuum))
        config = harness.ExperimentConfig(plan, target.kind, provers.honest_iid(target), 20, seed)
        return harness.ExperimentRunner(config).run("completeness")["accept_rate"] >= 0.9

    check("desk_completeness", desk_completeness)
    check(
        "serfling_cell",
        lambda: harness.validate_concentration(
            "serfling", {"seed": seed, "populations": 2000, "grid": [{"n": 100, "k": 100, "delta": 0.1}]}
        )["violations"] == 0,
    )
    return {
        "schema": harness.SCHEMA_VERSION,
        "seed": seed,
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }


def cmd_selftest(args, runtime) -> int:
    seed = args.seed if args.seed is not None else 20240501
    report = run_selftest(seed)
    emit_report(report, args.output)
    return EXIT_OK if report["passed"] else EXIT_REJECTED


COMMANDS = {
    "plan": cmd_plan,
    "verify-state": cmd_verify_state,
    "verify-channel": cmd_verify_channel,
    "validate-bounds": cmd_validate_bounds,
    "sweep": cmd_sweep,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (default: OS entropy)")
    common.add_argument("--output", "-o", default=None, help="report path (default: stdout)")
    common.add_argument("--verbose", "-v", action="store_true")
    common.add_argument("--quiet", "-q", action="store_true")
    common.add_argument("--threads", type=int, default=None)

    parser = argparse.ArgumentParser(prog="cvverify", description="Non-i.i.d. CV verification simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", parents=[common], help="compute a verification plan")
    plan.add_argument("--config", default=None)
    plan.add_argument("--k", type=int, default=None)
    plan.add_argument("--m", type=int, default=None)
    plan.add_argument("--epsilon", type=float, default=None)
    plan.add_argument("--d0", type=int, default=None)
    plan.add_argument("--N", type=int, default=None)
    plan.add_argument("--L", type=int, default=None)

    for name in ("verify-state", "verify-channel"):
        verify = sub.add_parser(name, parents=[common])
        verify.add_argument("--config", required=True)
        verify.add_argument("--trials", type=int, default=None)

    bounds = sub.add_parser("validate-bounds", parents=[common])
    bounds.add_argument("--config", required=True)

    sweep = sub.add_parser("sweep", parents=[common])
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--csv", default=None, help="also write the table as CSV")

    sub.add_parser("selftest", parents=[common])
    return parser


def parse_and_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    try:
        runtime = load_runtime_config()
        setup_logging(runtime, args.verbose, args.quiet)
        apply_runtime(runtime)
        return COMMANDS[args.command](args, runtime)
    except (ConfigError, PlanError) as e:
        logging.error(f"❌ Configuration error: {e}")
        return EXIT_CONFIG
    except Exception as e:
        logging.error(f"❌ Unexpected error: {e}")
        logging.debug(traceback.format_exc())
        return EXIT_CONFIG


def main():
    """Main entry point"""
    try:
        sys.exit(parse_and_dispatch(sys.argv[1:]))
    except KeyboardInterrupt:
        logging.info("Stopped by user")
        sys.exit(EXIT_CONFIG)


if __name__ == "__main__":
    main()
