"""Command-line surface: config files in, deterministic CSV/JSON out.

One executable with subcommands enaqt-sweep, walk, bh-spectrum, bh-scan,
and validate.  Each subcommand takes a single plain-text config file of
``key value`` lines (``#`` comments); unknown keys are hard errors and all
violations are reported at once with their line numbers.  Paths inside a
config are resolved relative to the config file.

Outputs are written atomically (write to a temp file, then rename) and are
byte-identical for identical config + seed.  Every output carries a
metadata header: tool version, config hash, and seed.  The config hash
covers the semantic content (with referenced files replaced by their
content digest), not the file paths, and excludes the output location.

Exit codes: 0 success, 1 unexpected error, 2 config/parse failure,
3 numerical failure, 4 invariant violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bose_hubbard import (BoseHubbardParams, EigenConvergenceError,
                           condensate_fraction, drive_coupled_gap,
                           enumerate_basis, low_spectrum, build_bh,
                           modulation_absorption)
from .hamiltonians import apply_static_disorder, build_tight_binding
from .netfiles import NetfileError, load_mapping, load_network
from .open_system import (NoSinkError, StateInvariantError, StiffnessError,
                          TransportSpec, goldilocks_sweep)
from .validation import (ReportRoleError, build_report, check_isomorphism,
                         classify_speedup, report_to_json)
from .walk import (DephasingEnsembleSpec, dephased_walk, evolve_unitary,
                   length_to_time)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_INVARIANT = 4

SIDECAR_SCHEMA_VERSION = 1

_EXIT_CODE_HELP = """exit codes:
  0  success
  1  unexpected error
  2  config or input-file parse failure
  3  numerical failure (integrator or eigensolver)
  4  invariant violation (state bookkeeping or report rules)
"""


class ConfigError(ValueError):
    """Config rejected; .violations lists every problem found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass
class ExperimentConfig:
    """Parsed config: command, validated values, and path context."""

    command: str
    values: dict
    base_dir: Path

    def path(self, key: str) -> Path:
        return (self.base_dir / self.values[key]).resolve()


def _parse_bool(token: str) -> bool:
    if token == "true":
        return True
    if token == "false":
        return False
    raise ValueError("expected 'true' or 'false'")


@dataclass(frozen=True)
class _Key:
    convert: object
    required: bool = False
    default: object = None
    check: object = None
    describe: str = ""
    is_path: bool = False
    rest_of_line: bool = False


def _positive(x):
    return None if x > 0 else "must be positive"


def _non_negative(x):
    return None if x >= 0 else "must be non-negative"


def _at_least(n):
    return lambda x: None if x >= n else f"must be >= {n}"


def _in_unit_tenth(x):
    return None if 0 <= x <= 0.1 else "must lie in [0, 0.1]"


def _role(x):
    return None if x in ("simulation", "emulation") else "must be simulation or emulation"


def _geometry(x):
    return None if x in ("chain", "plaquette") else "must be chain or plaquette"


_COMMON = {
    "command": _Key(str, required=True),
    "output": _Key(str, required=True, is_path=True),
}

_SCHEMAS = {
    "enaqt-sweep": {
        **_COMMON,
        "network": _Key(str, required=True, is_path=True),
        "source": _Key(int, required=True, check=_non_negative),
        "sink": _Key(int, required=True, check=_non_negative),
        "trap_rate": _Key(float, required=True, check=_positive),
        "recombination_rate": _Key(float, default=0.0, check=_non_negative),
        "gamma_min": _Key(float, required=True, check=_positive),
        "gamma_max": _Key(float, required=True, check=_positive),
        "gamma_steps": _Key(int, required=True, check=_at_least(2)),
        "t_max": _Key(float, default=1000.0, check=_positive),
        "tol": _Key(float, default=1e-8, check=_positive),
        "disorder_sigma": _Key(float, default=0.0, check=_non_negative),
        "seed": _Key(int),
    },
    "walk": {
        **_COMMON,
        "network": _Key(str, required=True, is_path=True),
        "input_mode": _Key(int, required=True, check=_non_negative),
        "time": _Key(float, check=_non_negative),
        "length": _Key(float, check=_non_negative),
        "n_index": _Key(float, check=_positive),
        "n_segments": _Key(int, check=_at_least(1)),
        "phase_sigma": _Key(float, default=0.0, check=_non_negative),
        "shots": _Key(int, check=_at_least(1)),
        "seed": _Key(int),
    },
    "bh-spectrum": {
        **_COMMON,
        "L": _Key(int, required=True, check=_at_least(1)),
        "N": _Key(int, required=True, check=_non_negative),
        "J": _Key(float, required=True, check=_non_negative),
        "U": _Key(float, required=True, check=_non_negative),
        "delta": _Key(float, required=True, check=_in_unit_tenth),
        "nu_min": _Key(float, required=True, check=_non_negative),
        "nu_max": _Key(float, required=True, check=_positive),
        "nu_steps": _Key(int, required=True, check=_at_least(1)),
        "t_drive": _Key(float, required=True, check=_positive),
        "tol": _Key(float, default=1e-9, check=_positive),
        "geometry": _Key(str, default="chain", check=_geometry),
        "rows": _Key(int, check=_at_least(1)),
        "cols": _Key(int, check=_at_least(1)),
    },
    "bh-scan": {
        **_COMMON,
        "L": _Key(int, required=True, check=_at_least(1)),
        "N": _Key(int, required=True, check=_non_negative),
        "U": _Key(float, default=1.0, check=_positive),
        "j_min": _Key(float, required=True, check=_positive),
        "j_max": _Key(float, required=True, check=_positive),
        "j_steps": _Key(int, required=True, check=_at_least(2)),
        "k": _Key(int, default=10, check=_at_least(2)),
        "geometry": _Key(str, default="chain", check=_geometry),
        "rows": _Key(int, check=_at_least(1)),
        "cols": _Key(int, check=_at_least(1)),
    },
    "validate": {
        **_COMMON,
        "network_a": _Key(str, required=True, is_path=True),
        "network_b": _Key(str, required=True, is_path=True),
        "mapping": _Key(str, required=True, is_path=True),
        "tolerance": _Key(float, required=True, check=_positive),
        "role": _Key(str, default="simulation", check=_role),
        "hardness_proof": _Key(_parse_bool, required=True),
        "efficient_classical_known": _Key(_parse_bool, required=True),
        "scalable_accuracy": _Key(_parse_bool, required=True),
        "note": _Key(str, default="", rest_of_line=True),
    },
}


def _cross_checks(command: str, values: dict, linenos: dict, violations: list):
    def line_of(key):
        return f"line {linenos[key]}" if key in linenos else "config"

    if command == "enaqt-sweep":
        if "gamma_min" in values and "gamma_max" in values:
            if not values["gamma_min"] < values["gamma_max"]:
                violations.append(f"{line_of('gamma_max')}: grid must ascend "
                                  "(gamma_min < gamma_max)")
        if values.get("disorder_sigma", 0.0) > 0 and "seed" not in values:
            violations.append("config: seed required when disorder_sigma > 0")
    elif command == "walk":
        has_time = "time" in values
        has_length = "length" in values
        if has_time == has_length:
            violations.append("config: give exactly one of 'time' or 'length'")
        if has_length and "n_index" not in values:
            violations.append("config: 'length' requires 'n_index'")
        if values.get("phase_sigma", 0.0) > 0:
            for key in ("n_segments", "shots", "seed"):
                if key not in values:
                    violations.append(f"config: '{key}' required when phase_sigma > 0")
    elif command == "bh-spectrum":
        if "nu_min" in values and "nu_max" in values:
            if not values["nu_min"] < values["nu_max"]:
                violations.append(f"{line_of('nu_max')}: grid must ascend "
                                  "(nu_min < nu_max)")
        if values.get("J") == 0 and values.get("U") == 0:
            violations.append("config: J and U must not both be zero")
        _plaquette_checks(values, violations)
    elif command == "bh-scan":
        if "j_min" in values and "j_max" in values:
            if not values["j_min"] < values["j_max"]:
                violations.append(f"{line_of('j_max')}: grid must ascend "
                                  "(j_min < j_max)")
        _plaquette_checks(values, violations)


def _plaquette_checks(values: dict, violations: list):
    if values.get("geometry") == "plaquette":
        for key in ("rows", "cols"):
            if key not in values:
                violations.append(f"config: plaquette geometry requires '{key}'")
        if "rows" in values and "cols" in values and "L" in values:
            if values["rows"] * values["cols"] != values["L"]:
                violations.append("config: rows * cols must equal L")


def parse_config(text: str, base_dir=".", expected_command=None) -> ExperimentConfig:
    """Parse a config file; collect every violation before raising.

    Returns a config with defaults filled in, or raises ConfigError whose
    .violations holds one message per problem, each with its line number
    where one exists.
    """
    base = Path(base_dir)
    violations = []
    values = {}
    linenos = {}
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        key = parts[0]
        rest = parts[1] if len(parts) > 1 else ""
        entries.append((lineno, key, rest))

    command = None
    for lineno, key, rest in entries:
        if key == "command":
            command = rest.strip()
            linenos["command"] = lineno
            break
    if command is None:
        raise ConfigError(["config: missing 'command' key"])
    if command not in _SCHEMAS:
        raise ConfigError([f"line {linenos['command']}: unknown command {command!r}"])
    if expected_command is not None and command != expected_command:
        raise ConfigError([
            f"line {linenos['command']}: config is for {command!r}, "
            f"invoked as {expected_command!r}"])
    schema = _SCHEMAS[command]
    values["command"] = command

    for lineno, key, rest in entries:
        if key == "command":
            continue
        if key not in schema:
            violations.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in values:
            violations.append(f"line {lineno}: duplicate key {key!r}")
            continue
        spec = schema[key]
        token = rest.strip() if spec.rest_of_line else rest.split()[0] if rest.split() else ""
        if not spec.rest_of_line and len(rest.split()) > 1:
            violations.append(f"line {lineno}: key {key!r} takes a single value")
            continue
        if token == "":
            violations.append(f"line {lineno}: key {key!r} needs a value")
            continue
        try:
            value = spec.convert(token)
        except ValueError as exc:
            detail = str(exc) or f"cannot parse {token!r}"
            violations.append(f"line {lineno}: {key}: {detail}")
            continue
        if spec.check is not None:
            problem = spec.check(value)
            if problem:
                violations.append(f"line {lineno}: {key} {problem}")
                continue
        values[key] = value
        linenos[key] = lineno

    for key, spec in schema.items():
        if key in values:
            continue
        if spec.required:
            violations.append(f"config: missing required key {key!r}")
        elif spec.default is not None:
            values[key] = spec.default

    for key, spec in schema.items():
        if spec.is_path and key in values and key != "output":
            target = base / values[key]
            if not target.is_file():
                violations.append(f"line {linenos.get(key, '?')}: "
                                  f"{key} file not found: {target}")

    _cross_checks(command, values, linenos, violations)
    if violations:
        raise ConfigError(violations)
    return ExperimentConfig(command=command, values=values, base_dir=base)


def config_hash(config: ExperimentConfig) -> str:
    """SHA-256 over the semantic config content.

    Referenced input files enter through their content digest, so moving a
    file does not change the hash but editing it does.  The output path is
    excluded.
    """
    schema = _SCHEMAS[config.command]
    payload = {"command": config.command}
    for key in sorted(config.values):
        if key in ("command", "output"):
            continue
        value = config.values[key]
        if schema[key].is_path:
            digest = hashlib.sha256(config.path(key).read_bytes()).hexdigest()
            payload[key] = {"sha256": digest}
        else:
            payload[key] = value
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode()).hexdigest()


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _csv_text(meta: dict, header, rows) -> str:
    lines = [f"# {key}: {value}" for key, value in meta.items()]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt_cell(cell) for cell in row))
    return "\n".join(lines) + "\n"


def _meta(config: ExperimentConfig) -> dict:
    seed = config.values.get("seed")
    return {
        "tool": f"aqsim {__version__}",
        "config_sha256": config_hash(config),
        "seed": "none" if seed is None else str(seed),
    }


def _sidecar(config: ExperimentConfig, meta: dict, extra: dict) -> str:
    payload = {
        "schema_version": SIDECAR_SCHEMA_VERSION,
        "tool": meta["tool"],
        "command": config.command,
        "config_sha256": meta["config_sha256"],
        "seed": config.values.get("seed"),
    }
    payload.update(extra)
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _load_network_checked(config: ExperimentConfig, key: str):
    try:
        return load_network(config.path(key))
    except NetfileError as exc:
        raise ConfigError([f"{key} ({config.values[key]}): {exc}"]) from exc


def _run_enaqt_sweep(config: ExperimentConfig) -> list:
    v = config.values
    net = _load_network_checked(config, "network")
    problems = []
    for key in ("source", "sink"):
        if v[key] >= net.n_sites:
            problems.append(f"config: {key} {v[key]} out of range for "
                            f"{net.n_sites}-site network")
    if problems:
        raise ConfigError(problems)
    h = build_tight_binding(net)
    if v["disorder_sigma"] > 0:
        h = apply_static_disorder(h, v["disorder_sigma"], v["seed"])
    spec = TransportSpec(v["source"], v["sink"], v["trap_rate"],
                         v["recombination_rate"], np.zeros(net.n_sites))
    grid = np.geomspace(v["gamma_min"], v["gamma_max"], v["gamma_steps"])
    curve = goldilocks_sweep(h, spec, grid, t_max=v["t_max"], tol=v["tol"])
    meta = _meta(config)
    rows = list(zip(curve.gamma_grid, curve.efficiencies, curve.converged))
    out = config.path("output")
    _atomic_write(out, _csv_text(meta, ["gamma", "eta", "converged"], rows))
    sidecar = out.with_name(out.name + ".meta.json")
    _atomic_write(sidecar, _sidecar(config, meta, {
        "gamma_grid": [float(g) for g in curve.gamma_grid],
        "t_max": v["t_max"],
        "tol": v["tol"],
        "disorder_sigma": v["disorder_sigma"],
        "hamiltonian_sha256": curve.h_hash,
    }))
    return [out, sidecar]


def _run_walk(config: ExperimentConfig) -> list:
    v = config.values
    net = _load_network_checked(config, "network")
    if v["input_mode"] >= net.n_sites:
        raise ConfigError([f"config: input_mode {v['input_mode']} out of range "
                           f"for {net.n_sites}-site network"])
    h = build_tight_binding(net)
    if "time" in v:
        t = v["time"]
    else:
        t = length_to_time(v["length"], v["n_index"])
    if v["phase_sigma"] > 0:
        spec = DephasingEnsembleSpec(v["n_segments"], v["phase_sigma"],
                                     v["shots"], v["seed"])
        pops = dephased_walk(h, v["input_mode"], t, spec)
    else:
        pops = evolve_unitary(h, v["input_mode"], t).populations()
    meta = _meta(config)
    rows = list(enumerate(pops))
    out = config.path("output")
    _atomic_write(out, _csv_text(meta, ["site", "population"], rows))
    sidecar = out.with_name(out.name + ".meta.json")
    _atomic_write(sidecar, _sidecar(config, meta, {
        "evolution_time": t,
        "input_mode": v["input_mode"],
        "phase_sigma": v["phase_sigma"],
        "n_segments": v.get("n_segments"),
        "shots": v.get("shots"),
    }))
    return [out, sidecar]


def _bh_params(values: dict, hopping: float, interaction: float) -> BoseHubbardParams:
    if values.get("geometry") == "plaquette":
        return BoseHubbardParams.plaquette(values["rows"], values["cols"],
                                           hopping, interaction)
    return BoseHubbardParams.chain(values["L"], hopping, interaction)


def _run_bh_spectrum(config: ExperimentConfig) -> list:
    v = config.values
    basis = enumerate_basis(v["L"], v["N"])
    params = _bh_params(v, v["J"], v["U"])
    grid = np.linspace(v["nu_min"], v["nu_max"], v["nu_steps"])
    spectrum = modulation_absorption(params, basis, v["delta"], grid,
                                     v["t_drive"], tol=v["tol"])
    meta = _meta(config)
    rows = list(zip(spectrum.nu_grid, spectrum.absorbed_energy))
    out = config.path("output")
    _atomic_write(out, _csv_text(meta, ["nu", "absorbed_energy"], rows))
    sidecar = out.with_name(out.name + ".meta.json")
    _atomic_write(sidecar, _sidecar(config, meta, {
        "nu_grid": [float(g) for g in grid],
        "t_drive": v["t_drive"],
        "tol": v["tol"],
        "delta": v["delta"],
        "basis_states": len(basis),
    }))
    return [out, sidecar]


def _run_bh_scan(config: ExperimentConfig) -> list:
    v = config.values
    basis = enumerate_basis(v["L"], v["N"])
    grid = np.geomspace(v["j_min"], v["j_max"], v["j_steps"])
    rows = []
    for j in grid:
        params = _bh_params(v, j * v["U"], v["U"])
        gap = drive_coupled_gap(params, basis, k=v["k"])
        _, vecs = low_spectrum(build_bh(params, basis), 1)
        fraction = condensate_fraction(vecs[:, 0], basis)
        rows.append((j, gap, fraction))
    meta = _meta(config)
    out = config.path("output")
    _atomic_write(out, _csv_text(meta, ["j_ratio", "gap", "condensate_fraction"],
                                 rows))
    sidecar = out.with_name(out.name + ".meta.json")
    _atomic_write(sidecar, _sidecar(config, meta, {
        "j_grid": [float(g) for g in grid],
        "k": v["k"],
        "basis_states": len(basis),
    }))
    return [out, sidecar]


def _run_validate(config: ExperimentConfig) -> list:
    v = config.values
    net_a = _load_network_checked(config, "network_a")
    net_b = _load_network_checked(config, "network_b")
    try:
        rec = load_mapping(config.path("mapping"))
    except NetfileError as exc:
        raise ConfigError([f"mapping ({v['mapping']}): {exc}"]) from exc
    h_a = build_tight_binding(net_a)
    h_b = build_tight_binding(net_b)
    check = check_isomorphism(h_a, h_b, rec, v["tolerance"])
    speedup = classify_speedup(v["hardness_proof"],
                               v["efficient_classical_known"],
                               v["scalable_accuracy"])
    narrative = {"note": v["note"]} if v["note"] else {}
    report = build_report(v["role"], [check], speedup, narrative)
    payload = json.loads(report_to_json(report))
    payload["meta"] = _meta(config)
    out = config.path("output")
    _atomic_write(out, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return [out]


_RUNNERS = {
    "enaqt-sweep": _run_enaqt_sweep,
    "walk": _run_walk,
    "bh-spectrum": _run_bh_spectrum,
    "bh-scan": _run_bh_scan,
    "validate": _run_validate,
}


def run(config: ExperimentConfig) -> list:
    """Execute a parsed config; returns the list of files written."""
    return _RUNNERS[config.command](config)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aqsim",
        description="Desk-scale transport, walk, and lattice-spectroscopy runs",
        epilog=_EXIT_CODE_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version",
                        version=f"aqsim {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    descriptions = {
        "enaqt-sweep": "dephasing sweep of transport efficiency (CSV gamma,eta,converged)",
        "walk": "single-excitation walk populations (CSV site,population)",
        "bh-spectrum": "interaction-modulation absorption spectrum (CSV nu,absorbed_energy)",
        "bh-scan": "gap and condensate fraction over J/U (CSV j_ratio,gap,condensate_fraction)",
        "validate": "isomorphism check and validation report (JSON)",
    }
    for name, desc in descriptions.items():
        p = sub.add_parser(name, help=desc, epilog=_EXIT_CODE_HELP,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("config", help="path to the experiment config file")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    config_path = Path(args.config)
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = parse_config(text, base_dir=config_path.parent,
                              expected_command=args.subcommand)
        written = run(config)
    except ConfigError as exc:
        for violation in exc.violations:
            print(f"error: {violation}", file=sys.stderr)
        return EXIT_CONFIG
    except NetfileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StateInvariantError, ReportRoleError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (StiffnessError, EigenConvergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (NoSinkError, ValueError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except RuntimeError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for path in written:
        print(path)
    return EXIT_OK


def entry_point():
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
