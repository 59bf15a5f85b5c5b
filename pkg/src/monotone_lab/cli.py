"""Command-line interface: config parsing, experiment dispatch, counts
ingestion, CSV and manifest emission.

Exit codes: 0 success, 2 configuration problem (unknown subcommand,
unreadable or invalid config), 3 data problem (malformed counts files).

Outputs are written atomically (temp file + rename).  Floats are serialized
with 17 significant digits so a re-parsed CSV reproduces the in-memory
values exactly and identical (config, seed) runs are byte-identical.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .circuits import StateFamily
from .experiments import (
    DEFAULT_DRIFT_HZ,
    ExperimentConfig,
    PrepErrorResult,
    ScanRow,
    ScanSeries,
    fit_cosine,
    prep_error_experiment,
    scan,
)
from .measure import CountsRecord
from .monotones import monotone_from_counts, term_set
from .noise import NoiseModel, OneOverFSettings, confusion_matrix

SEED_ENV_VAR = "MONOTONE_LAB_SEED"

SCAN_CSV_HEADER = "t_us,realized_t_us,family,quantity,mode,value,stderr"


class ConfigError(Exception):
    """Problems with the command line or config file (exit 2)."""


class DataError(Exception):
    """Problems with input data files (exit 3)."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_scan_csv(series: ScanSeries, path: str | Path) -> None:
    lines = [SCAN_CSV_HEADER]
    for r in series.rows:
        lines.append(
            f"{_fmt(r.t_us)},{_fmt(r.realized_t_us)},{r.family},{r.quantity},{r.mode},{_fmt(r.value)},{_fmt(r.stderr)}"
        )
    atomic_write(path, "\n".join(lines) + "\n")


def read_scan_csv(path: str | Path) -> ScanSeries:
    series = ScanSeries()
    with open(path) as fh:
        header = fh.readline().strip()
        if header != SCAN_CSV_HEADER:
            raise DataError(f"{path}: unexpected CSV header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 7:
                raise DataError(f"{path}: line {lineno}: expected 7 columns")
            t, rt, fam, qty, mode, val, err = parts
            try:
                row = ScanRow(float(t), float(rt), fam, qty, mode, float(val), float(err))
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: {exc}") from exc
            series.rows.append(row)
    return series


def write_prep_csv(result: PrepErrorResult, path: str | Path) -> None:
    lines = ["rep,error_percent"]
    for i, e in enumerate(result.per_rep_percent, start=1):
        lines.append(f"{i},{_fmt(e)}")
    # Summary rows keep the two-column schema.
    lines.append(f"mean,{_fmt(result.mean_error_percent)}")
    lines.append(f"stderr,{_fmt(result.stderr_percent)}")
    atomic_write(path, "\n".join(lines) + "\n")


def write_counts_jsonl(records: Iterable[CountsRecord], path: str | Path) -> None:
    atomic_write(path, "".join(rec.to_json_line() + "\n" for rec in records))


# --------------------------------------------------------------------------
# Config files (INI syntax; one section per subsystem).

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_bool(raw: str, key: str) -> bool:
    v = raw.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _parse_float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def _parse_float_list(raw: str, key: str) -> tuple[float, ...]:
    return tuple(_parse_float(part, key) for part in raw.split(",") if part.strip())


def load_config_file(path: str | Path) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return {section: dict(parser.items(section)) for section in parser.sections()}


def config_hash(config: dict[str, dict[str, str]]) -> str:
    """Order-independent digest of the parsed config contents."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _scalar_or_list(raw: str, key: str) -> float | tuple[float, ...]:
    vals = _parse_float_list(raw, key)
    return vals[0] if len(vals) == 1 else vals


def build_noise_model(config: dict[str, dict[str, str]], n: int) -> NoiseModel | None:
    noise_cfg = dict(config.get("noise", {}))
    readout = dict(config.get("readout", {}))
    oneoverf = dict(config.get("oneoverf", {}))
    if not noise_cfg and not readout and not oneoverf:
        return None
    kwargs: dict = {}
    if "t1_us" in noise_cfg:
        v = _scalar_or_list(noise_cfg.pop("t1_us"), "noise.t1_us")
        kwargs["t1_s"] = tuple(x * 1e-6 for x in v) if isinstance(v, tuple) else v * 1e-6
    if "t2_us" in noise_cfg:
        v = _scalar_or_list(noise_cfg.pop("t2_us"), "noise.t2_us")
        kwargs["t2_s"] = tuple(x * 1e-6 for x in v) if isinstance(v, tuple) else v * 1e-6
    if "drift_hz" in noise_cfg and "drift_total_hz" in noise_cfg:
        raise ConfigError("give either noise.drift_hz or noise.drift_total_hz, not both")
    if "drift_hz" in noise_cfg:
        kwargs["drift_hz"] = _scalar_or_list(noise_cfg.pop("drift_hz"), "noise.drift_hz")
    elif "drift_total_hz" in noise_cfg:
        raw = noise_cfg.pop("drift_total_hz").strip().lower()
        if raw == "default":
            if n not in DEFAULT_DRIFT_HZ:
                raise ConfigError(f"no default drift frequency for n = {n}")
            total = DEFAULT_DRIFT_HZ[n]
        else:
            total = _parse_float(raw, "noise.drift_total_hz")
        kwargs["drift_hz"] = tuple(total / n for _ in range(n))
    if "cnot_depolarizing" in noise_cfg:
        kwargs["cnot_depolarizing"] = _parse_float(noise_cfg.pop("cnot_depolarizing"), "noise.cnot_depolarizing")
    if noise_cfg:
        raise ConfigError(f"unknown keys in [noise]: {', '.join(sorted(noise_cfg))}")
    if "eps0" in readout:
        kwargs["readout_eps0"] = _scalar_or_list(readout.pop("eps0"), "readout.eps0")
    if "eps1" in readout:
        kwargs["readout_eps1"] = _scalar_or_list(readout.pop("eps1"), "readout.eps1")
    if readout:
        raise ConfigError(f"unknown keys in [readout]: {', '.join(sorted(readout))}")
    if oneoverf:
        try:
            settings = OneOverFSettings(
                enabled=_parse_bool(oneoverf.pop("enabled", "true"), "oneoverf.enabled"),
                sigma_hz=_parse_float(oneoverf.pop("sigma_hz", "20000"), "oneoverf.sigma_hz"),
                trajectories=int(_parse_float(oneoverf.pop("trajectories", "500"), "oneoverf.trajectories")),
                spectrum=oneoverf.pop("spectrum", "quasi-static").strip(),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if oneoverf:
            raise ConfigError(f"unknown keys in [oneoverf]: {', '.join(sorted(oneoverf))}")
        kwargs["oneoverf"] = settings
    # T1/T2 default to infinity here: a config that only sets drift or
    # readout should not silently acquire damping.
    kwargs.setdefault("t1_s", math.inf)
    kwargs.setdefault("t2_s", math.inf)
    try:
        return NoiseModel(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


_EXPERIMENT_KEYS = {
    "kind", "family", "n", "monotone", "pauli", "t_start_us", "t_stop_us", "t_points",
    "shots", "repetitions", "paulis_per_rep", "expectation_source", "monotone_mode",
    "e4b_variant", "ramsey_qubit", "seed",
}


def build_experiment_config(config: dict[str, dict[str, str]], seed_override: int | None) -> ExperimentConfig:
    exp = dict(config.get("experiment", {}))
    unknown = set(exp) - _EXPERIMENT_KEYS
    if unknown:
        raise ConfigError(f"unknown keys in [experiment]: {', '.join(sorted(unknown))}")
    kwargs: dict = {}
    if "kind" in exp:
        kwargs["kind"] = exp["kind"].strip()
    if "family" in exp:
        try:
            kwargs["family"] = StateFamily(exp["family"].strip().lower())
        except ValueError:
            raise ConfigError(f"unknown family {exp['family']!r}") from None
    for key, cast in (
        ("n", int), ("t_points", int), ("shots", int), ("repetitions", int),
        ("paulis_per_rep", int), ("ramsey_qubit", int), ("seed", int),
        ("t_start_us", float), ("t_stop_us", float),
    ):
        if key in exp:
            kwargs[key] = cast(_parse_float(exp[key], f"experiment.{key}"))
    for key in ("monotone", "pauli", "expectation_source", "monotone_mode", "e4b_variant"):
        if key in exp:
            kwargs[key] = exp[key].strip()
    n = kwargs.get("n", 3)
    kwargs["noise"] = build_noise_model(config, n)

    comp = dict(config.get("compensation", {}))
    if comp:
        enabled = _parse_bool(comp.pop("enabled", "true"), "compensation.enabled")
        kwargs["compensation_enabled"] = enabled
        if "frequencies_hz" in comp and "total_hz" in comp:
            raise ConfigError("give either compensation.frequencies_hz or compensation.total_hz")
        if "frequencies_hz" in comp:
            kwargs["compensation_hz"] = _parse_float_list(comp.pop("frequencies_hz"), "compensation.frequencies_hz")
        elif "total_hz" in comp:
            total = _parse_float(comp.pop("total_hz"), "compensation.total_hz")
            kwargs["compensation_hz"] = tuple(total / n for _ in range(n))
        if comp:
            raise ConfigError(f"unknown keys in [compensation]: {', '.join(sorted(comp))}")

    env_seed = os.environ.get(SEED_ENV_VAR)
    if seed_override is not None:
        kwargs["seed"] = int(seed_override)
    elif env_seed is not None:
        try:
            kwargs["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env_seed!r}") from None
    try:
        cfg = ExperimentConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    _validate_cross_constraints(cfg)
    return cfg


def _validate_cross_constraints(cfg: ExperimentConfig) -> None:
    """Consistency checks that span several config fields."""
    if cfg.kind == "monotone-scan":
        ts = term_set(cfg.monotone, cfg.e4b_variant)
        if ts.n_qubits != cfg.n:
            raise ConfigError(f"monotone {ts.name} needs n = {ts.n_qubits}, config has n = {cfg.n}")
    if cfg.kind == "bell" and cfg.n != 2:
        raise ConfigError("bell scans require n = 2")
    if cfg.kind == "ramsey" and not 0 <= cfg.ramsey_qubit < cfg.n:
        raise ConfigError(f"ramsey_qubit {cfg.ramsey_qubit} out of range for n = {cfg.n}")
    if cfg.kind == "pauli-scan" and cfg.pauli is not None:
        if len(cfg.pauli) != cfg.n or any(c not in "IXYZ" for c in cfg.pauli):
            raise ConfigError(f"bad pauli label {cfg.pauli!r} for n = {cfg.n}")
    try:
        cfg.compensation()
        if cfg.noise is not None:
            cfg.noise.validate_for(cfg.n)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _confusion_from_config(config: dict[str, dict[str, str]], n: int):
    readout = config.get("readout", {})
    if not readout:
        return None
    eps0 = _scalar_or_list(readout.get("eps0", "0"), "readout.eps0")
    eps1 = _scalar_or_list(readout.get("eps1", "0"), "readout.eps1")
    for name, v in (("eps0", eps0), ("eps1", eps1)):
        if isinstance(v, tuple) and len(v) != n:
            raise ConfigError(f"readout.{name} has {len(v)} entries, data has n = {n}")

    def pick(v, j):
        return v[j] if isinstance(v, tuple) else v

    try:
        return [confusion_matrix(pick(eps0, j), pick(eps1, j)) for j in range(n)]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# --------------------------------------------------------------------------
# Counts ingestion and offline analysis.

def ingest_counts(path: str | Path) -> list[CountsRecord]:
    """Parse and validate a JSON-lines counts export.

    Every malformed line is reported with its line number; duplicate
    (basis, delay) pairs are ambiguous and rejected.
    """
    records: list[CountsRecord] = []
    seen: set[tuple[str, float | None]] = set()
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read counts file {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = CountsRecord.from_json_line(line)
            except (ValueError, KeyError, TypeError) as exc:
                raise DataError(f"{path}: line {lineno}: {exc}") from exc
            key = (rec.basis, rec.delay_us)
            if key in seen:
                raise DataError(
                    f"{path}: line {lineno}: duplicate record for basis {rec.basis} at delay_us={rec.delay_us}"
                )
            seen.add(key)
            records.append(rec)
    return records


def analyze_counts(
    records: Sequence[CountsRecord],
    monotone: str,
    confusion=None,
    e4b_variant: str = "verbatim",
) -> tuple[ScanSeries, list[str]]:
    """Group records by delay and evaluate the requested monotone per group.

    Groups missing any required basis are skipped; the returned messages name
    the missing settings.
    """
    ts = term_set(monotone, e4b_variant)
    groups: dict[float, dict[str, CountsRecord]] = {}
    for rec in records:
        if rec.n_qubits != ts.n_qubits:
            raise DataError(f"record basis {rec.basis} has n = {rec.n_qubits}, {ts.name} needs {ts.n_qubits}")
        delay = 0.0 if rec.delay_us is None else rec.delay_us
        groups.setdefault(delay, {})[rec.basis] = rec
    series = ScanSeries()
    skipped: list[str] = []
    for delay in sorted(groups):
        recs = groups[delay]
        missing = [b for b in ts.bases if b not in recs]
        if missing:
            skipped.append(f"delay_us={_fmt(delay)}: missing bases {', '.join(missing)}")
            continue
        report = monotone_from_counts(ts, recs, confusion)
        family = next(iter(recs.values())).metadata.get("family", "unknown")
        series.rows.append(ScanRow(delay, delay, family, ts.name, report.mode, report.value, report.stderr))
    return series, skipped


# --------------------------------------------------------------------------
# Manifest.

def write_manifest(
    out_path: str | Path,
    argv: Sequence[str],
    cfg_hash: str,
    seed: int | None,
    outputs: Sequence[str],
    started: float,
) -> str:
    manifest = {
        "command": "monotone-lab " + " ".join(argv),
        "config_hash": cfg_hash,
        "seed": seed,
        "tool_version": __version__,
        "outputs": list(outputs),
        "duration_s": time.monotonic() - started,
    }
    path = str(out_path) + ".manifest.json"
    atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# --------------------------------------------------------------------------
# Subcommands.

def _cmd_scan(args, argv) -> int:
    started = time.monotonic()
    config = load_config_file(args.config)
    cfg = build_experiment_config(config, args.seed)
    sink: list[CountsRecord] | None = [] if args.emit_counts else None
    series = scan(cfg, counts_sink=sink)
    write_scan_csv(series, args.out)
    outputs = [str(args.out)]
    if args.emit_counts:
        write_counts_jsonl(sink, args.emit_counts)
        outputs.append(str(args.emit_counts))
    if args.plot:
        from .plotting import render_scan

        png = str(Path(args.out).with_suffix(".png"))
        render_scan(series, png, title=f"{cfg.kind} {cfg.family.value} n={cfg.n}")
        outputs.append(png)
    write_manifest(args.out, argv, config_hash(config), cfg.seed, outputs, started)
    return 0


def _cmd_prep_error(args, argv) -> int:
    started = time.monotonic()
    config = load_config_file(args.config)
    cfg = build_experiment_config(config, args.seed)
    result = prep_error_experiment(cfg)
    write_prep_csv(result, args.out)
    outputs = [str(args.out)]
    if args.plot:
        from .plotting import render_prep_error

        png = str(Path(args.out).with_suffix(".png"))
        render_prep_error(result, png)
        outputs.append(png)
    write_manifest(args.out, argv, config_hash(config), cfg.seed, outputs, started)
    print(f"mean_error_percent={_fmt(result.mean_error_percent)} stderr_percent={_fmt(result.stderr_percent)}")
    return 0


def _cmd_drift_fit(args, argv) -> int:
    started = time.monotonic()
    series = read_scan_csv(args.infile)
    quantities = sorted({r.quantity for r in series.rows})
    if args.quantity:
        rows = [r for r in series.rows if r.quantity == args.quantity]
        if not rows:
            raise DataError(f"no rows with quantity {args.quantity!r} (have: {', '.join(quantities)})")
    elif len(quantities) == 1:
        rows = series.rows
    else:
        raise DataError(f"multiple quantities in input ({', '.join(quantities)}); pick one with --quantity")
    t = [r.realized_t_us for r in rows]
    v = [r.value for r in rows]
    try:
        fit = fit_cosine(t, v)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    print(f"f_hat_hz={_fmt(fit.f_hat_hz)} amplitude={_fmt(fit.amplitude)} residual={_fmt(fit.residual)}")
    outputs = []
    if args.out:
        atomic_write(
            args.out,
            "f_hat_hz,amplitude,residual\n"
            + f"{_fmt(fit.f_hat_hz)},{_fmt(fit.amplitude)},{_fmt(fit.residual)}\n",
        )
        outputs.append(str(args.out))
    if args.plot:
        from .plotting import render_cosine_fit

        png = str(Path(args.out or args.infile).with_suffix(".fit.png"))
        render_cosine_fit(t, v, fit, png)
        outputs.append(png)
    if args.out:
        write_manifest(args.out, argv, config_hash({}), None, outputs, started)
    return 0


def _cmd_analyze_counts(args, argv) -> int:
    started = time.monotonic()
    records = ingest_counts(args.infile)
    confusion = None
    cfg_hash = config_hash({})
    if args.config:
        config = load_config_file(args.config)
        cfg_hash = config_hash(config)
        n = len(records[0].basis) if records else 0
        confusion = _confusion_from_config(config, n)
    series, skipped = analyze_counts(records, args.monotone, confusion, args.e4b_variant)
    for msg in skipped:
        print(f"skipped {msg}", file=sys.stderr)
    write_scan_csv(series, args.out)
    outputs = [str(args.out)]
    if args.plot:
        from .plotting import render_scan

        png = str(Path(args.out).with_suffix(".png"))
        render_scan(series, png, title=f"{args.monotone} from counts")
        outputs.append(png)
    write_manifest(args.out, argv, cfg_hash, None, outputs, started)
    return 0


def _cmd_stabilizers(args, argv) -> int:
    from .monotones import stabilizer_group

    try:
        family = StateFamily(args.family.lower())
        group = stabilizer_group(family, args.n)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    lines = ["sign,label"]
    for sign, label in group.elements:
        lines.append(f"{'+1' if sign > 0 else '-1'},{label}")
    text = "\n".join(lines) + "\n"
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_selftest(args, argv) -> int:
    from .selftest import run_selftest

    return run_selftest(verbose=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="monotone-lab",
        description="Simulate and analyze multi-qubit entanglement-monotone experiments.",
    )
    parser.add_argument("--version", action="version", version=f"monotone-lab {__version__}")
    sub = parser.add_subparsers(dest="command")

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="INI config file")
        p.add_argument("--seed", type=int, default=None,
                       help=f"override the config seed (also overrides ${SEED_ENV_VAR})")
        p.add_argument("--plot", action="store_true", help="also render a PNG next to the output")

    p = sub.add_parser("scan", help="monotone / pauli / ramsey / bell delay scan")
    add_common(p)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--emit-counts", default=None, help="also write sampled counts records as JSONL")
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("prep-error", help="repeated preparation-error protocol")
    add_common(p)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_prep_error)

    p = sub.add_parser("drift-fit", help="fit A cos(2 pi f t) to a scan CSV")
    p.add_argument("--in", dest="infile", required=True, help="input scan CSV")
    p.add_argument("--quantity", default=None, help="quantity column value to fit")
    p.add_argument("--out", default=None, help="optional CSV with the fit parameters")
    p.add_argument("--plot", action="store_true", help="render data + fit PNG")
    p.set_defaults(func=_cmd_drift_fit)

    p = sub.add_parser("analyze-counts", help="evaluate a monotone from a counts JSONL export")
    p.add_argument("--in", dest="infile", required=True, help="input JSONL counts file")
    p.add_argument("--monotone", required=True, choices=["e3", "e4a", "e4b", "c2"])
    p.add_argument("--e4b-variant", default="verbatim", choices=["verbatim", "symmetrized"])
    p.add_argument("--config", default=None, help="optional config supplying [readout] correction")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--plot", action="store_true", help="also render a PNG next to the output")
    p.set_defaults(func=_cmd_analyze_counts)

    p = sub.add_parser("stabilizers", help="print the stabilizer group of a target family")
    p.add_argument("--family", required=True, choices=["ghz", "cluster"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", default=None, help="optional CSV output path")
    p.set_defaults(func=_cmd_stabilizers)

    p = sub.add_parser("selftest", help="run the built-in quick consistency checks")
    p.set_defaults(func=_cmd_selftest)
    return parser


def run_command(argv: Sequence[str]) -> int:
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help/--version.
        return int(exc.code or 0)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args, list(argv))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))
