"""Command-line surface: config parsing, sweep execution, file emission and
comparison against reference data.

Config files are nested key/value YAML with interface units matching how the
numbers are usually quoted: frequencies in GHz, kappas and spans in MHz,
angles in degrees.  Everything is converted to Hz/radians internally.  Sweep
files (CSV or JSON) print floating point with 9 significant digits and "\n"
line endings, which makes emit -> parse -> emit byte-identical.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

import numpy as np
import yaml

from . import cmt, metrics, tuner
from .errors import (
    DeviceValidationError,
    DomainError,
    EmptyBandError,
    SingularMatrixError,
    TopologyError,
)
from .model import (
    DeviceConfig,
    ModeSpec,
    ProcessKind,
    PumpedCoupling,
    ValidatedDevice,
    check_pump_closure,
    phase_signs,
    total_pump_phase,
    validate_device,
    wrap_phase,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_MISMATCH = 1
EXIT_SCHEMA = 2

STRENGTH_KEYS = ("rho", "target_g_db", "target_c")


class ConfigError(ValueError):
    """Malformed run configuration."""


@dataclass
class RunConfig:
    """Parsed run configuration plus the raw document it came from."""

    raw: dict
    device: ValidatedDevice
    declared_pumps: Optional[dict[str, float]]
    span: float  # full sweep span, Hz
    points: int
    out_format: str
    out_path: str

    @property
    def delta_grid(self) -> np.ndarray:
        if self.points == 1:
            return np.array([0.0])
        half = self.span / 2.0
        return np.linspace(-half, half, self.points)


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"{context}: missing required key '{key}'")
    return mapping[key]


def _coupling_from_entry(entry: dict) -> PumpedCoupling:
    pair = tuple(_require(entry, "pair", "coupling"))
    kind = ProcessKind(str(_require(entry, "kind", f"coupling {pair}")).lower())
    present = [k for k in STRENGTH_KEYS if k in entry]
    if len(present) != 1:
        raise ConfigError(
            f"coupling {pair}: exactly one of {'/'.join(STRENGTH_KEYS)} is required, "
            f"got {present or 'none'}"
        )
    key = present[0]
    value = float(entry[key])
    if key == "rho":
        rho = value
    elif key == "target_g_db":
        if kind is not ProcessKind.GAIN:
            raise ConfigError(f"coupling {pair}: target_g_db only applies to gain couplings")
        rho = cmt.rho_for_gain(10.0 ** (value / 10.0))
    else:
        if kind is not ProcessKind.CONVERSION:
            raise ConfigError(f"coupling {pair}: target_c only applies to conversion couplings")
        rho = cmt.rho_for_conversion(value)
    phase = math.radians(float(entry.get("phase_deg", 0.0)))
    return PumpedCoupling(pair=pair, kind=kind, rho=rho, phase=phase)


def parse_config(raw: dict) -> RunConfig:
    device_doc = _require(raw, "device", "config")
    modes = tuple(
        ModeSpec(
            name=str(_require(m, "name", "mode")),
            resonance_freq=float(_require(m, "freq_ghz", "mode")) * 1e9,
            kappa=float(_require(m, "kappa_mhz", "mode")) * 1e6,
        )
        for m in _require(device_doc, "modes", "device")
    )
    couplings = tuple(_coupling_from_entry(e) for e in device_doc.get("couplings", []))
    tol = float(device_doc.get("pump_detuning_tolerance_mhz", 10.0)) * 1e6
    device = validate_device(DeviceConfig(modes, couplings, tol))

    sweep_doc = raw.get("sweep", {})
    span = float(sweep_doc.get("delta_span_mhz", 60.0)) * 1e6
    points = int(sweep_doc.get("points", 1001))
    if points < 1:
        raise ConfigError("sweep.points must be >= 1")
    if span <= 0:
        raise ConfigError("sweep.delta_span_mhz must be > 0")

    outputs = raw.get("outputs", {})
    out_format = str(outputs.get("format", "csv")).lower()
    if out_format not in ("csv", "json"):
        raise ConfigError(f"outputs.format must be csv or json, got {out_format!r}")
    out_path = str(outputs.get("path", "sweep." + out_format))

    declared = raw.get("declared_pumps_ghz")
    pumps = {str(k): float(v) * 1e9 for k, v in declared.items()} if declared else None
    return RunConfig(raw, device, pumps, span, points, out_format, out_path)


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return parse_config(raw)


def bundled_config_path(name: str):
    """Path to a bundled example config ('circulator' or 'diramp')."""
    return resources.files("nonrecip.configs").joinpath(f"{name}.cfg")


# ---------------------------------------------------------------------------
# sweep tables


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


@dataclass
class SweepTable:
    columns: list[str]
    rows: np.ndarray  # (n, ncol) float

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]


def sweep_table(result: cmt.SweepResult) -> SweepTable:
    """Tabulate a sweep: delta, re/im for every (out, in) pair, then dB."""
    names = result.device.mode_names
    pairs = [(o, i) for o in names for i in names]
    columns = ["delta_hz"]
    columns += [f"S_{o}{i}_{p}" for (o, i) in pairs for p in ("re", "im")]
    columns += [f"S_{o}{i}_db" for (o, i) in pairs]
    rows = np.empty((len(result), len(columns)))
    rows[:, 0] = result.deltas
    k = 1
    for o, i in pairs:
        oi, ii = result.device.index(o), result.device.index(i)
        rows[:, k] = result.entries[:, oi, ii].real
        rows[:, k + 1] = result.entries[:, oi, ii].imag
        k += 2
    with np.errstate(divide="ignore"):
        for n, (o, i) in enumerate(pairs):
            oi, ii = result.device.index(o), result.device.index(i)
            rows[:, k + n] = 20.0 * np.log10(np.abs(result.entries[:, oi, ii]))
    return SweepTable(columns, rows)


def write_table_csv(table: SweepTable, path: str) -> None:
    lines = [",".join(table.columns)]
    for row in table.rows:
        lines.append(",".join(_fmt(x) for x in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_table_json(table: SweepTable, path: str) -> None:
    cols = json.dumps(table.columns, separators=(", ", ": "))
    body = ",\n".join(
        "    [" + ", ".join(_fmt(x) for x in row) + "]" for row in table.rows
    )
    text = '{\n  "columns": ' + cols + ',\n  "rows": [\n' + body + "\n  ]\n}\n"
    _atomic_write(path, text)


def write_table(table: SweepTable, path: str, fmt: str) -> None:
    if fmt == "csv":
        write_table_csv(table, path)
    else:
        write_table_json(table, path)


def read_table(path: str) -> SweepTable:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        if not isinstance(doc, dict) or "columns" not in doc or "rows" not in doc:
            raise ConfigError(f"{path}: JSON table needs 'columns' and 'rows'")
        cols = [str(c) for c in doc["columns"]]
        rows = np.asarray(doc["rows"], dtype=float).reshape(-1, len(cols))
        return SweepTable(cols, rows)
    lines = [ln for ln in text.split("\n") if ln]
    if not lines:
        raise ConfigError(f"{path}: empty table")
    cols = lines[0].split(",")
    data = [[float(x) for x in ln.split(",")] for ln in lines[1:]]
    rows = np.asarray(data, dtype=float).reshape(-1, len(cols))
    return SweepTable(cols, rows)


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# summaries


def _print_summary(cfg: RunConfig, result: cmt.SweepResult) -> None:
    device = cfg.device
    names = device.mode_names
    s0 = result.matrix_at(result.center_index)
    print(f"on-resonance |S| (dB) at delta=0 Hz, modes {names}:")
    for o in names:
        cells = "  ".join(f"{s0.db(o, i):8.2f}" for i in names)
        print(f"  out {o}: {cells}")
    if device.is_circulator:
        sense = metrics.circulation_sense(s0)
        order = metrics.circulation_order(s0)
        cycle = "->".join(order + (order[0],)) if order else "none"
        print(f"circulation sense at delta=0: {sense.value} ({cycle})")
        try:
            bw = metrics.circulator_bandwidth(result)
            print(f"bandwidth (match <= -10 dB, loss <= 1 dB): {bw / 1e6:.3f} MHz around delta=0")
        except EmptyBandError as exc:
            print(f"bandwidth: empty band ({exc})")
    if device.is_directional_amp:
        phi = total_pump_phase(device)
        roles = metrics.role_map(device, phi)
        print(
            f"roles at phi_tot={phi.value:+.4f} rad: "
            + ", ".join(f"{m}={roles[m].value}" for m in names)
        )
        fwd = s0.magnitude(roles.idler, roles.signal) ** 2
        if fwd > 0:
            print(f"forward gain {roles.signal}->{roles.idler} at delta=0: "
                  f"{metrics.to_db(fwd):.2f} dB")
            print(f"added noise {roles.signal}->{roles.idler} at delta=0: "
                  f"{metrics.added_noise(s0, roles.signal, roles.idler):.4f} photons")
        print(f"input reflections at delta=0: "
              f"{roles.signal}: {s0.db(roles.signal, roles.signal):.2f} dB, "
              f"{roles.vacuum}: {s0.db(roles.vacuum, roles.vacuum):.2f} dB")
        print(f"{roles.vacuum}->{roles.signal} transmission at delta=0: "
              f"{s0.db(roles.signal, roles.vacuum):.2f} dB")
        try:
            bw = metrics.gain_bandwidth_3db(result, roles.signal, roles.idler)
            print(f"3 dB gain bandwidth: {bw / 1e6:.3f} MHz around delta=0")
        except EmptyBandError as exc:
            print(f"3 dB gain bandwidth: empty band ({exc})")
    nvr0 = metrics.nvr(s0)
    print("NVR at delta=0 (dB): " + ", ".join(f"{n}: {v:.3f}" for n, v in nvr0.items()))
    defect = max(metrics.symplectic_defect(result.matrix_at(i)) for i in range(len(result)))
    print(f"max symplectic defect over the sweep: {defect:.3e}")
    if cfg.declared_pumps:
        for w in check_pump_closure(device, cfg.declared_pumps):
            print(f"warning: {w}")


# ---------------------------------------------------------------------------
# commands


def cmd_sparams(args) -> int:
    try:
        cfg = load_config(args.config)
    except (ConfigError, DeviceValidationError, DomainError, OSError, yaml.YAMLError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_path = args.out or cfg.out_path
    fmt = (args.format or cfg.out_format).lower()
    try:
        result = cmt.sweep(cfg.device, cfg.delta_grid)
    except SingularMatrixError as exc:
        print(f"error: SingularMatrix: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    write_table(sweep_table(result), out_path, fmt)
    print(f"wrote {len(result)} detuning points to {out_path} ({fmt})")
    _print_summary(cfg, result)
    return EXIT_OK


def cmd_phase_sweep(args) -> int:
    try:
        cfg = load_config(args.config)
        pairs = _parse_pairs(args.pairs, cfg.device)
    except (ConfigError, DeviceValidationError, DomainError, TopologyError,
            OSError, yaml.YAMLError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    phis = np.linspace(args.phi_min, args.phi_max, args.phi_points)
    try:
        ps = tuner.phase_sweep(cfg.device, phis, cfg.delta_grid)
    except SingularMatrixError as exc:
        print(f"error: SingularMatrix: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except TopologyError as exc:
        print(f"error: TopologyError: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    columns = ["phi_rad", "delta_hz"] + [f"S_{o}{i}_db" for o, i in pairs]
    rows = np.empty((len(phis) * len(cfg.delta_grid), len(columns)))
    k = 0
    with np.errstate(divide="ignore"):
        for r, phi in enumerate(ps.phis):
            for c, delta in enumerate(ps.deltas):
                rows[k, 0] = phi
                rows[k, 1] = delta
                for n, pair in enumerate(pairs):
                    rows[k, 2 + n] = 20.0 * np.log10(ps.magnitude(*pair)[r, c])
                k += 1
    out_path = args.out or "phase_sweep." + (args.format or cfg.out_format)
    write_table(SweepTable(columns, rows), out_path, (args.format or cfg.out_format).lower())
    print(f"wrote {rows.shape[0]} (phi, delta) points to {out_path}")
    return EXIT_OK


def cmd_threshold(args) -> int:
    try:
        cfg = load_config(args.config)
        if not cfg.device.is_directional_amp:
            raise TopologyError("threshold sweep needs a directional-amp config")
    except (ConfigError, DeviceValidationError, DomainError, TopologyError,
            OSError, yaml.YAMLError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cs = np.linspace(args.c_min, args.c_max, args.c_points)
    try:
        res = tuner.conversion_sweep(cfg.device, cs)
    except SingularMatrixError as exc:
        print(f"error: SingularMatrix: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    q, z = res.reflection_port, res.idler_port
    columns = ["c", "rho_conv", f"S_{q}{q}_abs", f"S_{z}{q}_abs",
               f"S_{q}{q}_db", f"S_{z}{q}_db", "c_threshold"]
    rows = np.empty((len(cs), len(columns)))
    rows[:, 0] = res.c_values
    rows[:, 1] = res.rho_values
    rows[:, 2] = res.reflection_mag
    rows[:, 3] = res.forward_mag
    with np.errstate(divide="ignore"):
        rows[:, 4] = 20.0 * np.log10(res.reflection_mag)
        rows[:, 5] = 20.0 * np.log10(res.forward_mag)
    rows[:, 6] = res.threshold_c
    out_path = args.out or "threshold." + (args.format or cfg.out_format)
    write_table(SweepTable(columns, rows), out_path, (args.format or cfg.out_format).lower())
    print(f"wrote {len(cs)} conversion points to {out_path}; "
          f"analytic threshold C = {res.threshold_c:.6f} (|S_{q}{q}| crosses 1, delta=0)")
    return EXIT_OK


def cmd_tune(args) -> int:
    try:
        cfg = load_config(args.config)
        kind = {
            "circulator-cw": tuner.ObjectiveKind.CIRCULATOR_CW,
            "circulator-ccw": tuner.ObjectiveKind.CIRCULATOR_CCW,
            "diramp": tuner.ObjectiveKind.DIRECTIONAL_AMP,
        }[args.objective]
        objective = tuner.Objective(kind=kind, target_gain_db=args.target_gain_db)
    except (ConfigError, DeviceValidationError, DomainError, KeyError,
            OSError, yaml.YAMLError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = tuner.tune(cfg.device, objective, budget=args.budget)
    except (TopologyError, DomainError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_path = args.out or (args.config + ".tuned")
    _write_tuned_config(cfg, result.device, out_path)
    print(f"objective: {result.objective_value:.6f} after {result.evaluations} evaluations "
          f"({result.iterations} iterations, converged={result.converged})")
    if result.trace:
        print(f"trace: start {result.trace[0]:.4f} -> best {result.trace[-1]:.4f} "
              f"({len(result.trace)} improving steps)")
    phi = total_pump_phase(result.device)
    for c in result.device.couplings:
        print(f"  {c.kind.value} {c.pair}: rho = {c.rho:.9g}")
    print(f"  phi_tot = {phi.value:+.9g} rad")
    print(f"wrote tuned config to {out_path}")
    return EXIT_OK


def _write_tuned_config(cfg: RunConfig, tuned: ValidatedDevice, out_path: str) -> None:
    # update only the optimized fields; everything else round-trips unchanged
    raw = json.loads(json.dumps(cfg.raw))  # deep copy
    signs = phase_signs(tuned)
    control = tuned.couplings[0].pair
    target_tot = total_pump_phase(tuned).value
    other_sum = 0.0
    for entry in raw["device"]["couplings"]:
        pair = tuple(sorted(entry["pair"]))
        if pair != control:
            other_sum += signs[pair] * math.radians(float(entry.get("phase_deg", 0.0)))
    for entry in raw["device"]["couplings"]:
        pair = tuple(sorted(entry["pair"]))
        coupling = tuned.coupling_for(pair)
        present = [k for k in STRENGTH_KEYS if k in entry]
        key = present[0] if present else "rho"
        if key == "rho":
            entry["rho"] = float(coupling.rho)
        elif key == "target_g_db":
            entry["target_g_db"] = float(metrics.to_db(cmt.gain_coefficient(coupling.rho)))
        else:
            entry["target_c"] = float(cmt.conversion_coefficient(coupling.rho))
        if pair == control:
            phase = signs[control] * (target_tot - other_sum)
            entry["phase_deg"] = float(math.degrees(wrap_phase(phase)))
    _atomic_write(out_path, yaml.safe_dump(raw, sort_keys=False))


def cmd_compare(args) -> int:
    try:
        sweep_t = read_table(args.sweep)
        ref_t = read_table(args.reference)
    except (ConfigError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    if sweep_t.columns != ref_t.columns:
        print("error: schema mismatch: column sets differ", file=sys.stderr)
        return EXIT_SCHEMA
    if "delta_hz" not in sweep_t.columns:
        print("error: schema mismatch: no delta_hz column", file=sys.stderr)
        return EXIT_SCHEMA
    columns = (
        args.columns.split(",") if args.columns
        else [c for c in sweep_t.columns if c.endswith("_db")]
    )
    for c in columns:
        if c not in sweep_t.columns:
            print(f"error: schema mismatch: no column {c!r}", file=sys.stderr)
            return EXIT_SCHEMA
    ds = sweep_t.column("delta_hz")
    dr = ref_t.column("delta_hz")
    if len(dr) > 1 and not np.all(np.diff(dr) > 0):
        print("error: schema mismatch: reference grid not strictly increasing",
              file=sys.stderr)
        return EXIT_SCHEMA
    lo, hi = max(ds.min(), dr.min()), min(ds.max(), dr.max())
    band = (ds >= lo) & (ds <= hi)
    if not np.any(band):
        print("error: schema mismatch: detuning grids do not overlap", file=sys.stderr)
        return EXIT_SCHEMA
    worst = (-1.0, "", 0.0)
    for c in columns:
        ref_interp = np.interp(ds[band], dr, ref_t.column(c))
        diff = np.abs(sweep_t.column(c)[band] - ref_interp)
        k = int(np.argmax(diff))
        if diff[k] > worst[0]:
            worst = (float(diff[k]), c, float(ds[band][k]))
    print(f"worst |delta dB| = {worst[0]:.6g} in column {worst[1]} at delta = {worst[2]:g} Hz "
          f"(tolerance {args.tol_db:g} dB, band [{lo:g}, {hi:g}] Hz)")
    return EXIT_OK if worst[0] <= args.tol_db else EXIT_MISMATCH


def _parse_pairs(spec_str: Optional[str], device: ValidatedDevice):
    names = device.mode_names
    if not spec_str:
        defaults = [(names[1], names[1]), (names[2], names[1])]
        return defaults
    pairs = []
    for token in spec_str.split(","):
        token = token.strip()
        if len(token) != 2 or token[0] not in names or token[1] not in names:
            raise ConfigError(f"pair {token!r} must be two single-letter mode names")
        pairs.append((token[0], token[1]))
    return pairs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nonrecip",
        description="Scattering simulator and tuner for triple-pumped three-mode "
                    "parametric circuits (circulator / directional amplifier).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--out", help="output file path")
        p.add_argument("--format", choices=("csv", "json"), help="output format")

    p = sub.add_parser("sparams", help="frequency sweep of the scattering matrix")
    add_common(p)
    p.set_defaults(func=cmd_sparams)

    p = sub.add_parser("phase-sweep", help="|S| map versus total pump phase and detuning")
    add_common(p)
    p.add_argument("--phi-min", type=float, default=-2.0 * math.pi)
    p.add_argument("--phi-max", type=float, default=math.pi)
    p.add_argument("--phi-points", type=int, default=241)
    p.add_argument("--pairs", help="comma list of out/in mode pairs, e.g. bb,cb")
    p.set_defaults(func=cmd_phase_sweep)

    p = sub.add_parser("threshold", help="input match versus conversion coefficient")
    add_common(p)
    p.add_argument("--c-min", type=float, default=0.05)
    p.add_argument("--c-max", type=float, default=0.999)
    p.add_argument("--c-points", type=int, default=200)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("tune", help="optimize pump parameters toward an objective")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="path for the tuned config (default: <config>.tuned)")
    p.add_argument("--objective", required=True,
                   choices=("circulator-cw", "circulator-ccw", "diramp"))
    p.add_argument("--target-gain-db", type=float, default=0.0)
    p.add_argument("--budget", type=int, default=2000)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("compare", help="compare a sweep file against a reference")
    p.add_argument("sweep")
    p.add_argument("reference")
    p.add_argument("--tol-db", type=float, default=1.0)
    p.add_argument("--columns", help="comma list of columns (default: all *_db)")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
