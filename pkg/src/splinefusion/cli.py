"""Command-line front end.

    splinefusion simulate -c CFG -o DIR
    splinefusion fuse -c CFG -a ACC -s STR -o DIR
    splinefusion evaluate -e EST -t TRUTH [-o CSV]
    splinefusion sweep -c CFG -m 6,7,8 -o CSV
    splinefusion reproduce-paper -o DIR

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, csvio, pipeline
from .config import ScenarioConfig, config_hash, load_config, noncollocated_positions, save_config
from .errors import ConfigError, DataError, SplineFusionError
from .fusion import spline_sweep
from .timeseries import TimeSeriesMatrix

META_FILE = "meta.json"
FUSE_META_FILE = "fuse_meta.json"


def _outdir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _guard_write(fn, path, *args):
    try:
        fn(path, *args)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


def verify_meta(meta: dict) -> bool:
    """True when the recorded config hash matches the embedded config."""
    cfg = ScenarioConfig.from_dict(meta["config"])
    return config_hash(cfg) == meta["config_hash"]


# -- pipeline steps shared by the subcommands ------------------------------

def run_simulate(cfg: ScenarioConfig, out: Path, clean=None):
    data = pipeline.simulate(cfg, clean)
    _guard_write(csvio.write_series, out / "truth.csv", data.truth)
    _guard_write(csvio.write_series, out / "accel.csv", data.accel)
    _guard_write(csvio.write_series, out / "strain.csv", data.strain)
    a0, a1 = data.clean.model.rayleigh_coefficients
    meta = {
        "seed": cfg.sampling.seed,
        "dt": cfg.sampling.dt,
        "n_samples": int(data.truth.n_samples),
        "config_hash": cfg.digest(),
        "config": cfg.to_dict(),
        "rayleigh": {"a0": a0, "a1": a1},
        "version": __version__,
    }
    _guard_write(csvio.write_json, out / META_FILE, meta)
    return data


def run_fuse(cfg: ScenarioConfig, accel, strain, out: Path, m=None):
    result = pipeline.fuse(cfg, accel, strain, m=m)
    field = result.field
    series = TimeSeriesMatrix(field.times, field.values, field.query_positions, "u")
    _guard_write(csvio.write_series, out / "displacement_field.csv", series)
    _guard_write(csvio.write_coefficients, out / "coefficients.csv", result.trajectory)
    meta = {
        "config_hash": cfg.digest(),
        "config": cfg.to_dict(),
        "m": int(result.basis.m),
        "knots": result.basis.knot_vector.knots.tolist(),
        "n_samples": int(field.times.size),
        "version": __version__,
    }
    _guard_write(csvio.write_json, out / FUSE_META_FILE, meta)
    return result


def nrms_table(positions, nrms):
    lines = [f"{'x [m]':>10}  {'NRMS [%]':>10}"]
    for x, e in zip(positions, nrms):
        lines.append(f"{x:10.5f}  {e:10.4f}")
    lines.append(f"{'mean':>10}  {np.nanmean(nrms):10.4f}")
    lines.append(f"{'max':>10}  {np.nanmax(nrms):10.4f}")
    return "\n".join(lines)


def parse_m_list(text: str):
    try:
        ms = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}", "m") from None
    if len(set(ms)) != len(ms):
        raise ConfigError(f"duplicate spline counts in {ms}", "m")
    if not ms:
        raise ConfigError("empty spline count list", "m")
    return ms


def write_sweep(path, report):
    _guard_write(csvio.write_table, path, {
        "m": report.m_values, "mean_nrms": report.mean_nrms, "max_nrms": report.max_nrms,
    })


# -- subcommands ------------------------------------------------------------

def cmd_simulate(args):
    cfg = load_config(args.config)
    out = _outdir(args.output)
    data = run_simulate(cfg, out)
    print(f"wrote {data.truth.n_samples} samples to {out}")


def cmd_fuse(args):
    cfg = load_config(args.config)
    accel = csvio.read_series(args.accel)
    strain = csvio.read_series(args.strain)
    if accel.kind != "acc" or strain.kind != "strain":
        raise DataError(f"expected acc and strain channels, got {accel.kind!r} and {strain.kind!r}")
    out = _outdir(args.output)
    result = run_fuse(cfg, accel, strain, out, m=args.m)
    print(f"fused {result.field.times.size} samples with m={result.basis.m} into {out}")


def cmd_evaluate(args):
    est = csvio.read_series(args.estimated)
    truth = csvio.read_series(args.truth)
    positions, nrms = pipeline.evaluate(est, truth, args.start_time)
    print(nrms_table(positions, nrms))
    if args.output:
        _guard_write(csvio.write_table, args.output, {"position": positions, "nrms": nrms})


def cmd_sweep(args):
    cfg = load_config(args.config)
    ms = parse_m_list(args.m)
    report = spline_sweep(cfg, ms)
    write_sweep(args.output, report)
    for m, mean, worst in report.rows():
        print(f"m={m}  mean={mean:.4f}%  max={worst:.4f}%")
    print(f"best m = {report.best_m}")


def reproduce(out: Path, m_list=(6, 7, 8)) -> dict:
    """Collocated and non-collocated runs, the noise grid and the m sweep."""
    summary = {}
    colloc = ScenarioConfig()
    acc, strain = noncollocated_positions(colloc.geometry.length)
    scenarios = {
        "collocated": colloc,
        "noncollocated": colloc.replace(**{"sensors.accel_positions": acc,
                                           "sensors.strain_positions": strain}),
    }
    clean_colloc = None
    for name, cfg in scenarios.items():
        sub = _outdir(out / name)
        save_config(cfg, sub / "config.yaml")
        data = run_simulate(cfg, sub)
        if name == "collocated":
            clean_colloc = data.clean
        result = run_fuse(cfg, data.accel, data.strain, sub)
        positions, nrms = pipeline.evaluate(result.field, data.truth)
        _guard_write(csvio.write_table, sub / "nrms.csv", {"position": positions, "nrms": nrms})
        summary[name] = {"mean_nrms": float(np.nanmean(nrms)),
                         "max_nrms": float(np.nanmax(nrms))}

    grid = pipeline.noise_grid(colloc, clean=clean_colloc)
    rows = {"accel_percent": [], "strain_percent": [], "mean_nrms": [], "max_nrms": []}
    for (na, ns), errs in grid.items():
        rows["accel_percent"].append(na)
        rows["strain_percent"].append(ns)
        rows["mean_nrms"].append(np.nanmean(errs))
        rows["max_nrms"].append(np.nanmax(errs))
    _guard_write(csvio.write_table, out / "noise_grid.csv", rows)
    summary["noise_grid"] = {f"{na:g}/{ns:g}": float(np.nanmean(e)) for (na, ns), e in grid.items()}

    data = pipeline.simulate(colloc, clean_colloc)
    report = spline_sweep(colloc, m_list, data)
    write_sweep(out / "sweep.csv", report)
    summary["sweep"] = {"rows": report.rows(), "best_m": report.best_m}
    _guard_write(csvio.write_json, out / "summary.json", summary)
    return summary


def cmd_reproduce(args):
    out = _outdir(args.output)
    summary = reproduce(out)
    for name in ("collocated", "noncollocated"):
        s = summary[name]
        print(f"{name:14s} mean NRMS {s['mean_nrms']:.3f}%  max {s['max_nrms']:.3f}%")
    for case, mean in summary["noise_grid"].items():
        print(f"noise {case:>6s}    mean NRMS {mean:.3f}%")
    for m, mean, worst in summary["sweep"]["rows"]:
        print(f"sweep m={m}     mean NRMS {mean:.3f}%  max {worst:.3f}%")
    print(f"results in {out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splinefusion",
        description="Strain/acceleration fusion for full-field beam displacement.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate the beam and write noisy sensor CSVs")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fuse", help="run the filter over sensor CSVs")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-a", "--accel", required=True)
    p.add_argument("-s", "--strain", required=True)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("-m", type=int, default=None, help="override the spline count")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("evaluate", help="NRMS of an estimated field against truth")
    p.add_argument("-e", "--estimated", required=True)
    p.add_argument("-t", "--truth", required=True)
    p.add_argument("-o", "--output", default=None, help="optional CSV for the table")
    p.add_argument("--start-time", type=float, default=0.0,
                   help="ignore samples before this time [s]")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="NRMS versus spline count on one dataset")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-m", required=True, help="comma-separated spline counts, e.g. 6,7,8")
    p.add_argument("-o", "--output", required=True, help="output CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("reproduce-paper", help="run every bundled scenario end to end")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except SplineFusionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
