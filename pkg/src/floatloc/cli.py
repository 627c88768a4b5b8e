"""Command-line entry point: ``floatloc {localize,simulate,evaluate}``."""

from __future__ import annotations

import argparse
import io
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import _kernels
from .diagnostics import Diagnostics
from .errors import FloatlocError
from .ingest import load_logs
from .output import read_estimates, report_text, write_estimates, write_geojson
from .pipeline import Mode, load_run_config, run
from .simulator import GroundTruth, evaluate, load_scenario, simulate

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_OUTPUT = 2

log = logging.getLogger("floatloc")


def _write(path: Path, fn) -> None:
    buf = io.StringIO()
    fn(buf)
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")


def cmd_localize(args) -> int:
    cfg = load_run_config(args.config)
    if args.mode and Mode(args.mode) is not cfg.mode:
        # targets in the file belong to the file's mode
        cfg = replace(cfg, mode=Mode(args.mode), targets=())
    if args.target:
        cfg = replace(cfg, targets=tuple(args.target))
    logs = load_logs(args.pings, args.gps, args.depth)
    diag = Diagnostics()
    estimates, evaluation = run(logs, cfg, diag)
    if args.truth and evaluation is None and estimates:
        with open(args.truth, newline="") as fh:
            evaluation = evaluate(estimates, GroundTruth.read(fh, cfg.reference))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "estimates.csv", lambda fh: write_estimates(estimates, fh))
    _write(out / "trajectory.geojson", lambda fh: write_geojson(estimates, fh))
    report = report_text(cfg.mode.value, diag, evaluation, _kernels.BACKEND)
    (out / "report.txt").write_text(report, encoding="utf-8")
    if not args.quiet:
        sys.stdout.write(report)
    return EXIT_OK if estimates else EXIT_NO_OUTPUT


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = scenario.replace(rng_seed=args.seed)
    sim = simulate(scenario)
    paths = sim.write(args.out)
    _write(Path(args.out) / "localize.toml", lambda fh: fh.write(_run_config_for(scenario)))
    if not args.quiet:
        print(f"transmissions: {sim.transmissions}, receptions: {sim.receptions}, "
              f"multipath: {sim.multipath_events}, dropouts: {sim.dropouts}")
        for name, p in paths.items():
            print(f"{name}: {p}")
    return EXIT_OK


def _run_config_for(s) -> str:
    """A run config matching a scenario's physical constants."""
    return (
        'mode = "tof"\n'
        f"targets = [{', '.join(str(i) for i in s.float_ids)}]\n"
        "grouping_window_s = 5.0\n\n"
        "[reference]\n"
        f"lat_deg = {s.origin_lat_deg!r}\nlon_deg = {s.origin_lon_deg!r}\n\n"
        "[ranging]\n"
        f"sound_speed_mps = {s.sound_speed_mps!r}\n"
        f"processing_delay_s = {s.processing_delay_s!r}\n"
        f"slb_depth_m = {s.slb_depth_m!r}\n"
    )


def cmd_evaluate(args) -> int:
    with open(args.estimates, newline="") as fh:
        estimates = read_estimates(fh)
    with open(args.truth, newline="") as fh:
        truth = GroundTruth.read(fh)
    if not estimates:
        print("no estimates", file=sys.stderr)
        return EXIT_NO_OUTPUT
    result = evaluate(estimates, truth)
    print("\n".join(result.lines()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="floatloc", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    lo = sub.add_parser("localize", help="estimate trajectories from ping, GPS and depth logs")
    lo.add_argument("--mode", choices=[m.value for m in Mode], help="overrides the config file mode")
    lo.add_argument("--config", required=True, help="run configuration (TOML)")
    lo.add_argument("--pings", required=True, help="directory of ping log CSVs")
    lo.add_argument("--gps", required=True, help="directory of GPS and dive/rise CSVs")
    lo.add_argument("--depth", help="directory of depth log CSVs")
    lo.add_argument("--out", required=True, help="output directory")
    lo.add_argument("--truth", help="optional truth CSV for error statistics in the report")
    lo.add_argument("--target", type=int, action="append", help="restrict to device id (repeatable)")
    lo.add_argument("-q", "--quiet", action="store_true")
    lo.set_defaults(func=cmd_localize)

    si = sub.add_parser("simulate", help="generate a synthetic deployment")
    si.add_argument("--scenario", required=True, help="scenario file (TOML)")
    si.add_argument("--out", required=True)
    si.add_argument("--seed", type=int)
    si.add_argument("-q", "--quiet", action="store_true")
    si.set_defaults(func=cmd_simulate)

    ev = sub.add_parser("evaluate", help="error statistics of estimates against truth")
    ev.add_argument("--estimates", required=True)
    ev.add_argument("--truth", required=True)
    ev.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FloatlocError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
