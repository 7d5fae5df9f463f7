"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 Monte Carlo verification
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

from . import __version__
from .field_oracle import MIN_TRIALS, make_grid, mc_mean_power, oracle_report, reports_to_csv, segment_factor
from .ris import coherence_scales, effective_area, effective_area_exact
from .scenario import (
    AngleSpreadSpec,
    ConfigError,
    Scenario,
    SegmentMode,
    apply_overrides,
    baseline_config,
    build_scenario,
    load_config,
)
from .sweep import default_distances, evaluate_row, run_sweep, to_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_VERIFY_FAIL = 4

DEFAULT_SEED = 20240917
DEFAULT_TRIALS = 10_000
ANCHOR_DISTANCES_M = (20.0, 200.0)


class _ConfigFailure(Exception):
    pass


def _scenario(args) -> tuple[Scenario, dict]:
    try:
        doc = load_config(args.config) if args.config else baseline_config()
        doc = apply_overrides(doc, args.override)
        scenario = build_scenario(doc)
    except ConfigError as exc:
        raise _ConfigFailure(f"config error: {exc}") from exc
    except (OSError, ValueError) as exc:  # unreadable file, TOML syntax
        raise _ConfigFailure(f"config error: {args.config}: {exc}") from exc
    meta = {
        "version": __version__,
        "config": args.config or "<built-in baseline>",
        "overrides": list(args.override),
        "scenario": scenario.to_dict(),
    }
    return scenario, meta


def _header(meta: dict) -> list[str]:
    return [f"# {k}: {json.dumps(v, sort_keys=True)}" for k, v in meta.items()]


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.6g}"


def cmd_coherence(args) -> int:
    scenario, meta = _scenario(args)
    lam = scenario.wavelength_m
    w, h = scenario.ris_width_m, scenario.ris_height_m
    lines = _header(meta) + [
        f"frequency_hz = {scenario.frequency_hz:.6g}",
        f"wavelength_m = {lam:.6g}",
        f"wavenumber_rad_per_m = {scenario.wavenumber:.6g}",
        f"ris_width_m = {w:.6g}",
        f"ris_height_m = {h:.6g}",
        f"a_ris_m2 = {w * h:.6g}",
    ]
    base = scenario.angle_spread
    for mode in (SegmentMode.BOTH, SegmentMode.RIS_TO_RX_ONLY):
        spreads = AngleSpreadSpec(base.azimuth_rms_rad, base.elevation_rms_rad, mode)
        scales = coherence_scales(lam, spreads)
        approx = effective_area(w, h, scales)
        exact = effective_area_exact(w, h, lam, spreads)
        lines += [
            f"[{mode.value}]",
            f"w_coh_m = {_fmt(scales.w_coh_m)}",
            f"h_coh_m = {_fmt(scales.h_coh_m)}",
            f"a_eff_min_approx_m2 = {approx.a_eff_m2:.6g}",
            f"a_eff_exact_m2 = {exact:.6g}",
            f"degradation_min_approx_db = {approx.degradation_db:+.3f}",
            f"degradation_exact_db = {10 * math.log10(exact / (w * h)):+.3f}",
        ]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _anchor_lines(scenario: Scenario) -> list[str]:
    lines = []
    for d in ANCHOR_DISTANCES_M:
        row = evaluate_row(scenario, d)
        tag = f"{d:g}m"
        lines += [
            f"ambient_total_at_{tag}_db = {row.ambient_total.db:.3f}",
            f"ideal_ris_advantage_at_{tag}_db = {row.ris_ideal_advantage_db:+.3f}",
            f"spread_ris_advantage_at_{tag}_db = {row.ris_advantage_db:+.3f}",
        ]
    return lines


def cmd_sweep(args) -> int:
    scenario, meta = _scenario(args)
    result = run_sweep(scenario, default_distances())
    result.metadata["overrides"] = meta["overrides"]
    result.metadata["config"] = meta["config"]
    data = to_csv(result)
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(data)
        summary = sys.stdout
    else:
        sys.stdout.write(data.decode("utf-8"))
        summary = sys.stderr
    summary.write(f"rows = {len(result.rows)}\n")
    summary.write("\n".join(_anchor_lines(scenario)) + "\n")
    return EXIT_OK


def cmd_mc_verify(args) -> int:
    scenario, meta = _scenario(args)
    seed = DEFAULT_SEED if args.seed is None else args.seed
    trials = DEFAULT_TRIALS if args.trials is None else args.trials
    spreads = scenario.angle_spread
    grid = make_grid(scenario.ris_width_m, scenario.ris_height_m, scenario.wavelength_m, spreads)
    estimate = mc_mean_power(grid, spreads, scenario.wavenumber, trials, seed)
    if args.analytic_scale != 1.0:
        estimate = dataclasses.replace(estimate, analytic_prediction=estimate.analytic_prediction * args.analytic_scale)
    report = oracle_report(estimate)
    lines = _header(meta) + [f"grid = {grid.ny} x {grid.nz} (ny x nz)"] + report.to_lines()
    sys.stdout.write("\n".join(lines) + "\n")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(reports_to_csv([report]))
    return EXIT_OK if report.passed else EXIT_VERIFY_FAIL


def cmd_compare(args) -> int:
    scenario, meta = _scenario(args)
    seed = DEFAULT_SEED if args.seed is None else args.seed
    trials = DEFAULT_TRIALS if args.trials is None else args.trials
    sp = scenario.angle_spread
    lines = _header(meta) + _anchor_lines(scenario)
    if sp.azimuth_rms_rad > 0 and sp.elevation_rms_rad > 0:
        comp = segment_factor(
            scenario.ris_width_m, scenario.ris_height_m, scenario.wavelength_m,
            sp.azimuth_rms_rad, sp.elevation_rms_rad, trials, seed,
        )
        lines += comp.to_lines()
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ris-ambient",
        description="Around-the-corner path gain: ambient scatter vs. angle-spread-limited RIS",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML scenario file (default: built-in 28 GHz baseline)")
    common.add_argument("--override", metavar="K=V", action="append", default=[],
                        help="dotted-key override applied after parsing, e.g. angle_spread.azimuth_rms_rad=0")
    common.add_argument("--seed", type=int, help=f"master seed for Monte Carlo (default {DEFAULT_SEED})")
    common.add_argument("--trials", type=int, help=f"Monte Carlo trials (default {DEFAULT_TRIALS})")
    common.add_argument("--out", metavar="PATH", help="output file")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("coherence", parents=[common], help="coherence scales and effective area").set_defaults(func=cmd_coherence)
    sub.add_parser("sweep", parents=[common], help="distance sweep to CSV").set_defaults(func=cmd_sweep)
    mc = sub.add_parser("mc-verify", parents=[common], help="Monte Carlo check of the effective area")
    mc.add_argument("--analytic-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    mc.set_defaults(func=cmd_mc_verify)
    sub.add_parser("compare", parents=[common], help="RIS vs ambient at anchor distances, segment factor").set_defaults(
        func=cmd_compare
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("config error: --seed must be a 64-bit unsigned integer", file=sys.stderr)
        return EXIT_CONFIG
    if args.trials is not None and args.trials < MIN_TRIALS:
        print(f"config error: --trials must be >= {MIN_TRIALS}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except _ConfigFailure as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
