"""Command-line front end: scenario validation, heatmaps, parameter sweeps.

Outputs are CSV tables plus a JSON metadata sidecar holding the fully
resolved configuration, the seed, and the code version; plotting is left to
downstream tools. Exit codes: 0 success, 1 domain violation, 2 parse or I/O
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, params
from .blockage import BlockageParams
from .coverage import (MODES, SimulationConfig, coverage_probability, heatmap,
                       reachability_fractions, sweep)
from .scene import NCRPlacement, RISPlacement, ScenarioError, ScenarioMap, \
    generate_ue_grid, load_scenario

SWEEP_PARAMS = ("ris-elements-per-side", "ncr-e2e-gain-db")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run settings; defaults are the reference 28 GHz setup."""

    scenario_path: str
    mode: str = "direct"
    gamma_th_db: tuple[float, ...] = (0.0,)
    seed: int = 0
    jobs: int = 1
    carrier_hz: float = params.CARRIER_HZ
    bandwidth_hz: float = params.BANDWIDTH_HZ
    ue_noise_figure_db: float = params.UE_NOISE_FIGURE_DB
    shadowing_std_db: float = params.SHADOWING_STD_DB
    joint_combining: bool = False
    blockage: BlockageParams = dataclasses.field(default_factory=BlockageParams)
    reference_defaults: bool = False


def _fmt(value) -> str:
    """Serialize one CSV cell; floats use 9 significant digits."""
    if isinstance(value, float):
        if math.isinf(value):
            return "-inf" if value < 0 else "inf"
        return f"{value:.9g}"
    return str(value)


def _sim_config(run: RunConfig) -> SimulationConfig:
    return SimulationConfig(
        carrier_hz=run.carrier_hz, bandwidth_hz=run.bandwidth_hz,
        ue_noise_figure_db=run.ue_noise_figure_db,
        shadowing_std_db=run.shadowing_std_db, seed=run.seed,
        joint_combining=run.joint_combining, blockage=run.blockage)


def _apply_reference_defaults(scenario: ScenarioMap) -> ScenarioMap:
    """Pin every relay and BS capability field back to the reference defaults,
    keeping only the scenario's geometry and placements."""
    bs = dataclasses.replace(scenario.bs, n_h=params.BS_PANEL[0], n_v=params.BS_PANEL[1],
                             tx_power_dbm=params.BS_TX_POWER_DBM)
    relay = scenario.relay
    if isinstance(relay, RISPlacement):
        relay = dataclasses.replace(relay, n_h=params.RIS_ELEMENTS[0],
                                    n_v=params.RIS_ELEMENTS[1],
                                    directivity_q=params.RIS_DIRECTIVITY_Q)
    else:
        relay = dataclasses.replace(relay, n_h=params.NCR_PANEL[0], n_v=params.NCR_PANEL[1],
                                    amp_gain_db=params.NCR_AMP_GAIN_DB,
                                    max_e2e_gain_db=params.NCR_MAX_E2E_GAIN_DB,
                                    noise_figure_db=params.NCR_NOISE_FIGURE_DB,
                                    min_panel_separation_deg=params.NCR_MIN_PANEL_SEPARATION_DEG)
    return dataclasses.replace(scenario, bs=bs, relay=relay)


def resolved_metadata(run: RunConfig, scenario: ScenarioMap) -> dict:
    """The metadata sidecar payload: every value the run actually used."""
    bs = scenario.bs
    relay = scenario.relay
    meta = {
        "version": __version__,
        "scenario": str(run.scenario_path),
        "mode": run.mode,
        "seed": run.seed,
        "gamma_th_db": list(run.gamma_th_db),
        "carrier_hz": run.carrier_hz,
        "bandwidth_hz": run.bandwidth_hz,
        "bs": {
            "position": [bs.position.x, bs.position.y, bs.position.z],
            "sector_azimuths_deg": list(bs.sector_azimuths_deg),
            "array": {"nh": bs.n_h, "nv": bs.n_v},
            "tx_power_dbm": bs.tx_power_dbm,
        },
        "ue": {
            "height_m": scenario.grid.ue_height_m,
            "noise_figure_db": run.ue_noise_figure_db,
            "noise_power_dbm": params.noise_power_dbm(run.bandwidth_hz, run.ue_noise_figure_db),
        },
        "blockage": {
            "blocker_height_m": run.blockage.blocker_height_m,
            "blocker_density_per_m2": run.blockage.density_per_m2,
            "blocker_speed_mps": run.blockage.speed_mps,
            "blockage_duration_s": run.blockage.duration_s,
            "blocker_width_m": run.blockage.blocker_width_m,
        },
        "shadowing_std_db": run.shadowing_std_db,
        "joint_combining": run.joint_combining,
    }
    if isinstance(relay, RISPlacement):
        meta["relay"] = {
            "kind": "ris",
            "position": [relay.position.x, relay.position.y, relay.position.z],
            "boresight_az_deg": relay.boresight_az_deg,
            "boresight_el_deg": relay.boresight_el_deg,
            "elements": {"mh": relay.n_h, "mv": relay.n_v},
            "directivity_q": relay.directivity_q,
        }
    else:
        n_p = relay.n_h * relay.n_v
        meta["relay"] = {
            "kind": "ncr",
            "position": [relay.position.x, relay.position.y, relay.position.z],
            "panel_az_deg": list(relay.panel_az_deg),
            "panel_el_deg": list(relay.panel_el_deg),
            "panels": {"nh": relay.n_h, "nv": relay.n_v},
            "amp_gain_db": relay.amp_gain_db,
            "e2e_gain_db": relay.amp_gain_db + 20.0 * math.log10(n_p),
            "max_e2e_gain_db": relay.max_e2e_gain_db,
            "noise_figure_db": relay.noise_figure_db,
            "panel_separation_deg": relay.panel_separation_deg,
            "min_panel_separation_deg": relay.min_panel_separation_deg,
            "relay_noise_power_dbm": params.noise_power_dbm(run.bandwidth_hz,
                                                            relay.noise_figure_db),
        }
    return meta


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_validate(scenario_path: str) -> int:
    scenario = load_scenario(scenario_path)
    grid = generate_ue_grid(scenario)
    reach = reachability_fractions(scenario)
    print(f"scenario: {scenario_path}")
    print(f"buildings: {len(scenario.buildings)}")
    print(f"bounds: {scenario.bounds_min} to {scenario.bounds_max}")
    print(f"candidate positions: {len(grid)}")
    print(f"direct reachability: {reach['direct']:.4f}")
    print(f"relay reachability: {reach['relay']:.4f}")
    print(f"union reachability: {reach['union']:.4f}")
    print("invariants: ok")
    return 0


def cmd_heatmap(run: RunConfig, out_dir) -> int:
    scenario = load_scenario(run.scenario_path)
    if run.reference_defaults:
        scenario = _apply_reference_defaults(scenario)
    result = heatmap(scenario, run.mode, _sim_config(run), n_jobs=run.jobs)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    headers = ["x", "y", "z", "snr_db"]
    headers += [f"served_at_{_fmt(th)}dB" for th in run.gamma_th_db]
    headers += ["chosen_link"]
    lines = [",".join(headers)]
    for pos, snr, chosen in zip(result.positions, result.snr_db, result.chosen):
        cells = [_fmt(float(pos[0])), _fmt(float(pos[1])), _fmt(float(pos[2])), _fmt(float(snr))]
        cells += ["1" if snr > th else "0" for th in run.gamma_th_db]
        cells += ["relay" if chosen in ("relay", "joint") else chosen]
        lines.append(",".join(cells))
    (out / "heatmap.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    meta = resolved_metadata(run, scenario)
    meta["coverage_probability"] = {
        _fmt(th): coverage_probability(result.snr_db, th) for th in run.gamma_th_db}
    _write_json(out / "heatmap_meta.json", meta)
    print(f"wrote {out / 'heatmap.csv'} ({len(result.positions)} positions)")
    return 0


def cmd_sweep(run: RunConfig, relay_kind: str, param_name: str, values, out_dir) -> int:
    scenario = load_scenario(run.scenario_path)
    if run.reference_defaults:
        scenario = _apply_reference_defaults(scenario)
    result = sweep(scenario, relay_kind, param_name, values, run.gamma_th_db,
                   _sim_config(run), n_jobs=run.jobs)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    lines = ["param_value,gamma_th_db,p_c_relay_only,p_c_relay_aided"]
    for vi, value in enumerate(result.values):
        for ti, th in enumerate(result.thresholds_db):
            lines.append(",".join([
                _fmt(value), _fmt(th),
                _fmt(float(result.relay_only[vi, ti])),
                _fmt(float(result.relay_aided[vi, ti]))]))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    meta = resolved_metadata(run, scenario)
    meta["sweep"] = {"parameter": param_name, "values": list(result.values)}
    _write_json(out / "sweep_meta.json", meta)
    print(f"wrote {out / 'sweep.csv'} ({len(result.values)} values x {len(result.thresholds_db)} thresholds)")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip() != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmwcover",
                                     description="mmWave coverage simulator with relay extenders")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="check a scenario file and print statistics")
    p_val.add_argument("scenario")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True)
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--gamma-th", type=_float_list, default=(0.0,),
                        help="comma-separated SNR thresholds in dB")
    common.add_argument("--shadowing-std", type=float, default=params.SHADOWING_STD_DB,
                        help="log-normal shadowing standard deviation in dB")
    common.add_argument("--reference-defaults", action="store_true",
                        help="pin BS and relay capabilities to the reference defaults")

    p_heat = sub.add_parser("heatmap", parents=[common], help="long-term SNR over the UE grid")
    p_heat.add_argument("--mode", choices=MODES, required=True)
    p_heat.add_argument("--joint-average", action="store_true",
                        help="average the four blockage combinations instead of best-link")

    p_sweep = sub.add_parser("sweep", parents=[common],
                             help="coverage probability versus a relay parameter")
    p_sweep.add_argument("--relay", choices=("ris", "ncr"), required=True)
    p_sweep.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    p_sweep.add_argument("--values", type=_float_list, required=True)

    return parser


def _run_config(args, mode: str) -> RunConfig:
    return RunConfig(scenario_path=args.scenario, mode=mode,
                     gamma_th_db=args.gamma_th, seed=args.seed, jobs=args.jobs,
                     shadowing_std_db=args.shadowing_std,
                     joint_combining=getattr(args, "joint_average", False),
                     reference_defaults=args.reference_defaults)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(args.scenario)
        if args.command == "heatmap":
            return cmd_heatmap(_run_config(args, args.mode), args.out)
        if args.command == "sweep":
            run = _run_config(args, f"{args.relay}-sweep")
            return cmd_sweep(run, args.relay, args.param, args.values, args.out)
        raise AssertionError("unreachable")
    except json.JSONDecodeError as exc:
        print(f"error: scenario parse failure at line {exc.lineno} column {exc.colno}: {exc.msg}",
              file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
