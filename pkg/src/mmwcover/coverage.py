"""Grid sweeps: per-point link assessment, SNR heatmaps, coverage probability.

Every candidate position is evaluated independently from immutable inputs, so
grid points may be processed in parallel; results land in preallocated
per-index slots and are identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import params
from .antenna import CosineQ, Isotropic, PlanarArray, ThreeGppPatch, wavelength
from .blockage import BlockageParams, link_blockage_state
from .channel import (NCRConfig, PathGainModel, configure_ris, direct_channel,
                      ncr_beamformers, ncr_channel, ris_cascade,
                      ris_incident_leg, ris_outgoing_leg, farfield_channel)
from .link import LinkAssessment, joint_long_term_snr, snr_ncr, snr_ris, svd_beamformers
from .scene import NCRPlacement, RISPlacement, ScenarioMap, generate_ue_grid, in_sector_fov, los_visible

MODES = ("direct", "ris", "ncr", "ris-aided", "ncr-aided")


@dataclass(frozen=True)
class SimulationConfig:
    carrier_hz: float = params.CARRIER_HZ
    bandwidth_hz: float = params.BANDWIDTH_HZ
    ue_noise_figure_db: float = params.UE_NOISE_FIGURE_DB
    shadowing_std_db: float = params.SHADOWING_STD_DB
    seed: int = 0
    n_streams: int = 1
    joint_combining: bool = False  # average the four blockage combinations instead of best link
    blockage: BlockageParams = field(default_factory=BlockageParams)


@dataclass(frozen=True, eq=False)
class CoverageResult:
    positions: np.ndarray  # (N, 3)
    snr_db: np.ndarray     # (N,), -inf for unserved points
    chosen: tuple[str, ...]
    mode: str

    def served_mask(self, threshold_db: float) -> np.ndarray:
        return self.snr_db > threshold_db

    def coverage_probability(self, threshold_db: float) -> float:
        return coverage_probability(self.snr_db, threshold_db)


@dataclass(frozen=True, eq=False)
class SweepResult:
    param_name: str
    values: tuple[float, ...]
    thresholds_db: tuple[float, ...]
    relay_only: np.ndarray   # (len(values), len(thresholds))
    relay_aided: np.ndarray


def coverage_probability(snr_db, threshold_db: float) -> float:
    """Fraction of candidate positions whose SNR strictly exceeds the threshold."""
    snr = np.asarray(snr_db, dtype=float)
    if snr.size == 0:
        raise ValueError("coverage probability of an empty grid is undefined")
    return float(np.mean(snr > threshold_db))


@dataclass(eq=False)
class _Leg:
    snr_clear: float = 0.0
    snr_blocked: float = 0.0
    p_block: float = 0.0
    h_clear: np.ndarray | None = None
    h_noise: np.ndarray | None = None  # repeater amplified-noise channel
    loss_amp: float = 1.0


class _Engine:
    """Per-scenario state shared across grid points."""

    def __init__(self, scenario: ScenarioMap, config: SimulationConfig):
        self.scenario = scenario
        self.config = config
        self.lam = wavelength(config.carrier_hz)
        self.gains = PathGainModel(config.carrier_hz, config.shadowing_std_db, config.seed)
        self.tx_power_mw = params.dbm_to_mw(scenario.bs.tx_power_dbm)
        self.noise_ue_mw = params.dbm_to_mw(
            params.noise_power_dbm(config.bandwidth_hz, config.ue_noise_figure_db))
        self.bs_pos = np.asarray(scenario.bs.position)
        self.relay_pos = np.asarray(scenario.relay.position)
        bs = scenario.bs
        self.sectors = tuple(
            PlanarArray(bs.n_h, bs.n_v, self.lam / 2, az, 0.0, ThreeGppPatch())
            for az in bs.sector_azimuths_deg)
        self.ue_array = PlanarArray(1, 1, self.lam / 2, 0.0, 0.0, Isotropic())

        relay = scenario.relay
        self.relay_kind = relay.kind
        self.relay_sector = self._serving_sector(self.relay_pos)
        self.relay_ok = self.relay_sector is not None
        self.ris_array = None
        self.ris_incident = None
        self.ncr = None
        self.ncr_incident = None
        self.noise_ncr_mw = 0.0
        if relay.kind == "ris":
            self.ris_array = PlanarArray(relay.n_h, relay.n_v, self.lam / 4,
                                         relay.boresight_az_deg, relay.boresight_el_deg,
                                         CosineQ(relay.directivity_q))
            facing_bs = (self.bs_pos - self.relay_pos) @ self.ris_array.axes()[0] > 0
            self.relay_ok = self.relay_ok and facing_bs
            if self.relay_ok:
                self.ris_incident = ris_incident_leg(
                    self.sectors[self.relay_sector], self.bs_pos,
                    self.ris_array, self.relay_pos, self.gains)
        else:
            panel1 = PlanarArray(relay.n_h, relay.n_v, self.lam / 2,
                                 relay.panel_az_deg[0], relay.panel_el_deg[0], ThreeGppPatch())
            panel2 = PlanarArray(relay.n_h, relay.n_v, self.lam / 2,
                                 relay.panel_az_deg[1], relay.panel_el_deg[1], ThreeGppPatch())
            self.ncr = NCRConfig(panel_to_bs=panel1, panel_to_ue=panel2,
                                 position=tuple(self.relay_pos),
                                 amp_gain_db=relay.amp_gain_db,
                                 max_e2e_gain_db=relay.max_e2e_gain_db,
                                 noise_figure_db=relay.noise_figure_db)
            self.noise_ncr_mw = params.dbm_to_mw(
                params.noise_power_dbm(config.bandwidth_hz, relay.noise_figure_db))
            bs_in_fov = in_sector_fov(panel1.boresight_az_deg, panel1.boresight_el_deg,
                                      self.bs_pos, self.relay_pos)
            self.relay_ok = self.relay_ok and bs_in_fov
            if self.relay_ok:
                self.ncr_incident = farfield_channel(
                    self.sectors[self.relay_sector], self.bs_pos,
                    panel1, self.relay_pos, self.gains, "bs-relay")

    # -- helpers ----------------------------------------------------------

    def _serving_sector(self, target) -> int | None:
        """Index of the in-FoV sector with the smallest azimuth offset, or None."""
        best, best_off = None, None
        d = np.asarray(target, dtype=float) - self.bs_pos
        if not np.any(d):
            return None
        az = math.degrees(math.atan2(d[1], d[0]))
        for i, sector in enumerate(self.sectors):
            if not in_sector_fov(sector.boresight_az_deg, sector.boresight_el_deg,
                                 target, self.bs_pos):
                continue
            off = abs((az - sector.boresight_az_deg + 180.0) % 360.0 - 180.0)
            if best_off is None or off < best_off:
                best, best_off = i, off
        return best

    def _beamformed_snr(self, h_direct, h_relay, h_relay_noise=None) -> float:
        """SNR of the summed channel under its own SVD beamformers; 0 when unservable."""
        h = np.asarray(h_direct) + np.asarray(h_relay)
        if not np.any(h):
            return 0.0
        sol = svd_beamformers(h, self.config.n_streams, self.tx_power_mw, self.noise_ue_mw)
        if h_relay_noise is not None:
            return snr_ncr(h_direct, h_relay, h_relay_noise, sol.precoder, sol.combiner,
                           self.noise_ue_mw, self.noise_ncr_mw)
        return snr_ris(h_direct, h_relay, sol.precoder, sol.combiner, self.noise_ue_mw)

    # -- per-point legs ----------------------------------------------------

    def direct_leg(self, p_ue) -> _Leg:
        sector = self._serving_sector(p_ue)
        n_t = self.sectors[0].size
        if sector is None:
            h = np.zeros((self.ue_array.size, n_t), dtype=complex)
        else:
            h = direct_channel(self.sectors[sector], self.bs_pos, self.ue_array, p_ue,
                               self.scenario, self.gains)
        state = link_blockage_state(self.bs_pos, p_ue, self.scenario,
                                    self.config.blockage, self.lam)
        loss_amp = 10.0 ** (-state.blocked_loss_db / 20.0)
        leg = _Leg(h_clear=h, loss_amp=loss_amp, p_block=state.dynamic_block_prob)
        leg.snr_clear = self._beamformed_snr(0.0, h)
        leg.snr_blocked = self._beamformed_snr(0.0, h * loss_amp)
        return leg

    def relay_leg(self, p_ue) -> _Leg:
        p_ue = np.asarray(p_ue, dtype=float)
        state = link_blockage_state(self.relay_pos, p_ue, self.scenario,
                                    self.config.blockage, self.lam)
        loss_amp = 10.0 ** (-state.blocked_loss_db / 20.0)
        leg = _Leg(loss_amp=loss_amp, p_block=state.dynamic_block_prob)
        if not self.relay_ok or state.static_blocked:
            return leg
        if self.relay_kind == "ris":
            facing = (p_ue - self.relay_pos) @ self.ris_array.axes()[0] > 0
            if not facing:
                return leg
            outgoing = ris_outgoing_leg(self.ris_array, self.relay_pos,
                                        self.ue_array, p_ue, self.gains)
            phases = configure_ris(self.ris_incident[:, 0], outgoing[0, :])
            leg.h_clear = ris_cascade(outgoing, phases, self.ris_incident)
            leg.snr_clear = self._beamformed_snr(0.0, leg.h_clear)
            leg.snr_blocked = self._beamformed_snr(0.0, leg.h_clear * loss_amp)
        else:
            panel2 = self.ncr.panel_to_ue
            if not in_sector_fov(panel2.boresight_az_deg, panel2.boresight_el_deg,
                                 p_ue, self.relay_pos):
                return leg
            outgoing = farfield_channel(panel2, self.relay_pos, self.ue_array, p_ue,
                                         self.gains, "relay-ue")
            w, f = ncr_beamformers(self.ncr, self.bs_pos, outgoing, self.lam)
            result = ncr_channel(self.ncr_incident, outgoing,
                                 self.ncr.with_beamformers(w, f))
            leg.h_clear = result.matrix
            leg.h_noise = result.noise_matrix
            leg.snr_clear = self._beamformed_snr(0.0, result.matrix, result.noise_matrix)
            leg.snr_blocked = self._beamformed_snr(0.0, result.matrix * loss_amp,
                                                   result.noise_matrix * loss_amp)
        return leg

    # -- assessment --------------------------------------------------------

    def _combination_snrs(self, direct: _Leg, relay: _Leg) -> dict:
        zeros_d = direct.h_clear if direct.h_clear is not None else 0.0
        combos = {}
        for d_blocked in (False, True):
            h_d = zeros_d * (direct.loss_amp if d_blocked else 1.0)
            for r_blocked in (False, True):
                scale = relay.loss_amp if r_blocked else 1.0
                if relay.h_clear is None:
                    combos[(d_blocked, r_blocked)] = self._beamformed_snr(h_d, 0.0)
                elif self.relay_kind == "ris":
                    combos[(d_blocked, r_blocked)] = self._beamformed_snr(
                        h_d, relay.h_clear * scale)
                else:
                    combos[(d_blocked, r_blocked)] = self._beamformed_snr(
                        h_d, relay.h_clear * scale, relay.h_noise * scale)
        return combos

    def evaluate(self, p_ue, mode: str) -> LinkAssessment:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
        zero_leg = _Leg()
        direct = self.direct_leg(p_ue) if mode in ("direct", "ris-aided", "ncr-aided") else zero_leg
        relay = self.relay_leg(p_ue) if mode != "direct" else zero_leg
        if mode in ("ris", "ncr", "ris-aided", "ncr-aided"):
            want = "ris" if mode.startswith("ris") else "ncr"
            if self.relay_kind != want:
                raise ValueError(f"scenario relay is {self.relay_kind!r}, mode needs {want!r}")
        d_triple = (direct.snr_blocked, direct.snr_clear, direct.p_block)
        r_triple = (relay.snr_blocked, relay.snr_clear, relay.p_block)
        if mode in ("ris-aided", "ncr-aided") and self.config.joint_combining:
            return joint_long_term_snr(d_triple, r_triple, mode="combined",
                                       combination_snrs=self._combination_snrs(direct, relay))
        return joint_long_term_snr(d_triple, r_triple, mode="best-link")


def evaluate_point(p_ue, scenario: ScenarioMap, mode: str,
                   config: SimulationConfig = SimulationConfig()) -> LinkAssessment:
    """Assess one UE position. For many points prefer `heatmap`, which reuses
    the per-scenario state instead of rebuilding it per call."""
    return _Engine(scenario, config).evaluate(p_ue, mode)


def _map_points(engine: _Engine, points: np.ndarray, mode: str, n_jobs: int):
    if n_jobs <= 1:
        return [engine.evaluate(p, mode) for p in points]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(lambda p: engine.evaluate(p, mode), points))


def snr_to_db(linear) -> np.ndarray:
    linear = np.asarray(linear, dtype=float)
    out = np.full(linear.shape, -np.inf)
    np.log10(linear, out=out, where=linear > 0)
    return 10.0 * out


def heatmap(scenario: ScenarioMap, mode: str, config: SimulationConfig = SimulationConfig(),
            n_jobs: int = 1) -> CoverageResult:
    """Long-term SNR over every candidate grid position, reported in dB."""
    engine = _Engine(scenario, config)
    points = generate_ue_grid(scenario)
    assessments = _map_points(engine, points, mode, n_jobs)
    snr_db = snr_to_db([a.long_term for a in assessments])
    chosen = tuple(a.chosen for a in assessments)
    return CoverageResult(positions=points, snr_db=snr_db, chosen=chosen, mode=mode)


def _override_relay(scenario: ScenarioMap, param_name: str, value: float) -> ScenarioMap:
    relay = scenario.relay
    if param_name == "ris-elements-per-side":
        if not isinstance(relay, RISPlacement):
            raise ValueError("ris-elements-per-side needs a surface relay")
        per_side = int(value)
        if per_side < 1 or per_side != value:
            raise ValueError("elements per side must be a positive integer")
        new_relay = replace(relay, n_h=per_side, n_v=per_side)
    elif param_name == "ncr-e2e-gain-db":
        if not isinstance(relay, NCRPlacement):
            raise ValueError("ncr-e2e-gain-db needs a repeater relay")
        n_p = relay.n_h * relay.n_v
        amp = float(value) - 20.0 * math.log10(n_p)
        new_relay = replace(relay, amp_gain_db=amp, max_e2e_gain_db=float(value))
    else:
        raise ValueError(f"unknown sweep parameter {param_name!r}")
    return replace(scenario, relay=new_relay)


def sweep(scenario: ScenarioMap, relay_kind: str, param_name: str, values,
          thresholds_db, config: SimulationConfig = SimulationConfig(),
          n_jobs: int = 1) -> SweepResult:
    """Coverage probability versus a relay parameter, for relay-only and
    relay-aided (best-link) service at each SNR threshold."""
    if relay_kind != scenario.relay.kind:
        raise ValueError(f"scenario relay is {scenario.relay.kind!r}, not {relay_kind!r}")
    values = tuple(float(v) for v in values)
    thresholds_db = tuple(float(t) for t in thresholds_db)
    relay_mode = "ris" if relay_kind == "ris" else "ncr"

    points = generate_ue_grid(scenario)
    base_engine = _Engine(scenario, config)
    direct_lt = np.array([
        leg.p_block * leg.snr_blocked + (1.0 - leg.p_block) * leg.snr_clear
        for leg in _map_legs(base_engine, points, n_jobs)])

    p_only = np.zeros((len(values), len(thresholds_db)))
    p_aided = np.zeros_like(p_only)
    th_linear = np.array([params.db_to_linear(t) for t in thresholds_db])
    for vi, value in enumerate(values):
        engine = _Engine(_override_relay(scenario, param_name, value), config)
        assessments = _map_points(engine, points, relay_mode, n_jobs)
        relay_lt = np.array([a.long_term for a in assessments])
        aided_lt = np.maximum(relay_lt, direct_lt)
        for ti, th in enumerate(th_linear):
            p_only[vi, ti] = float(np.mean(relay_lt > th))
            p_aided[vi, ti] = float(np.mean(aided_lt > th))
    return SweepResult(param_name=param_name, values=values, thresholds_db=thresholds_db,
                       relay_only=p_only, relay_aided=p_aided)


def _map_legs(engine: _Engine, points: np.ndarray, n_jobs: int):
    if n_jobs <= 1:
        return [engine.direct_leg(p) for p in points]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(engine.direct_leg, points))


def reachability_fractions(scenario: ScenarioMap) -> dict:
    """Geometric service fractions over the candidate set: a position counts as
    reachable when it has line of sight and falls inside the serving wedge
    (sector FoV for the BS, UE-facing panel FoV for a repeater, front
    hemisphere for a surface)."""
    points = generate_ue_grid(scenario)
    bs_pos = np.asarray(scenario.bs.position)
    relay_pos = np.asarray(scenario.relay.position)
    relay = scenario.relay
    # the relay serves nobody when its own feed from the BS is infeasible
    feed_ok = any(in_sector_fov(az, 0.0, relay_pos, bs_pos)
                  for az in scenario.bs.sector_azimuths_deg)
    if relay.kind == "ris":
        az, el = np.deg2rad(relay.boresight_az_deg), np.deg2rad(relay.boresight_el_deg)
        normal = np.array([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)])
        feed_ok = feed_ok and (bs_pos - relay_pos) @ normal > 0

        def relay_sees(p):
            return feed_ok and (p - relay_pos) @ normal > 0
    else:
        feed_ok = feed_ok and in_sector_fov(relay.panel_az_deg[0], relay.panel_el_deg[0],
                                            bs_pos, relay_pos)

        def relay_sees(p):
            return feed_ok and in_sector_fov(relay.panel_az_deg[1], relay.panel_el_deg[1],
                                             p, relay_pos)

    n_direct = n_relay = n_union = 0
    for p in points:
        direct_ok = (any(in_sector_fov(az, 0.0, p, bs_pos)
                         for az in scenario.bs.sector_azimuths_deg)
                     and los_visible(p, bs_pos, scenario))
        relay_ok = relay_sees(p) and los_visible(p, relay_pos, scenario)
        n_direct += direct_ok
        n_relay += relay_ok
        n_union += direct_ok or relay_ok
    n = len(points)
    return {"points": n, "direct": n_direct / n, "relay": n_relay / n,
            "union": n_union / n}
