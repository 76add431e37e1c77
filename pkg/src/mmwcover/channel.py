"""Channel synthesis for all link legs.

Three families of channels are produced here, all as plain complex ndarrays
with shape (receive elements, transmit elements):

* far-field rank-1 channels for the direct link and the repeater legs,
* per-element spherical-wavefront legs through a reflecting surface, valid in
  both near and far field,
* the amplify-and-forward repeater cascade with its amplified-noise channel
  and end-to-end gain cap.

Amplitudes follow the close-in free-space reference pathloss at the carrier,
32.4 + 20 log10(f_GHz) + 20 log10(d_m) dB, with deterministic log-normal
shadowing drawn per link from a seeded hash of the quantised endpoints.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace

import numpy as np

from . import params
from .antenna import PlanarArray, array_response, element_gain, lattice_phases

_CHUNK = 8192  # surface elements synthesised per block, bounds peak memory


@dataclass(frozen=True)
class PathGainModel:
    """Pathloss plus deterministic shadowing for amplitude synthesis."""

    carrier_hz: float = params.CARRIER_HZ
    shadowing_std_db: float = params.SHADOWING_STD_DB
    seed: int = 0

    def __post_init__(self):
        if self.shadowing_std_db < 0:
            raise ValueError("shadowing std must be non-negative")

    @property
    def wavelength(self) -> float:
        return 299_792_458.0 / self.carrier_hz

    def pathloss_db(self, distance_m):
        d = np.asarray(distance_m, dtype=float)
        if np.any(d <= 0):
            raise ValueError("pathloss requires a positive distance")
        f_ghz = self.carrier_hz / 1e9
        out = 32.4 + 20.0 * np.log10(f_ghz) + 20.0 * np.log10(d)
        return float(out) if out.ndim == 0 else out

    def shadow_db(self, a, b, tag: str) -> float:
        """Deterministic log-normal shadowing draw for the link between a and b.

        The draw depends only on the endpoints (quantised to 1 mm, order
        independent), the link tag, and the global seed.
        """
        if self.shadowing_std_db == 0.0:
            return 0.0
        qa = tuple(round(float(v), 3) for v in np.asarray(a, dtype=float))
        qb = tuple(round(float(v), 3) for v in np.asarray(b, dtype=float))
        lo, hi = (qa, qb) if qa <= qb else (qb, qa)
        key = repr((lo, hi, tag, self.seed)).encode()
        digest = hashlib.blake2b(key, digest_size=8).digest()
        rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest, "little")))
        return float(rng.standard_normal() * self.shadowing_std_db)

    def amplitude(self, distance_m, shadow_db: float = 0.0):
        """Linear field amplitude 10^((-PL + shadow)/20) at the given distance."""
        pl = self.pathloss_db(distance_m)
        return 10.0 ** ((-pl + shadow_db) / 20.0)


def path_amplitude(distance_m: float, model: PathGainModel,
                   endpoints=None, tag: str = "link") -> tuple[float, float]:
    """Amplitude and the shadowing draw (dB) for one propagation path."""
    shadow = model.shadow_db(*endpoints, tag) if endpoints is not None else 0.0
    return float(model.amplitude(distance_m, shadow)), shadow


def farfield_channel(tx_array: PlanarArray, tx_pos, rx_array: PlanarArray, rx_pos,
                      gains: PathGainModel, tag: str) -> np.ndarray:
    """Rank-1 line-of-sight channel between two panels, planar wavefront."""
    tx_pos = np.asarray(tx_pos, dtype=float)
    rx_pos = np.asarray(rx_pos, dtype=float)
    d = rx_pos - tx_pos
    r = float(np.linalg.norm(d))
    if r == 0.0:
        raise ValueError("transmit and receive positions coincide")
    lam = gains.wavelength
    az_t, el_t = tx_array.local_angles(d)
    az_r, el_r = rx_array.local_angles(-d)
    # element patterns already attenuate back-of-panel arrivals, so the lattice
    # phases are evaluated without a hemisphere restriction
    rho = element_gain(tx_array.pattern, az_t, el_t) * element_gain(rx_array.pattern, az_r, el_r)
    a_t = lattice_phases(tx_array, az_t, el_t, lam)
    a_r = lattice_phases(rx_array, az_r, el_r, lam)
    shadow = gains.shadow_db(tx_pos, rx_pos, tag)
    alpha = gains.amplitude(r, shadow) * np.exp(-1j * 2.0 * np.pi * r / lam)
    return alpha * rho * np.outer(a_r, a_t.conj())


def direct_channel(bs_array: PlanarArray, bs_pos, ue_array: PlanarArray, ue_pos,
                   scenario, gains: PathGainModel) -> np.ndarray:
    """Direct serving-sector to UE channel.

    Returns the all-zero matrix when the UE falls outside the sector wedge or
    when a building statically blocks the path.
    """
    from .scene import in_sector_fov, los_visible

    if not in_sector_fov(bs_array.boresight_az_deg, bs_array.boresight_el_deg,
                         ue_pos, bs_pos):
        return np.zeros((ue_array.size, bs_array.size), dtype=complex)
    if not los_visible(bs_pos, ue_pos, scenario):
        return np.zeros((ue_array.size, bs_array.size), dtype=complex)
    return farfield_channel(bs_array, bs_pos, ue_array, ue_pos, gains, "bs-ue")


# ---------------------------------------------------------------------------
# Reflecting-surface legs and cascade
# ---------------------------------------------------------------------------

def _spherical_leg(tx_elems: np.ndarray, tx_array: PlanarArray,
                   rx_elems: np.ndarray, rx_array: PlanarArray,
                   gains: PathGainModel, shadow: float) -> np.ndarray:
    """Entrywise spherical-wavefront channel, rows = rx elements, cols = tx elements."""
    lam = gains.wavelength
    k = 2.0 * np.pi / lam
    n_rx, n_tx = len(rx_elems), len(tx_elems)
    out = np.empty((n_rx, n_tx), dtype=complex)
    # chunk over whichever side is the dense surface
    big_axis = 0 if n_rx >= n_tx else 1
    span = n_rx if big_axis == 0 else n_tx
    for start in range(0, span, _CHUNK):
        stop = min(start + _CHUNK, span)
        rx_chunk = rx_elems[start:stop] if big_axis == 0 else rx_elems
        tx_chunk = tx_elems if big_axis == 0 else tx_elems[start:stop]
        diff = rx_chunk[:, None, :] - tx_chunk[None, :, :]
        dist = np.linalg.norm(diff, axis=-1)
        az_t, el_t = tx_array.local_angles(diff)
        az_r, el_r = rx_array.local_angles(-diff)
        rho = element_gain(tx_array.pattern, az_t, el_t) * \
            element_gain(rx_array.pattern, az_r, el_r)
        block = gains.amplitude(dist, shadow) * rho * np.exp(-1j * k * dist)
        if big_axis == 0:
            out[start:stop, :] = block
        else:
            out[:, start:stop] = block
    return out


def ris_incident_leg(bs_array: PlanarArray, bs_pos, ris_array: PlanarArray, ris_pos,
                     gains: PathGainModel) -> np.ndarray:
    """Spherical-wavefront BS-to-surface leg, shape (M, N_t)."""
    bs_pos = np.asarray(bs_pos, dtype=float)
    ris_pos = np.asarray(ris_pos, dtype=float)
    if (bs_pos - ris_pos) @ ris_array.axes()[0] <= 0:
        raise ValueError("base station is behind the surface plane")
    shadow = gains.shadow_db(bs_pos, ris_pos, "bs-relay")
    return _spherical_leg(bs_array.element_positions(bs_pos), bs_array,
                          ris_array.element_positions(ris_pos), ris_array,
                          gains, shadow)


def ris_outgoing_leg(ris_array: PlanarArray, ris_pos, ue_array: PlanarArray, ue_pos,
                     gains: PathGainModel) -> np.ndarray:
    """Spherical-wavefront surface-to-UE leg, shape (N_r, M)."""
    ris_pos = np.asarray(ris_pos, dtype=float)
    ue_pos = np.asarray(ue_pos, dtype=float)
    if (ue_pos - ris_pos) @ ris_array.axes()[0] <= 0:
        raise ValueError("user is behind the surface plane")
    shadow = gains.shadow_db(ris_pos, ue_pos, "relay-ue")
    return _spherical_leg(ris_array.element_positions(ris_pos), ris_array,
                          ue_array.element_positions(ue_pos), ue_array,
                          gains, shadow)


def ris_leg_channels(bs_array: PlanarArray, bs_pos, ris_array: PlanarArray, ris_pos,
                     ue_array: PlanarArray, ue_pos,
                     gains: PathGainModel) -> tuple[np.ndarray, np.ndarray]:
    """Per-element legs through the surface: (incident M x N_t, outgoing N_r x M).

    Every entry carries the exact 3D element-to-element distance in both its
    phase and its amplitude, so near-field curvature is represented. Raises
    ValueError when the BS or the UE is behind the surface plane.
    """
    incident = ris_incident_leg(bs_array, bs_pos, ris_array, ris_pos, gains)
    outgoing = ris_outgoing_leg(ris_array, ris_pos, ue_array, ue_pos, gains)
    return incident, outgoing


def configure_ris(incident_ref: np.ndarray, outgoing_ref: np.ndarray) -> np.ndarray:
    """Per-element phases that co-phase the cascade for the reference elements.

    `incident_ref` is the incident-leg column for one reference BS element,
    `outgoing_ref` the outgoing-leg row for one reference UE element. The
    returned phases cancel both propagation phases term by term, so the
    configured cascade magnitude equals the sum of the term magnitudes.
    """
    inc = np.asarray(incident_ref).ravel()
    out = np.asarray(outgoing_ref).ravel()
    if inc.shape != out.shape:
        raise ValueError("reference legs must have one entry per surface element")
    return np.mod(-np.angle(inc) - np.angle(out), 2.0 * np.pi)


def ris_cascade(outgoing: np.ndarray, phases: np.ndarray, incident: np.ndarray) -> np.ndarray:
    """Cascade channel: outgoing @ diag(exp(j phases)) @ incident."""
    outgoing = np.asarray(outgoing)
    incident = np.asarray(incident)
    phases = np.asarray(phases, dtype=float).ravel()
    m = phases.size
    if outgoing.shape[1] != m or incident.shape[0] != m:
        raise ValueError(
            f"dimension mismatch: outgoing {outgoing.shape}, {m} phases, incident {incident.shape}")
    return (outgoing * np.exp(1j * phases)) @ incident


# ---------------------------------------------------------------------------
# Repeater cascade
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NCRConfig:
    """Two-panel amplify-and-forward repeater configuration.

    The combiner points panel 1 at the BS and the precoder points panel 2 at
    the user; both carry squared norm equal to the panel element count.
    """

    panel_to_bs: PlanarArray
    panel_to_ue: PlanarArray
    position: tuple[float, float, float]
    amp_gain_db: float = params.NCR_AMP_GAIN_DB
    max_e2e_gain_db: float = params.NCR_MAX_E2E_GAIN_DB
    noise_figure_db: float = params.NCR_NOISE_FIGURE_DB
    combiner: np.ndarray | None = None
    precoder: np.ndarray | None = None

    @property
    def panel_elements(self) -> int:
        return self.panel_to_bs.size

    def with_beamformers(self, combiner: np.ndarray, precoder: np.ndarray) -> "NCRConfig":
        return replace(self, combiner=combiner, precoder=precoder)


def e2e_gain_db(amp_gain_db: float, panel_elements: int) -> float:
    """End-to-end repeater power gain |g|^2 * N_p^2 in dB."""
    return amp_gain_db + 20.0 * math.log10(panel_elements)


def ncr_beamformers(ncr: NCRConfig, bs_pos, outgoing: np.ndarray,
                    carrier_wavelength: float) -> tuple[np.ndarray, np.ndarray]:
    """Analog combiner toward the BS and precoder matched to the user leg.

    The combiner is the panel-1 steering vector toward the geometric BS
    direction; the precoder is the dominant right singular vector of the
    outgoing channel, scaled to squared norm N_p. Raises ValueError when the
    BS is outside the panel-1 field of view or the user leg is zero.
    """
    from .scene import in_sector_fov

    p1 = ncr.panel_to_bs
    if not in_sector_fov(p1.boresight_az_deg, p1.boresight_el_deg, bs_pos, ncr.position):
        raise ValueError("base station outside the BS-facing panel field of view")
    d = np.asarray(bs_pos, dtype=float) - np.asarray(ncr.position, dtype=float)
    az, el = p1.local_angles(d)
    combiner = array_response(p1, az, el, carrier_wavelength)

    outgoing = np.asarray(outgoing)
    if not np.any(outgoing):
        raise ValueError("zero channel toward the user; no precoder exists")
    _, _, vh = np.linalg.svd(outgoing, full_matrices=False)
    precoder = math.sqrt(ncr.panel_to_ue.size) * vh[0].conj()
    return combiner, precoder


@dataclass(frozen=True, eq=False)
class NCRChannel:
    matrix: np.ndarray        # end-to-end repeater channel, N_r x N_t
    noise_matrix: np.ndarray  # propagation of the repeater's own noise, N_r x N_p
    e2e_gain_db: float
    clamped: bool


def ncr_channel(incident: np.ndarray, outgoing: np.ndarray, ncr: NCRConfig) -> NCRChannel:
    """Amplified repeater cascade plus the amplified-noise channel.

    The end-to-end gain identity G = |g|^2 N_p^2 is enforced; when the
    requested amplification would exceed the cap, g is reduced so the cap is
    met exactly and the clamp is reported.
    """
    if ncr.combiner is None or ncr.precoder is None:
        raise ValueError("beamformers are not set; call ncr_beamformers first")
    if not np.isfinite(ncr.max_e2e_gain_db):
        raise ValueError("max_e2e_gain_db must be finite")
    n_p = ncr.panel_elements
    gain = e2e_gain_db(ncr.amp_gain_db, n_p)
    clamped = gain > ncr.max_e2e_gain_db
    if clamped:
        gain = ncr.max_e2e_gain_db
    g = 10.0 ** ((gain - 20.0 * math.log10(n_p)) / 20.0)
    received = np.asarray(outgoing) @ ncr.precoder          # N_r
    injected = ncr.combiner.conj() @ np.asarray(incident)   # N_t
    matrix = g * np.outer(received, injected)
    noise_matrix = g * np.outer(received, ncr.combiner.conj())
    return NCRChannel(matrix=matrix, noise_matrix=noise_matrix,
                      e2e_gain_db=gain, clamped=clamped)
