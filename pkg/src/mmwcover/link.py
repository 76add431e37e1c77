"""Beamforming and SNR evaluation for a single BS-UE link.

Precoders and combiners come from the channel's singular vectors with
waterfilling power allocation over the streams. The transmit power budget is
carried inside the precoder (its squared Frobenius norm equals the allocated
power), while the combiner is scaled so its squared norm equals the receive
element count, matching the fixed N_r * noise term in the SNR denominators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def waterfill(channel_gains, total_power: float, noise_power: float) -> np.ndarray:
    """Waterfilling powers over parallel channels with the given power gains.

    Maximises sum log(1 + p_i g_i / noise) subject to sum p_i = total_power.
    """
    g = np.asarray(channel_gains, dtype=float)
    if np.any(g < 0):
        raise ValueError("channel power gains must be non-negative")
    if total_power <= 0:
        raise ValueError("total power must be positive")
    inv = noise_power / np.where(g > 0, g, np.inf)
    order = np.argsort(inv)
    powers = np.zeros_like(g)
    # largest k with a water level above every active channel's floor
    for k in range(len(g), 0, -1):
        active = order[:k]
        if not np.isfinite(inv[active]).all():
            continue
        level = (total_power + inv[active].sum()) / k
        if level >= inv[active].max():
            powers[active] = level - inv[active]
            break
    return powers


@dataclass(frozen=True, eq=False)
class BeamformerSolution:
    precoder: np.ndarray        # N_t x N_s, squared norm = allocated power
    combiner: np.ndarray        # N_r x N_s, squared norm = N_r
    stream_powers: np.ndarray   # length N_s, sums to the power budget
    singular_values: np.ndarray
    n_streams: int


def svd_beamformers(h: np.ndarray, n_streams: int, total_power: float,
                    noise_power: float) -> BeamformerSolution:
    """SVD precoder/combiner with waterfilling powers for channel `h`.

    Raises ValueError on a zero channel (no serving beam exists) or when more
    streams are requested than the channel rank supports.
    """
    h = np.asarray(h)
    if not np.any(h):
        raise ValueError("zero channel has no beamformers")
    u, s, vh = np.linalg.svd(h, full_matrices=False)
    rank = int(np.count_nonzero(s > s[0] * 1e-12))
    if n_streams > rank:
        raise ValueError(f"{n_streams} streams requested but channel rank is {rank}")
    s_used = s[:n_streams]
    powers = waterfill(s_used ** 2, total_power, noise_power)
    n_r = h.shape[0]
    precoder = vh[:n_streams].conj().T * np.sqrt(powers)
    combiner = u[:, :n_streams] * np.sqrt(n_r / n_streams)
    return BeamformerSolution(precoder=precoder, combiner=combiner,
                              stream_powers=powers, singular_values=s,
                              n_streams=n_streams)


def snr_ris(h_direct, h_relay, precoder, combiner, ue_noise_power: float) -> float:
    """Linear SNR of the direct-plus-surface link after beamforming."""
    h = np.asarray(h_direct) + np.asarray(h_relay)
    eff = combiner.conj().T @ h @ precoder
    n_r = combiner.shape[0]
    return float(np.linalg.norm(eff) ** 2 / (n_r * ue_noise_power))


def snr_ncr(h_direct, h_relay, h_relay_noise, precoder, combiner,
            ue_noise_power: float, relay_noise_power: float) -> float:
    """Linear SNR of the direct-plus-repeater link, amplified noise included."""
    h = np.asarray(h_direct) + np.asarray(h_relay)
    eff = combiner.conj().T @ h @ precoder
    n_r = combiner.shape[0]
    relay_noise = np.linalg.norm(h_relay_noise) ** 2 * relay_noise_power
    return float(np.linalg.norm(eff) ** 2 / (n_r * ue_noise_power + relay_noise))


def long_term_snr(snr_blocked: float, snr_clear: float, block_probability: float) -> float:
    """Blockage-averaged SNR, in linear scale."""
    if not 0.0 <= block_probability <= 1.0:
        raise ValueError("block probability must lie in [0, 1]")
    return block_probability * snr_blocked + (1.0 - block_probability) * snr_clear


@dataclass(frozen=True)
class LinkAssessment:
    """Per-position link summary across the direct and relayed routes."""

    snr_direct_blocked: float
    snr_direct_clear: float
    block_prob_direct: float
    snr_relay_blocked: float
    snr_relay_clear: float
    block_prob_relay: float
    long_term_direct: float
    long_term_relay: float
    long_term: float
    chosen: str  # "direct" | "relay" | "joint" | "none"


def joint_long_term_snr(direct: tuple[float, float, float],
                        relayed: tuple[float, float, float],
                        mode: str = "best-link",
                        combination_snrs=None) -> LinkAssessment:
    """Combine the direct and relayed routes into one long-term SNR.

    `direct` and `relayed` are (blocked SNR, clear SNR, block probability)
    triples. In best-link mode the stronger long-term SNR wins. In combined
    mode the caller supplies `combination_snrs`, a mapping from the four
    (direct blocked?, relay blocked?) states to the jointly beamformed SNR of
    the summed channel in that state; the result is the probability-weighted
    average assuming independent blockage on the two routes.
    """
    g_d, g_d0, p_d = direct
    g_r, g_r0, p_r = relayed
    lt_d = long_term_snr(g_d, g_d0, p_d)
    lt_r = long_term_snr(g_r, g_r0, p_r)
    if mode == "best-link":
        lt = max(lt_d, lt_r)
        if lt <= 0.0:
            chosen = "none"
        else:
            chosen = "direct" if lt_d >= lt_r else "relay"
    elif mode == "combined":
        if combination_snrs is None:
            raise ValueError("combined mode needs the per-combination SNRs")
        lt = 0.0
        for d_blocked in (False, True):
            for r_blocked in (False, True):
                weight = (p_d if d_blocked else 1.0 - p_d) * \
                         (p_r if r_blocked else 1.0 - p_r)
                lt += weight * combination_snrs[(d_blocked, r_blocked)]
        chosen = "joint" if lt > 0.0 else "none"
    else:
        raise ValueError(f"unknown combining mode {mode!r}")
    return LinkAssessment(
        snr_direct_blocked=g_d, snr_direct_clear=g_d0, block_prob_direct=p_d,
        snr_relay_blocked=g_r, snr_relay_clear=g_r0, block_prob_relay=p_r,
        long_term_direct=lt_d, long_term_relay=lt_r, long_term=lt, chosen=chosen)
