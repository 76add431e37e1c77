import math

import numpy as np
import pytest

from mmwcover import channel, scene
from mmwcover.antenna import (CosineQ, Isotropic, PlanarArray, ThreeGppPatch,
                              element_gain, wavelength)
from conftest import make_map

LAM = wavelength(28e9)
NOSHADOW = channel.PathGainModel(28e9, 0.0, 0)


def iso(n_h=1, n_v=1, az=0.0, el=0.0):
    return PlanarArray(n_h, n_v, LAM / 2, az, el, Isotropic())


# ---------------------------------------------------------------------------
# pathloss and shadowing
# ---------------------------------------------------------------------------

def test_pathloss_close_in_free_space():
    # hand evaluation: 32.4 + 20 log10(28) + 20 log10(d)
    for d in (1.0, 10.0, 250.0):
        want = 32.4 + 20 * math.log10(28.0) + 20 * math.log10(d)
        assert NOSHADOW.pathloss_db(d) == pytest.approx(want, abs=1e-12)


def test_pathloss_rejects_zero_distance():
    with pytest.raises(ValueError):
        NOSHADOW.pathloss_db(0.0)
    with pytest.raises(ValueError):
        channel.path_amplitude(0.0, NOSHADOW)


def test_amplitude_close_to_friis():
    d = 37.0
    amp, shadow = channel.path_amplitude(d, NOSHADOW)
    assert shadow == 0.0
    assert amp == pytest.approx(LAM / (4 * math.pi * d), rel=1e-2)


def test_shadowing_deterministic_per_link():
    model = channel.PathGainModel(28e9, 4.0, seed=42)
    a, b = [1.0, 2.0, 6.0], [50.0, 60.0, 1.5]
    s1 = model.shadow_db(a, b, "bs-ue")
    s2 = model.shadow_db(a, b, "bs-ue")
    assert s1 == s2
    assert model.shadow_db(b, a, "bs-ue") == s1  # endpoint order free
    assert model.shadow_db(a, b, "relay-ue") != s1
    assert channel.PathGainModel(28e9, 4.0, seed=43).shadow_db(a, b, "bs-ue") != s1


def test_zero_std_means_identical_repeats():
    amp1, _ = channel.path_amplitude(10.0, NOSHADOW, endpoints=([0, 0, 0], [10, 0, 0]))
    amp2, _ = channel.path_amplitude(10.0, NOSHADOW, endpoints=([0, 0, 0], [10, 0, 0]))
    assert amp1 == amp2


# ---------------------------------------------------------------------------
# direct channel
# ---------------------------------------------------------------------------

def test_direct_friis_scalar(empty_map):
    d = 50.0
    h = channel.direct_channel(iso(), [100, 100, 6], iso(), [100 + d, 100, 6],
                               empty_map, NOSHADOW)
    assert abs(h[0, 0]) == pytest.approx(LAM / (4 * math.pi * d), rel=1e-2)


def test_direct_frobenius_norm_identity(empty_map):
    # rank-1 outer product: ||H||_F^2 = N_t N_r |alpha|^2 (element gains)^2
    bs = PlanarArray(16, 12, LAM / 2, 0.0, 0.0, ThreeGppPatch())
    d = 80.0
    ue_pos = [180.0, 100.0, 6.0]  # on the sector boresight from (100, 100)
    h = channel.direct_channel(bs, [100, 100, 6], iso(), ue_pos, empty_map, NOSHADOW)
    alpha = NOSHADOW.amplitude(d)
    rho_t = element_gain(ThreeGppPatch(), 0.0, 0.0)
    want = bs.size * 1 * (alpha * rho_t) ** 2
    assert np.linalg.norm(h) ** 2 == pytest.approx(want, rel=1e-12)


def test_direct_out_of_fov_yields_zero(empty_map):
    bs = PlanarArray(16, 12, LAM / 2, 0.0, 0.0, ThreeGppPatch())
    az = math.radians(61.0)
    ue_pos = [100 + 50 * math.cos(az), 100 + 50 * math.sin(az), 1.5]
    h = channel.direct_channel(bs, [100, 100, 6], iso(), ue_pos, empty_map, NOSHADOW)
    assert not np.any(h)


def test_direct_statically_blocked_yields_zero(box_map):
    h = channel.direct_channel(iso(), [10, 50, 6], iso(), [90, 50, 1.5],
                               box_map, NOSHADOW)
    assert not np.any(h)


def test_direct_carries_phase_of_distance(empty_map):
    d = 63.0
    h = channel.direct_channel(iso(), [100, 100, 6], iso(), [100 + d, 100, 6],
                               empty_map, NOSHADOW)
    assert np.angle(h[0, 0]) == pytest.approx(
        float(np.angle(np.exp(-1j * 2 * np.pi * d / LAM))), abs=1e-9)


# ---------------------------------------------------------------------------
# surface legs
# ---------------------------------------------------------------------------

def ris_panel(n, az=180.0):
    return PlanarArray(n, n, LAM / 4, az, 0.0, CosineQ(0.029))


def test_single_element_leg_is_friis():
    surf = PlanarArray(1, 1, LAM / 4, 180.0, 0.0, Isotropic())
    h_in = channel.ris_incident_leg(iso(), [-20, 0, 2], surf, [0, 0, 2], NOSHADOW)
    assert h_in.shape == (1, 1)
    assert abs(h_in[0, 0]) == pytest.approx(LAM / (4 * math.pi * 20), rel=1e-2)


def test_leg_phases_match_planar_wavefront_far_away():
    # one BS antenna far from a 16x16 surface: spherical per-element phases
    # against the plane-wave prediction from the lattice geometry
    surf = ris_panel(16)
    side = 15 * LAM / 4
    fraunhofer = 2 * (2 * side ** 2) / LAM
    r = 100 * fraunhofer
    direction = np.array([math.cos(math.radians(150)), math.sin(math.radians(150)), 0.0])
    bs_pos = np.array([0.0, 0.0, 0.0]) + r * direction
    h_in = channel.ris_incident_leg(iso(), bs_pos, surf, [0, 0, 0], NOSHADOW)

    elems = surf.element_positions([0, 0, 0])
    planar = np.exp(-1j * 2 * np.pi / LAM * (r - elems @ direction))
    mismatch = np.angle(h_in[:, 0] / planar[:])
    assert np.max(np.abs(np.degrees(mismatch))) < 1.0


def test_leg_entries_finite_nonzero():
    surf = ris_panel(8)
    h_in, h_out = channel.ris_leg_channels(iso(), [-30, 10, 6], surf, [0, 0, 4],
                                           iso(), [-12, -9, 1.5], NOSHADOW)
    for mat in (h_in, h_out):
        assert np.all(np.isfinite(mat))
        assert np.all(np.abs(mat) > 0)


def test_leg_rejects_endpoint_behind_plane():
    surf = ris_panel(4)
    with pytest.raises(ValueError, match="behind"):
        channel.ris_incident_leg(iso(), [30, 0, 2], surf, [0, 0, 2], NOSHADOW)
    with pytest.raises(ValueError, match="behind"):
        channel.ris_outgoing_leg(surf, [0, 0, 2], iso(), [5, 0, 2], NOSHADOW)


# ---------------------------------------------------------------------------
# surface configuration and cascade
# ---------------------------------------------------------------------------

def legs_8x8():
    surf = ris_panel(8)
    return channel.ris_leg_channels(iso(), [-25, 8, 5], surf, [0, 0, 4],
                                    iso(), [-15, -11, 1.5], NOSHADOW)


def test_configure_single_element_cancels_phase():
    surf = PlanarArray(1, 1, LAM / 4, 180.0, 0.0, CosineQ(0.029))
    h_in, h_out = channel.ris_leg_channels(iso(), [-20, 0, 2], surf, [0, 0, 2],
                                           iso(), [-10, -5, 1.5], NOSHADOW)
    phases = channel.configure_ris(h_in[:, 0], h_out[0, :])
    cascade = channel.ris_cascade(h_out, phases, h_in)
    assert np.angle(cascade[0, 0]) == pytest.approx(0.0, abs=1e-12)


def test_configured_cascade_magnitude_is_term_sum():
    h_in, h_out = legs_8x8()
    phases = channel.configure_ris(h_in[:, 0], h_out[0, :])
    cascade = channel.ris_cascade(h_out, phases, h_in)
    want = np.sum(np.abs(h_out[0, :] * h_in[:, 0]))
    assert abs(cascade[0, 0]) == pytest.approx(want, rel=1e-12)


def test_configured_beats_random_phase_configs():
    h_in, h_out = legs_8x8()
    phases = channel.configure_ris(h_in[:, 0], h_out[0, :])
    best = abs(channel.ris_cascade(h_out, phases, h_in)[0, 0])
    rng = np.random.default_rng(7)
    for _ in range(1000):
        rand = rng.uniform(0, 2 * np.pi, size=64)
        assert abs(channel.ris_cascade(h_out, rand, h_in)[0, 0]) <= best + 1e-15


def test_zero_phases_reduce_to_plain_product():
    h_in, h_out = legs_8x8()
    cascade = channel.ris_cascade(h_out, np.zeros(64), h_in)
    assert np.allclose(cascade, h_out @ h_in)


def test_cascade_matches_explicit_summation():
    # direct summation over surface elements as the independent oracle
    rng = np.random.default_rng(8)
    for _ in range(5):
        m, n_t, n_r = rng.integers(2, 64), rng.integers(1, 5), rng.integers(1, 3)
        h_in = rng.standard_normal((m, n_t)) + 1j * rng.standard_normal((m, n_t))
        h_out = rng.standard_normal((n_r, m)) + 1j * rng.standard_normal((n_r, m))
        phases = rng.uniform(0, 2 * np.pi, size=m)
        cascade = channel.ris_cascade(h_out, phases, h_in)
        explicit = np.einsum("km,m,mn->kn", h_out, np.exp(1j * phases), h_in)
        assert np.max(np.abs(cascade - explicit)) <= 1e-12 * np.max(np.abs(explicit))


def test_cascade_dimension_mismatch():
    h_in, h_out = legs_8x8()
    with pytest.raises(ValueError, match="mismatch"):
        channel.ris_cascade(h_out, np.zeros(63), h_in)


def test_phases_are_wrapped():
    h_in, h_out = legs_8x8()
    phases = channel.configure_ris(h_in[:, 0], h_out[0, :])
    assert np.all(phases >= 0.0) and np.all(phases < 2 * np.pi)


# ---------------------------------------------------------------------------
# repeater
# ---------------------------------------------------------------------------

def ncr_setup(amp_gain_db=55.0, max_gain_db=200.0, bs_pos=(-100, 0, 6), ue_pos=(60, 5, 1.5)):
    p1 = PlanarArray(12, 6, LAM / 2, 180.0, 0.0, ThreeGppPatch())
    p2 = PlanarArray(12, 6, LAM / 2, 0.0, 0.0, ThreeGppPatch())
    cfg = channel.NCRConfig(panel_to_bs=p1, panel_to_ue=p2, position=(0.0, 0.0, 4.0),
                            amp_gain_db=amp_gain_db, max_e2e_gain_db=max_gain_db)
    bs = PlanarArray(16, 12, LAM / 2, 0.0, 0.0, ThreeGppPatch())
    h_in = channel.farfield_channel(bs, bs_pos, p1, cfg.position, NOSHADOW, "bs-relay")
    h_out = channel.farfield_channel(p2, cfg.position, iso(), ue_pos, NOSHADOW, "relay-ue")
    return cfg, h_in, h_out, bs_pos


def test_e2e_gain_identity():
    assert channel.e2e_gain_db(55.0, 72) == pytest.approx(55 + 20 * math.log10(72), abs=1e-12)
    assert abs(channel.e2e_gain_db(55.0, 72) - 92.0) < 0.2


def test_beamformer_norms():
    cfg, h_in, h_out, bs_pos = ncr_setup()
    w, f = channel.ncr_beamformers(cfg, bs_pos, h_out, LAM)
    assert np.linalg.norm(w) ** 2 == pytest.approx(72.0, rel=1e-12)
    assert np.linalg.norm(f) ** 2 == pytest.approx(72.0, rel=1e-12)


def test_precoder_is_matched_filter_for_single_antenna_ue():
    cfg, h_in, h_out, bs_pos = ncr_setup()
    _, f = channel.ncr_beamformers(cfg, bs_pos, h_out, LAM)
    # rank-1 outgoing row: the precoder is proportional to its conjugate
    ratio = f / h_out[0].conj()
    assert np.allclose(ratio, ratio[0])


def test_combiner_uniform_phase_on_boresight():
    # same height as the panel so the BS sits exactly on the panel-1 boresight
    cfg, h_in, h_out, bs_pos = ncr_setup(bs_pos=(-100, 0, 4))
    w, _ = channel.ncr_beamformers(cfg, bs_pos, h_out, LAM)
    assert np.allclose(w, w[0])


def test_precoder_beats_random_unit_vectors():
    cfg, h_in, h_out, bs_pos = ncr_setup(ue_pos=(40, 25, 1.5))
    _, f = channel.ncr_beamformers(cfg, bs_pos, h_out, LAM)
    delivered = np.linalg.norm(h_out @ f)
    rng = np.random.default_rng(9)
    for _ in range(100):
        v = rng.standard_normal(72) + 1j * rng.standard_normal(72)
        v *= math.sqrt(72) / np.linalg.norm(v)
        assert np.linalg.norm(h_out @ v) <= delivered + 1e-12


def test_bs_outside_panel_fov_rejected():
    cfg, h_in, h_out, _ = ncr_setup()
    with pytest.raises(ValueError, match="field of view"):
        channel.ncr_beamformers(cfg, (0, -100, 6), h_out, LAM)


def test_repeater_cascade_structure():
    cfg, h_in, h_out, bs_pos = ncr_setup()
    w, f = channel.ncr_beamformers(cfg, bs_pos, h_out, LAM)
    result = channel.ncr_channel(h_in, h_out, cfg.with_beamformers(w, f))
    assert result.matrix.shape == (1, 16 * 12)
    assert result.noise_matrix.shape == (1, 72)
    assert np.linalg.matrix_rank(result.matrix) == 1
    assert result.e2e_gain_db == pytest.approx(55 + 20 * math.log10(72), abs=1e-9)
    assert not result.clamped
    # explicit cascade: g * (h_out f) (w^H h_in)
    g = 10 ** ((result.e2e_gain_db - 20 * math.log10(72)) / 20)
    want = g * np.outer(h_out @ f, w.conj() @ h_in)
    assert np.allclose(result.matrix, want)


def test_gain_cap_clamps_and_reports():
    cfg, h_in, h_out, bs_pos = ncr_setup(amp_gain_db=55.0, max_gain_db=92.0)
    w, f = channel.ncr_beamformers(cfg, bs_pos, h_out, LAM)
    result = channel.ncr_channel(h_in, h_out, cfg.with_beamformers(w, f))
    assert result.clamped
    assert result.e2e_gain_db == pytest.approx(92.0, abs=1e-9)
    uncapped = channel.ncr_channel(h_in, h_out,
                                   cfg.with_beamformers(w, f).__class__(
                                       **{**cfg.__dict__, "combiner": w, "precoder": f,
                                          "max_e2e_gain_db": 200.0}))
    scale = 10 ** ((92.0 - channel.e2e_gain_db(55.0, 72)) / 20)
    assert np.allclose(result.matrix, uncapped.matrix * scale)


def test_zero_amplification_gives_zero_channels():
    cfg, h_in, h_out, bs_pos = ncr_setup(amp_gain_db=float("-inf"))
    w, f = channel.ncr_beamformers(cfg, bs_pos, h_out, LAM)
    result = channel.ncr_channel(h_in, h_out, cfg.with_beamformers(w, f))
    assert not np.any(result.matrix)
    assert not np.any(result.noise_matrix)


def test_missing_beamformers_rejected():
    cfg, h_in, h_out, _ = ncr_setup()
    with pytest.raises(ValueError, match="beamformers"):
        channel.ncr_channel(h_in, h_out, cfg)


def test_synthesis_deterministic_with_seed():
    model = channel.PathGainModel(28e9, 4.0, seed=11)
    smap = make_map()
    h1 = channel.direct_channel(iso(), [5, 50, 6], iso(), [60, 40, 1.5], smap, model)
    h2 = channel.direct_channel(iso(), [5, 50, 6], iso(), [60, 40, 1.5], smap, model)
    assert np.array_equal(h1, h2)
