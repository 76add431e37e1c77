"""Uniform planar arrays, steering vectors, and single-element patterns.

Conventions used throughout: a panel's boresight is its local +x axis,
azimuth is measured counterclockwise about global +z starting from global +x,
elevation is positive upward. The element lattice is centred on the panel
origin, rows running along the local horizontal axis and columns along the
local vertical axis; elements are flattened row-major (vertical index major).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


def wavelength(carrier_hz: float) -> float:
    return SPEED_OF_LIGHT / carrier_hz


@dataclass(frozen=True)
class Isotropic:
    """Unit amplitude in every direction."""


@dataclass(frozen=True)
class CosineQ:
    """Reflectarray-style element: power pattern cos(theta)^q, unity at broadside."""

    q: float = 0.029

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("directivity exponent q must be >= 0")


@dataclass(frozen=True)
class ThreeGppPatch:
    """3GPP TR 38.901 single-element patch pattern.

    65 deg half-power beamwidth in both cuts, 30 dB front-to-back ratio,
    8 dBi peak gain.
    """

    peak_gain_dbi: float = 8.0
    hpbw_deg: float = 65.0
    max_attenuation_db: float = 30.0


PatternKind = Isotropic | CosineQ | ThreeGppPatch


def element_gain(pattern: PatternKind, az_off_deg, el_off_deg):
    """Amplitude gain of one element toward (azimuth, elevation) off its boresight.

    Accepts scalars or broadcastable arrays of degrees; returns the same shape.
    """
    az = np.asarray(az_off_deg, dtype=float)
    el = np.asarray(el_off_deg, dtype=float)
    if isinstance(pattern, Isotropic):
        out = np.ones(np.broadcast(az, el).shape)
    elif isinstance(pattern, CosineQ):
        cos_t = np.clip(np.cos(np.deg2rad(el)) * np.cos(np.deg2rad(az)), 0.0, 1.0)
        out = cos_t ** (pattern.q / 2.0)
    elif isinstance(pattern, ThreeGppPatch):
        att_az = np.minimum(12.0 * (az / pattern.hpbw_deg) ** 2, pattern.max_attenuation_db)
        att_el = np.minimum(12.0 * (el / pattern.hpbw_deg) ** 2, pattern.max_attenuation_db)
        gain_db = pattern.peak_gain_dbi - np.minimum(att_az + att_el, pattern.max_attenuation_db)
        out = 10.0 ** (gain_db / 20.0)
    else:
        raise TypeError(f"unknown pattern kind: {pattern!r}")
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PlanarArray:
    """Rectangular antenna lattice with uniform spacing.

    n_h runs along the local horizontal axis, n_v along the local vertical one.
    """

    n_h: int
    n_v: int
    spacing_m: float
    boresight_az_deg: float = 0.0
    boresight_el_deg: float = 0.0
    pattern: PatternKind = field(default_factory=Isotropic)

    def __post_init__(self):
        if self.n_h < 1 or self.n_v < 1:
            raise ValueError("element counts must be >= 1")
        if self.spacing_m <= 0:
            raise ValueError("element spacing must be positive")

    @property
    def size(self) -> int:
        return self.n_h * self.n_v

    def lattice_offsets(self) -> np.ndarray:
        """(N, 2) local (horizontal, vertical) element offsets in meters."""
        ih = np.arange(self.n_h) - (self.n_h - 1) / 2.0
        iv = np.arange(self.n_v) - (self.n_v - 1) / 2.0
        hh, vv = np.meshgrid(ih, iv)  # vertical index major
        return np.column_stack([hh.ravel(), vv.ravel()]) * self.spacing_m

    def axes(self) -> np.ndarray:
        """Rows are the local (boresight, horizontal, vertical) unit axes in global frame."""
        az = np.deg2rad(self.boresight_az_deg)
        el = np.deg2rad(self.boresight_el_deg)
        x = np.array([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)])
        y = np.array([-np.sin(az), np.cos(az), 0.0])
        z = np.cross(x, y)
        return np.vstack([x, y, z])

    def element_positions(self, origin) -> np.ndarray:
        """(N, 3) global element positions for a panel centred at `origin`."""
        offs = self.lattice_offsets()
        ax = self.axes()
        return np.asarray(origin, dtype=float) + offs[:, 0:1] * ax[1] + offs[:, 1:2] * ax[2]

    def local_angles(self, vectors) -> tuple[np.ndarray, np.ndarray]:
        """Azimuth/elevation (degrees) of global direction vectors in the panel frame.

        `vectors` has shape (..., 3) and need not be normalised.
        """
        v = np.asarray(vectors, dtype=float)
        norm = np.linalg.norm(v, axis=-1, keepdims=True)
        if np.any(norm == 0):
            raise ValueError("zero-length direction vector")
        u = v / norm
        ax = self.axes()
        cx = u @ ax[0]
        cy = u @ ax[1]
        cz = np.clip(u @ ax[2], -1.0, 1.0)
        az = np.rad2deg(np.arctan2(cy, cx))
        el = np.rad2deg(np.arcsin(cz))
        return az, el


def lattice_phases(array: PlanarArray, az_off_deg, el_off_deg,
                   carrier_wavelength: float) -> np.ndarray:
    """Plane-wave phase vector for any arrival direction, front or back."""
    az = float(az_off_deg)
    el = float(el_off_deg)
    offs = array.lattice_offsets()
    u_h = np.cos(np.deg2rad(el)) * np.sin(np.deg2rad(az))
    u_v = np.sin(np.deg2rad(el))
    phase = -(2.0 * np.pi / carrier_wavelength) * (offs[:, 0] * u_h + offs[:, 1] * u_v)
    return np.exp(1j * phase)


def array_response(array: PlanarArray, az_off_deg, el_off_deg, carrier_wavelength: float) -> np.ndarray:
    """Plane-wave steering vector toward (azimuth, elevation) off boresight.

    Entry m is exp(-j * 2 pi / lambda * <d_m, u>) for element offset d_m and
    unit propagation direction u; every entry has unit modulus. Directions are
    restricted to the front hemisphere.
    """
    if abs(float(az_off_deg)) > 90.0 + 1e-9 or abs(float(el_off_deg)) > 90.0 + 1e-9:
        raise ValueError("direction behind the panel")
    return lattice_phases(array, az_off_deg, el_off_deg, carrier_wavelength)
