"""Scenario geometry: buildings, node placements, UE grids, line-of-sight tests.

Buildings are 2D footprints extruded from the ground to their height. The
line-of-sight test is exact in 2D (segment versus polygon edges) with linear
height interpolation at the crossing parameters; grazing contact with a wall
or roof edge counts as blocked, which is the conservative choice for coverage.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import params

_EPS_LEN = 1e-9  # absolute geometric tolerance, meters
_EPS_T = 1e-12  # parametric tolerance along a segment


class ScenarioError(ValueError):
    """A scenario file failed to parse or violates a structural invariant."""


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(np.isfinite([self.x, self.y, self.z])):
            raise ScenarioError("position components must be finite")

    def __array__(self, dtype=None, copy=None):
        return np.array([self.x, self.y, self.z], dtype=dtype or float)

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class Building:
    footprint: tuple[tuple[float, float], ...]
    height: float

    def __post_init__(self):
        if len(self.footprint) < 3:
            raise ScenarioError("building footprint needs at least 3 vertices")
        if not self.height > 0:
            raise ScenarioError("building height must be positive")
        if _polygon_self_intersects(np.asarray(self.footprint, dtype=float)):
            raise ScenarioError("building footprint self-intersects")

    @property
    def polygon(self) -> np.ndarray:
        return np.asarray(self.footprint, dtype=float)


@dataclass(frozen=True)
class BSPlacement:
    position: Vec3
    sector_azimuths_deg: tuple[float, ...] = (0.0, 120.0, 240.0)
    n_h: int = params.BS_PANEL[0]
    n_v: int = params.BS_PANEL[1]
    tx_power_dbm: float = params.BS_TX_POWER_DBM

    def __post_init__(self):
        if not 1 <= len(self.sector_azimuths_deg) <= 3:
            raise ScenarioError("bs.sector_azimuths must list 1 to 3 sectors")


@dataclass(frozen=True)
class RISPlacement:
    position: Vec3
    boresight_az_deg: float
    boresight_el_deg: float = 0.0
    n_h: int = params.RIS_ELEMENTS[0]
    n_v: int = params.RIS_ELEMENTS[1]
    directivity_q: float = params.RIS_DIRECTIVITY_Q

    kind = "ris"


@dataclass(frozen=True)
class NCRPlacement:
    position: Vec3
    panel_az_deg: tuple[float, float]
    panel_el_deg: tuple[float, float] = (0.0, 0.0)
    n_h: int = params.NCR_PANEL[0]
    n_v: int = params.NCR_PANEL[1]
    amp_gain_db: float = params.NCR_AMP_GAIN_DB
    max_e2e_gain_db: float = params.NCR_MAX_E2E_GAIN_DB
    noise_figure_db: float = params.NCR_NOISE_FIGURE_DB
    min_panel_separation_deg: float = params.NCR_MIN_PANEL_SEPARATION_DEG

    kind = "ncr"

    def __post_init__(self):
        if self.panel_separation_deg < self.min_panel_separation_deg - 1e-9:
            raise ScenarioError(
                f"relay.panel_az_deg: panel separation {self.panel_separation_deg:.1f} deg "
                f"is below the minimum {self.min_panel_separation_deg:.1f} deg"
            )

    @property
    def panel_separation_deg(self) -> float:
        vecs = []
        for az, el in zip(self.panel_az_deg, self.panel_el_deg):
            a, e = np.deg2rad(az), np.deg2rad(el)
            vecs.append([np.cos(e) * np.cos(a), np.cos(e) * np.sin(a), np.sin(e)])
        dot = np.clip(np.dot(vecs[0], vecs[1]), -1.0, 1.0)
        return float(np.rad2deg(np.arccos(dot)))


RelayPlacement = RISPlacement | NCRPlacement


@dataclass(frozen=True)
class GridSpec:
    spacing_m: float
    ue_height_m: float = params.UE_HEIGHT_M

    def __post_init__(self):
        if not self.spacing_m > 0:
            raise ScenarioError("grid.spacing must be positive")


@dataclass(frozen=True)
class ScenarioMap:
    buildings: tuple[Building, ...]
    bounds_min: tuple[float, float]
    bounds_max: tuple[float, float]
    bs: BSPlacement
    relay: RelayPlacement
    grid: GridSpec

    def __post_init__(self):
        lo, hi = np.asarray(self.bounds_min), np.asarray(self.bounds_max)
        if not np.all(hi > lo):
            raise ScenarioError("bounds.max must exceed bounds.min in both axes")
        for i, b in enumerate(self.buildings):
            poly = b.polygon
            if np.any(poly < lo - _EPS_LEN) or np.any(poly > hi + _EPS_LEN):
                raise ScenarioError(f"buildings[{i}] extends outside the map bounds")
        for name, pos in (("bs", self.bs.position), ("relay", self.relay.position)):
            for i, b in enumerate(self.buildings):
                if pos.z < b.height - _EPS_LEN and point_in_polygon(pos.xy, b.polygon):
                    raise ScenarioError(f"{name}.position lies inside buildings[{i}]")


# ---------------------------------------------------------------------------
# 2D polygon predicates
# ---------------------------------------------------------------------------

def _cross2(u, v) -> float:
    return u[0] * v[1] - u[1] * v[0]


def _point_segment_distance(pt, a, b) -> float:
    u = b - a
    uu = float(u @ u)
    if uu == 0.0:
        return float(np.linalg.norm(pt - a))
    t = float(np.clip((pt - a) @ u / uu, 0.0, 1.0))
    return float(np.linalg.norm(pt - (a + t * u)))


def _segments_touch(a, b, p, q) -> bool:
    u, v, w = b - a, q - p, p - a
    denom = _cross2(u, v)
    if abs(denom) > _EPS_LEN * max(1.0, np.linalg.norm(u) * np.linalg.norm(v)):
        t = _cross2(w, v) / denom
        s = _cross2(w, u) / denom
        return -_EPS_T <= t <= 1 + _EPS_T and -_EPS_T <= s <= 1 + _EPS_T
    # parallel: touching only if collinear and overlapping
    if _point_segment_distance(p, a, b) > _EPS_LEN and _point_segment_distance(q, a, b) > _EPS_LEN:
        return False
    uu = float(u @ u)
    if uu == 0.0:
        return _point_segment_distance(a, p, q) <= _EPS_LEN
    tp = float((p - a) @ u / uu)
    tq = float((q - a) @ u / uu)
    lo, hi = min(tp, tq), max(tp, tq)
    return hi >= -_EPS_T and lo <= 1 + _EPS_T


def _polygon_self_intersects(poly: np.ndarray) -> bool:
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        if np.linalg.norm(b - a) <= _EPS_LEN:
            return True  # degenerate edge
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # adjacent edges share a vertex by construction
            if _segments_touch(a, b, poly[j], poly[(j + 1) % n]):
                return True
    return False


def point_in_polygon(pt, polygon, include_boundary: bool = True) -> bool:
    """Even-odd point-in-polygon test; points on the boundary follow the flag."""
    pt = np.asarray(pt, dtype=float)
    poly = np.asarray(polygon, dtype=float)
    n = len(poly)
    for i in range(n):
        if _point_segment_distance(pt, poly[i], poly[(i + 1) % n]) <= _EPS_LEN:
            return include_boundary
    inside = False
    x, y = pt
    for i in range(n):
        (x1, y1), (x2, y2) = poly[i], poly[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            x_int = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_int:
                inside = not inside
    return inside


def _polygon_contacts(a2, b2, poly) -> list[float]:
    """Parameters t in [0, 1] where the segment a2 + t (b2 - a2) meets the boundary."""
    u = b2 - a2
    contacts: list[float] = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        v = q - p
        w = p - a2
        denom = _cross2(u, v)
        if abs(denom) > _EPS_LEN * max(1.0, np.linalg.norm(u) * np.linalg.norm(v)):
            t = _cross2(w, v) / denom
            s = _cross2(w, u) / denom
            if -_EPS_T <= t <= 1 + _EPS_T and -_EPS_T <= s <= 1 + _EPS_T:
                contacts.append(float(np.clip(t, 0.0, 1.0)))
        else:
            # parallel edge: collinear overlap contributes its end parameters
            if _point_segment_distance(p, a2, b2) <= _EPS_LEN or \
                    _point_segment_distance(q, a2, b2) <= _EPS_LEN:
                uu = float(u @ u)
                if uu == 0.0:
                    continue
                tp = float(np.clip((p - a2) @ u / uu, 0.0, 1.0))
                tq = float(np.clip((q - a2) @ u / uu, 0.0, 1.0))
                contacts.extend([tp, tq])
    return contacts


def _segment_hits_prism(a3, b3, polygon, height) -> bool:
    """True if the open 3D segment meets the extruded volume footprint x [0, height]."""
    a2, b2 = a3[:2], b3[:2]
    za, zb = float(a3[2]), float(b3[2])

    def z_at(t: float) -> float:
        return za + (zb - za) * t

    if np.linalg.norm(b2 - a2) <= _EPS_LEN:
        # vertical segment: blocked iff the shared 2D point sits in the footprint
        return point_in_polygon(a2, polygon) and min(za, zb) <= height + _EPS_LEN

    contacts = _polygon_contacts(a2, b2, polygon)
    for t in contacts:
        if _EPS_T < t < 1 - _EPS_T and z_at(t) <= height + _EPS_LEN:
            return True  # wall contact below the roof line
    ts = sorted({0.0, 1.0, *contacts})
    for t0, t1 in zip(ts, ts[1:]):
        if t1 - t0 <= _EPS_T:
            continue
        tm = 0.5 * (t0 + t1)
        if point_in_polygon(a2 + tm * (b2 - a2), polygon):
            if min(z_at(t0), z_at(t1)) <= height + _EPS_LEN:
                return True
    return False


# ---------------------------------------------------------------------------
# Public geometry operations
# ---------------------------------------------------------------------------

def los_visible(a, b, scenario: ScenarioMap) -> bool:
    """True iff the open segment between `a` and `b` crosses no building volume."""
    a3 = np.asarray(a, dtype=float)
    b3 = np.asarray(b, dtype=float)
    if np.array_equal(a3, b3):
        raise ValueError("line-of-sight endpoints must differ")
    for building in scenario.buildings:
        if _segment_hits_prism(a3, b3, building.polygon, building.height):
            return False
    return True


def in_sector_fov(boresight_az_deg, boresight_el_deg, target, position, *,
                  az_limit_deg: float = params.SECTOR_AZ_LIMIT_DEG,
                  el_limit_deg: float = params.SECTOR_EL_LIMIT_DEG) -> bool:
    """True iff `target` lies within the sector wedge around the boresight.

    The limits are inclusive: a target exactly on the edge is inside.
    """
    d = np.asarray(target, dtype=float) - np.asarray(position, dtype=float)
    if not np.any(d):
        return False
    az = np.rad2deg(np.arctan2(d[1], d[0]))
    el = np.rad2deg(np.arctan2(d[2], np.hypot(d[0], d[1])))
    daz = (az - boresight_az_deg + 180.0) % 360.0 - 180.0
    dele = el - boresight_el_deg
    return abs(daz) <= az_limit_deg + 1e-9 and abs(dele) <= el_limit_deg + 1e-9


def generate_ue_grid(scenario: ScenarioMap) -> np.ndarray:
    """Candidate UE positions: the regular grid at UE height, minus points inside
    buildings, keeping only points with a geometric path to the BS or the relay.

    Returns an (N, 3) array ordered row-major in (y, x). Raises ScenarioError
    when every point is excluded.
    """
    lo, hi = scenario.bounds_min, scenario.bounds_max
    s = scenario.grid.spacing_m
    nx = int(np.floor((hi[0] - lo[0]) / s + 1e-9)) + 1
    ny = int(np.floor((hi[1] - lo[1]) / s + 1e-9)) + 1
    xs = lo[0] + np.arange(nx) * s
    ys = lo[1] + np.arange(ny) * s
    bs_pos = np.asarray(scenario.bs.position)
    relay_pos = np.asarray(scenario.relay.position)
    points = []
    for y in ys:
        for x in xs:
            p2 = np.array([x, y])
            if any(point_in_polygon(p2, b.polygon) for b in scenario.buildings):
                continue
            p3 = np.array([x, y, scenario.grid.ue_height_m])
            if los_visible(p3, bs_pos, scenario) or los_visible(p3, relay_pos, scenario):
                points.append(p3)
    if not points:
        raise ScenarioError("no reachable UE grid point; scenario is degenerate")
    return np.asarray(points)


# ---------------------------------------------------------------------------
# Scenario file loading
# ---------------------------------------------------------------------------

def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ScenarioError(f"{where}: missing required field '{key}'")
    return mapping[key]


def _vec3(raw, where: str) -> Vec3:
    if not isinstance(raw, (list, tuple)) or len(raw) != 3:
        raise ScenarioError(f"{where} must be a [x, y, z] triple")
    return Vec3(*(float(v) for v in raw))


def _parse_relay(raw: dict) -> RelayPlacement:
    kind = _require(raw, "kind", "relay")
    position = _vec3(_require(raw, "position", "relay"), "relay.position")
    if kind == "ris":
        elements = raw.get("elements", {})
        return RISPlacement(
            position=position,
            boresight_az_deg=float(_require(raw, "boresight_az_deg", "relay")),
            boresight_el_deg=float(raw.get("boresight_el_deg", 0.0)),
            n_h=int(elements.get("mh", params.RIS_ELEMENTS[0])),
            n_v=int(elements.get("mv", params.RIS_ELEMENTS[1])),
            directivity_q=float(raw.get("directivity_q", params.RIS_DIRECTIVITY_Q)),
        )
    if kind == "ncr":
        az = _require(raw, "panel_az_deg", "relay")
        if not isinstance(az, (list, tuple)) or len(az) != 2:
            raise ScenarioError("relay.panel_az_deg must list the two panel azimuths")
        el = raw.get("panel_el_deg", [0.0, 0.0])
        panels = raw.get("panels", {})
        return NCRPlacement(
            position=position,
            panel_az_deg=(float(az[0]), float(az[1])),
            panel_el_deg=(float(el[0]), float(el[1])),
            n_h=int(panels.get("nh", params.NCR_PANEL[0])),
            n_v=int(panels.get("nv", params.NCR_PANEL[1])),
            amp_gain_db=float(raw.get("amp_gain_db", params.NCR_AMP_GAIN_DB)),
            max_e2e_gain_db=float(raw.get("max_e2e_gain_db", params.NCR_MAX_E2E_GAIN_DB)),
            noise_figure_db=float(raw.get("noise_figure_db", params.NCR_NOISE_FIGURE_DB)),
            min_panel_separation_deg=float(
                raw.get("min_panel_separation_deg", params.NCR_MIN_PANEL_SEPARATION_DEG)),
        )
    raise ScenarioError(f"relay.kind must be 'ris' or 'ncr', got {kind!r}")


def load_scenario(path) -> ScenarioMap:
    """Load and validate a scenario JSON file.

    Raises ScenarioError naming the offending field or building index.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)

    bounds = _require(raw, "bounds", "scenario")
    lo = tuple(float(v) for v in _require(bounds, "min", "bounds"))
    hi = tuple(float(v) for v in _require(bounds, "max", "bounds"))

    buildings = []
    for i, braw in enumerate(raw.get("buildings", [])):
        try:
            footprint = tuple((float(x), float(y)) for x, y in _require(braw, "footprint", f"buildings[{i}]"))
            buildings.append(Building(footprint=footprint, height=float(_require(braw, "height", f"buildings[{i}]"))))
        except ScenarioError as exc:
            raise ScenarioError(f"buildings[{i}]: {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"buildings[{i}]: malformed footprint or height ({exc})") from exc

    bs_raw = _require(raw, "bs", "scenario")
    array = bs_raw.get("array", {})
    bs = BSPlacement(
        position=_vec3(_require(bs_raw, "position", "bs"), "bs.position"),
        sector_azimuths_deg=tuple(float(a) for a in bs_raw.get("sector_azimuths", (0.0, 120.0, 240.0))),
        n_h=int(array.get("nh", params.BS_PANEL[0])),
        n_v=int(array.get("nv", params.BS_PANEL[1])),
        tx_power_dbm=float(bs_raw.get("tx_power_dbm", params.BS_TX_POWER_DBM)),
    )

    relay = _parse_relay(_require(raw, "relay", "scenario"))

    grid_raw = _require(raw, "grid", "scenario")
    grid = GridSpec(
        spacing_m=float(_require(grid_raw, "spacing", "grid")),
        ue_height_m=float(grid_raw.get("ue_height", params.UE_HEIGHT_M)),
    )

    return ScenarioMap(buildings=tuple(buildings), bounds_min=lo, bounds_max=hi,
                       bs=bs, relay=relay, grid=grid)
