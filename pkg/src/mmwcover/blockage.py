"""Static and dynamic link blockage.

Static blockage is deterministic and delegates to the scene geometry. Dynamic
blockage from moving obstacles (people, vehicles) is stochastic: a per-link
blockage probability from blocker density, speed and dwell time, plus a
knife-edge diffraction loss for the blocked state, following the TR 38.901
model-B screen with four edge terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import params, scene


@dataclass(frozen=True)
class BlockageParams:
    density_per_m2: float = params.BLOCKER_DENSITY_PER_M2
    speed_mps: float = params.BLOCKER_SPEED_MPS
    duration_s: float = params.BLOCKAGE_DURATION_S
    blocker_height_m: float = params.BLOCKER_HEIGHT_M
    blocker_width_m: float = params.BLOCKER_WIDTH_M
    # Where along the link the representative blocker stands, as a fraction of
    # the 2D distance from the transmitter.
    blocker_position_fraction: float = 0.5
    # Audit switch: evaluate the height ratio as printed in some references,
    # (z_B - z_T)/(z_T - z_R), instead of the corrected (z_B - z_R)/(z_T - z_R).
    use_printed_height_ratio: bool = False

    def __post_init__(self):
        for name in ("density_per_m2", "speed_mps", "duration_s",
                     "blocker_height_m", "blocker_width_m"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.blocker_position_fraction < 1.0:
            raise ValueError("blocker_position_fraction must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class LinkBlockageState:
    static_blocked: bool
    dynamic_block_prob: float
    blocked_loss_db: float

    def __post_init__(self):
        if not 0.0 <= self.dynamic_block_prob <= 1.0:
            raise ValueError("blockage probability must lie in [0, 1]")
        if self.blocked_loss_db < 0.0:
            raise ValueError("blocked-state loss must be non-negative")


def dynamic_block_probability(distance_m: float, z_tx: float, z_rx: float,
                              blockage: BlockageParams) -> float:
    """Probability that a link of the given length is cut by a moving blocker.

    P = r u C / (1 + r u C) with dwell time u and encounter rate
    C = (2/pi) * density * speed * (z_B - z_rx)/(z_tx - z_rx). The height
    ratio is clipped to [0, 1]: blockers below both endpoints never block,
    blockers above both always can.
    """
    if distance_m < 0:
        raise ValueError("link distance must be non-negative")
    if z_tx == z_rx:
        raise ValueError("transmitter and receiver heights must differ")
    if blockage.use_printed_height_ratio:
        ratio = (blockage.blocker_height_m - z_tx) / (z_tx - z_rx)
    else:
        ratio = (blockage.blocker_height_m - z_rx) / (z_tx - z_rx)
        ratio = min(max(ratio, 0.0), 1.0)
    rate = (2.0 / math.pi) * blockage.density_per_m2 * blockage.speed_mps * ratio
    x = distance_m * blockage.duration_s * rate
    return x / (1.0 + x)


def _edge_term(shadowed_side: bool, d1: float, d2: float, r: float,
               wavelength: float) -> float:
    """One knife-edge term F = atan(+/- (pi/2) sqrt((pi/lambda)(D1+D2-r))) / pi."""
    excess = max(d1 + d2 - r, 0.0)
    mag = math.atan((math.pi / 2.0) * math.sqrt((math.pi / wavelength) * excess)) / math.pi
    return mag if shadowed_side else -mag


def knife_edge_loss(tx, rx, blocker_xy, blocker_height_m: float,
                    blocker_width_m: float, wavelength: float) -> float:
    """Diffraction loss in dB of a rectangular screen standing on the ground.

    The screen is perpendicular to the link, centred at `blocker_xy`. Height
    terms are evaluated in the vertical plane through the link, width terms in
    the horizontal plane. When the path clears the screen in one dimension the
    nearer edge term flips sign, so the loss falls to zero away from the ray.

    Raises ValueError when the screen does not stand strictly between the
    endpoints.
    """
    t3 = np.asarray(tx, dtype=float)
    r3 = np.asarray(rx, dtype=float)
    b2 = np.asarray(blocker_xy, dtype=float)
    axis = r3[:2] - t3[:2]
    span = float(np.linalg.norm(axis))
    if span <= 0:
        raise ValueError("link has no horizontal extent; screen geometry undefined")
    along = float((b2 - t3[:2]) @ axis) / span
    if not 0.0 < along < span:
        raise ValueError("blocker must stand strictly between the endpoints")
    rel = b2 - t3[:2]
    lateral = float(axis[0] * rel[1] - axis[1] * rel[0]) / span

    d1h, d2h = along, span - along
    z_tx, z_rx = float(t3[2]), float(r3[2])

    # vertical plane: edges at the screen top and at the ground
    r_v = math.hypot(span, z_tx - z_rx)
    z_path = z_tx + (z_rx - z_tx) * along / span
    shadowed_v = 0.0 <= z_path <= blocker_height_m
    f_terms_v = []
    for edge_z in (blocker_height_m, 0.0):
        d1 = math.hypot(d1h, z_tx - edge_z)
        d2 = math.hypot(d2h, z_rx - edge_z)
        if shadowed_v:
            side = True
        else:
            # sign flips on the edge the path passes by
            passes_top = z_path > blocker_height_m
            side = not (passes_top == (edge_z == blocker_height_m))
        f_terms_v.append(_edge_term(side, d1, d2, r_v, wavelength))

    # horizontal plane: edges at the two lateral ends of the screen
    half_w = blocker_width_m / 2.0
    e_left, e_right = lateral - half_w, lateral + half_w
    shadowed_h = e_left <= 0.0 <= e_right
    f_terms_h = []
    for edge_off in (e_left, e_right):
        d1 = math.hypot(d1h, edge_off)
        d2 = math.hypot(d2h, edge_off)
        if shadowed_h:
            side = True
        else:
            passes_left = e_left > 0.0  # path is on the left of both edges
            side = not (passes_left == (edge_off == e_left))
        f_terms_h.append(_edge_term(side, d1, d2, span, wavelength))

    product = sum(f_terms_v) * sum(f_terms_h)
    if product >= 1.0:
        raise ValueError("degenerate screen geometry")
    return max(0.0, -20.0 * math.log10(1.0 - product))


def link_blockage_state(a, b, scenario: scene.ScenarioMap,
                        blockage: BlockageParams, wavelength: float) -> LinkBlockageState:
    """Blockage summary for the link from transmitter `a` to receiver `b`.

    Static blockage comes from the building map; the dynamic probability uses
    the 3D endpoint distance; the blocked-state loss is the knife-edge loss of
    one representative blocker standing on the link at the configured fraction.
    """
    a3 = np.asarray(a, dtype=float)
    b3 = np.asarray(b, dtype=float)
    static_blocked = not scene.los_visible(a3, b3, scenario)
    distance = float(np.linalg.norm(b3 - a3))
    prob = dynamic_block_probability(distance, a3[2], b3[2], blockage)
    span = float(np.linalg.norm(b3[:2] - a3[:2]))
    if span <= 0:
        loss_db = 0.0  # vertical link: the ground-level screen model does not apply
    else:
        blocker_xy = a3[:2] + blockage.blocker_position_fraction * (b3[:2] - a3[:2])
        loss_db = knife_edge_loss(a3, b3, blocker_xy, blockage.blocker_height_m,
                                  blockage.blocker_width_m, wavelength)
    return LinkBlockageState(static_blocked=static_blocked,
                             dynamic_block_prob=prob,
                             blocked_loss_db=loss_db)
