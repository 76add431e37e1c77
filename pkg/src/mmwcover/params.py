"""Default simulation parameters for the 28 GHz urban setup.

These are the values a run uses when the scenario file or the CLI does not
override them. Noise powers are always derived from bandwidth and noise
figure, never configured directly.
"""

import math

CARRIER_HZ = 28e9
BANDWIDTH_HZ = 200e6
BS_TX_POWER_DBM = 35.0

BS_PANEL = (16, 12)  # horizontal x vertical elements per sector
SECTOR_AZ_LIMIT_DEG = 60.0
SECTOR_EL_LIMIT_DEG = 30.0

NCR_PANEL = (12, 6)
NCR_AMP_GAIN_DB = 55.0
NCR_MAX_E2E_GAIN_DB = 92.0
NCR_NOISE_FIGURE_DB = 8.0
NCR_MIN_PANEL_SEPARATION_DEG = 120.0

RIS_ELEMENTS = (200, 200)
RIS_DIRECTIVITY_Q = 0.029

UE_NOISE_FIGURE_DB = 10.0
UE_HEIGHT_M = 1.5

BLOCKER_HEIGHT_M = 1.7
BLOCKER_WIDTH_M = 0.5
BLOCKER_DENSITY_PER_M2 = 4e-3
BLOCKER_SPEED_MPS = 15.0
BLOCKAGE_DURATION_S = 5.0

# Log-normal shadowing, LOS urban value; not part of the pinned defaults table.
SHADOWING_STD_DB = 4.0

THERMAL_NOISE_DBM_PER_HZ = -174.0


def noise_power_dbm(bandwidth_hz: float, noise_figure_db: float) -> float:
    """Thermal noise power over a bandwidth, including the receiver noise figure."""
    return THERMAL_NOISE_DBM_PER_HZ + 10.0 * math.log10(bandwidth_hz) + noise_figure_db


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(value: float) -> float:
    if value <= 0.0:
        return float("-inf")
    return 10.0 * math.log10(value)
