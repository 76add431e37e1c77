import json

import pytest

from mmwcover import scene


@pytest.fixture
def empty_map():
    """Empty 200 m square with BS and a surface relay parked out of the way."""
    return scene.ScenarioMap(
        buildings=(),
        bounds_min=(0.0, 0.0), bounds_max=(200.0, 200.0),
        bs=scene.BSPlacement(position=scene.Vec3(100.0, 100.0, 6.0)),
        relay=scene.RISPlacement(position=scene.Vec3(195.0, 195.0, 4.0),
                                 boresight_az_deg=225.0, n_h=8, n_v=8),
        grid=scene.GridSpec(spacing_m=10.0))


def make_map(buildings=(), bounds=((0, 0), (100, 100)), bs_pos=(5, 50, 6),
             relay_pos=(95, 50, 4), relay_az=180.0, spacing=10.0):
    return scene.ScenarioMap(
        buildings=tuple(scene.Building(footprint=tuple(map(tuple, fp)), height=h)
                        for fp, h in buildings),
        bounds_min=tuple(bounds[0]), bounds_max=tuple(bounds[1]),
        bs=scene.BSPlacement(position=scene.Vec3(*bs_pos)),
        relay=scene.RISPlacement(position=scene.Vec3(*relay_pos),
                                 boresight_az_deg=relay_az, n_h=8, n_v=8),
        grid=scene.GridSpec(spacing_m=spacing))


@pytest.fixture
def box_map():
    """One 20 m tall box in the middle of a 100 m square."""
    return make_map(buildings=[([(40, 40), (60, 40), (60, 60), (40, 60)], 20.0)])


def write_scenario(path, **overrides):
    doc = {
        "bounds": {"min": [0, 0], "max": [100, 100]},
        "buildings": [],
        "bs": {"position": [5, 50, 6]},
        "relay": {"kind": "ris", "position": [95, 50, 4], "boresight_az_deg": 180,
                  "elements": {"mh": 8, "mv": 8}},
        "grid": {"spacing": 10},
    }
    doc.update(overrides)
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path
