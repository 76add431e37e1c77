"""Access to the bundled sample scenarios."""

from importlib import resources
from pathlib import Path

BUNDLED = ("corridor_ncr", "corridor_ris", "open_square_ncr", "open_square_ris")


def scenario_path(name: str) -> Path:
    """Filesystem path of a bundled scenario JSON by short name."""
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled scenario {name!r}; available: {BUNDLED}")
    with resources.as_file(resources.files("mmwcover") / "data" / f"{name}.json") as path:
        return Path(path)
