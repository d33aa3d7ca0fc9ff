"""Bundled fixtures: relation specs, small networks and input boxes."""

from pathlib import Path

BUNDLED = (
    "tanh.json",
    "sat.json",
    "one_neuron.json",
    "tied_outputs.json",
    "tiny.nnet",
    "unit_box_1d.json",
)


def bundled_path(name: str) -> Path:
    """Filesystem path of a bundled fixture, e.g. ``bundled_path('sat.json')``."""
    if name not in BUNDLED:
        raise FileNotFoundError(f"No bundled fixture '{name}'. Available: {BUNDLED}")
    return Path(__file__).parent / name
