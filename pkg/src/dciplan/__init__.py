"""Optical link planning for data-center interconnects."""

from importlib.resources import files

__version__ = "0.1.0"


def example_scenario_path():
    """Path of the bundled 80 km single-span example scenario."""
    return files(__package__) / "data" / "paper-80km.json"
