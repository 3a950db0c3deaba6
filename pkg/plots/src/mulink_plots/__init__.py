"""Deterministic figure rendering for downlink simulation CSV output."""

from .io import InputError, Record, load_rows, sample_dir
from .render import render
from .spec import FigureSpec, figure_specs, preset_names, spec_for

__version__ = "0.1.0"

__all__ = [
    "FigureSpec",
    "InputError",
    "Record",
    "figure_specs",
    "load_rows",
    "preset_names",
    "render",
    "sample_dir",
    "spec_for",
]
