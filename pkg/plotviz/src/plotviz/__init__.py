"""Figures from lazynewton benchmark CSV traces."""

from .render import (
    Curve,
    EmptyInput,
    PlotSpec,
    SchemaMismatch,
    load_curve,
    load_curves,
    render,
)

__version__ = "0.1.0"
