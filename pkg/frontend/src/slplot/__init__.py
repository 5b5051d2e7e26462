"""Percentile-band plotting for sidelink simulator aggregate CSVs."""

from .data import SchemaError, Series, SeriesPoint, load_series
from .figure import FigureSpec, SeriesStyle, render

__version__ = "0.1.0"

__all__ = [
    "FigureSpec",
    "SchemaError",
    "Series",
    "SeriesPoint",
    "SeriesStyle",
    "load_series",
    "render",
]
