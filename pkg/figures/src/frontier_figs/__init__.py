"""Publication-style figures from frontier-lab CSV outputs.

This package reads only the documented CSV schemas; it has no dependency on
the simulation library, so the experiment suite runs without it and vice
versa.
"""

from .render import FigureSpec, RenderInfo, SchemaError, render

__version__ = "0.1.0"

__all__ = ["FigureSpec", "RenderInfo", "SchemaError", "render"]
