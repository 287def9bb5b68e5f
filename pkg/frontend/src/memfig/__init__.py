"""Figure regeneration for cavity Raman memory sweep outputs."""

__version__ = "0.1.0"

from .render import FigureSpec, RenderError, load_sweep, render
