"""fvdplot: figure regeneration for fvdsim simulation outputs."""

__version__ = "0.1.0"

from .figures import RENDERERS, render
from .io import PlotInputError

__all__ = ["RENDERERS", "render", "PlotInputError", "__version__"]
