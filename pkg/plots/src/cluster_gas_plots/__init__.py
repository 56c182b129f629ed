"""Figure rendering for cluster-gas CSV/JSON artifacts.

Consumes only the file formats of the simulation toolkit (it does not
import it): distribution CSVs, ideal solution JSONs, sweep CSVs.
"""

from .formats import SchemaError
from .render import FigureSpec, load_spec, render

__version__ = "0.1.0"

__all__ = ["FigureSpec", "SchemaError", "load_spec", "render", "__version__"]
