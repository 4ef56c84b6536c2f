"""Information-bottleneck collective variables with temperature-steerable
normalizing-flow generation: simulators, model, training, and evaluation."""

__version__ = "0.1.0"

from .backend import backend_name, numba_enabled

__all__ = ["__version__", "backend_name", "numba_enabled"]
