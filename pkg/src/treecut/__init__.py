"""Random tree cutting, Aldous-Broder dynamics and discrete fragmentation."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

from .errors import TreeCutError
from .rng import RngStream
from .trees import OrderedForest, RootedTree, dumps_forest, dumps_tree, loads_forest, loads_tree

__all__ = [
    "TreeCutError",
    "RngStream",
    "RootedTree",
    "OrderedForest",
    "dumps_tree",
    "loads_tree",
    "dumps_forest",
    "loads_forest",
]
