"""Python surface of the FigureNet laboratory."""

try:
    from ._fignet import *  # noqa: F401,F403 (installed layout)
except ImportError:
    from _fignet import *  # noqa: F401,F403 (build-tree layout via PYTHONPATH)

__all__ = [name for name in dir() if not name.startswith("_")]
