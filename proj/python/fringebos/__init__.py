"""Carrier fringe-pattern simulation, normalization and phase demodulation.

Images are 2D numpy arrays indexed [row, column]; x is the column axis.
"""

from ._core import *  # noqa: F401,F403
from ._core import FringeError

__all__ = [name for name in dir() if not name.startswith("_")]
