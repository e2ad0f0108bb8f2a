"""Simulation and recovery toolkit for low-bit quantized distributed MIMO radar.

The heavy lifting lives in the compiled extension; this package re-exports
its full surface. See the README for the signal model and solver details.
"""

from ._qmimo import *  # noqa: F401,F403
from ._qmimo import __version__  # noqa: F401
