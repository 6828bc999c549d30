"""Stable mixed-sensitivity H-infinity design for SISO time-delay plants.

The toolbox classifies a delay plant, builds its inner-outer factorization,
runs Skew-Toeplitz suboptimal synthesis, searches for a stable controller
(Nyquist-certified or Nevanlinna-Pick based, depending on whether the
central controller has infinitely or finitely many unstable poles), and
verifies the certified closed loop.
"""

from . import analysis, cli, plantmodel, quasipoly, stabfin, stabinf, synthesis
from .errors import DelayHinfError

__version__ = "0.1.0"

__all__ = [
    "analysis",
    "cli",
    "plantmodel",
    "quasipoly",
    "stabfin",
    "stabinf",
    "synthesis",
    "DelayHinfError",
    "__version__",
]
