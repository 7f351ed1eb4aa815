"""Null Lagrangians, quasiconvexity checks and distortion-stability experiments on grids."""

from ._qcstab import *  # noqa: F401,F403
from ._qcstab import Error, Grid, GridMapping, InstancePair, Integrand, NullLagrangian

__all__ = [name for name in dir() if not name.startswith("_")]
