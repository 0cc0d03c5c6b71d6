"""Object-goal navigation on occupancy grids with multi-expert frontier selection."""

__version__ = "0.1.0"
