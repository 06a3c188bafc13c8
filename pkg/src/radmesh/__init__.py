"""radmesh: two-stage mmWave radar human mesh recovery with a synthetic simulator."""

__version__ = "0.1.0"
