"""Dynamic simulation and uncertainty analysis of pumped liquid-hydrogen ship loading."""

__version__ = "0.1.0"
