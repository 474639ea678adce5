"""Motion planning for a sphere that rolls and spins along a straight line."""

__version__ = "0.1.0"
