"""Plug-and-play ISTA/ADMM with linear denoisers and contraction analysis."""

__version__ = "0.1.0"
