"""Spectral-spatial hyperspectral classification with extreme learning machines and loopy BP."""

__version__ = "0.1.0"
