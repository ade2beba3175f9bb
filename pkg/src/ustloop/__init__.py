"""Uniform spanning tree loops in lattice annuli: sampling, determinants and continuum limits."""
from __future__ import annotations

__version__ = "0.1.0"
