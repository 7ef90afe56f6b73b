"""Application solvers: basis pursuit, low-rank + sparse recovery,
earth mover's distance, and stable matrix completion."""

from . import bp, emd, smc, spcp

__all__ = ["bp", "emd", "smc", "spcp"]
