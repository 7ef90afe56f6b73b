"""Basis pursuit: min ||x||_1 subject to A x = b.

The equality constraint keeps every iterate on the affine set through a
single cached factorization of A A^T; the prox step is the soft threshold.
"""

import numpy as np

from ..engine import run_pp_vector
from ..metrics import bp_objective
from ..projection import ConstraintSpec
from ..prox import shrink


def bp_spec(p):
    """Constraint spec with the A A^T factorization cached for reuse."""
    return ConstraintSpec(p.a, p.b, 0.0, cache_svd=True, cache_spd=True)


def run_bp(p, cfg, spec=None):
    """Solve a basis pursuit problem; returns (IterateLog, x).

    Raises IllPosedError through the spec construction when A is rank
    deficient.  Iterates start from z = 0.
    """
    if spec is None:
        spec = bp_spec(p)
    z0 = np.zeros(p.n)
    return run_pp_vector(spec, shrink, bp_objective, z0, cfg)
