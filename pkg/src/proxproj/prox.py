"""Proximal operators and masked projections.

A prox operator is any callable ``(point, alpha) -> point`` with alpha > 0;
everything here is a pure function of its inputs.
"""

import numpy as np

from .errors import FactorizationError

__all__ = [
    "shrink",
    "svt",
    "ball_project",
    "ObservationMask",
    "mask_project",
    "mask_project_perp",
]


def shrink(x, alpha):
    """Elementwise soft threshold: sgn(x) * max(|x| - alpha, 0)."""
    if alpha < 0:
        raise ValueError("shrink threshold must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - alpha, 0.0)


def svt(x, alpha):
    """Soft threshold the singular values of a matrix."""
    if alpha < 0:
        raise ValueError("svt threshold must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    try:
        u, s, vt = np.linalg.svd(x, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(
            f"SVD did not converge for {x.shape[0]}x{x.shape[1]} matrix"
        ) from exc
    return (u * np.maximum(s - alpha, 0.0)) @ vt


def ball_project(x, center, radius):
    """Euclidean projection onto the ball of given center and radius."""
    if radius < 0:
        raise ValueError("ball radius must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    d = x - center
    nrm = np.linalg.norm(d)
    if nrm <= radius:
        return x
    return center + d * (radius / nrm)


class ObservationMask:
    """Sorted, duplicate-free set of observed (row, col) index pairs."""

    def __init__(self, pairs):
        pairs = np.asarray(pairs, dtype=np.intp)
        if pairs.size == 0:
            pairs = pairs.reshape(0, 2)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError(f"mask pairs must have shape (k, 2), got {pairs.shape}")
        if pairs.size and pairs.min() < 0:
            raise ValueError("mask indices must be nonnegative")
        order = np.lexsort((pairs[:, 1], pairs[:, 0]))
        pairs = pairs[order]
        if pairs.shape[0] > 1:
            dup = np.all(pairs[1:] == pairs[:-1], axis=1)
            if dup.any():
                pairs = np.concatenate([pairs[:1], pairs[1:][~dup]])
        self._rows = pairs[:, 0].copy()
        self._cols = pairs[:, 1].copy()
        self._rows.flags.writeable = False
        self._cols.flags.writeable = False

    @classmethod
    def from_bool(cls, keep):
        """Build from a boolean matrix marking observed entries."""
        keep = np.asarray(keep, dtype=bool)
        r, c = np.nonzero(keep)
        return cls(np.column_stack([r, c]))

    @property
    def rows(self):
        return self._rows

    @property
    def cols(self):
        return self._cols

    def __len__(self):
        return self._rows.shape[0]

    def check_shape(self, shape):
        n1, n2 = shape
        if len(self) and (self._rows.max() >= n1 or self._cols.max() >= n2):
            raise ValueError(
                f"mask index ({self._rows.max()}, {self._cols.max()}) out of "
                f"range for shape {shape}"
            )

    def to_bool(self, shape):
        self.check_shape(shape)
        keep = np.zeros(shape, dtype=bool)
        keep[self._rows, self._cols] = True
        return keep


def mask_project(x, omega):
    """Keep entries on the mask, zero elsewhere."""
    x = np.asarray(x, dtype=np.float64)
    omega.check_shape(x.shape)
    out = np.zeros_like(x)
    out[omega.rows, omega.cols] = x[omega.rows, omega.cols]
    return out


def mask_project_perp(x, omega):
    """Zero entries on the mask, keep the rest."""
    x = np.asarray(x, dtype=np.float64)
    omega.check_shape(x.shape)
    out = x.copy()
    out[omega.rows, omega.cols] = 0.0
    return out
