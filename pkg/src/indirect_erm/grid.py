"""Uniform quadrature grids.

All integrals in the package are trapezoid-rule quadratures on uniform
grids whose point count is a power of two, so that grid spacing pairs
exactly with discrete Fourier transforms and discrete convolutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

__all__ = ["Grid", "trapezoid_weights", "padded_axis"]


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def trapezoid_weights(n_points: int, spacing: float) -> np.ndarray:
    """Trapezoid quadrature weights for a uniform grid of ``n_points`` nodes."""
    w = np.full(n_points, spacing, dtype=float)
    w[0] = w[-1] = spacing / 2.0
    return w


@dataclass(frozen=True)
class Grid:
    """Uniform boxed grid with trapezoid quadrature.

    Nodes along each axis include both endpoints:
    ``linspace(lower, upper, points_per_dim)``.

    Parameters
    ----------
    lower, upper : tuple of float
        Box bounds per dimension; ``upper > lower`` componentwise.
    points_per_dim : int
        Number of nodes per axis; at least 16 and a power of two.
    """

    lower: tuple[float, ...] = (0.0,)
    upper: tuple[float, ...] = (1.0,)
    points_per_dim: int = 1024

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if len(lower) != len(upper):
            raise ConfigurationError("lower/upper dimension mismatch")
        if not all(u > l for l, u in zip(lower, upper)):
            raise ConfigurationError("upper must exceed lower componentwise")
        if self.points_per_dim < 16 or not _is_power_of_two(self.points_per_dim):
            raise ConfigurationError(
                f"points_per_dim must be a power of two >= 16, got {self.points_per_dim}"
            )

    @property
    def ndim(self) -> int:
        return len(self.lower)

    @property
    def spacing(self) -> tuple[float, ...]:
        n = self.points_per_dim
        return tuple((u - l) / (n - 1) for l, u in zip(self.lower, self.upper))

    @property
    def volume(self) -> float:
        return float(np.prod([u - l for l, u in zip(self.lower, self.upper)]))

    def axis(self, dim: int = 0) -> np.ndarray:
        """Node coordinates along one axis (endpoints included)."""
        return np.linspace(self.lower[dim], self.upper[dim], self.points_per_dim)

    def weights(self, dim: int = 0) -> np.ndarray:
        """Trapezoid weights along one axis; they sum to the axis length."""
        return trapezoid_weights(self.points_per_dim, self.spacing[dim])

    def integrate(self, values: np.ndarray, dim: int = 0) -> float:
        """Trapezoid integral of node values along one axis."""
        return float(np.dot(self.weights(dim), values))


def padded_axis(grid: Grid, margin: float, dim: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Extend one grid axis by ``margin`` on each side at the same spacing.

    Returns ``(nodes, weights)`` for the extended axis. The original nodes
    are a contiguous subset, so tables on the padded axis restrict exactly
    to the domain grid. Used to absorb contaminated observations that fall
    outside the domain.
    """
    h = grid.spacing[dim]
    n_pad = int(math.ceil(max(margin, 0.0) / h))
    n_total = grid.points_per_dim + 2 * n_pad
    lo = grid.lower[dim] - n_pad * h
    nodes = lo + h * np.arange(n_total)
    return nodes, trapezoid_weights(n_total, h)
