"""Grid geometry and the data containers shared by every stage of the pipeline.

Pixels are linearized row-major over the spatial axes (axis 0 slowest), so
pixel ``i`` of a ``side**d`` grid has axis indices ``np.unravel_index(i,
(side,) * d)``. All containers are immutable: their arrays are made read-only
on construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ClassOutOfRange,
    GeometryMismatch,
    IndexOutOfRange,
    InvalidArguments,
    NonFiniteValue,
    NonPowerOfTwoSide,
    ShapeMismatch,
)


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GridGeometry:
    """A ``side**d`` pixel grid covering the unit hypercube ``[0, 1]**d``."""

    d: int
    side: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise InvalidArguments(f"spatial dimension must be an integer >= 1, got {self.d}")
        if int(self.side) != self.side or not is_power_of_two(int(self.side)):
            raise NonPowerOfTwoSide(
                f"side must be a power of two (1, 2, 4, ...), got {self.side}"
            )
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "side", int(self.side))

    @property
    def N(self) -> int:
        return self.side ** self.d

    @property
    def depth(self) -> int:
        """Number of dyadic splits from the whole grid down to single pixels."""
        return self.side.bit_length() - 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.d

    @classmethod
    def from_pixel_count(cls, N: int, d: int) -> "GridGeometry":
        side = round(N ** (1.0 / d))
        for s in (side - 1, side, side + 1):
            if s >= 1 and s ** d == N:
                return cls(d, s)
        raise ShapeMismatch(f"{N} pixels do not form a {d}-dimensional square grid")

    def axis_indices(self, i: int) -> tuple[int, ...]:
        if not 0 <= i < self.N:
            raise IndexOutOfRange(f"pixel index {i} outside [0, {self.N})")
        return tuple(int(j) for j in np.unravel_index(i, self.shape))

    def centers(self) -> np.ndarray:
        """All pixel centers as an ``N x d`` array in linearization order."""
        axes = np.indices(self.shape).reshape(self.d, -1).T
        return (axes + 0.5) / self.side


def pixel_center(geom: GridGeometry, i: int) -> tuple[float, ...]:
    """Center of pixel ``i`` in the regular partition of ``[0, 1]**d``."""
    return tuple((j + 0.5) / geom.side for j in geom.axis_indices(i))


def check_same_geometry(*items) -> GridGeometry:
    geom = items[0].geom
    for other in items[1:]:
        if other.geom != geom:
            raise GeometryMismatch(f"geometry {other.geom} differs from {geom}")
    return geom


def validate_cube(cube) -> None:
    """Raise if ``cube`` violates any HyperCube invariant.

    Works on anything exposing ``geom`` (with ``d`` and ``side``), ``p`` and
    ``data``, so it can vet freshly parsed input before a HyperCube is built.
    """
    side = cube.geom.side
    if not is_power_of_two(int(side)) or int(side) != side:
        raise NonPowerOfTwoSide(f"side must be a power of two, got {side}")
    N = int(side) ** int(cube.geom.d)
    if cube.p < 1:
        raise ShapeMismatch(f"band count must be >= 1, got {cube.p}")
    data = np.asarray(cube.data)
    if data.size != N * cube.p:
        raise ShapeMismatch(f"expected {N} x {cube.p} = {N * cube.p} values, got {data.size}")
    if not np.all(np.isfinite(data)):
        raise NonFiniteValue("cube contains NaN or infinite values")


@dataclass(frozen=True)
class HyperCube:
    """``N`` pixels with ``p`` spectral bands each, stored pixel-major."""

    geom: GridGeometry
    p: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        validate_cube(self)
        data = np.array(self.data, dtype=np.float64).reshape(self.geom.N, self.p)
        object.__setattr__(self, "data", _frozen(data))


@dataclass(frozen=True)
class LabelMap:
    geom: GridGeometry
    K: int
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.K < 2:
            raise InvalidArguments(f"need at least 2 classes, got K={self.K}")
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        if labels.size != self.geom.N:
            raise ShapeMismatch(f"expected {self.geom.N} labels, got {labels.size}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.K):
            raise ClassOutOfRange(f"labels must lie in 0..{self.K - 1}")
        object.__setattr__(self, "labels", _frozen(labels))


@dataclass(frozen=True)
class WeightField:
    """Per-pixel mixture weights; row ``i`` is a point of the K-simplex.

    For two classes column 0 holds the weight of class 0 (``pi_i``).
    """

    geom: GridGeometry
    K: int
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.K < 2:
            raise InvalidArguments(f"need at least 2 classes, got K={self.K}")
        w = np.array(self.weights, dtype=np.float64)
        if w.shape != (self.geom.N, self.K):
            raise ShapeMismatch(f"expected weights of shape {(self.geom.N, self.K)}, got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise NonFiniteValue("weights contain NaN or infinite values")
        if np.any(w < -1e-12) or np.any(w > 1 + 1e-12):
            raise InvalidArguments("weights must lie in [0, 1]")
        if np.any(np.abs(w.sum(axis=1) - 1.0) > 1e-9):
            raise InvalidArguments("weight rows must sum to 1")
        object.__setattr__(self, "weights", _frozen(np.clip(w, 0.0, 1.0)))

    @classmethod
    def from_pi(cls, geom: GridGeometry, pi) -> "WeightField":
        """Two-class field from the class-0 weights ``pi``."""
        pi = np.asarray(pi, dtype=np.float64).reshape(-1)
        return cls(geom, 2, np.column_stack([pi, 1.0 - pi]))

    @property
    def pi(self) -> np.ndarray:
        return self.weights[:, 0]
