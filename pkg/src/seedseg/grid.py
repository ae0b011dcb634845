"""Node lattice over [0, L1] x [0, L2] and scalar fields living on it.

The grid stores nodes (i, j) for i = 0..N1, j = 0..N2 (boundary included),
so every field has (N1+1)*(N2+1) values.  Fields are kept flat in row-major
order with i fastest; ``flatten`` defines the node <-> flat index mapping
shared by the assembler and the solvers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ShapeError(ValueError):
    """Two fields that must share a grid do not."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform lattice geometry: domain edge lengths and cell counts."""

    L1: float
    L2: float
    N1: int
    N2: int

    def __post_init__(self):
        if self.N1 < 2 or self.N2 < 2:
            raise ValueError("need N1 >= 2 and N2 >= 2 for a nonempty interior")
        if self.L1 <= 0 or self.L2 <= 0:
            raise ValueError("domain edge lengths must be positive")

    @property
    def h1(self) -> float:
        return self.L1 / self.N1

    @property
    def h2(self) -> float:
        return self.L2 / self.N2

    @property
    def cell_volume(self) -> float:
        return self.h1 * self.h2

    @property
    def num_nodes(self) -> int:
        return (self.N1 + 1) * (self.N2 + 1)

    @property
    def node_shape(self) -> tuple[int, int]:
        """(rows, cols) = (N2+1, N1+1) for reshaping flat fields to [j, i]."""
        return (self.N2 + 1, self.N1 + 1)


def flatten(i: int, j: int, spec: GridSpec) -> int:
    """Map node (i, j) to its flat index j*(N1+1) + i.

    Row-major with i fastest; a bijection onto 0..num_nodes-1.  The stride is
    N1+1 (number of nodes per row), which makes the map injective over the
    closed grid.
    """
    if not (0 <= i <= spec.N1 and 0 <= j <= spec.N2):
        raise IndexError(f"node ({i}, {j}) outside grid {spec.N1}x{spec.N2}")
    return j * (spec.N1 + 1) + i


def unflatten(index: int, spec: GridSpec) -> tuple[int, int]:
    """Inverse of :func:`flatten`."""
    if not (0 <= index < spec.num_nodes):
        raise IndexError(f"flat index {index} outside 0..{spec.num_nodes - 1}")
    return index % (spec.N1 + 1), index // (spec.N1 + 1)


def node_position(i: int, j: int, spec: GridSpec) -> tuple[float, float]:
    """Physical coordinates (i*h1, j*h2) of a node."""
    if not (0 <= i <= spec.N1 and 0 <= j <= spec.N2):
        raise IndexError(f"node ({i}, {j}) outside grid {spec.N1}x{spec.N2}")
    return i * spec.h1, j * spec.h2


@dataclass(frozen=True)
class GridField:
    """A scalar value per node, stored flat (see :func:`flatten`)."""

    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.shape != (self.spec.num_nodes,):
            raise ShapeError(
                f"field has {vals.shape} values, grid wants ({self.spec.num_nodes},)"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_grid(cls, spec: GridSpec, grid_values: np.ndarray) -> "GridField":
        """Build from a (N2+1, N1+1) array indexed [j, i]."""
        return cls(spec, np.asarray(grid_values, dtype=np.float64).reshape(-1))

    @classmethod
    def constant(cls, spec: GridSpec, value: float) -> "GridField":
        return cls(spec, np.full(spec.num_nodes, value, dtype=np.float64))

    @classmethod
    def from_function(cls, spec: GridSpec, fn) -> "GridField":
        """Evaluate fn(x1, x2) at every node; fn must broadcast over arrays."""
        x1, x2 = node_coordinates(spec)
        return cls.from_grid(spec, fn(x1, x2))

    def as_grid(self) -> np.ndarray:
        """Read-only (N2+1, N1+1) view indexed [j, i]."""
        return self.values.reshape(self.spec.node_shape)

    def at(self, i: int, j: int) -> float:
        return float(self.values[flatten(i, j, self.spec)])


def node_coordinates(spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Meshgrid of node positions, shaped (N2+1, N1+1) and indexed [j, i]."""
    x1 = np.arange(spec.N1 + 1) * spec.h1
    x2 = np.arange(spec.N2 + 1) * spec.h2
    return np.meshgrid(x1, x2)


def max_abs_diff(a: GridField, b: GridField) -> float:
    """Infinity norm of the pointwise difference of two fields."""
    if a.spec != b.spec:
        raise ShapeError("fields live on different grids")
    return float(np.max(np.abs(a.values - b.values)))
