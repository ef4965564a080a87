"""Square-lattice geometry: neighbor lookup and the peripheral ring.

Nodes are addressed as ``(row, col)`` and flattened row-major as
``row * cols + col``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np


class Boundary(str, Enum):
    PERIODIC = "periodic"
    OPEN = "open"


@dataclass(frozen=True)
class LatticeSpec:
    rows: int = 40
    cols: int = 40
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        for name in ("rows", "cols"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ValueError(f"{name} must be an integer, got {value!r}")
            if value < 2:
                raise ValueError(f"{name} must be at least 2, got {value}")

    @property
    def size(self) -> int:
        return self.rows * self.cols

    def index(self, node: tuple[int, int]) -> int:
        row, col = _check_node(self, node)
        return row * self.cols + col

    def coords(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.size:
            raise ValueError(f"flat index {index} outside lattice of {self.size} nodes")
        return divmod(int(index), self.cols)

    @cached_property
    def neighbor_table(self) -> np.ndarray:
        """(size, 4) int64 array of flat neighbor indices, padded with -1."""
        table = np.full((self.size, 4), -1, dtype=np.int64)
        for idx in range(self.size):
            nbrs = neighbors(self, divmod(idx, self.cols))
            table[idx, : len(nbrs)] = [r * self.cols + c for r, c in nbrs]
        table.setflags(write=False)
        return table


def _check_node(spec: LatticeSpec, node) -> tuple[int, int]:
    row, col = node
    if not (0 <= row < spec.rows and 0 <= col < spec.cols):
        raise ValueError(f"node {tuple(node)} outside {spec.rows}x{spec.cols} lattice")
    return int(row), int(col)


def neighbors(spec: LatticeSpec, node: tuple[int, int]) -> list[tuple[int, int]]:
    """Von Neumann neighborhood of `node`, ordered up, down, left, right.

    Periodic lattices wrap indices; open lattices drop off-lattice
    positions. The result never contains `node` itself or duplicates
    (a periodic 2-wide axis would otherwise list the same node twice).
    """
    row, col = _check_node(spec, node)
    candidates = [(row - 1, col), (row + 1, col), (row, col - 1), (row, col + 1)]
    out: list[tuple[int, int]] = []
    for r, c in candidates:
        if spec.boundary is Boundary.PERIODIC:
            r, c = r % spec.rows, c % spec.cols
        elif not (0 <= r < spec.rows and 0 <= c < spec.cols):
            continue
        if (r, c) != (row, col) and (r, c) not in out:
            out.append((r, c))
    return out


def peripheral_nodes(spec: LatticeSpec) -> set[tuple[int, int]]:
    """Outer ring of the lattice, independent of the boundary mode."""
    return set(boundary_walk(spec))


def boundary_walk(spec: LatticeSpec) -> list[tuple[int, int]]:
    """Peripheral nodes in clockwise order starting at (0, 0)."""
    r1, c1 = spec.rows - 1, spec.cols - 1
    walk = [(0, c) for c in range(spec.cols)]
    walk += [(r, c1) for r in range(1, spec.rows)]
    walk += [(r1, c) for c in range(c1 - 1, -1, -1)]
    walk += [(r, 0) for r in range(r1 - 1, 0, -1)]
    return walk
