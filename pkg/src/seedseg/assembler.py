"""Per-time-step assembly of the pentadiagonal system.

One semi-implicit step of the edge-stopped curvature flow solves, for the
unknown field u at the new time level,

    center * u_ij + A_E u_i+1j + A_W u_i-1j + A_N u_ij+1 + A_S u_ij-1 = u_prev_ij

on interior nodes, with A_dir = -tau * Q_cell * g0_edge / (h^2 * Q_edge) and
center = 1 - (A_E + A_W + A_N + A_S), plus Neumann rows u_boundary - u_inward
= 0 on the domain boundary.  The fluxes, corner averaging and Q terms follow
the complementary finite-volume construction; Q is the Tichonov-regularized
gradient magnitude sqrt(eps^2 + |grad u|^2) frozen at the previous time level.

Note on the diagonal: taking center = 1 + sum of the (negative) neighbor
coefficients would destroy diagonal dominance and contradicts the flux
derivation; the subtracted form used here is what the derivation yields.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from io import StringIO

import numpy as np

from .edgemap import EdgeMap
from .grid import GridField, GridSpec, ShapeError

_DIRECTIONS = ("east", "west", "north", "south")


@dataclass(frozen=True)
class PentaSystem:
    """Five-band system over the closed grid, flat arrays of length num_nodes.

    east/west/north/south hold the coefficient on the neighbor at i+1, i-1,
    j+1, j-1 respectively (zero where the stencil has no entry).  Boundary
    rows are {center=1, inward neighbor=-1, rhs=0}; corners use the
    horizontal (i-direction) condition.
    """

    spec: GridSpec
    center: np.ndarray = field(repr=False)
    east: np.ndarray = field(repr=False)
    west: np.ndarray = field(repr=False)
    north: np.ndarray = field(repr=False)
    south: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)

    def matvec(self, u: np.ndarray) -> np.ndarray:
        """A @ u for a flat vector u."""
        st = self.spec.N1 + 1
        out = self.center * u
        out[:-1] += self.east[:-1] * u[1:]
        out[1:] += self.west[1:] * u[:-1]
        out[:-st] += self.north[:-st] * u[st:]
        out[st:] += self.south[st:] * u[:-st]
        return out

    def to_dense(self) -> np.ndarray:
        """Dense matrix form, for small-grid oracle comparisons."""
        n = self.spec.num_nodes
        st = self.spec.N1 + 1
        a = np.diag(self.center)
        idx = np.arange(n)
        a[idx[:-1], idx[:-1] + 1] = self.east[:-1]
        a[idx[1:], idx[1:] - 1] = self.west[1:]
        a[idx[:-st], idx[:-st] + st] = self.north[:-st]
        a[idx[st:], idx[st:] - st] = self.south[st:]
        return a

    def dump_text(self) -> str:
        """One row per line: I, center, east, west, north, south, rhs."""
        buf = StringIO()
        for i in range(self.spec.num_nodes):
            buf.write(
                f"{i} {self.center[i]:.17g} {self.east[i]:.17g} "
                f"{self.west[i]:.17g} {self.north[i]:.17g} "
                f"{self.south[i]:.17g} {self.rhs[i]:.17g}\n"
            )
        return buf.getvalue()


@dataclass(frozen=True)
class QField:
    """Regularized gradient magnitudes on the finite-volume edges.

    Arrays are indexed [j-1, i-1] over interior nodes (shape (N2-1, N1-1));
    q_cell is the arithmetic mean of the four edge values.
    """

    epsilon: float
    q_east: np.ndarray = field(repr=False)
    q_west: np.ndarray = field(repr=False)
    q_north: np.ndarray = field(repr=False)
    q_south: np.ndarray = field(repr=False)
    q_cell: np.ndarray = field(repr=False)


def corner_value(u: GridField, i: int, j: int, p: int, q: int) -> float:
    """Average of u at the four nodes around the volume corner between
    (i, j) and its diagonal neighbor (p, q), p = i+-1, q = j+-1."""
    spec = u.spec
    if abs(p - i) != 1 or abs(q - j) != 1:
        raise IndexError("(p, q) must be a diagonal neighbor of (i, j)")
    for a, b in ((i, j), (p, j), (i, q), (p, q)):
        if not (0 <= a <= spec.N1 and 0 <= b <= spec.N2):
            raise IndexError(f"corner node ({a}, {b}) leaves the closed grid")
    g = u.as_grid()
    return float(g[j, i] + g[j, p] + g[q, i] + g[q, p]) / 4.0


def edge_gradient(u: GridField, i: int, j: int, direction: str) -> tuple[float, float]:
    """Gradient approximation at the midpoint of one finite-volume edge.

    The component normal to the edge is the one-sided difference toward the
    neighbor (so the west/south values carry the neighbor-minus-self sign,
    exactly as they enter Q); the tangential component differences the two
    corner averages across the edge.
    """
    spec = u.spec
    if not (1 <= i <= spec.N1 - 1 and 1 <= j <= spec.N2 - 1):
        raise IndexError(f"({i}, {j}) is not an interior node")
    g = u.as_grid()
    h1, h2 = spec.h1, spec.h2
    if direction == "east":
        d1 = (g[j, i + 1] - g[j, i]) / h1
        d2 = (corner_value(u, i, j, i + 1, j + 1)
              - corner_value(u, i, j, i + 1, j - 1)) / h2
    elif direction == "west":
        d1 = (g[j, i - 1] - g[j, i]) / h1
        d2 = (corner_value(u, i, j, i - 1, j + 1)
              - corner_value(u, i, j, i - 1, j - 1)) / h2
    elif direction == "north":
        d2 = (g[j + 1, i] - g[j, i]) / h2
        d1 = (corner_value(u, i, j, i + 1, j + 1)
              - corner_value(u, i, j, i - 1, j + 1)) / h1
    elif direction == "south":
        d2 = (g[j - 1, i] - g[j, i]) / h2
        d1 = (corner_value(u, i, j, i + 1, j - 1)
              - corner_value(u, i, j, i - 1, j - 1)) / h1
    else:
        raise ValueError(f"unknown edge direction {direction!r}")
    return d1, d2


def _edge_gradients_vectorized(u: GridField):
    """Squared gradient magnitude on all four edges of every interior volume."""
    g = u.as_grid()
    h1, h2 = u.spec.h1, u.spec.h2
    # corner averages: ca[j, i] is the corner at (i + 1/2, j + 1/2)
    ca = 0.25 * (g[:-1, :-1] + g[:-1, 1:] + g[1:, :-1] + g[1:, 1:])
    c = g[1:-1, 1:-1]  # interior nodes [j, i], j = 1..N2-1, i = 1..N1-1

    de1 = (g[1:-1, 2:] - c) / h1
    de2 = (ca[1:, 1:] - ca[:-1, 1:]) / h2
    dw1 = (g[1:-1, :-2] - c) / h1
    dw2 = (ca[1:, :-1] - ca[:-1, :-1]) / h2
    dn2 = (g[2:, 1:-1] - c) / h2
    dn1 = (ca[1:, 1:] - ca[1:, :-1]) / h1
    ds2 = (g[:-2, 1:-1] - c) / h2
    ds1 = (ca[:-1, 1:] - ca[:-1, :-1]) / h1
    return (de1**2 + de2**2, dw1**2 + dw2**2,
            dn1**2 + dn2**2, ds1**2 + ds2**2)


def build_q(u_prev: GridField, epsilon: float) -> QField:
    """Edge and cell-averaged Q = sqrt(eps^2 + |grad u|^2) from u_prev."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    e2, w2, n2, s2 = _edge_gradients_vectorized(u_prev)
    qe = np.sqrt(epsilon**2 + e2)
    qw = np.sqrt(epsilon**2 + w2)
    qn = np.sqrt(epsilon**2 + n2)
    qs = np.sqrt(epsilon**2 + s2)
    return QField(epsilon, qe, qw, qn, qs, 0.25 * (qe + qw + qn + qs))


def assemble(u_prev: GridField, em: EdgeMap, tau: float, epsilon: float) -> PentaSystem:
    """Pentadiagonal system for one semi-implicit time step from u_prev."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    spec = u_prev.spec
    if em.g0.spec != spec:
        raise ShapeError("edge map built on a different grid")
    q = build_q(u_prev, epsilon)
    n = spec.num_nodes
    center = np.ones(n)
    east = np.zeros(n)
    west = np.zeros(n)
    north = np.zeros(n)
    south = np.zeros(n)
    rhs = np.zeros(n)

    ge = em.g0_edge_h[1:-1, 1:]    # edge (i, j)-(i+1, j), interior nodes
    gw = em.g0_edge_h[1:-1, :-1]
    gn = em.g0_edge_v[1:, 1:-1]
    gs = em.g0_edge_v[:-1, 1:-1]
    a_e = -tau * q.q_cell * ge / (spec.h1**2 * q.q_east)
    a_w = -tau * q.q_cell * gw / (spec.h1**2 * q.q_west)
    a_n = -tau * q.q_cell * gn / (spec.h2**2 * q.q_north)
    a_s = -tau * q.q_cell * gs / (spec.h2**2 * q.q_south)

    ctr = center.reshape(spec.node_shape)
    inner = (slice(1, -1), slice(1, -1))
    ctr[inner] = 1.0 - (a_e + a_w + a_n + a_s)
    east.reshape(spec.node_shape)[inner] = a_e
    west.reshape(spec.node_shape)[inner] = a_w
    north.reshape(spec.node_shape)[inner] = a_n
    south.reshape(spec.node_shape)[inner] = a_s
    rhs.reshape(spec.node_shape)[inner] = u_prev.as_grid()[inner]

    # Neumann rows: u_boundary = u_inward, rhs 0; corners take the
    # i-direction condition.
    east.reshape(spec.node_shape)[:, 0] = -1.0
    west.reshape(spec.node_shape)[:, -1] = -1.0
    north.reshape(spec.node_shape)[0, 1:-1] = -1.0
    south.reshape(spec.node_shape)[-1, 1:-1] = -1.0

    return PentaSystem(spec, center, east, west, north, south, rhs)
