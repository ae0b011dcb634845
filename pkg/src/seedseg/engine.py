"""Segmentation runs: constraint synthesis, time stepping, contour extraction.

A run builds the edge map once, converts the seed mask into lower/upper
obstacle fields (w, v), and then repeats assemble + projected-SOR steps until
the final time, the step budget, or a steady state is reached.  Snapshots
carry the level-set field together with lazily computed diagnostics (zero
contour, negative-region components).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy import ndimage

from .assembler import assemble
from .edgemap import EdgeMap, EdgeStopForm, EdgeStopParams, MollifierParams, build_edge_map
from .grid import GridField, GridSpec, max_abs_diff
from .ingest import SeedMask
from .solver import Bounds, SolveReport, SolverParams, psor_solve


class ConstraintConflictError(ValueError):
    """A node is simultaneously Inside and Outside (defensive check)."""


@dataclass(frozen=True)
class ConstraintFields:
    """Lower/upper obstacle fields; w < v everywhere."""

    w: GridField
    v: GridField

    def bounds(self) -> Bounds:
        return Bounds(self.w.values, self.v.values)


@dataclass(frozen=True)
class SegmentationParams:
    """Everything a run needs besides the image and the seeds.

    ``sigma``, ``tau`` and ``delta`` default to grid-derived values (h1,
    h1*h2 and 0.05*min(L1, L2)) when left as None.
    """

    epsilon: float = 1e-4
    lam: float = 100.0
    form: EdgeStopForm = EdgeStopForm.INVERSE_SQRT
    sigma: float | None = None
    tau: float | None = None
    solver: SolverParams = field(default_factory=SolverParams)
    final_time: float | None = None
    step_count: int | None = None
    steady_tol: float = 1e-6
    delta: float | None = None
    big_m: float = 1e6

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        for name in ("sigma", "tau", "delta"):
            val = getattr(self, name)
            if val is not None and val <= 0:
                raise ValueError(f"{name} must be positive")
        if self.steady_tol <= 0:
            raise ValueError("steady_tol must be positive")
        if self.final_time is None and self.step_count is None:
            raise ValueError("need final_time or step_count")
        if self.delta is not None and self.delta >= self.big_m:
            raise ValueError("delta must stay below big_m")

    def resolved(self, spec: GridSpec) -> "SegmentationParams":
        """Fill grid-derived defaults for a concrete grid."""
        return replace(
            self,
            sigma=self.sigma if self.sigma is not None else spec.h1,
            tau=self.tau if self.tau is not None else spec.h1 * spec.h2,
            delta=self.delta if self.delta is not None else 0.05 * min(spec.L1, spec.L2),
        )


@dataclass(frozen=True)
class Snapshot:
    """Solver state at one time level; contour and components are lazy."""

    time: float
    u: GridField
    report: SolveReport

    @cached_property
    def contour(self) -> list["Polyline"]:
        return extract_contour(self.u)

    @cached_property
    def interior(self) -> tuple[int, list[float]]:
        return interior_components(self.u)

    @property
    def component_count(self) -> int:
        return self.interior[0]


def initial_circle(center, radius: float, spec: GridSpec) -> GridField:
    """Signed distance to a circle: negative inside, zero on it."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    cx, cy = center
    return GridField.from_function(
        spec, lambda x1, x2: np.hypot(x1 - cx, x2 - cy) - radius
    )


def build_constraints(mask: SeedMask, delta: float, big_m: float,
                      spec: GridSpec) -> ConstraintFields:
    """Obstacles from seeds: v = -delta on Inside, w = +delta on Outside."""
    if delta <= 0 or big_m <= delta:
        raise ValueError("need 0 < delta < big_m")
    if mask.spec != spec:
        raise ValueError("mask lives on a different grid")
    if (mask.inside & mask.outside).any():
        raise ConstraintConflictError("a node is both Inside and Outside")
    v = np.where(mask.inside, -delta, big_m)
    w = np.where(mask.outside, delta, -big_m)
    return ConstraintFields(GridField.from_grid(spec, w), GridField.from_grid(spec, v))


def time_step(u_prev: GridField, em: EdgeMap, cf: ConstraintFields,
              p: SegmentationParams) -> tuple[GridField, SolveReport]:
    """One semi-implicit step: assemble from u_prev, solve the LCP by PSOR."""
    p = p.resolved(u_prev.spec)
    bounds = cf.bounds()
    u_prev = GridField(u_prev.spec, bounds.clamp(u_prev.values))
    sys = assemble(u_prev, em, p.tau, p.epsilon)
    return psor_solve(sys, bounds, u_prev, p.solver)


def free_constraints(spec: GridSpec, big_m: float = 1e6) -> ConstraintFields:
    """No seeds: w = -big_m, v = +big_m everywhere."""
    return ConstraintFields(
        GridField.constant(spec, -big_m), GridField.constant(spec, big_m)
    )


def run(i0: GridField, mask: SeedMask | None, u_ini: GridField,
        params: SegmentationParams, observer=None,
        edge_map: EdgeMap | None = None,
        history_limit: int | None = 32) -> tuple[Snapshot, list[Snapshot]]:
    """Full segmentation run; returns the final snapshot and recent history.

    The observer, if given, is called with each step's Snapshot.  The run
    stops at final_time / step_count, or earlier when the per-step change
    drops below steady_tol.  History keeps the last ``history_limit``
    snapshots (None keeps all, at one field per step).
    """
    spec = i0.spec
    p = params.resolved(spec)
    em = edge_map if edge_map is not None else build_edge_map(
        i0, MollifierParams(p.sigma), EdgeStopParams(p.lam, p.form)
    )
    cf = (build_constraints(mask, p.delta, p.big_m, spec)
          if mask is not None else free_constraints(spec, p.big_m))
    bounds = cf.bounds()
    u = GridField(spec, bounds.clamp(u_ini.values))

    if p.step_count is not None:
        max_steps = p.step_count
    else:
        max_steps = int(np.ceil(p.final_time / p.tau - 1e-12))
    history: list[Snapshot] = []
    snap = Snapshot(0.0, u, SolveReport(0, 0.0, 0.0, 0.0, True))
    for k in range(1, max_steps + 1):
        u_prev = u
        u, report = time_step(u_prev, em, cf, p)
        snap = Snapshot(k * p.tau, u, report)
        history.append(snap)
        if history_limit is not None and len(history) > history_limit:
            history.pop(0)
        if observer is not None:
            observer(snap)
        if max_abs_diff(u, u_prev) < p.steady_tol:
            break
    return snap, history


# ---------------------------------------------------------------------------
# contour extraction (marching squares)


@dataclass(frozen=True)
class Polyline:
    points: list[tuple[float, float]]
    closed: bool


def _cell_segments(g: np.ndarray, spec: GridSpec, level: float):
    """Zero-crossing segments per grid cell, endpoints on cell edges."""
    h1, h2 = spec.h1, spec.h2
    f = g - level
    segments = []

    def interp(va, vb, a, b):
        t = va / (va - vb)
        return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))

    neg = f < 0
    cells = np.argwhere(neg[:-1, :-1] | neg[:-1, 1:] | neg[1:, :-1] | neg[1:, 1:])
    for j, i in cells:
        v = (f[j, i], f[j, i + 1], f[j + 1, i + 1], f[j + 1, i])  # bl br tr tl
        pts = (
            (i * h1, j * h2),
            ((i + 1) * h1, j * h2),
            ((i + 1) * h1, (j + 1) * h2),
            (i * h1, (j + 1) * h2),
        )
        code = sum(1 << k for k in range(4) if v[k] < 0)
        if code in (0, 15):
            continue
        # edge crossings: bottom(0-1), right(1-2), top(2-3), left(3-0)
        edges = {}
        for (a, b), name in (((0, 1), "b"), ((1, 2), "r"), ((2, 3), "t"), ((3, 0), "l")):
            if (v[a] < 0) != (v[b] < 0):
                edges[name] = interp(v[a], v[b], pts[a], pts[b])
        table = {
            1: [("l", "b")], 2: [("b", "r")], 4: [("r", "t")], 8: [("t", "l")],
            3: [("l", "r")], 6: [("b", "t")], 12: [("r", "l")], 9: [("t", "b")],
            7: [("l", "t")], 11: [("t", "r")], 13: [("r", "b")], 14: [("b", "l")],
        }
        if code in (5, 10):
            # saddle: resolve with the cell-center average sign
            center_neg = (v[0] + v[1] + v[2] + v[3]) / 4.0 < 0
            if code == 5:  # bl and tr negative
                pairs = [("l", "t"), ("r", "b")] if center_neg else [("l", "b"), ("r", "t")]
            else:  # br and tl negative
                pairs = [("b", "r"), ("t", "l")] if center_neg else [("b", "l"), ("t", "r")]
        else:
            pairs = table[code]
        for a, b in pairs:
            segments.append((edges[a], edges[b]))
    return segments


def extract_contour(u: GridField, level: float = 0.0) -> list[Polyline]:
    """Marching-squares isocontour of u, chained into polylines.

    Crossings are linearly interpolated along cell edges; ambiguous saddle
    cells follow the sign of the cell-center average.  Output order is
    deterministic (cells scanned lexicographically, chains started in
    discovery order).
    """
    segments = _cell_segments(u.as_grid(), u.spec, level)
    if not segments:
        return []

    def key(pt):
        return (round(pt[0], 12), round(pt[1], 12))

    links: dict = {}
    for seg_idx, (a, b) in enumerate(segments):
        links.setdefault(key(a), []).append((seg_idx, 1))
        links.setdefault(key(b), []).append((seg_idx, 0))
    used = [False] * len(segments)
    polylines = []
    for start in range(len(segments)):
        if used[start]:
            continue
        used[start] = True
        chain = [segments[start][0], segments[start][1]]
        # extend forward, then backward
        for forward in (True, False):
            while True:
                tip = key(chain[-1] if forward else chain[0])
                nxt = None
                for seg_idx, end in links.get(tip, ()):
                    if not used[seg_idx]:
                        nxt = (seg_idx, end)
                        break
                if nxt is None:
                    break
                seg_idx, end = nxt
                used[seg_idx] = True
                pt = segments[seg_idx][end]
                if forward:
                    chain.append(pt)
                else:
                    chain.insert(0, pt)
        closed = key(chain[0]) == key(chain[-1])
        if closed:
            chain = chain[:-1]
        polylines.append(Polyline([(float(x), float(y)) for x, y in chain], closed))
    return polylines


def polyline_length(poly: Polyline) -> float:
    pts = poly.points + ([poly.points[0]] if poly.closed else [])
    return float(sum(np.hypot(b[0] - a[0], b[1] - a[1])
                     for a, b in zip(pts, pts[1:])))


def interior_components(u: GridField) -> tuple[int, list[float]]:
    """4-connected components of {u < 0}; areas in node-count * h1*h2."""
    neg = u.as_grid() < 0
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    labels, count = ndimage.label(neg, structure=structure)
    cell = u.spec.cell_volume
    areas = [float(np.sum(labels == k) * cell) for k in range(1, count + 1)]
    return int(count), areas


# ---------------------------------------------------------------------------
# export formats

_DUMP_MAGIC = b"SSLS"


def dump_level_set(u: GridField, time: float) -> bytes:
    """Self-describing little-endian binary: magic, N1, N2, L1, L2, time, data."""
    spec = u.spec
    header = _DUMP_MAGIC + struct.pack(
        "<iiddd", spec.N1, spec.N2, spec.L1, spec.L2, time
    )
    return header + u.values.astype("<f8").tobytes()


def load_level_set(blob: bytes) -> tuple[GridField, float]:
    if blob[:4] != _DUMP_MAGIC:
        raise ValueError("not a level-set dump")
    n1, n2, l1, l2, time = struct.unpack("<iiddd", blob[4:4 + 32])
    spec = GridSpec(l1, l2, n1, n2)
    values = np.frombuffer(blob[36:], dtype="<f8")
    return GridField(spec, values.copy()), time


def contour_to_json(polylines: list[Polyline]) -> str:
    """Contour as JSON: list of {points: [[x1, x2], ...], closed: bool}."""
    return json.dumps(
        [{"points": [[p[0], p[1]] for p in poly.points], "closed": poly.closed}
         for poly in polylines]
    )
