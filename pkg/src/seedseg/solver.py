"""SOR and Projected SOR solvers plus LCP diagnostics and a brute-force oracle.

Both solvers sweep the unknowns in lexicographic (flat-index) order; that
order is part of the contract, so results are bit-reproducible.  The
projected variant clamps each freshly updated component into [w, v], and its
fixed points solve the range-bound linear complementarity problem

    (A u - b)_I  = 0   where w_I < u_I < v_I,
    (A u - b)_I >= 0   where u_I = w_I,
    (A u - b)_I <= 0   where u_I = v_I.

Systems may be a :class:`~seedseg.assembler.PentaSystem` or a dense square
ndarray (used by the small randomized oracle comparisons).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .assembler import PentaSystem
from .grid import GridField

BIG = 1e9  # sentinel magnitude for "unbounded"


class SolverContractError(ValueError):
    """System violates a solver precondition (e.g. nonpositive diagonal)."""


@dataclass(frozen=True)
class Bounds:
    """Flat lower/upper obstacle vectors; +-BIG marks an unbounded side."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.ascontiguousarray(self.lower, dtype=np.float64)
        hi = np.ascontiguousarray(self.upper, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("bounds must be flat vectors of equal length")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound somewhere")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unbounded(cls, n: int) -> "Bounds":
        return cls(np.full(n, -BIG), np.full(n, BIG))

    def clamp(self, u: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(u, self.lower), self.upper)


@dataclass(frozen=True)
class SolverParams:
    omega: float = 1.2
    tol: float = 1e-9
    max_sweeps: int = 2000

    def __post_init__(self):
        if not 0 < self.omega < 2:
            raise ValueError("omega must lie in (0, 2)")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be positive")


@dataclass(frozen=True)
class SolveReport:
    sweeps: int
    sweep_diff: float
    linear_residual: float      # inf-norm of Au - b on strictly interior indices
    complementarity_residual: float
    converged: bool


# ---------------------------------------------------------------------------
# numba sweep kernels


@njit(cache=True)
def _penta_sweeps(center, east, west, north, south, rhs, u,
                  lower, upper, stride, omega, tol, max_sweeps):
    n = u.size
    sweeps = 0
    diff = np.inf
    while sweeps < max_sweeps:
        diff = 0.0
        for i in range(n):
            acc = rhs[i]
            if i + 1 < n:
                acc -= east[i] * u[i + 1]
            if i - 1 >= 0:
                acc -= west[i] * u[i - 1]
            if i + stride < n:
                acc -= north[i] * u[i + stride]
            if i - stride >= 0:
                acc -= south[i] * u[i - stride]
            new = (1.0 - omega) * u[i] + omega * acc / center[i]
            if new < lower[i]:
                new = lower[i]
            elif new > upper[i]:
                new = upper[i]
            d = abs(new - u[i])
            if d > diff:
                diff = d
            u[i] = new
        sweeps += 1
        if diff < tol:
            break
    return sweeps, diff


@njit(cache=True)
def _dense_sweeps(a, b, u, lower, upper, omega, tol, max_sweeps):
    n = u.size
    sweeps = 0
    diff = np.inf
    while sweeps < max_sweeps:
        diff = 0.0
        for i in range(n):
            acc = b[i]
            for j in range(n):
                if j != i:
                    acc -= a[i, j] * u[j]
            new = (1.0 - omega) * u[i] + omega * acc / a[i, i]
            if new < lower[i]:
                new = lower[i]
            elif new > upper[i]:
                new = upper[i]
            d = abs(new - u[i])
            if d > diff:
                diff = d
            u[i] = new
        sweeps += 1
        if diff < tol:
            break
    return sweeps, diff


def _finish(sys_matvec, rhs, bounds, u, sweeps, diff, tol):
    au = sys_matvec(u)
    interior = (u > bounds.lower) & (u < bounds.upper)
    lin = float(np.max(np.abs(au - rhs)[interior])) if interior.any() else 0.0
    comp = _complementarity(au, rhs, bounds, u)
    return SolveReport(sweeps, float(diff), lin, comp, bool(diff < tol))


def sor_solve(sys: PentaSystem, u0: GridField,
              p: SolverParams = SolverParams()) -> tuple[GridField, SolveReport]:
    """Plain SOR on the pentadiagonal system, lexicographic sweeps."""
    if np.any(sys.center <= 0):
        raise SolverContractError("system diagonal must be positive")
    u = u0.values.copy()
    unb = Bounds.unbounded(u.size)
    sweeps, diff = _penta_sweeps(
        sys.center, sys.east, sys.west, sys.north, sys.south, sys.rhs,
        u, np.full(u.size, -np.inf), np.full(u.size, np.inf),
        sys.spec.N1 + 1, p.omega, p.tol, p.max_sweeps,
    )
    report = _finish(sys.matvec, sys.rhs, unb, u, sweeps, diff, p.tol)
    return GridField(sys.spec, u), report


def psor_solve(sys: PentaSystem, bounds: Bounds, u0: GridField,
               p: SolverParams = SolverParams()) -> tuple[GridField, SolveReport]:
    """Projected SOR: SOR update per component, clamped into [w, v]."""
    if np.any(sys.center <= 0):
        raise SolverContractError("system diagonal must be positive")
    if bounds.lower.size != sys.spec.num_nodes:
        raise SolverContractError("bounds length does not match the system")
    u = bounds.clamp(u0.values)
    sweeps, diff = _penta_sweeps(
        sys.center, sys.east, sys.west, sys.north, sys.south, sys.rhs,
        u, bounds.lower, bounds.upper, sys.spec.N1 + 1,
        p.omega, p.tol, p.max_sweeps,
    )
    report = _finish(sys.matvec, sys.rhs, bounds, u, sweeps, diff, p.tol)
    return GridField(sys.spec, u), report


def psor_solve_dense(a: np.ndarray, b: np.ndarray, bounds: Bounds,
                     u0: np.ndarray,
                     p: SolverParams = SolverParams()) -> tuple[np.ndarray, SolveReport]:
    """Projected SOR for small dense systems (oracle comparisons)."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if np.any(np.diag(a) <= 0):
        raise SolverContractError("system diagonal must be positive")
    u = bounds.clamp(np.asarray(u0, dtype=np.float64))
    sweeps, diff = _dense_sweeps(a, b, u, bounds.lower, bounds.upper,
                                 p.omega, p.tol, p.max_sweeps)
    report = _finish(lambda x: a @ x, b, bounds, u, sweeps, diff, p.tol)
    return u, report


# ---------------------------------------------------------------------------
# diagnostics and the brute-force oracle


def _complementarity(au: np.ndarray, b: np.ndarray, bounds: Bounds,
                     u: np.ndarray) -> float:
    res = au - b
    tol_lo = 1e-12 * (1.0 + np.abs(bounds.lower))
    tol_hi = 1e-12 * (1.0 + np.abs(bounds.upper))
    at_lower = u <= bounds.lower + tol_lo
    at_upper = u >= bounds.upper - tol_hi
    free = ~(at_lower | at_upper)
    worst = 0.0
    if free.any():
        worst = max(worst, float(np.max(np.abs(res[free]))))
    if at_lower.any():
        worst = max(worst, float(np.max(np.maximum(0.0, -res[at_lower]))))
    if at_upper.any():
        worst = max(worst, float(np.max(np.maximum(0.0, res[at_upper]))))
    violation = np.maximum(bounds.lower - u, u - bounds.upper)
    if np.any(violation > 0):
        worst = max(worst, float(np.max(violation[violation > 0])))
    return worst


def complementarity_residual(sys, bounds: Bounds, u) -> float:
    """Worst violation of the three LCP sign conditions (0 for exact solutions).

    ``sys`` is a PentaSystem or (A, b) pair of dense arrays; ``u`` a flat
    vector or GridField.  Points outside [w, v] contribute their violation
    magnitude directly.
    """
    uv = u.values if isinstance(u, GridField) else np.asarray(u, dtype=np.float64)
    if isinstance(sys, PentaSystem):
        au, b = sys.matvec(uv), sys.rhs
    else:
        a, b = sys
        au = np.asarray(a, dtype=np.float64) @ uv
    return _complementarity(au, np.asarray(b, dtype=np.float64), bounds, uv)


def dense_lcp_oracle(a: np.ndarray, b: np.ndarray, w: np.ndarray,
                     v: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Solve the range-bound LCP by enumerating all 3^n active sets.

    Each index is assigned to {at-lower, free, at-upper}; the reduced linear
    system on the free indices is solved and the assignment accepted when all
    sign conditions and bounds hold.  Only meant for n <= 20.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    n = b.size
    if n > 20:
        raise ValueError("oracle is exponential; n must stay small")
    # enumerate the 3^n assignments grouped by free set: the reduced matrix
    # depends only on which indices are free, so all 2^|active| bound-sign
    # combinations of one group share a single batched linear solve
    idx = np.arange(n)
    for free_bits in sorted(range(1 << n), key=lambda bits: bits.bit_count()):
        active = idx[[(free_bits >> i) & 1 == 1 for i in range(n)]]
        free = idx[[(free_bits >> i) & 1 == 0 for i in range(n)]]
        m = active.size
        combos = (np.arange(1 << m)[:, None] >> np.arange(m)) & 1  # (2^m, m)
        uc = np.where(combos == 1, v[active], w[active])
        us = np.empty((1 << m, n))
        us[:, active] = uc
        if free.size:
            af = a[np.ix_(free, free)]
            bf = b[free][None, :] - uc @ a[np.ix_(free, active)].T
            try:
                us[:, free] = np.linalg.solve(af, bf.T).T
            except np.linalg.LinAlgError:
                continue
        res = us @ a.T - b
        ok = ((us >= w - tol) & (us <= v + tol)).all(axis=1)
        if free.size:
            ok &= (np.abs(res[:, free]) <= tol).all(axis=1)
        if m:
            at_lower = res[:, active] >= -tol
            at_upper = res[:, active] <= tol
            ok &= np.where(combos == 1, at_upper, at_lower).all(axis=1)
        hits = np.flatnonzero(ok)
        if hits.size:
            return us[hits[0]]
    raise RuntimeError("no consistent active set: malformed LCP instance")
