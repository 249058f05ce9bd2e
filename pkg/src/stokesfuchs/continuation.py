"""Analytic continuation in the cut plane and the connection matrix.

The distinguished solution attached to pole k is continued along a polyline
that leaves the pole's disk, dips below every cut (cuts all point in the
direction eta, so "below" means the direction eta - pi), and enters the
target pole's disk, where it is decomposed in the local fundamental basis.
The coefficient of the normalized singular solution in that decomposition is
the connection coefficient.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import local as loc
from .core import DirectionFrame, RankOneSystem, branch_point
from .errors import IllConditionedDecomposition, PathPlanningFailure
from .stepping import FuchsianODE, transport_polyline

CLEARANCE_FRACTION = 0.05
COND_LIMIT = 1e10
INTEGER_EIG_TOL = 1e-8


@dataclass(frozen=True)
class ContinuationPath:
    """Polyline from one pole disk to another, staying inside the cut plane."""

    waypoints: tuple          # complex points
    clearance: float          # min distance from the polyline to any pole

    @property
    def start(self) -> complex:
        return self.waypoints[0]

    @property
    def end(self) -> complex:
        return self.waypoints[-1]


@dataclass(frozen=True)
class ConnectionMatrix:
    c: np.ndarray             # (n, n) complex
    eta: float
    err: np.ndarray           # (n, n) float, heuristic per-entry estimates
    zero_rows: tuple          # poles whose singular solution vanishes
    zero_cols: tuple          # poles whose distinguished solution vanishes
    near_integer_eigenvalue: bool  # A1 eigenvalue within 1e-8 of an integer


def _seg_point_dist(a: complex, b: complex, p: complex) -> float:
    ab = b - a
    den = abs(ab) ** 2
    if den == 0.0:
        return abs(p - a)
    t = np.clip(np.real(np.conj(ab) * (p - a)) / den, 0.0, 1.0)
    return abs(a + t * ab - p)


def _seg_crosses_up_ray(a: complex, b: complex, w: complex) -> bool:
    """Does segment [a, b] cross the vertical upward ray from w?"""
    ax, ay = a.real, a.imag
    bx, by = b.real, b.imag
    if (ax - w.real) * (bx - w.real) > 0.0:
        return False
    if ax == bx:
        return min(ay, by) <= w.imag <= max(ay, by) or max(ay, by) >= w.imag
    t = (w.real - ax) / (bx - ax)
    if t < 0.0 or t > 1.0:
        return False
    y = ay + t * (by - ay)
    return y >= w.imag


def plan_path(sys: RankOneSystem, eta: float, k: int, j: int,
              start: complex | None = None, end: complex | None = None) -> ContinuationPath:
    """Polyline from the disk of pole k to the disk of pole j inside the cut
    plane with direction eta.

    Works in coordinates rotated so the cuts point straight up; the route
    descends below every pole, runs horizontally, and ascends to the target.
    Start/end default to the points at half validity radius straight below
    the poles. Raises PathPlanningFailure when no candidate route keeps the
    required clearance.
    """
    if k == j:
        raise ValueError("source and target pole coincide")
    rot = np.exp(1j * (0.5 * np.pi - eta))
    poles = sys.lam * rot
    rho_k = loc.RADIUS_FRACTION * sys.pole_distance(k)
    rho_j = loc.RADIUS_FRACTION * sys.pole_distance(j)
    down = np.exp(1j * (eta - np.pi))
    if start is None:
        start = sys.lam[k] + 0.5 * rho_k * down
    if end is None:
        end = sys.lam[j] + 0.5 * rho_j * down
    s = complex(start) * rot
    e = complex(end) * rot
    y_low = float(np.min(poles.imag)) - 0.75 * sys.min_separation

    def candidate(dx_s, dx_e):
        pts = [s]
        if dx_s != 0.0:
            pts.append(complex(s.real + dx_s, s.imag))
        pts.append(complex(pts[-1].real, y_low))
        pts.append(complex(e.real + dx_e, y_low))
        if dx_e != 0.0:
            pts.append(complex(e.real + dx_e, e.imag))
        pts.append(e)
        return pts

    def clearance_of(pts):
        best = np.inf
        for a, b in zip(pts[:-1], pts[1:]):
            for w in poles:
                best = min(best, _seg_point_dist(a, b, w))
        return best

    def legal(pts):
        return not any(_seg_crosses_up_ray(a, b, w)
                       for a, b in zip(pts[:-1], pts[1:]) for w in poles)

    offsets_s = [0.0, -0.45 * rho_k, 0.45 * rho_k, -0.9 * rho_k, 0.9 * rho_k]
    offsets_e = [0.0, -0.45 * rho_j, 0.45 * rho_j, -0.9 * rho_j, 0.9 * rho_j]
    best_pts, best_clear = None, -1.0
    for dx_s in offsets_s:
        for dx_e in offsets_e:
            pts = candidate(dx_s, dx_e)
            if not legal(pts):
                continue
            c = clearance_of(pts)
            if c > best_clear:
                best_clear, best_pts = c, pts
    need = CLEARANCE_FRACTION * sys.min_separation
    if best_pts is None or best_clear <= need:
        raise PathPlanningFailure(max(best_clear, 0.0))
    inv = np.conj(rot)
    waypoints = tuple(complex(p * inv) for p in best_pts)
    return ContinuationPath(waypoints=waypoints, clearance=float(best_clear))


def continue_vector(sys: RankOneSystem, value: np.ndarray, path, tol: float = 1e-12):
    """Continue a solution value along a polyline path (first waypoint is the
    anchor point of `value`). Returns (value at end, relative error estimate)."""
    waypoints = path.waypoints if isinstance(path, ContinuationPath) else tuple(path)
    ode = FuchsianODE(sys)
    return transport_polyline(ode, np.asarray(value, dtype=complex), waypoints, tol)


def _decompose_at(sys, frm, basis_j, value, point):
    p = branch_point(sys, frm.eta, point)
    mat = loc.eval_fundamental(basis_j, p)
    cond = float(np.linalg.cond(mat))
    x = np.linalg.solve(mat, value)
    return x, cond


def connection_coefficient(sys: RankOneSystem, frm: DirectionFrame, bases,
                           k: int, j: int, tol: float = 1e-12):
    """Connection coefficient c_{jk} and a heuristic error estimate.

    The distinguished solution of pole k is evaluated at half radius below
    the pole, continued into the disk of pole j, and decomposed there; the
    extraction rule depends on the resonance case at pole j. Zero rows and
    columns are returned exactly.
    """
    basis_k, basis_j = bases[k], bases[j]
    if basis_k.case.kind == "resonant_nonneg" and basis_k.epsilon == 0:
        return 0.0 + 0.0j, 0.0
    if basis_j.case.kind == "resonant_neg" and basis_j.epsilon == 0:
        return 0.0 + 0.0j, 0.0
    if basis_j.case.kind == "jordan" and basis_j.degenerate:
        return 0.0 + 0.0j, 0.0

    down = np.exp(1j * (frm.eta - np.pi))
    rho_j = basis_j.radius
    angles = [frm.eta - np.pi, frm.eta - np.pi + np.pi / 3, frm.eta - np.pi - np.pi / 3]
    last_exc = None
    for attempt, ang in enumerate(angles):
        end = sys.lam[j] + 0.5 * rho_j * np.exp(1j * ang)
        path = plan_path(sys, frm.eta, k, j, end=end)
        p0 = branch_point(sys, frm.eta, path.start)
        v0 = loc.eval_psi_k(basis_k, p0)
        v_end, cont_err = continue_vector(sys, v0, path, tol)
        x, cond = _decompose_at(sys, frm, basis_j, v_end, path.end)
        if cond <= COND_LIMIT:
            c = loc.extract_connection(basis_j, x)
            err = (cont_err + basis_j.tail_bound + basis_k.tail_bound) * cond
            return c, float(err)
        last_exc = IllConditionedDecomposition(cond)
    raise last_exc


def connection_matrix(sys: RankOneSystem, frm: DirectionFrame, bases,
                      tol: float = 1e-12, max_workers: int | None = None) -> ConnectionMatrix:
    """Assemble the full matrix of connection coefficients at the frame's
    direction; all pair continuations are independent and run in a pool."""
    n = sys.n
    c = np.zeros((n, n), dtype=complex)
    err = np.zeros((n, n))
    for k in range(n):
        c[k, k] = 0.0 if bases[k].case.is_integer else 1.0

    pairs = [(j, k) for j in range(n) for k in range(n) if j != k]

    def work(pair):
        j, k = pair
        return connection_coefficient(sys, frm, bases, k, j, tol)

    with ThreadPoolExecutor(max_workers=max_workers or min(8, len(pairs))) as pool:
        results = list(pool.map(work, pairs))
    for (j, k), (cjk, e) in zip(pairs, results):
        c[j, k] = cjk
        err[j, k] = e

    zero_rows = tuple(j for j in range(n)
                      if (bases[j].case.kind == "resonant_neg" and bases[j].epsilon == 0)
                      or (bases[j].case.kind == "jordan" and bases[j].degenerate))
    zero_cols = tuple(k for k in range(n)
                      if bases[k].case.kind == "resonant_nonneg" and bases[k].epsilon == 0)
    eigs = np.linalg.eigvals(sys.a1)
    near = bool(np.any(np.abs(eigs - np.round(eigs.real)) < INTEGER_EIG_TOL))
    c.setflags(write=False)
    err.setflags(write=False)
    return ConnectionMatrix(c=c, eta=frm.eta, err=err, zero_rows=zero_rows,
                            zero_cols=zero_cols, near_integer_eigenvalue=near)
