"""System data, cut-plane geometry and the dominance order.

The objects here encode the shared vocabulary of the package: a rank-one
system given by the distinct poles ``lambda_1..lambda_n`` (eigenvalues of the
leading matrix) and the residue matrix ``A1``; a family of parallel branch
cuts at angle ``eta``; the critical directions ``arg(lambda_j - lambda_k)``
together with the anti-Stokes ray angles ``tau = 3*pi/2 - eta``; and the
left/right ordering of cuts, computed through the window determination

    eta - 2*pi < arg(lambda - lambda_k) < eta

that every branch-dependent quantity in the package uses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, DuplicateEigenvalue, InadmissibleDirection

TWO_PI = 2.0 * np.pi

# Reject directions closer than this to a critical value: branch extraction
# degenerates when a cut collides with a pole alignment.
ADMISSIBILITY_TOL = 1e-12


@dataclass(frozen=True)
class RankOneSystem:
    """A system dY/dz = (A0 + A1/z) Y with A0 = diag(lam), plus the derived
    Fuchsian system in the spectral plane whose simple poles sit at lam."""

    n: int
    lam: np.ndarray          # shape (n,) complex, pairwise distinct
    a1: np.ndarray           # shape (n, n) complex
    lambda_prime: np.ndarray  # diag(a1), cached

    def b_matrix(self, k: int) -> np.ndarray:
        """Residue of the spectral-plane system at pole k: only row k is
        nonzero and equals minus row k of (A1 + I)."""
        b = np.zeros((self.n, self.n), dtype=complex)
        b[k, :] = -self.a1[k, :]
        b[k, k] -= 1.0
        return b

    @property
    def min_separation(self) -> float:
        d = np.abs(self.lam[:, None] - self.lam[None, :])
        return float(np.min(d[~np.eye(self.n, dtype=bool)]))

    @property
    def max_separation(self) -> float:
        d = np.abs(self.lam[:, None] - self.lam[None, :])
        return float(np.max(d))

    def pole_distance(self, k: int) -> float:
        """Distance from pole k to its nearest neighbour."""
        d = np.abs(self.lam - self.lam[k])
        d[k] = np.inf
        return float(np.min(d))

    @property
    def a1_scale(self) -> float:
        return max(float(np.linalg.norm(self.a1)), 1.0)


def validate_system(lam, a1, n=None) -> RankOneSystem:
    """Validate raw input and build an immutable RankOneSystem.

    Raises DimensionMismatch for shape problems and DuplicateEigenvalue when
    two poles coincide exactly.
    """
    lam = np.asarray(lam, dtype=complex).reshape(-1)
    a1 = np.asarray(a1, dtype=complex)
    if n is None:
        n = lam.size
    if lam.size != n:
        raise DimensionMismatch(f"expected {n} eigenvalues, got {lam.size}")
    if a1.shape != (n, n):
        raise DimensionMismatch(f"expected {(n, n)} matrix, got {a1.shape}")
    if n < 2:
        raise DimensionMismatch("need at least two distinct poles")
    diff = np.abs(lam[:, None] - lam[None, :])
    off = diff[~np.eye(n, dtype=bool)]
    if off.size and float(np.min(off)) == 0.0:
        raise DuplicateEigenvalue("eigenvalues of the leading matrix must be pairwise distinct")
    lam.setflags(write=False)
    a1 = a1.copy()
    a1.setflags(write=False)
    lp = np.diagonal(a1).copy()
    lp.setflags(write=False)
    return RankOneSystem(n=int(n), lam=lam, a1=a1, lambda_prime=lp)


def window_offset(angle: float, eta: float) -> float:
    """Offset r = (eta - angle) mod 2*pi in [0, 2*pi).

    r == 0 means the direction lies on a cut; the window determination of
    the angle is eta - r, which lies in (eta - 2*pi, eta) for r > 0.
    """
    return float(np.mod(eta - angle, TWO_PI))


def window_determination(angle: float, eta: float) -> float:
    """The unique determination of ``angle`` (mod 2*pi) inside
    (eta - 2*pi, eta)."""
    r = window_offset(angle, eta)
    if r == 0.0:
        r = TWO_PI  # boundary convention: approach the cut from the right
    return eta - r


@dataclass(frozen=True)
class BranchPoint:
    """A point of the cut plane together with the n window determinations of
    arg(lambda - lambda_k)."""

    value: complex
    args: np.ndarray  # shape (n,), each in (eta - 2*pi, eta)

    def u(self, k: int, lam_k: complex) -> complex:
        return self.value - lam_k


def branch_point(sys: RankOneSystem, eta: float, value: complex) -> BranchPoint:
    """Branch point with in-window determinations; `value` must not lie on a
    cut (offset exactly zero would be ambiguous)."""
    value = complex(value)
    args = np.empty(sys.n)
    for k in range(sys.n):
        args[k] = window_determination(float(np.angle(value - sys.lam[k])), eta)
    args.setflags(write=False)
    return BranchPoint(value=value, args=args)


@dataclass(frozen=True)
class CriticalData:
    """Critical directions in the fundamental window (-pi/2, 3*pi/2],
    sorted decreasing, together with the anti-Stokes angles."""

    criticals: np.ndarray  # decreasing, in (-pi/2, 3*pi/2]
    tau: np.ndarray        # 3*pi/2 - criticals, increasing in [0, 2*pi)
    m: int
    mu: int

    def eta_nu(self, nu: int) -> float:
        """Critical value with arbitrary integer index: eta_{nu + h*m} =
        eta_nu - 2*pi*h."""
        h, r = divmod(nu, self.m)
        return float(self.criticals[r] - TWO_PI * h)

    def tau_nu(self, nu: int) -> float:
        return 1.5 * np.pi - self.eta_nu(nu)

    def interval_index(self, eta: float) -> int:
        """Index nu such that eta_{nu+1} < eta < eta_nu."""
        c = self.criticals
        # shift eta into (c[-1], c[-1] + 2*pi]
        h = int(np.floor((c[-1] + TWO_PI - eta) / TWO_PI))
        e0 = eta + TWO_PI * h
        if e0 > c[0]:
            r = -1  # wrap interval (c[0], c[-1] + 2*pi)
        else:
            r = None
            for i in range(self.m - 1):
                if c[i + 1] < e0 < c[i]:
                    r = i
                    break
        if r is None:
            raise InadmissibleDirection(0.0, "direction equals a critical value")
        return r + h * self.m


def critical_directions(sys: RankOneSystem) -> CriticalData:
    """All directions arg(lambda_j - lambda_k), one representative per 2*pi
    window, deduplicated (collinear pole triples share a direction)."""
    raw = []
    for j in range(sys.n):
        for k in range(sys.n):
            if j == k:
                continue
            a = float(np.angle(sys.lam[j] - sys.lam[k]))  # in (-pi, pi]
            if a <= -0.5 * np.pi:
                a += TWO_PI  # move into (-pi/2, 3*pi/2]
            raw.append(a)
    raw.sort()
    vals = []
    for a in raw:
        if not vals or abs(a - vals[-1]) > 1e-13:
            vals.append(a)
    # collinear configurations can also produce a near-duplicate across the
    # window seam (-pi/2 vs 3*pi/2)
    if len(vals) >= 2 and abs((vals[-1] - TWO_PI) - vals[0]) <= 1e-13:
        vals.pop()
    criticals = np.array(sorted(vals, reverse=True))
    m = criticals.size
    criticals.setflags(write=False)
    tau = 1.5 * np.pi - criticals
    tau.setflags(write=False)
    return CriticalData(criticals=criticals, tau=tau, m=m, mu=m // 2)


@dataclass(frozen=True)
class DirectionFrame:
    """An admissible direction with its derived branch geometry.

    ``eta_jk[j, k]`` is the window determination of arg(lambda_j - lambda_k);
    ``dominates[j, k]`` is True when the cut from pole j lies to the right of
    the cut from pole k (written j < k in the ordering sense).
    """

    sys: RankOneSystem
    eta: float
    crit: CriticalData
    nu: int                      # eta lies in (eta_{nu+1}, eta_nu)
    eta_jk: np.ndarray           # (n, n) real; diagonal entries are nan
    dominates: np.ndarray        # (n, n) bool, strict total order
    order: tuple = field(default=())  # pole indices sorted ascending in dominance

    @property
    def criticals(self):
        return self.crit.criticals

    @property
    def tau(self):
        return self.crit.tau

    @property
    def m(self):
        return self.crit.m

    @property
    def mu(self):
        return self.crit.mu

    def pairs_at_critical(self, nu: int):
        """Ordered pairs (j, k) whose direction arg(lambda_j - lambda_k)
        equals eta_nu modulo 2*pi (always j after k in dominance)."""
        target = self.crit.eta_nu(nu)
        out = []
        n = self.sys.n
        for j in range(n):
            for k in range(n):
                if j == k:
                    continue
                a = float(np.angle(self.sys.lam[j] - self.sys.lam[k]))
                d = np.mod(a - target, TWO_PI)
                if min(d, TWO_PI - d) <= 1e-12:
                    out.append((j, k))
        return out


def frame(sys: RankOneSystem, eta: float) -> DirectionFrame:
    """Branch frame for an admissible direction.

    Raises InadmissibleDirection when eta is within ADMISSIBILITY_TOL of a
    critical value (mod 2*pi).
    """
    eta = float(eta)
    crit = critical_directions(sys)
    dist = np.inf
    for c in crit.criticals:
        r = np.mod(eta - c, TWO_PI)
        dist = min(dist, r, TWO_PI - r)
    if dist < ADMISSIBILITY_TOL:
        raise InadmissibleDirection(dist)

    n = sys.n
    eta_jk = np.full((n, n), np.nan)
    dom = np.zeros((n, n), dtype=bool)
    for j in range(n):
        for k in range(n):
            if j == k:
                continue
            a = float(np.angle(sys.lam[j] - sys.lam[k]))
            r = window_offset(a, eta)
            eta_jk[j, k] = eta - r
            dom[j, k] = r < np.pi
    eta_jk.setflags(write=False)
    dom.setflags(write=False)
    # ascending dominance; the count of dominated poles is injective for a
    # strict total order, the index tie-break keeps the sort deterministic
    order = tuple(sorted(range(n), key=lambda j: (int(np.sum(dom[:, j])), j)))
    nu = crit.interval_index(eta)
    return DirectionFrame(sys=sys, eta=eta, crit=crit, nu=nu,
                          eta_jk=eta_jk, dominates=dom, order=order)


def default_eta(sys: RankOneSystem) -> float:
    """Midpoint of the widest gap between consecutive critical values
    (maximal conditioning margin for everything downstream)."""
    crit = critical_directions(sys)
    c = crit.criticals  # decreasing
    best_gap, best_mid = -1.0, None
    for i in range(crit.m):
        hi = c[i - 1] if i > 0 else c[-1] + TWO_PI
        lo = c[i]
        if hi - lo > best_gap:
            best_gap, best_mid = hi - lo, 0.5 * (hi + lo)
    return float(best_mid)
