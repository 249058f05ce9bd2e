"""Direct-integration ground truth for the Stokes data.

Sector fundamental solutions of the rank-one system are computed without any
use of connection coefficients: each column is anchored at a large radius by
optimal truncation of the formal power series (the anchor direction is chosen
per column so that every other exponential mode dominates there, which keeps
the invisible subdominant contamination decaying), then transported along
rays and arcs inside the sector by Taylor stepping of the ODE itself.  Stokes
matrices follow from matching two sector solutions on their overlap, and the
Laplace-integral representation of each column provides a second, entirely
quadrature-based route to the same values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import local as loc
from .core import BranchPoint, CriticalData, DirectionFrame, RankOneSystem
from .errors import (AnchorAccuracyInsufficient, OverlapConditioning,
                     QuadratureNotConverged)
from .stepping import RankOneODE, transport_polyline, arc_points, taylor_step, STEP_FRACTION

OVERFLOW_GUARD = 1e270
MAX_FORMAL_TERMS = 400
OVERLAP_SAMPLES = 5
OVERLAP_SPREAD_LIMIT = 1e-4


@dataclass(frozen=True)
class FormalSeries:
    """Truncated formal-series coefficients at infinity: Yhat ~ I + sum F_l z^-l."""

    K: int
    F: np.ndarray              # (K+1, n, n), F[0] = I
    optimal_radius: float      # |z| at which truncation at K is near-optimal

    def column_term_norms(self, k: int) -> np.ndarray:
        return np.max(np.abs(self.F[:, :, k]), axis=1)


def formal_series(sys: RankOneSystem, K: int) -> FormalSeries:
    """Coefficients from formal substitution into the z-plane system.

    Order l: the commutator with A0 fixes the off-diagonal part of F_l from
    F_{l-1}; the order l+1 consistency condition fixes the diagonal of F_l.
    """
    if K < 1:
        raise ValueError("need K >= 1")
    n = sys.n
    lam = sys.lam
    lp = sys.lambda_prime
    fs = np.zeros((K + 1, n, n), dtype=complex)
    fs[0] = np.eye(n)
    denom = lam[None, :] - lam[:, None]          # (i, j) -> lam_j - lam_i
    np.fill_diagonal(denom, 1.0)
    offmask = ~np.eye(n, dtype=bool)
    a1_off = np.array(sys.a1)
    np.fill_diagonal(a1_off, 0.0)
    top = K
    for l in range(1, K + 1):
        m = sys.a1 @ fs[l - 1] - fs[l - 1] * lp[None, :] + (l - 1) * fs[l - 1]
        f = np.zeros((n, n), dtype=complex)
        f[offmask] = (m / denom)[offmask]
        f[np.arange(n), np.arange(n)] = -(a1_off @ f).diagonal() / l
        fs[l] = f
        if float(np.max(np.abs(f))) > OVERFLOW_GUARD:
            top = l
            break
    fs = fs[: top + 1]
    norm_last = float(np.max(np.abs(fs[-1])))
    norm_prev = float(np.max(np.abs(fs[-2]))) if top >= 1 else 1.0
    r_opt = norm_last / norm_prev if norm_prev > 0 else np.inf
    return FormalSeries(K=top, F=fs, optimal_radius=float(r_opt))


def _mode_gap(sys: RankOneSystem, k: int, i: int, theta: float) -> float:
    """Re((lam_i - lam_k) e^{i theta}): positive when mode i dominates the
    column-k exponential at direction theta."""
    return float(np.real((sys.lam[i] - sys.lam[k]) * np.exp(1j * theta)))


def _min_gap(sys, k, theta):
    return min(_mode_gap(sys, k, i, theta) for i in range(sys.n) if i != k)


def _anchor_direction(sys: RankOneSystem, k: int, lo: float, hi: float):
    """Direction in (lo, hi) maximizing the least dominance gap of the other
    modes over column k; returns (theta, attained min gap)."""
    margin = 0.02 * (hi - lo)
    grid = np.linspace(lo + margin, hi - margin, 241)
    vals = [_min_gap(sys, k, t) for t in grid]
    best = int(np.argmax(vals))
    return float(grid[best]), float(vals[best])


def _version_window(sys: RankOneSystem, crit: CriticalData, nu: int, k: int):
    """Angular window (as real numbers) on which the sector-nu version of
    column k keeps its canonical asymptotics.

    The column changes only when the cut from pole k sweeps another pole,
    i.e. at the critical values arg(lam_j - lam_k); the window is bounded by
    the images of the two such values bracketing the sector's direction
    interval: (pi/2 - c_above, 3*pi/2 - c_below).
    """
    eta_hi = crit.eta_nu(nu)
    eta_lo = crit.eta_nu(nu + 1)
    eta_mid = 0.5 * (eta_hi + eta_lo)
    c_above, c_below = np.inf, -np.inf
    for j in range(sys.n):
        if j == k:
            continue
        a = float(np.angle(sys.lam[j] - sys.lam[k]))
        a = a + 2.0 * np.pi * np.floor((eta_mid - a) / (2.0 * np.pi))  # just below mid
        c_below = max(c_below, a)
        c_above = min(c_above, a + 2.0 * np.pi)
    return 0.5 * np.pi - c_above, 1.5 * np.pi - c_below


@dataclass(frozen=True)
class SectorSolution:
    """Evaluator for the fundamental solution with canonical asymptotics in
    the sector S(tau_nu - pi, tau_{nu+1}); angles are real numbers (the
    sector lives on the universal covering).

    Columns are stored as combinations (matrix ``combo``) of per-column
    anchored candidates: anchoring alone pins a column only up to solutions
    that are subdominant at the anchor direction, and the purification pass
    recorded in ``combo`` removes exactly that residual mixing.
    """

    sys: RankOneSystem
    nu: int
    tau_lo: float              # tau_nu - pi
    tau_hi: float              # tau_{nu+1}
    tol: float
    anchor_radius: float       # largest per-column anchor radius
    thetas: np.ndarray         # per-column anchor directions
    radii: np.ndarray          # per-column anchor radii
    anchors: tuple             # per-column scaled anchor values w_k(z0)
    turn_radius: float
    combo: np.ndarray          # column k of Y_nu = sum_q combo[q, k] cand_q
    method: str = "asymptotic-anchor+ode-transport"

    def eval(self, r: float, theta: float) -> np.ndarray:
        """Y_nu at z = r e^{i theta}, theta in the open sector window."""
        if not (self.tau_lo < theta < self.tau_hi):
            raise ValueError(f"arg z = {theta:.6g} outside sector "
                             f"({self.tau_lo:.6g}, {self.tau_hi:.6g})")
        cand = self._candidates_at(r, theta)
        return cand @ self.combo

    def _candidates_at(self, r: float, theta: float) -> np.ndarray:
        n = self.sys.n
        logz = np.log(r) + 1j * theta
        z = r * np.exp(1j * theta)
        out = np.zeros((n, n), dtype=complex)
        for q in range(n):
            w = self._candidate_scaled(q, r, theta)
            out[:, q] = w * np.exp(self.sys.lam[q] * z
                                   + self.sys.lambda_prime[q] * logz)
        return out

    def _candidate_scaled(self, q: int, r: float, theta: float) -> np.ndarray:
        """Scaled candidate w_q = y_q e^{-lam_q z} z^{-lp_q} transported from
        its anchor: inward along the anchor ray, arc at the turn radius,
        outward along the target ray."""
        ode = _ScaledColumnODE(self.sys, q)
        rt = min(self.turn_radius, r, self.radii[q])
        th0 = self.thetas[q]
        pts = [self.radii[q] * np.exp(1j * th0)]
        if rt < self.radii[q]:
            pts.append(rt * np.exp(1j * th0))
        pts.extend(arc_points(0.0, rt, th0, theta)[1:])
        if r > rt:
            pts.append(r * np.exp(1j * theta))
        w, _ = transport_polyline(ode, self.anchors[q], pts, self.tol)
        return w


class _ScaledColumnODE(RankOneODE):
    """ODE for w = y e^{-lam_k z} z^{-lp_k}: same rank-one shape with the
    spectral data shifted by the column's own exponents."""

    def __init__(self, sys, k):
        shifted = RankOneSystem(
            n=sys.n, lam=sys.lam - sys.lam[k],
            a1=sys.a1 - sys.lambda_prime[k] * np.eye(sys.n),
            lambda_prime=sys.lambda_prime - sys.lambda_prime[k])
        super().__init__(shifted)


def sector_solution(sys: RankOneSystem, crit: CriticalData | DirectionFrame,
                    nu: int, tol: float = 1e-11,
                    eval_radius_max: float = 25.0,
                    radius_scale: float = 1.0) -> SectorSolution:
    """Build the sector-nu fundamental solution evaluator.

    Per column: pick the direction in the sector where the other exponential
    modes dominate the most, then an anchor radius large enough that both the
    optimal-truncation remainder and its worst transported amplification stay
    below the anchor tolerance; verify with the smallest-term criterion.
    Columns whose best direction leaves some mode subdominant are corrected
    afterwards by the purification pass (see _purify).
    """
    if isinstance(crit, DirectionFrame):
        crit = crit.crit
    tau_lo = crit.tau_nu(nu) - np.pi
    tau_hi = crit.tau_nu(nu + 1)
    n = sys.n
    tol_anchor = max(tol * 1e-2, 1e-14)
    budget = -np.log(tol_anchor)
    thetas = np.empty(n)
    radii = np.empty(n)
    offenders = {}
    for k in range(n):
        th, gap = _anchor_direction(sys, k, tau_lo, tau_hi)
        thetas[k] = th
        sigma_k = float(np.min(np.abs(np.delete(sys.lam, k) - sys.lam[k])))
        radii[k] = ((budget + sys.max_separation * eval_radius_max) / sigma_k) \
            * radius_scale
        off = [i for i in range(n)
               if i != k and _mode_gap(sys, k, i, th) < 0.05 * sigma_k]
        if off:
            offenders[k] = off

    kmax = int(np.ceil(1.25 * max(
        float(np.min(np.abs(np.delete(sys.lam, k) - sys.lam[k]))) * radii[k]
        for k in range(n))) + 15)
    fs = formal_series(sys, min(kmax, MAX_FORMAL_TERMS))

    anchors = []
    for k in range(n):
        z0 = radii[k] * np.exp(1j * thetas[k])
        terms = fs.F[:, :, k] * z0 ** (-np.arange(fs.K + 1))[:, None]
        sizes = np.max(np.abs(terms), axis=1)
        lstar = int(np.argmin(sizes))
        if sizes[lstar] > tol_anchor * 10 or lstar >= fs.K:
            raise AnchorAccuracyInsufficient(
                f"column {k}: smallest series term {sizes[lstar]:.2e} at index "
                f"{lstar} of {fs.K} exceeds the anchor tolerance {tol_anchor:.1e}")
        w0 = np.sum(terms[: lstar + 1], axis=0)
        anchors.append(w0)

    turn = max(0.8, min(3.0, 8.0 / sys.max_separation))
    sol = SectorSolution(sys=sys, nu=nu, tau_lo=float(tau_lo),
                         tau_hi=float(tau_hi), tol=tol,
                         anchor_radius=float(np.max(radii)), thetas=thetas,
                         radii=radii, anchors=tuple(anchors),
                         turn_radius=float(turn),
                         combo=np.eye(n, dtype=complex))
    if offenders:
        _purify(sol, crit, fs, offenders)
    return sol


def _series_value(fs: FormalSeries, k: int, z: complex):
    """Optimally truncated scaled column value, with the smallest term as a
    remainder estimate."""
    terms = fs.F[:, :, k] * z ** (-np.arange(fs.K + 1))[:, None]
    sizes = np.max(np.abs(terms), axis=1)
    lstar = int(np.argmin(sizes))
    return np.sum(terms[: lstar + 1], axis=0), float(sizes[lstar])


def _purify(sol: SectorSolution, crit: CriticalData, fs: FormalSeries,
            offenders: dict):
    """Remove residual wrong-version content from anchored columns.

    A column anchored where mode i stays subdominant may differ from the
    requested sector's column by an order-one multiple of solution i.  The
    sector's version is characterized by matching the asymptotic series at
    directions of its maximal window where mode i dominates, so the residual
    against the truncated series is measured there, decomposed against the
    candidate basis, and the offending component subtracted.  Sweeping a few
    times contracts the cross-talk between simultaneous impurities.
    """
    sys = sol.sys
    n = sys.n
    visibility = 30.0  # exponent window within which modes coexist in float64

    def extraction_direction(k, i):
        w_lo, w_hi = _version_window(sys, crit, sol.nu, k)
        pad = 0.03 * (w_hi - w_lo)
        grid = np.linspace(w_lo + pad, w_hi - pad, 241)
        r_star = float(sol.radii[k])
        best, best_gap = None, 0.0
        for t in grid:
            gap = _mode_gap(sys, k, i, t)
            if gap <= 0.0:
                continue
            # mode i must not fall too far below the top mode, or the solve
            # cannot see it at all
            deficit = max(_mode_gap(sys, i, q, t) for q in range(n) if q != i)
            if deficit * r_star > visibility:
                continue
            if gap > best_gap:
                best, best_gap = t, gap
        if best is None:
            raise AnchorAccuracyInsufficient(
                f"column {k}: no direction exposes the mode of pole {i}")
        return best, r_star

    for _ in range(3):
        worst = 0.0
        for k, offs in offenders.items():
            for i in offs:
                th_star, r_star = extraction_direction(k, i)
                z_star = r_star * np.exp(1j * th_star)
                logz = np.log(r_star) + 1j * th_star
                wmat = np.stack([sol._candidate_scaled(q, r_star, th_star)
                                 for q in range(n)], axis=1)
                # exponent-safe scaling: measure everything relative to the
                # most dominant mode at the extraction direction
                expo = sys.lam * z_star + sys.lambda_prime * logz
                top = int(np.argmax(expo.real))
                ratio = np.exp(expo - expo[top])
                w_ser, _ = _series_value(fs, k, z_star)
                delta = (wmat * ratio[None, :]) @ sol.combo[:, k] \
                    - w_ser * ratio[k]
                # decompose only against modes that are numerically alive at
                # z*; the contaminated column itself drops out here
                vis = [q for q in range(n)
                       if (expo[q] - expo[top]).real > -34.0]
                gamma, *_ = np.linalg.lstsq(wmat[:, vis], delta, rcond=None)
                if i not in vis:
                    continue
                eps = gamma[vis.index(i)] * np.exp(expo[top] - expo[i])
                sol.combo[:, k] -= eps * sol.combo[:, i]
                worst = max(worst, abs(eps))
        if worst < 1e-13:
            break


def _eval_radius_cap(sys: RankOneSystem) -> float:
    return max(25.0, 1.2 * 14.0 / sys.max_separation)


def stokes_direct(sys: RankOneSystem, crit: CriticalData | DirectionFrame,
                  nu: int, tol: float = 1e-11, return_spread: bool = False):
    """Stokes matrix S_nu from matching the sector solutions nu and nu + mu
    on their overlap: solve Y_nu(z) S = Y_{nu+mu}(z) at several radii on the
    overlap bisector and average; the inter-point spread is the error gauge.
    """
    if isinstance(crit, DirectionFrame):
        crit = crit.crit
    cap = _eval_radius_cap(sys)
    sol_a = sector_solution(sys, crit, nu, tol, eval_radius_max=cap)
    sol_b = sector_solution(sys, crit, nu + crit.mu, tol, eval_radius_max=cap)
    return _match_on_overlap(sys, crit, nu, sol_a, sol_b, return_spread)


def stokes_pair(sys: RankOneSystem, crit: CriticalData | DirectionFrame,
                nu: int, tol: float = 1e-11):
    """(S_nu, S_{nu+mu}) sharing the middle sector solution; the second
    matrix is the one whose inverse the closed-form route reports."""
    if isinstance(crit, DirectionFrame):
        crit = crit.crit
    cap = _eval_radius_cap(sys)
    sol_a = sector_solution(sys, crit, nu, tol, eval_radius_max=cap)
    sol_b = sector_solution(sys, crit, nu + crit.mu, tol, eval_radius_max=cap)
    sol_c = sector_solution(sys, crit, nu + crit.m, tol, eval_radius_max=cap)
    s_nu = _match_on_overlap(sys, crit, nu, sol_a, sol_b)
    s_nu_mu = _match_on_overlap(sys, crit, nu + crit.mu, sol_b, sol_c)
    return s_nu, s_nu_mu


def _match_on_overlap(sys, crit, nu, sol_a, sol_b, return_spread=False):
    t_lo = crit.tau_nu(nu)
    t_hi = crit.tau_nu(nu + 1)
    theta = 0.5 * (t_lo + t_hi)
    smax = sys.max_separation
    radii = np.geomspace(4.0 / smax, 14.0 / smax, OVERLAP_SAMPLES)
    radii = np.maximum(radii, 0.75)
    mats = []
    for r in radii:
        ya = sol_a.eval(r, theta)
        yb = sol_b.eval(r, theta)
        mats.append(np.linalg.solve(ya, yb))
    mats = np.array(mats)
    s = np.mean(mats, axis=0)
    spread = float(np.max(np.abs(mats - s[None])))
    if spread > OVERLAP_SPREAD_LIMIT:
        raise OverlapConditioning(spread)
    if return_spread:
        return s, spread
    return s


# ---------------------------------------------------------------------------
# Laplace-integral evaluation of sector columns
# ---------------------------------------------------------------------------

_GL_NODES = 24
_gl_x, _gl_w = np.polynomial.legendre.leggauss(_GL_NODES)


def _gl_panels(f, a: float, b: float, max_phase: float):
    """Integrate a smooth complex function over [a, b] with Gauss-Legendre
    panels small enough that the integrand oscillates slowly per panel."""
    npan = max(1, int(np.ceil((b - a) / max(max_phase, 1e-3))))
    total = np.zeros_like(f(np.array([0.5 * (a + b)]))[0])
    for i in range(npan):
        lo = a + (b - a) * i / npan
        hi = a + (b - a) * (i + 1) / npan
        x = 0.5 * (hi - lo) * _gl_x + 0.5 * (hi + lo)
        vals = f(x)
        total = total + 0.5 * (hi - lo) * np.einsum("q,q...->...", _gl_w, vals)
    return total


def _circle_piece(basis, lam_k, rho, eta, z, which: str):
    """Integral over the full circle |u| = rho from arg u = eta - 2 pi to
    eta of e^{z lambda} times the requested local object."""

    def integrand(phis):
        out = np.zeros((phis.size, basis.n), dtype=complex)
        for q, phi in enumerate(phis):
            u = rho * np.exp(1j * phi)
            logu = np.log(rho) + 1j * phi
            if which == "psi_generic":
                a = -basis.lp - 1.0
                val = loc._eval_series(basis.sing_series, u) * np.exp(a * logu)
            else:  # singular column of the nonnegative-resonant case
                e = -basis.case.n_res - 1
                val = loc._eval_series(basis.psi_k_series, u) * logu \
                    + loc._eval_series(basis.sing_series, u) * np.exp(e * logu)
            out[q] = val * 1j * u * np.exp(z * (lam_k + u))
        return out

    phase = abs(z) * rho + abs(basis.lp) + 2.0
    return _gl_panels(integrand, eta - 2 * np.pi, eta, max_phase=6.0 / phase)


def _edge_piece(sys, basis, eta, z, rho, start_value, tol, max_steps=4000):
    """Integral of e^{z lambda} v(lambda) along the ray lambda_k + s e^{i eta},
    s from rho to infinity, where v is the solution with value start_value at
    s = rho, continued stepwise; each step is integrated by panels."""
    from .stepping import FuchsianODE

    ode = FuchsianODE(sys)
    direction = np.exp(1j * eta)
    lam_k = basis.lam_k
    damping = -np.real(z * direction)
    if damping <= 0.0:
        raise QuadratureNotConverged("z outside the convergent half plane")
    s = rho
    y = np.array(start_value, dtype=complex)
    total = np.zeros(basis.n, dtype=complex)
    scale = 0.0
    for _ in range(max_steps):
        lam0 = lam_k + s * direction
        h = STEP_FRACTION * ode.singularity_distance(lam0)
        coeffs = _step_coeffs(ode, lam0, y, 38)

        def seg(ts):
            # ts are offsets along the ray within [0, h]
            out = np.zeros((ts.size, basis.n), dtype=complex)
            for q, t in enumerate(ts):
                du = t * direction
                val = coeffs[-1].copy()
                for c in coeffs[-2::-1]:
                    val = c + du * val
                out[q] = val * np.exp(z * (lam0 + du))
            return out

        total = total + direction * _gl_panels(seg, 0.0, h,
                                               max_phase=6.0 / max(abs(z), 1.0))
        du = h * direction
        y = coeffs[-1].copy()
        for c in coeffs[-2::-1]:
            y = c + du * y
        s += h
        scale = max(scale, float(np.max(np.abs(total))))
        tail = float(np.max(np.abs(y))) \
            * float(np.abs(np.exp(z * (lam_k + s * direction)))) / damping
        if tail < tol * max(scale, 1e-300):
            return total
    raise QuadratureNotConverged("edge integral did not reach its damping tail")


def _step_coeffs(ode, t0, y0, order):
    bs = ode.coeff_series(t0, order)
    coeffs = [np.array(y0, dtype=complex)]
    for m in range(order - 1):
        acc = bs[0] @ coeffs[m]
        for l in range(1, m + 1):
            acc += bs[l] @ coeffs[m - l]
        coeffs.append(acc / (m + 1))
    return coeffs


def laplace_column(sys: RankOneSystem, frm: DirectionFrame, bases, k: int,
                   z: complex, tol: float = 1e-10) -> np.ndarray:
    """Column k of the sector solution as a Laplace integral over the contour
    attached to pole k (loop around the cut, or the cut itself in the cases
    whose distinguished solution is analytic there)."""
    eta = frm.eta
    z = complex(z)
    if np.real(z * np.exp(1j * eta)) >= 0.0:
        raise QuadratureNotConverged("z outside the half plane Re(z e^{i eta}) < 0")
    basis = bases[k]
    lam_k = basis.lam_k
    rho = 0.9 * basis.radius
    kind = basis.case.kind

    def edge_point(phi):
        args = np.zeros(sys.n)
        args[k] = phi
        return BranchPoint(value=lam_k + rho * np.exp(1j * eta), args=args)

    if kind in ("jordan", "resonant_neg"):
        # integral along the cut itself of the analytic distinguished solution
        def inner(ss):
            out = np.zeros((ss.size, basis.n), dtype=complex)
            for q, s in enumerate(ss):
                u = s * np.exp(1j * eta)
                if kind == "jordan":
                    val = loc._eval_series(basis.psi_k_series, u)
                else:
                    e = -basis.case.n_res - 1
                    val = loc._eval_series(basis.sing_series, u) * u ** e
                out[q] = val * np.exp(z * (lam_k + u))
            return out

        inner_val = np.exp(1j * eta) * _gl_panels(inner, 0.0, rho,
                                                  max_phase=6.0 / max(abs(z), 1.0))
        p = edge_point(eta)
        if kind == "jordan":
            v0 = loc._eval_series(basis.psi_k_series, rho * np.exp(1j * eta))
        else:
            e = -basis.case.n_res - 1
            v0 = loc._eval_series(basis.sing_series, rho * np.exp(1j * eta)) \
                * (rho * np.exp(1j * eta)) ** e
        outer_val = _edge_piece(sys, basis, eta, z, rho, v0, tol)
        return inner_val + outer_val

    # loop contour: full circle at radius rho plus the two edges of the cut
    if kind == "generic":
        which = "psi_generic"
        p_l = edge_point(eta - 2 * np.pi)
        p_r = edge_point(eta)
        v_l = loc.eval_psi_k(basis, p_l)
        v_r = loc.eval_psi_k(basis, p_r)
    else:  # resonant_nonneg: the singular column
        which = "sing_column"
        p_l = edge_point(eta - 2 * np.pi)
        p_r = edge_point(eta)
        v_l = loc.eval_columns(basis, p_l)[:, k]
        v_r = loc.eval_columns(basis, p_r)[:, k]

    circ = _circle_piece(basis, lam_k, rho, eta, z, which)
    right = _edge_piece(sys, basis, eta, z, rho, v_r, tol)
    left = _edge_piece(sys, basis, eta, z, rho, v_l, tol)
    return (circ + right - left) / (2j * np.pi)
