"""Closed-form monodromy and Stokes data assembled from connection data.

Everything in this module is finite matrix algebra on the connection matrix:
monodromy matrices differing from the identity in a single row (or column,
for the dual family), their inverses, the two Stokes matrices, the one-ray
Stokes factors, trace invariants, and the conjugation that re-expresses the
connection matrix after a full turn of the cut direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .continuation import ConnectionMatrix, connection_coefficient
from .core import DirectionFrame, RankOneSystem, frame as make_frame
from .errors import Unavailable

TWO_PI_I = 2j * np.pi


def _is_integer(lp: complex) -> bool:
    lp = complex(lp)
    return lp.imag == 0.0 and lp.real == int(lp.real)


def alpha(lp: complex) -> complex:
    """Loop multiplier: e^{-2 pi i lp} - 1, degenerating to 2 pi i at
    integers (the log derivative takes over the power jump)."""
    if _is_integer(lp):
        return TWO_PI_I
    return np.exp(-TWO_PI_I * lp) - 1.0


def beta(lp: complex) -> complex:
    """Clockwise-loop multiplier; always equals -e^{2 pi i lp} alpha(lp)."""
    if _is_integer(lp):
        return -TWO_PI_I
    return np.exp(TWO_PI_I * lp) - 1.0


def monodromy_matrices(cmat: ConnectionMatrix | np.ndarray, lambda_prime):
    """Monodromy matrices {M_k} of the solution family Psi for small
    counter-clockwise loops, plus closed-form inverses.

    M_k = I + alpha_k e_k row_k(C); only row k differs from the identity.
    """
    c = cmat.c if isinstance(cmat, ConnectionMatrix) else np.asarray(cmat)
    lp = np.asarray(lambda_prime)
    n = c.shape[0]
    ms, ms_inv = [], []
    for k in range(n):
        a, b = alpha(lp[k]), beta(lp[k])
        m = np.eye(n, dtype=complex)
        m[k, :] += a * c[k, :]
        mi = np.eye(n, dtype=complex)
        mi[k, :] += b * c[k, :]
        ms.append(m)
        ms_inv.append(mi)
    return ms, ms_inv


def mstar_matrices(cmat: ConnectionMatrix | np.ndarray, lambda_prime, a1_eigs):
    """Monodromy matrices {M_k*} of the dual family with column structure.

    Available only when no eigenvalue of the residue matrix is within 1e-8
    of a negative integer; raises Unavailable otherwise.
    """
    eigs = np.asarray(a1_eigs)
    for mu in eigs:
        r = round(float(mu.real))
        if r <= -1 and abs(mu - r) < 1e-8:
            raise Unavailable(mu)
    c = cmat.c if isinstance(cmat, ConnectionMatrix) else np.asarray(cmat)
    lp = np.asarray(lambda_prime)
    n = c.shape[0]
    out = []
    for k in range(n):
        a = alpha(lp[k])
        m = np.eye(n, dtype=complex)
        m[:, k] += a * c[:, k]
        out.append(m)
    return out


def _alpha_vec(lambda_prime):
    return np.array([alpha(lp) for lp in lambda_prime])


def stokes_plus(cmat: ConnectionMatrix | np.ndarray, lambda_prime,
                frm: DirectionFrame) -> np.ndarray:
    """First Stokes matrix from connection coefficients:
    entry (j, k) is e^{2 pi i lp_k} alpha_k c_{jk} where cut j lies right of
    cut k, 1 on the diagonal, 0 elsewhere."""
    c = cmat.c if isinstance(cmat, ConnectionMatrix) else np.asarray(cmat)
    lp = np.asarray(lambda_prime)
    a = _alpha_vec(lp)
    n = c.shape[0]
    s = np.eye(n, dtype=complex)
    for j in range(n):
        for k in range(n):
            if j != k and frm.dominates[j, k]:
                s[j, k] = np.exp(TWO_PI_I * lp[k]) * a[k] * c[j, k]
    return s


def stokes_minus_inv(cmat: ConnectionMatrix | np.ndarray, lambda_prime,
                     frm: DirectionFrame) -> np.ndarray:
    """Inverse of the second Stokes matrix:
    entry (j, k) is -e^{2 pi i (lp_k - lp_j)} alpha_k c_{jk} where cut j lies
    left of cut k, 1 on the diagonal, 0 elsewhere."""
    c = cmat.c if isinstance(cmat, ConnectionMatrix) else np.asarray(cmat)
    lp = np.asarray(lambda_prime)
    a = _alpha_vec(lp)
    n = c.shape[0]
    s = np.eye(n, dtype=complex)
    for j in range(n):
        for k in range(n):
            if j != k and frm.dominates[k, j]:
                s[j, k] = -np.exp(TWO_PI_I * (lp[k] - lp[j])) * a[k] * c[j, k]
    return s


def stokes_factor(sys: RankOneSystem, frm: DirectionFrame, bases, nu: int,
                  tol: float = 1e-12) -> np.ndarray:
    """Stokes factor W_nu: unit diagonal, off-diagonal entries
    -alpha_k c_{jk} exactly at the pairs whose direction is the nu-th
    critical value, with the connection coefficients taken just below it."""
    n = sys.n
    w = np.eye(n, dtype=complex)
    hi = frm.crit.eta_nu(nu)
    lo = frm.crit.eta_nu(nu + 1)
    eta_mid = 0.5 * (hi + lo)
    frm_mid = make_frame(sys, eta_mid)
    for (j, k) in frm.pairs_at_critical(nu):
        cjk, _ = connection_coefficient(sys, frm_mid, bases, k, j, tol)
        w[j, k] = -alpha(sys.lambda_prime[k]) * cjk
    return w


def stokes_factor_product(sys: RankOneSystem, frm: DirectionFrame, bases,
                          tol: float = 1e-12):
    """The two factorizations across a half turn each:

    returns (W map, S_plus_from_factors, S_minus_inv_from_factors) where the
    first product runs over the mu factors above the frame's interval and
    the second over the next mu.
    """
    nu, mu, m = frm.nu, frm.mu, frm.m
    wmap = {}
    for off in range(1, m + 1):
        wmap[nu + off] = stokes_factor(sys, frm, bases, nu + off, tol)
    prod_hi = np.eye(sys.n, dtype=complex)
    for off in range(mu, 0, -1):
        prod_hi = prod_hi @ wmap[nu + off]
    s_plus = np.linalg.inv(prod_hi)
    prod_lo = np.eye(sys.n, dtype=complex)
    for off in range(m, mu, -1):
        prod_lo = prod_lo @ wmap[nu + off]
    s_minus_inv = prod_lo
    return wmap, s_plus, s_minus_inv


def trace_invariants(ms, lambda_prime, s_plus=None, s_minus_inv=None,
                     frm: DirectionFrame | None = None):
    """Numeric traces of M_k and M_j M_k next to their closed forms.

    Returns a dict with 'tr', 'tr_closed', 'tr_pair', 'tr_pair_closed' and
    the max absolute differences.
    """
    lp = np.asarray(lambda_prime)
    n = len(ms)
    tr = np.array([np.trace(m) for m in ms])
    tr_closed = np.array([n - 1 + np.exp(-TWO_PI_I * l) for l in lp])
    tr_pair = np.zeros((n, n), dtype=complex)
    tr_pair_closed = np.zeros((n, n), dtype=complex)
    for j in range(n):
        for k in range(n):
            tr_pair[j, k] = np.trace(ms[j] @ ms[k])
            base = n - 2 + np.exp(-TWO_PI_I * lp[j]) + np.exp(-TWO_PI_I * lp[k])
            if j == k:
                tr_pair_closed[j, k] = np.trace(ms[j] @ ms[j])
                continue
            if s_plus is None or frm is None:
                tr_pair_closed[j, k] = np.nan
            elif frm.dominates[j, k]:
                tr_pair_closed[j, k] = base - np.exp(-TWO_PI_I * lp[j]) \
                    * s_plus[j, k] * s_minus_inv[k, j]
            else:
                tr_pair_closed[j, k] = base - np.exp(-TWO_PI_I * lp[k]) \
                    * s_minus_inv[j, k] * s_plus[k, j]
    out = {
        "tr": tr, "tr_closed": tr_closed,
        "tr_pair": tr_pair, "tr_pair_closed": tr_pair_closed,
        "max_diff_single": float(np.max(np.abs(tr - tr_closed))),
    }
    if s_plus is not None and frm is not None:
        mask = ~np.eye(n, dtype=bool)
        out["max_diff_pair"] = float(np.max(np.abs((tr_pair - tr_pair_closed)[mask])))
    return out


def eta_shift(cmat: ConnectionMatrix | np.ndarray, lambda_prime) -> np.ndarray:
    """Connection matrix after replacing eta by eta - 2 pi:
    conjugation by e^{2 pi i diag(lambda_prime)}."""
    c = cmat.c if isinstance(cmat, ConnectionMatrix) else np.asarray(cmat)
    lp = np.asarray(lambda_prime)
    d = np.exp(TWO_PI_I * lp)
    return (c * d[None, :]) / d[:, None]


def monodromy_at_infinity(ms, frm: DirectionFrame):
    """Product of the small-loop matrices in cut order (rightmost cut first)
    and its spectrum, to be compared against {e^{-2 pi i mu}} over the
    eigenvalues mu of the residue matrix."""
    order = frm.order  # ascending dominance; order[0] has the rightmost cut
    m_inf = np.eye(len(ms), dtype=complex)
    for idx in order:
        m_inf = ms[idx] @ m_inf
    spectrum = np.sort_complex(np.linalg.eigvals(m_inf))
    return m_inf, spectrum


@dataclass(frozen=True)
class MonodromyData:
    """All connection-derived objects for one admissible direction."""

    lambda_prime: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    m: list                    # monodromy matrices
    m_inv: list
    m_star: list | None        # dual family, when available
    s_plus: np.ndarray
    s_minus_inv: np.ndarray
    w: dict                    # critical index -> Stokes factor
    traces: dict
    zero_rows: tuple
    zero_cols: tuple
    near_integer_eigenvalue: bool


def monodromy_data(sys: RankOneSystem, frm: DirectionFrame, bases,
                   cmat: ConnectionMatrix, with_factors: bool = True,
                   tol: float = 1e-12) -> MonodromyData:
    """Assemble the full monodromy record from a computed connection matrix."""
    lp = sys.lambda_prime
    ms, ms_inv = monodromy_matrices(cmat, lp)
    eigs = np.linalg.eigvals(sys.a1)
    try:
        mstar = mstar_matrices(cmat, lp, eigs)
    except Unavailable:
        mstar = None
    s_plus = stokes_plus(cmat, lp, frm)
    s_minus_inv = stokes_minus_inv(cmat, lp, frm)
    wmap = {}
    if with_factors:
        wmap, _, _ = stokes_factor_product(sys, frm, bases, tol)
    traces = trace_invariants(ms, lp, s_plus, s_minus_inv, frm)
    return MonodromyData(lambda_prime=np.array(lp), alpha=_alpha_vec(lp),
                         beta=np.array([beta(l) for l in lp]), m=ms,
                         m_inv=ms_inv, m_star=mstar, s_plus=s_plus,
                         s_minus_inv=s_minus_inv, w=wmap, traces=traces,
                         zero_rows=cmat.zero_rows, zero_cols=cmat.zero_cols,
                         near_integer_eigenvalue=cmat.near_integer_eigenvalue)
