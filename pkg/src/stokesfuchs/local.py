"""Frobenius fundamental systems at the poles of the spectral-plane system.

At each pole the residue matrix has a single nonzero row, so its spectrum is
{0 (n-1 times), -lp-1} with lp the matching diagonal entry of A1.  The local
solution structure therefore splits into four cases on lp:

* generic (lp not an integer): one power-singular column with exponent
  -lp-1, normalized to Gamma(lp+1) e_k, and n-1 analytic columns;
* jordan (lp == -1): the residue is nilpotent; one column carries a
  logarithm whose factor is the analytic solution normalized to -e_k;
* resonant_nonneg (lp == N >= 0): the distinguished column has a pole part
  of degree N+1 with leading N! e_k plus a logarithm whose factor is a
  combination of the analytic columns with resonance coefficients r_j;
* resonant_neg (lp == N <= -2): the distinguished column vanishes to order
  -N-1 (leading (-1)^N/(-N-1)! e_k) and the *other* columns may carry
  logarithms with row coefficients r_j; the log-singular solution exists
  only when that row is nonzero.

All series are produced by one shifted recursion
    [(l + rho) I - B_k] a_l = (convolution of lower coefficients)
whose matrix has closed-form inverse thanks to the single-row structure.
Resonant obstructions are resolved exactly at the single blocked order, and
the free coefficient there is frozen to zero so rebuilding is reproducible.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as cgamma

from .core import BranchPoint, RankOneSystem
from .errors import NearResonance, OutOfRadius, SeriesDivergence

RADIUS_FRACTION = 0.4
DEFAULT_ORDER = 80
ZERO_TEST_REL = 1e-10
NEAR_RESONANCE_TOL = 1e-6


@dataclass(frozen=True)
class CaseTag:
    kind: str            # "generic" | "jordan" | "resonant_nonneg" | "resonant_neg"
    n_res: int | None    # the integer value of lp in the resonant cases

    def __str__(self):
        if self.kind in ("resonant_nonneg", "resonant_neg"):
            return f"{self.kind}({self.n_res})"
        return self.kind

    @property
    def is_integer(self) -> bool:
        return self.kind != "generic"


def classify(lp: complex) -> CaseTag:
    """Exact case classification of a diagonal entry (no rounding: a value
    counts as an integer only if it equals one exactly)."""
    lp = complex(lp)
    if lp.imag == 0.0 and lp.real == int(lp.real):
        n = int(lp.real)
        if n == -1:
            return CaseTag("jordan", -1)
        if n >= 0:
            return CaseTag("resonant_nonneg", n)
        return CaseTag("resonant_neg", n)
    dist = abs(lp.imag) + abs(lp.real - round(lp.real))
    if dist < NEAR_RESONANCE_TOL:
        warnings.warn(
            f"diagonal entry {lp} is within {dist:.2e} of an integer; "
            "series conditioning may degrade", NearResonance, stacklevel=2)
    return CaseTag("generic", None)


@dataclass(frozen=True)
class LocalBasis:
    """Truncated Frobenius data at one pole; immutable after construction."""

    k: int
    case: CaseTag
    lp: complex
    order: int
    lam_k: complex
    radius: float
    reg_cols: np.ndarray        # (n, order, n); slot [k] unused
    sing_series: np.ndarray     # (order, n): power factor of the k-th column
                                # (jordan: the regular part of the log column)
    psi_k_series: np.ndarray    # (order, n): series of the Psi_k factor
    r_vec: np.ndarray | None    # resonant_nonneg column coefficients
    r_row: np.ndarray | None    # resonant_neg row coefficients
    poly_p: np.ndarray | None   # (N+1, n) pole-part polynomial (resonant_nonneg)
    epsilon: int                # 0 when the distinguished solution vanishes
    degenerate: bool            # jordan case with identically zero residue row
    sing_reg_index: int | None  # resonant_neg: column whose rescaling freezes
                                # the regular part of the log-singular solution
    tail_bound: float           # truncation estimate at `radius`

    @property
    def n(self) -> int:
        return self.sing_series.shape[1]

    def tail_at(self, r: float) -> float:
        return _tail_estimate(self._all_series(), r)

    def _all_series(self):
        blocks = [self.sing_series, self.psi_k_series]
        blocks.extend(self.reg_cols[j] for j in range(self.n) if j != self.k)
        return np.concatenate(blocks, axis=1)


def _tail_estimate(coeffs: np.ndarray, r: float) -> float:
    norms = np.max(np.abs(coeffs), axis=1)
    order = norms.size
    ls = np.arange(order)
    terms = norms * r ** ls
    last = float(np.max(terms[-5:]))
    prev = float(np.max(terms[-10:-5])) if order >= 10 else np.inf
    ratio = last / prev if prev > 0 else 0.0
    if ratio >= 0.8 ** 5:
        return np.inf
    q = ratio ** 0.2
    return last * q / (1.0 - q) + 1e-3 * last


def _solve_shifted(a1_row: np.ndarray, k: int, lp: complex, c: complex,
                   b: np.ndarray) -> np.ndarray:
    """Solve [c I - B_k] x = b using the single-row structure of B_k.

    Rows other than k read c x_i = b_i; row k reads
    (c + lp + 1) x_k = b_k - sum_{i != k} a1[k, i] x_i.
    """
    x = b / c
    x[k] = 0.0
    x[k] = (b[k] - a1_row @ x) / (c + lp + 1.0)
    return x


def build_local_basis(sys: RankOneSystem, k: int, order: int = DEFAULT_ORDER,
                      _retries: int = 2) -> LocalBasis:
    """Construct the truncated local fundamental system at pole k.

    Raises SeriesDivergence when the geometric tail estimate at the validity
    radius stays above 1e-6 even after doubling the order twice.
    """
    n = sys.n
    lp = complex(sys.lambda_prime[k])
    case = classify(lp)
    if case.kind in ("resonant_nonneg", "resonant_neg"):
        order = max(order, 10, abs(case.n_res) + 5, case.n_res + 6)
    order = max(order, 10)

    a1_row = np.array(sys.a1[k, :], dtype=complex)
    a1_row[k] = 0.0  # off-diagonal part; the diagonal enters through lp
    # Taylor data of the non-local poles: sum_{i != k} B_i / (u - delta_i)
    # expands as sum_m D_m u^m with D_m row i equal to (A1 + I)[i] / delta_i^{m+1}
    dmats = np.zeros((order, n, n), dtype=complex)
    a1p = sys.a1 + np.eye(n)
    for i in range(n):
        if i == k:
            continue
        delta = sys.lam[i] - sys.lam[k]
        dmats[:, i, :] = a1p[i, :][None, :] / delta ** (np.arange(1, order + 1))[:, None]

    def conv(coeffs, l):
        # sum_{m < l} D_{l-1-m} a_m
        acc = np.zeros(n, dtype=complex)
        for m in range(l):
            acc += dmats[l - 1 - m] @ coeffs[m]
        return acc

    def run_series(a0, rho):
        """Solve the shifted recursion with exponent rho (no obstruction)."""
        coeffs = np.zeros((order, n), dtype=complex)
        coeffs[0] = a0
        for l in range(1, order):
            coeffs[l] = _solve_shifted(a1_row, k, lp, l + rho, conv(coeffs, l))
        return coeffs

    reg_cols = np.zeros((n, order, n), dtype=complex)
    r_vec = None
    r_row = None
    poly_p = None
    epsilon = 1
    degenerate = False
    sing_reg_index = None
    zero_thresh = ZERO_TEST_REL * sys.a1_scale

    if case.kind == "generic":
        e = -lp - 1.0
        for j in range(n):
            if j == k:
                continue
            v = np.zeros(n, dtype=complex)
            v[j] = 1.0
            v[k] = -sys.a1[k, j] / (lp + 1.0)
            reg_cols[j] = run_series(v, 0.0)
        sing = run_series(cgamma(lp + 1.0) * _unit(n, k), e)
        psi_k = sing

    elif case.kind == "jordan":
        degenerate = bool(np.max(np.abs(a1_row)) == 0.0)
        psi0 = -_unit(n, k)
        psi_k = run_series(psi0, 0.0)
        if degenerate:
            # the pole is an ordinary point; every solution is analytic
            for j in range(n):
                if j == k:
                    continue
                reg_cols[j] = run_series(_unit(n, j), 0.0)
            sing = np.zeros((order, n), dtype=complex)
            epsilon = 1
        else:
            # the kernel of the residue contains e_k, so only n-2 analytic
            # starts besides Psi_k exist; the pivot column is Psi_k itself
            p = int(np.argmax(np.abs(a1_row)))
            reg_cols[p] = psi_k
            for j in range(n):
                if j in (k, p):
                    continue
                v = _unit(n, j) - (sys.a1[k, j] / sys.a1[k, p]) * _unit(n, p)
                reg_cols[j] = run_series(v, 0.0)
            g = np.conj(a1_row) / float(np.real(a1_row @ np.conj(a1_row)))
            # regular part of the log column: u h' = B h + (tail) h - Psi_k
            hcoeffs = np.zeros((order, n), dtype=complex)
            hcoeffs[0] = g
            for l in range(1, order):
                rhs = conv(hcoeffs, l) - psi_k[l]
                hcoeffs[l] = _solve_shifted(a1_row, k, lp, float(l), rhs)
            sing = hcoeffs

    elif case.kind == "resonant_nonneg":
        nres = case.n_res
        e = -(nres + 1.0)
        unit_k = _unit(n, k)
        vlead = {}
        for j in range(n):
            if j == k:
                continue
            v = _unit(n, j)
            v[k] = -sys.a1[k, j] / (nres + 1.0)
            vlead[j] = v
            reg_cols[j] = run_series(v, 0.0)
        b = np.zeros((order, n), dtype=complex)
        b[0] = _factorial(nres) * unit_k
        r = np.zeros(n, dtype=complex)
        for l in range(1, order):
            rhs = conv(b, l)
            if l > nres + 1:
                rhs = rhs - reg_block(reg_cols, k, r, l - nres - 1)
            if l == nres + 1:
                # blocked order: the off-row components fix the resonance
                # coefficients, the free kernel component is frozen to zero
                for i in range(n):
                    if i != k:
                        r[i] = rhs[i]
                rhs_k = rhs[k] - sum(r[j] * vlead[j][k] for j in range(n) if j != k)
                b[l] = (rhs_k / (nres + 1.0)) * unit_k
                continue
            b[l] = _solve_shifted(a1_row, k, lp, l + e, rhs)
        if float(np.max(np.abs(r))) <= zero_thresh:
            r[:] = 0.0
            epsilon = 0
        r_vec = r
        sing = b
        psi_k = np.einsum("j,jlm->lm", r, reg_cols)
        poly_p = b[: nres + 1].copy()

    else:  # resonant_neg
        nres = case.n_res
        e = float(-nres - 1)   # integer >= 1
        lead = ((-1.0) ** nres / _factorial(-nres - 1)) * _unit(n, k)
        b = run_series(lead, e)
        sing = b
        psi_k = b
        w = -np.array(a1_row, dtype=complex) / e
        w[k] = 1.0
        r = np.zeros(n, dtype=complex)
        for j in range(n):
            if j == k:
                continue
            v = _unit(n, j)
            v[k] = -sys.a1[k, j] / (nres + 1.0)
            coeffs = np.zeros((order, n), dtype=complex)
            coeffs[0] = v
            for l in range(1, order):
                rhs = conv(coeffs, l)
                if l > e:
                    rhs = rhs - r[j] * b[int(l - e)]
                if l == int(e):
                    r[j] = (w @ rhs) / (w @ b[0])
                    rhs = rhs - r[j] * b[0]
                    x = rhs / l
                    x[k] = 0.0  # frozen resonant gauge
                    coeffs[l] = x
                    continue
                coeffs[l] = _solve_shifted(a1_row, k, lp, float(l), rhs)
            reg_cols[j] = coeffs
        if float(np.max(np.abs(r))) <= zero_thresh:
            r[:] = 0.0
            epsilon = 0
        else:
            js = [j for j in range(n) if j != k]
            sing_reg_index = max(js, key=lambda j: abs(r[j]))
        r_row = r

    radius = RADIUS_FRACTION * sys.pole_distance(k)
    blocks = [sing, psi_k] + [reg_cols[j] for j in range(n) if j != k]
    tail = _tail_estimate(np.concatenate(blocks, axis=1), radius)
    if not np.isfinite(tail) or tail > 1e-6 * sys.a1_scale:
        if _retries > 0:
            return build_local_basis(sys, k, 2 * order, _retries - 1)
        raise SeriesDivergence(
            f"series tail {tail:.2e} at radius {radius:.3g} for pole {k}; "
            "increase the order or shrink the radius")
    return LocalBasis(k=k, case=case, lp=lp, order=order, lam_k=complex(sys.lam[k]),
                      radius=radius, reg_cols=reg_cols, sing_series=sing,
                      psi_k_series=psi_k, r_vec=r_vec, r_row=r_row, poly_p=poly_p,
                      epsilon=epsilon, degenerate=degenerate,
                      sing_reg_index=sing_reg_index, tail_bound=float(tail))


def reg_block(reg_cols, k, weights, l):
    """sum_j weights[j] * reg_cols[j][l] over the analytic columns."""
    acc = np.zeros(reg_cols.shape[2], dtype=complex)
    for j in range(reg_cols.shape[0]):
        if j != k and weights[j] != 0.0:
            acc += weights[j] * reg_cols[j][l]
    return acc


def _unit(n, k):
    v = np.zeros(n, dtype=complex)
    v[k] = 1.0
    return v


def _factorial(m: int) -> float:
    out = 1.0
    for i in range(2, m + 1):
        out *= i
    return out


def _eval_series(coeffs: np.ndarray, u: complex, deriv: bool = False):
    """Horner evaluation of sum_l coeffs[l] u^l (and its derivative)."""
    val = np.zeros(coeffs.shape[1], dtype=complex)
    for c in coeffs[::-1]:
        val = val * u + c
    if not deriv:
        return val
    dval = np.zeros(coeffs.shape[1], dtype=complex)
    order = coeffs.shape[0]
    for l in range(order - 1, 0, -1):
        dval = dval * u + l * coeffs[l]
    return val, dval


def _branch_data(basis: LocalBasis, p: BranchPoint):
    u = p.value - basis.lam_k
    if abs(u) >= basis.radius:
        raise OutOfRadius(
            f"|lambda - pole| = {abs(u):.3g} >= radius {basis.radius:.3g}")
    logu = np.log(abs(u)) + 1j * p.args[basis.k]
    return u, logu


def eval_columns(basis: LocalBasis, p: BranchPoint, deriv: bool = False):
    """All n fundamental columns at p (optionally with lambda-derivatives).

    Branches follow the window determination stored in p: powers are
    exp(a * (ln|u| + i arg)) and the logarithm is ln|u| + i arg.
    """
    u, logu = _branch_data(basis, p)
    n = basis.n
    k = basis.k
    cols = np.zeros((n, n), dtype=complex)
    dcols = np.zeros((n, n), dtype=complex) if deriv else None

    def put(idx, val, dval=None):
        cols[:, idx] = val
        if deriv:
            dcols[:, idx] = dval

    kind = basis.case.kind
    for j in range(n):
        if j == k:
            continue
        sv = _eval_series(basis.reg_cols[j], u, deriv)
        if kind == "resonant_neg" and basis.r_row[j] != 0.0:
            val, dval = (sv if deriv else (sv, None))
            bval = _eval_series(basis.sing_series, u, deriv)
            e = -basis.case.n_res - 1
            if deriv:
                bv, bd = bval
                psi = bv * u ** e
                dpsi = (bd + e * bv / u) * u ** e
                put(j, basis.r_row[j] * psi * logu + val,
                    basis.r_row[j] * (dpsi * logu + psi / u) + dval)
            else:
                psi = bval * u ** e
                put(j, basis.r_row[j] * psi * logu + sv)
        else:
            if deriv:
                put(j, sv[0], sv[1])
            else:
                put(j, sv)

    if kind == "generic":
        a = -basis.lp - 1.0
        upow = np.exp(a * logu)
        sv = _eval_series(basis.sing_series, u, deriv)
        if deriv:
            put(k, sv[0] * upow, (sv[1] + a * sv[0] / u) * upow)
        else:
            put(k, sv * upow)
    elif kind == "jordan":
        pv = _eval_series(basis.psi_k_series, u, deriv)
        hv = _eval_series(basis.sing_series, u, deriv)
        if basis.degenerate:
            if deriv:
                put(k, pv[0], pv[1])
            else:
                put(k, pv)
        elif deriv:
            put(k, pv[0] * logu + hv[0], pv[1] * logu + pv[0] / u + hv[1])
        else:
            put(k, pv * logu + hv)
    elif kind == "resonant_nonneg":
        e = -basis.case.n_res - 1
        upow = u ** e
        pv = _eval_series(basis.psi_k_series, u, deriv)
        bv = _eval_series(basis.sing_series, u, deriv)
        if deriv:
            sing = bv[0] * upow
            dsing = (bv[1] + e * bv[0] / u) * upow
            put(k, pv[0] * logu + sing, pv[1] * logu + pv[0] / u + dsing)
        else:
            put(k, pv * logu + bv * upow)
    else:  # resonant_neg
        e = -basis.case.n_res - 1
        upow = u ** e
        bv = _eval_series(basis.sing_series, u, deriv)
        if deriv:
            put(k, bv[0] * upow, (bv[1] + e * bv[0] / u) * upow)
        else:
            put(k, bv * upow)

    return (cols, dcols) if deriv else cols


def eval_fundamental(basis: LocalBasis, p: BranchPoint) -> np.ndarray:
    return eval_columns(basis, p)


def eval_psi_k(basis: LocalBasis, p: BranchPoint) -> np.ndarray:
    """The distinguished solution attached to the pole (summary form)."""
    u, logu = _branch_data(basis, p)
    kind = basis.case.kind
    if kind == "generic":
        a = -basis.lp - 1.0
        return _eval_series(basis.sing_series, u) * np.exp(a * logu)
    if kind in ("jordan", "resonant_nonneg"):
        return _eval_series(basis.psi_k_series, u)
    e = -basis.case.n_res - 1
    return _eval_series(basis.sing_series, u) * u ** e


def eval_psi_sing(basis: LocalBasis, p: BranchPoint):
    """The normalized singular solution; None when it vanishes identically
    (resonant_neg with zero resonance row, or a degenerate jordan pole)."""
    kind = basis.case.kind
    if kind == "generic":
        return eval_psi_k(basis, p)
    if kind == "jordan":
        if basis.degenerate:
            return None
        cols = eval_columns(basis, p)
        return cols[:, basis.k]
    if kind == "resonant_nonneg":
        cols = eval_columns(basis, p)
        return cols[:, basis.k]
    if basis.epsilon == 0:
        return None
    j = basis.sing_reg_index
    cols = eval_columns(basis, p)
    return cols[:, j] / basis.r_row[j]


def extract_connection(basis: LocalBasis, x: np.ndarray) -> complex:
    """Connection coefficient from the decomposition vector of a foreign
    solution in this pole's fundamental basis."""
    kind = basis.case.kind
    if kind == "resonant_neg":
        mask = np.ones(basis.n, dtype=bool)
        mask[basis.k] = False
        return complex(np.sum(x[mask] * basis.r_row[mask]))
    if kind == "jordan" and basis.degenerate:
        return 0.0 + 0.0j
    return complex(x[basis.k])


def build_all_bases(sys: RankOneSystem, order: int = DEFAULT_ORDER):
    return [build_local_basis(sys, k, order) for k in range(sys.n)]
