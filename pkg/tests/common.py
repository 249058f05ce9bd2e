"""Shared construction helpers for the test suite."""

import numpy as np

import stokesfuchs as sf


def random_system(seed, n, a1_scale=0.5, min_sep=0.4, resonant=None):
    """Seeded random system: poles on the unit-scale plane with a separation
    floor, residue entries in the (scaled) unit disk.  `resonant` maps pole
    index -> exact integer diagonal value."""
    rng = np.random.default_rng(seed)
    while True:
        lam = rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)
        d = np.abs(lam[:, None] - lam[None, :])
        if np.min(d[~np.eye(n, dtype=bool)]) > min_sep:
            break
    a1 = (rng.uniform(-1, 1, (n, n)) + 1j * rng.uniform(-1, 1, (n, n))) * a1_scale
    if resonant:
        for k, v in resonant.items():
            a1[k, k] = complex(int(v))
    return sf.validate_system(lam, a1)


def has_integer_spectrum_issue(sys, tol=1e-3):
    """True when a diagonal entry or an eigenvalue of the residue matrix sits
    suspiciously close to an integer (for tests that require genericity)."""
    vals = np.concatenate([np.asarray(sys.lambda_prime),
                           np.linalg.eigvals(sys.a1)])
    return bool(np.any(np.abs(vals - np.round(vals.real)) < tol))


def generic_system(seed, n, a1_scale=0.5):
    """Random system rejected until the residue spectrum is honestly
    non-integer."""
    s = seed
    while True:
        sys = random_system(s, n, a1_scale)
        if not has_integer_spectrum_issue(sys):
            return sys
        s += 1000


def pipeline(sys, eta=None, order=80, tol=1e-12):
    """frame + bases + connection matrix in one call."""
    if eta is None:
        eta = sf.default_eta(sys)
    frm = sf.frame(sys, eta)
    bases = sf.build_all_bases(sys, order)
    cmat = sf.connection_matrix(sys, frm, bases, tol)
    return frm, bases, cmat
