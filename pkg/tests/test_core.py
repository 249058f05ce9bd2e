import numpy as np
import pytest

import stokesfuchs as sf
from stokesfuchs.core import window_determination, window_offset
from stokesfuchs.errors import (DimensionMismatch, DuplicateEigenvalue,
                                InadmissibleDirection)

from common import random_system

PI = np.pi


def test_validate_system_basic():
    sys = sf.validate_system([0, 1], [[0.3, 0.5], [0.2, -0.7]])
    assert sys.n == 2
    assert np.allclose(sys.lambda_prime, [0.3, -0.7])


def test_validate_system_caches_diagonal_exactly():
    a1 = np.array([[1.0 + 2j, 0.5], [0.25, -0.75 - 1j]])
    sys = sf.validate_system([0, 1j], a1)
    assert sys.lambda_prime[0] == a1[0, 0]
    assert sys.lambda_prime[1] == a1[1, 1]


def test_validate_system_rejects_duplicates_and_bad_shapes():
    with pytest.raises(DuplicateEigenvalue):
        sf.validate_system([0, 0], np.zeros((2, 2)))
    with pytest.raises(DimensionMismatch):
        sf.validate_system([0, 1, 2], np.zeros((2, 2)))
    with pytest.raises(DimensionMismatch):
        sf.validate_system([0], np.zeros((1, 1)))


def test_validate_system_n3():
    a1 = np.arange(9).reshape(3, 3).astype(complex)
    sys = sf.validate_system([0, 1, 1j], a1)
    assert np.array_equal(sys.lambda_prime, np.diagonal(a1))


def test_critical_directions_two_poles_real():
    sys = sf.validate_system([0, 1], np.diag([0.3, -0.7]))
    crit = sf.critical_directions(sys)
    assert crit.m == 2 and crit.mu == 1
    assert np.allclose(sorted(crit.criticals), [0.0, PI])
    assert np.allclose(sorted(crit.tau), [PI / 2, 3 * PI / 2])


def test_critical_directions_two_poles_vertical():
    sys = sf.validate_system([0, 1j], np.diag([0.3, -0.7]))
    crit = sf.critical_directions(sys)
    assert crit.m == 2
    assert np.allclose(sorted(crit.criticals), [PI / 2, 3 * PI / 2])


def test_critical_directions_three_poles():
    # enumerate the pairwise directions directly
    lam = np.array([0.0, 1.0, 1.0 + 1.0j])
    expected = set()
    for j in range(3):
        for k in range(3):
            if j != k:
                a = np.angle(lam[j] - lam[k])
                if a <= -PI / 2:
                    a += 2 * PI
                expected.add(round(a, 12))
    sys = sf.validate_system(lam, np.diag([0.1, 0.2, 0.3]))
    crit = sf.critical_directions(sys)
    assert crit.m == 6 and crit.mu == 3
    assert expected == {round(c, 12) for c in crit.criticals}
    # sorted decreasing inside (-pi/2, 3pi/2]
    assert np.all(np.diff(crit.criticals) < 0)
    assert crit.criticals[0] <= 1.5 * PI and crit.criticals[-1] > -PI / 2


def test_collinear_poles_deduplicate():
    sys = sf.validate_system([0, 1, 2], np.diag([0.1, 0.2, 0.3]))
    crit = sf.critical_directions(sys)
    assert crit.m == 2
    assert crit.m % 2 == 0


def test_index_convention_and_tau_shift():
    sys = random_system(5, 3)
    crit = sf.critical_directions(sys)
    for nu in range(-3, 2 * crit.m):
        assert np.isclose(crit.eta_nu(nu + crit.m), crit.eta_nu(nu) - 2 * PI)
        assert np.isclose(crit.tau_nu(nu + crit.mu), crit.tau_nu(nu) + PI)


def test_interval_index_brackets():
    sys = random_system(6, 3)
    crit = sf.critical_directions(sys)
    rng = np.random.default_rng(0)
    for eta in rng.uniform(-9, 9, 40):
        try:
            nu = crit.interval_index(eta)
        except InadmissibleDirection:
            continue
        assert crit.eta_nu(nu + 1) < eta < crit.eta_nu(nu)


def test_frame_spec_example():
    # two real poles, cut direction pi/2: the second cut lies to the right
    sys = sf.validate_system([0, 1], [[0.3, 0.5], [0.2, -0.7]])
    frm = sf.frame(sys, PI / 2)
    assert np.isclose(frm.eta_jk[0, 1], -PI)
    assert np.isclose(frm.eta_jk[1, 0], 0.0)
    assert not frm.dominates[0, 1]
    assert frm.dominates[1, 0]
    assert frm.order == (1, 0)


def test_frame_rejects_critical_direction():
    sys = sf.validate_system([0, 1], np.diag([0.3, -0.7]))
    with pytest.raises(InadmissibleDirection):
        sf.frame(sys, 0.0)
    with pytest.raises(InadmissibleDirection) as exc:
        sf.frame(sys, PI + 1e-14)
    assert exc.value.distance < 1e-12


def test_dominance_total_strict_order():
    for seed in range(4):
        sys = random_system(seed, 3)
        frm = sf.frame(sys, sf.default_eta(sys))
        n = sys.n
        for j in range(n):
            assert not frm.dominates[j, j]
            for k in range(n):
                if j != k:
                    assert frm.dominates[j, k] != frm.dominates[k, j]
        # transitivity
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    if frm.dominates[a, b] and frm.dominates[b, c]:
                        assert frm.dominates[a, c]


def test_frame_constant_within_interval():
    sys = random_system(7, 3)
    crit = sf.critical_directions(sys)
    eta0 = sf.default_eta(sys)
    nu = crit.interval_index(eta0)
    hi, lo = crit.eta_nu(nu), crit.eta_nu(nu + 1)
    f1 = sf.frame(sys, lo + 0.25 * (hi - lo))
    f2 = sf.frame(sys, lo + 0.8 * (hi - lo))
    assert np.array_equal(f1.dominates, f2.dominates)
    mask = ~np.eye(sys.n, dtype=bool)
    assert np.allclose(f1.eta_jk[mask], f2.eta_jk[mask])


def test_frame_two_pi_shift_preserves_dominance():
    sys = random_system(8, 3)
    eta = sf.default_eta(sys)
    f1 = sf.frame(sys, eta)
    f2 = sf.frame(sys, eta - 2 * PI)
    assert np.array_equal(f1.dominates, f2.dominates)
    mask = ~np.eye(sys.n, dtype=bool)
    assert np.allclose(f2.eta_jk[mask], f1.eta_jk[mask] - 2 * PI)


def test_window_determination():
    eta = 1.1
    for angle in (-3.0, 0.0, 1.0999, 2.0, 5.0):
        d = window_determination(angle, eta)
        assert eta - 2 * PI < d < eta
        assert np.isclose(np.mod(d - angle, 2 * PI), 0.0)
    assert window_offset(eta, eta) == 0.0


def test_branch_point_args():
    sys = random_system(9, 3)
    eta = sf.default_eta(sys)
    p = sf.branch_point(sys, eta, np.mean(sys.lam) + 0.123 - 0.456j)
    for k in range(sys.n):
        assert eta - 2 * PI < p.args[k] < eta
        u = p.value - sys.lam[k]
        assert np.isclose(np.exp(1j * p.args[k]), u / abs(u))


def test_default_eta_admissible_and_in_widest_gap():
    sys = random_system(10, 3)
    eta = sf.default_eta(sys)
    frm = sf.frame(sys, eta)  # must not raise
    crit = frm.crit
    gaps = []
    c = crit.criticals
    for i in range(crit.m):
        hi = c[i - 1] if i > 0 else c[-1] + 2 * PI
        gaps.append(hi - c[i])
    nu = crit.interval_index(eta)
    width = crit.eta_nu(nu) - crit.eta_nu(nu + 1)
    assert np.isclose(width, max(gaps))
