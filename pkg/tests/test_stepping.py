import numpy as np
import pytest

import stokesfuchs as sf
from stokesfuchs.errors import StepUnderflow
from stokesfuchs.stepping import (FuchsianODE, RankOneODE, arc_points,
                                  transport_polyline, transport_segment)


def diag_system():
    return sf.validate_system([0, 1], np.diag([0.3, -0.7]))


def test_fuchsian_transport_closed_form():
    # decoupled scalar equations: psi_k' = -(lp_k+1)/(lam-lam_k) psi_k
    sys = diag_system()
    ode = FuchsianODE(sys)
    a, b = 0.4 - 0.6j, -0.3 - 0.8j
    y0 = np.array([(a - 0) ** (-1.3), (a - 1) ** (0.7 - 1)], dtype=complex)
    y, err = transport_segment(ode, y0, a, b, 1e-13)
    # the straight segment stays in the lower half plane: principal branches
    expected = np.array([(b - 0) ** (-1.3), (b - 1) ** (-0.3)], dtype=complex)
    assert np.max(np.abs(y - expected)) < 1e-12
    assert err < 1e-10


def test_rankone_transport_closed_form():
    sys = diag_system()
    ode = RankOneODE(sys)
    z0, z1 = 2.0 + 1.0j, 5.0 - 2.0j
    y0 = np.diag([np.exp(0 * z0) * z0 ** 0.3, np.exp(z0) * z0 ** (-0.7)])
    y, _ = transport_segment(ode, np.array(y0), z0, z1, 1e-13)
    expected = np.diag([z1 ** 0.3, np.exp(z1) * z1 ** (-0.7)])
    assert np.max(np.abs(y - expected) / np.abs(expected)) < 1e-12


def test_round_trip_polyline():
    sys = sf.validate_system([0, 1], [[0.3, 0.5], [0.2, -0.7]])
    ode = FuchsianODE(sys)
    loop = [0.5 - 1j, 1.5 - 1j, 1.5 - 2j, 0.5 - 2j, 0.5 - 1j]
    y0 = np.array([1.0 + 0.2j, -0.4j])
    y, err = transport_polyline(ode, y0, loop, 1e-12)
    assert np.max(np.abs(y - y0)) < 1e-11
    assert err < 1e-9


def test_matrix_transport_matches_columns():
    sys = sf.validate_system([0, 1], [[0.3, 0.5], [0.2, -0.7]])
    ode = FuchsianODE(sys)
    y0 = np.array([[1.0, 0.5j], [0.25, -1.0]], dtype=complex)
    ya, _ = transport_segment(ode, y0, -1.0 - 1j, 2.0 - 1j, 1e-13)
    for col in range(2):
        yc, _ = transport_segment(ode, y0[:, col], -1.0 - 1j, 2.0 - 1j, 1e-13)
        assert np.max(np.abs(ya[:, col] - yc)) < 1e-12


def test_step_underflow_on_pole():
    sys = diag_system()
    ode = FuchsianODE(sys)
    with pytest.raises(StepUnderflow):
        transport_segment(ode, np.array([1.0, 1.0], dtype=complex),
                          -0.5, 0.5, 1e-12)  # segment passes through pole 0


def test_arc_points_stay_near_circle():
    pts = arc_points(0.0, 2.0, 0.3, 0.3 + 5.0)
    for a, b in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (a + b)
        assert abs(mid) > 2.0 * np.cos(0.45 / 2) - 1e-12
