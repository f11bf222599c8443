import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from randhill.errors import NonFiniteError, SingularAngleError
from randhill.model import CycleParams
from randhill.transfer import (
    TransferMatrix,
    absorb,
    closed_form_elements,
    correction_phi,
    cycle_matrix,
    elements,
    identity_state,
    log_spectral_radius,
    ratio_x,
)

afs = st.floats(0.01, 100.0)
qs = st.floats(-1e3, 1e3)


def ode_cycle(af, q):
    """Principal solutions by numerical integration with an explicit kick (oracle)."""
    def rhs(t, z):
        return [z[1], -af * z[0], z[3], -af * z[2]]

    kw = dict(rtol=1e-12, atol=1e-13, method="DOP853")
    z = solve_ivp(rhs, (0, math.pi / 2), [1.0, 0.0, 0.0, 1.0], **kw).y[:, -1]
    z[1] -= q * z[0]
    z[3] -= q * z[2]
    z = solve_ivp(rhs, (math.pi / 2, math.pi), z, **kw).y[:, -1]
    return np.array([[z[0], z[2]], [z[1], z[3]]])


@pytest.mark.parametrize("af,q", [(0.5, 10.0), (2.0, -3.0), (9.0, 0.7), (0.3, 0.0), (5.5, 40.0)])
def test_cycle_matrix_matches_ode(af, q):
    m = cycle_matrix(CycleParams(af, q)).as_array()
    np.testing.assert_allclose(m, ode_cycle(af, q), atol=1e-8 * max(1.0, abs(q)))


def mp_elements(af, q):
    mpmath.mp.dps = 40
    w = mpmath.sqrt(mpmath.mpf(af))
    phi = w * mpmath.pi
    h = mpmath.cos(phi) - mpmath.mpf(q) / (2 * w) * mpmath.sin(phi)
    g = -w * mpmath.sin(phi) - mpmath.mpf(q) * mpmath.cos(phi / 2) ** 2
    return float(h), float(g)


@settings(max_examples=200, deadline=None)
@given(afs, qs)
def test_closed_form_against_high_precision(af, q):
    h, g = closed_form_elements(CycleParams(af, q))
    H, G = mp_elements(af, q)
    scale = 1.0 + abs(q) / math.sqrt(af) + math.sqrt(af)
    assert abs(h - H) <= 1e-13 * scale
    assert abs(g - G) <= 1e-13 * (1.0 + abs(q) + math.sqrt(af))


@settings(max_examples=200, deadline=None)
@given(afs, qs)
def test_matrix_structure(af, q):
    m = cycle_matrix(CycleParams(af, q))
    h, g = closed_form_elements(CycleParams(af, q))
    tol = 1e-12 * (1.0 + m.max_abs())
    assert m.m11 == pytest.approx(m.m22, abs=tol)
    assert m.m11 == pytest.approx(h, abs=tol)
    assert m.m21 == pytest.approx(g, abs=tol)
    assert m.det == pytest.approx(1.0, abs=1e-12 * (1.0 + m.max_abs() ** 2))


def test_vectorised_elements_agree_with_scalar():
    rng = np.random.default_rng(0)
    af = rng.uniform(0.01, 100, 1000)
    q = rng.uniform(-1e3, 1e3, 1000)
    h, g = elements(af, q)
    for i in range(0, 1000, 97):
        hh, gg = closed_form_elements(CycleParams(af[i], q[i]))
        assert h[i] == pytest.approx(hh, rel=1e-14, abs=1e-14)
        assert g[i] == pytest.approx(gg, rel=1e-14, abs=1e-14)


def test_resonant_cycle_is_a_shear():
    # af = 1: the kick sees y(pi/2) = 0 for the first principal solution
    m = cycle_matrix(CycleParams(1.0, 7.0))
    assert m.m11 == pytest.approx(-1.0, abs=1e-15)
    assert m.m21 == pytest.approx(0.0, abs=1e-14)
    assert m.m12 == pytest.approx(-7.0, abs=1e-14)


def test_ratio_x_and_correction_phi():
    p = CycleParams(0.5, 200.0)
    h, g = closed_form_elements(p)
    assert ratio_x(p) == pytest.approx(h / g, rel=1e-12)
    assert correction_phi(p) == pytest.approx(1.0 - 1.0 / h**2, rel=1e-12)
    # finite large-q limit of x: (pi/phi) sin(phi) / (1 + cos(phi))
    big = CycleParams(0.5, 1e12)
    phi = big.phi
    assert ratio_x(big) == pytest.approx(math.pi / phi * math.sin(phi) / (1 + math.cos(phi)), rel=1e-9)


def test_singular_denominators_signal():
    # af = 1, q = 0: g = -sin(pi) = 0 and h = -1
    with pytest.raises(SingularAngleError):
        ratio_x(CycleParams(1.0, 0.0))
    # af = 1/4 puts phi at pi/2, so the denominator reduces to pi q
    with pytest.raises(SingularAngleError):
        correction_phi(CycleParams(0.25, 0.0))


def test_log_spectral_radius():
    assert log_spectral_radius(0.5) == 0.0
    assert log_spectral_radius(-1.0) == 0.0
    assert log_spectral_radius(2.0) == pytest.approx(math.log(2 + math.sqrt(3)))
    np.testing.assert_allclose(log_spectral_radius(np.array([-3.0, 0.2])), [math.acosh(3.0), 0.0])


def test_log_spectral_radius_is_eigenvalue():
    m = cycle_matrix(CycleParams(2.3, 5.0))
    lam = np.max(np.abs(m.eigenvalues()))
    assert log_spectral_radius(m.m11) == pytest.approx(math.log(lam), rel=1e-12)


def test_absorb_reconstructs_plain_product():
    rng = np.random.default_rng(2)
    state = identity_state()
    plain = TransferMatrix.identity()
    for _ in range(30):
        m = cycle_matrix(CycleParams(rng.uniform(0.2, 5), rng.uniform(-3, 3)))
        state = absorb(state, m)
        plain = m @ plain
    assert state.count == 30
    assert state.normalized.max_abs() == 1.0
    np.testing.assert_allclose(state.reconstruct().as_array(), plain.as_array(), rtol=1e-10)


def test_absorb_survives_overflow_range():
    state = identity_state()
    m = cycle_matrix(CycleParams(0.5, 1e3))
    for _ in range(500):
        state = absorb(state, m)
    h, _ = closed_form_elements(CycleParams(0.5, 1e3))
    assert state.log_norm / 500 == pytest.approx(math.acosh(abs(h)), rel=1e-3)
    assert state.normalized.is_finite()


def test_absorb_rejects_non_finite():
    with pytest.raises(NonFiniteError):
        absorb(identity_state(), TransferMatrix(math.nan, 0, 0, 1))
