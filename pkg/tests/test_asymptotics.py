import itertools
import math
import warnings

import numpy as np
import pytest
from scipy.integrate import dblquad

from randhill.asymptotics import (
    ApproxRate,
    delta_gamma_phi,
    delta_gamma_phi_limit,
    delta_gamma_x,
    delta_gamma_x_pairs,
    gamma_fokker_planck,
    gamma_infinite_q,
    gamma_large_q,
    gamma_small_q,
    small_q_for,
    stability_band_width,
)
from randhill.errors import InvalidParameterError, ResonanceError
from randhill.model import CycleParams, ForcingModel, UniformAngle, ShiftedUniformQ
from randhill.rng import RandomStream
from randhill.transfer import closed_form_elements, ratio_x


def test_large_q_constant_is_exact():
    h, _ = closed_form_elements(CycleParams(0.5, 300.0))
    r = gamma_large_q(ForcingModel.constant(300.0, 0.5))
    assert r.gamma == math.log(abs(2 * h)) and r.regime == "large_q" and r.stderr == 0.0


def test_infinite_q_constant_example():
    r = gamma_infinite_q(ForcingModel.constant(10.0, 0.25))
    assert r.gamma == pytest.approx(math.log(20.0), rel=1e-15)
    assert r.regime == "infinite_q"


def test_infinite_q_rejects_zero_crossing():
    with pytest.raises(InvalidParameterError):
        gamma_infinite_q(ForcingModel.symmetric(500.0, 0.5))
    with pytest.raises(InvalidParameterError):
        delta_gamma_phi(ForcingModel.symmetric(500.0, 0.5))


def test_large_q_uses_the_product_draws():
    """Trial i averages log|2h| over the draws that follow the burn-in on substream i."""
    model = ForcingModel.shifted(100.0, 0.5)
    r = gamma_large_q(model, 4 * 5000, seed=3, n_trials=4, burn_in=100)
    for i, value in enumerate(r.trials):
        u = RandomStream(3, i).uniform_q(5100)[100:]
        q = 100.0 + 100.0 * u
        w = math.sqrt(0.5)
        h = np.cos(w * math.pi) - q / (2 * w) * np.sin(w * math.pi)
        assert value == pytest.approx(np.mean(np.log(np.abs(2 * h))), rel=1e-13)


def test_large_and_infinite_forms_merge():
    diffs = []
    for q in (1e2, 1e3, 1e4, 1e5):
        m = ForcingModel.constant(q, 0.5)
        diffs.append(abs(gamma_large_q(m).gamma - gamma_infinite_q(m).gamma))
    assert diffs[-1] < 1e-3
    slope = np.polyfit(np.log([1e2, 1e3, 1e4, 1e5]), np.log(diffs), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.05)


@pytest.mark.parametrize("af", [1.0, 4.0, 9.0])
def test_resonance_guard_fires(af):
    m = ForcingModel.shifted(1000.0, af)
    for fn in (gamma_large_q, gamma_infinite_q, delta_gamma_x, delta_gamma_phi):
        with pytest.raises(ResonanceError) as exc:
            fn(m)
        assert exc.value.nearest_n == round(math.sqrt(af))
    with pytest.raises(ResonanceError):
        gamma_small_q(af, 0.01)


@pytest.mark.parametrize("af", [2.0, 3.0, 5.0, 7.0])
def test_resonance_guard_quiet_off_resonance(af):
    m = ForcingModel.shifted(1000.0, af)
    gamma_large_q(m, 20_000)
    gamma_infinite_q(m, 20_000)
    delta_gamma_x(m, 10_000)
    delta_gamma_phi(m, 10_000)
    gamma_small_q(af, 0.01)


def test_resonance_guard_needs_fixed_af():
    with pytest.raises(InvalidParameterError):
        gamma_large_q(ForcingModel(ShiftedUniformQ(100.0), UniformAngle(3.0)))


def test_delta_gamma_x_zero_for_constant_x():
    assert delta_gamma_x(ForcingModel.constant(500.0, 0.5)) == 0.0
    assert delta_gamma_x(ForcingModel.constant(500.0, 0.5), return_stderr=True) == (0.0, 0.0)


def test_delta_gamma_x_two_point_enumeration():
    q0, af = 50.0, 0.5
    xs = [ratio_x(CycleParams(af, q)) for q in (q0, 2 * q0)]
    pairs = list(itertools.product(xs, xs))
    oracle = sum(math.log(abs(1 + a / b)) for a, b in pairs) / 4 - math.log(2)
    x1 = np.array([a for a, _ in pairs])
    x2 = np.array([b for _, b in pairs])
    assert delta_gamma_x_pairs(x1, x2) == pytest.approx(oracle, rel=1e-14)


def test_delta_gamma_x_against_quadrature():
    q0, af = 10.0, 0.5

    def f(u1, u2):
        x1 = ratio_x(CycleParams(af, q0 * (1 + u1)))
        x2 = ratio_x(CycleParams(af, q0 * (1 + u2)))
        return math.log(abs(1 + x1 / x2))

    oracle = dblquad(f, 0, 1, 0, 1, epsabs=1e-12, epsrel=1e-10)[0] - math.log(2)
    value, err = delta_gamma_x(ForcingModel.shifted(q0, af), 400_000, return_stderr=True)
    assert abs(value - oracle) < 5 * err + 1e-10


def test_delta_gamma_x_decays_with_q0():
    small = abs(delta_gamma_x(ForcingModel.shifted(100.0, 0.5), 200_000))
    large = abs(delta_gamma_x(ForcingModel.shifted(1000.0, 0.5), 200_000))
    assert large < small / 10.0


def test_delta_gamma_phi_constant_limit():
    m = ForcingModel.constant(1e3, 0.5)
    phi = math.sqrt(0.5) * math.pi
    expected = (phi / (math.pi * math.sin(phi))) ** 2 / 1e6
    assert delta_gamma_phi_limit(m) == pytest.approx(expected, rel=1e-14)
    assert delta_gamma_phi(m, 10_000) == pytest.approx(expected, rel=1e-2)


def test_delta_gamma_phi_order_and_sign():
    vals = []
    q0s = [1e2, 1e3, 1e4]
    for q0 in q0s:
        v, err = delta_gamma_phi(ForcingModel.shifted(q0, 0.5), 100_000, return_stderr=True)
        assert v > 0 and err < 0.01 * v
        vals.append(v)
    slope = np.polyfit(np.log(q0s), np.log(vals), 1)[0]
    assert slope == pytest.approx(-2.0, abs=0.05)
    # and the exact <1/q^2> form is its large-q limit
    m = ForcingModel.shifted(1e4, 0.5)
    assert vals[-1] == pytest.approx(delta_gamma_phi_limit(m), rel=1e-2)


def test_small_q_examples():
    assert gamma_small_q(2.0, 0.0).gamma == 0.0
    assert gamma_small_q(2.0, 0.16).gamma == pytest.approx(math.log(1.01), rel=1e-15)
    assert gamma_small_q(2.0, 0.16).regime == "small_q"


def test_small_q_warns_for_asymmetric_forcing():
    with pytest.warns(RuntimeWarning):
        gamma_small_q(2.0, 0.16, mean_q=0.2)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        gamma_small_q(2.0, 0.16)


def test_small_q_resonance_uses_band_half_width():
    # q_ref = 0.4 gives half-width 0.127
    with pytest.raises(ResonanceError) as exc:
        gamma_small_q(4.1, 0.16)
    assert exc.value.nearest_n == 2
    assert exc.value.width == pytest.approx(0.4 / math.pi)
    gamma_small_q(4.2, 0.16)
    gamma_small_q(4.1, 0.16, check=False)


def test_small_q_for_model_matches_moments():
    r = small_q_for(ForcingModel.symmetric(0.625, 2.0))
    assert r.gamma == pytest.approx(math.log1p(0.625**2 / 3 / 16))


def test_small_q_input_validation():
    with pytest.raises(InvalidParameterError):
        gamma_small_q(0.0, 0.1)
    with pytest.raises(InvalidParameterError):
        gamma_small_q(2.0, -0.1)


def test_band_widths():
    assert stability_band_width(1, ForcingModel.constant(0.1, 2.0), "small_q") == pytest.approx(0.063662, abs=1e-6)
    assert stability_band_width(3, ForcingModel.constant(0.1, 2.0), "small_q") == pytest.approx(0.063662, abs=1e-6)
    big = ForcingModel.constant(100.0, 2.0)
    assert stability_band_width(1, big, "large_q") == pytest.approx(0.025465, abs=1e-6)
    assert stability_band_width(2, big, "large_q") / stability_band_width(1, big, "large_q") == pytest.approx(4.0)
    with pytest.raises(InvalidParameterError):
        stability_band_width(0, big, "large_q")
    with pytest.raises(InvalidParameterError):
        stability_band_width(1, big, "medium")


def test_fokker_planck_rate():
    assert gamma_fokker_planck(2.0, 0.01).gamma == pytest.approx(7.9577e-4, rel=1e-4)
    assert gamma_fokker_planck(2.0, 0.0).gamma == 0.0
    assert gamma_fokker_planck(2.0, 0.01).regime == "fokker_planck"


@pytest.mark.parametrize("af", [1.5, 2.5, 3.0, 5.5, 8.0])
def test_fokker_planck_over_small_q_is_four_over_pi(af):
    q2 = 1e-4
    ratio = gamma_fokker_planck(af, q2).gamma / gamma_small_q(af, q2).gamma
    assert ratio == pytest.approx(4.0 / math.pi, rel=1e-2)


def test_approx_rate_regime_tag():
    with pytest.raises(InvalidParameterError):
        ApproxRate(0.1, "medium_q")
