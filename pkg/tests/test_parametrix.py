import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import rgamma

from conewave.errors import ChartError, ConfigError, DistributionActionError
from conewave.parametrix import (GaussianBump, MetricModel, constant_potential, e_nu_check,
                                 e_nu_initial_vanishing, e_nu_profile, flat_model,
                                 hadamard_expansion, load_metric_file, parametrix_coefficients,
                                 riesz_pairing, rotation_potential, spectral_cos_pairing,
                                 sphere_model, transport_alpha0, transport_alpha_nu, warped_model)

PTS = np.array([[0.0, 0.0], [0.2, -0.1], [0.05, 0.3], [-0.25, -0.2]])


@pytest.fixture(scope="module")
def sphere_coeffs():
    return parametrix_coefficients(sphere_model(2), depth=2, radius=0.35)


def test_alpha0_is_one_at_origin():
    for model in (flat_model(2), sphere_model(2), sphere_model(2, rotation_potential(0.7))):
        assert transport_alpha0(model, np.zeros(2)) == 1.0


@pytest.mark.parametrize("m", [2, 3])
def test_flat_coefficients(m):
    coeffs = parametrix_coefficients(flat_model(m), depth=1, radius=0.2, spacing=0.05)
    pts = np.random.default_rng(3).uniform(-0.1, 0.1, (6, m))
    assert np.allclose(coeffs.alpha(0, pts), 1.0, atol=1e-14)
    assert np.allclose(coeffs.alpha(1, pts), -((m - 1) ** 2) / 4, atol=1e-8)


def test_sphere_alpha0_closed_form():
    # alpha_0 = (sigma / sin sigma)^(1/2) on the round sphere
    a0 = transport_alpha0(sphere_model(2), PTS)
    r = np.linalg.norm(PTS, axis=1)
    ref = np.where(r > 0, np.sqrt(r / np.sin(np.where(r > 0, r, 1.0))), 1.0)
    assert np.allclose(a0, ref, atol=1e-12)


def test_sphere_heat_invariants(sphere_coeffs):
    # unit S^2 with potential 1/4: a_1 = R/6 - V, a_2 = a_1^2/2 + (|Rm|^2 - |Ric|^2)/180
    a1 = 2 / 6 - 0.25
    a2 = a1 ** 2 / 2 + (4 - 2) / 180
    assert sphere_coeffs.alpha(1, np.zeros(2)) == pytest.approx(a1, abs=1e-8)
    assert sphere_coeffs.alpha(2, np.zeros(2)) == pytest.approx(a2, abs=1e-6)


def test_pointwise_and_grid_alpha1_agree(sphere_coeffs):
    model = sphere_model(2)
    x = PTS[1:3]
    assert np.allclose(transport_alpha_nu(model, x, 1), sphere_coeffs.alpha(1, x), atol=1e-8)


def test_modulus_law_with_magnetic_potential():
    model = sphere_model(2, rotation_potential(0.7))
    a0 = transport_alpha0(model, PTS)
    assert np.allclose(np.abs(a0) * np.sqrt(model.sqrt_det(PTS)), 1.0, atol=1e-12)


def test_gauge_shift_multiplies_by_phase():
    c = np.array([0.4, -0.3])
    base = sphere_model(2, rotation_potential(0.7))
    shifted = sphere_model(2, constant_potential(c, rotation_potential(0.7)))
    phase = np.exp(1j * PTS @ c)
    assert np.allclose(transport_alpha0(shifted, PTS), phase * transport_alpha0(base, PTS), atol=1e-12)
    x = PTS[1:3]
    assert np.allclose(transport_alpha_nu(shifted, x, 1), phase[1:3] * transport_alpha_nu(base, x, 1), atol=1e-8)


def test_warped_sine_matches_sphere():
    r = np.linspace(0, 3.0, 301)
    warped = warped_model(r, np.sin(r))
    assert np.allclose(transport_alpha0(warped, PTS), transport_alpha0(sphere_model(2), PTS), atol=1e-12)


def test_metric_validation():
    with pytest.raises(ConfigError):
        MetricModel(2, lambda x: 2.0 * np.broadcast_to(np.eye(2), x.shape + (2,)))
    shear = np.array([[1.0, 0.3], [0.3, 1.0]])

    def not_gauged(x):
        x = np.asarray(x)
        r = np.linalg.norm(x, axis=-1)[..., None, None]
        return np.eye(2) + np.minimum(r, 1.0) * (shear - np.eye(2))
    with pytest.raises(ConfigError, match="radially gauged"):
        MetricModel(2, not_gauged)
    with pytest.raises(ChartError):
        transport_alpha0(sphere_model(2), np.array([3.5, 0.0]))


def test_metric_file(tmp_path):
    p = tmp_path / "warp.txt"
    r = np.linspace(0, 2.0, 41)
    p.write_text("# r f(r)\n" + "\n".join(f"{a:.17g} {b:.17g}" for a, b in zip(r, np.sinh(r))) + "\n")
    model = load_metric_file(p)
    a0 = transport_alpha0(model, PTS)
    rr = np.linalg.norm(PTS, axis=1)
    ref = np.where(rr > 0, np.sqrt(rr / np.sinh(np.where(rr > 0, rr, 1.0))), 1.0)
    assert np.allclose(a0, ref, atol=1e-5)
    bad = tmp_path / "bad.txt"
    bad.write_text("0 0\n0.1 0.1 7\n")
    with pytest.raises(ConfigError, match=":2:"):
        load_metric_file(bad)
    dec = tmp_path / "dec.txt"
    dec.write_text("0 0\n0.2 0.2\n0.1 0.1\n0.3 0.3\n")
    with pytest.raises(ConfigError):
        load_metric_file(dec)


@given(st.sampled_from([-2.5, -1.5, -1.0, -0.5, 0.0, 0.7]), st.sampled_from([2, 3]), st.floats(0.3, 2.0))
def test_riesz_pairing_against_ball_integral(a, dim, t):
    # <(t^2-|x|^2)_+^a / Gamma(a+1), 1> = pi^(d/2) t^(2a+d) / Gamma(a+1+d/2) (analytically continued)
    ref = math.pi ** (dim / 2) * t ** (2 * a + dim) * rgamma(a + 1 + dim / 2)
    val = riesz_pairing(a, t, lambda x: np.ones(x.shape[:-1]), dim)
    assert val == pytest.approx(ref, rel=1e-10, abs=1e-12)
    # |x|^2 weight: pi^(d/2) (d/2) t^(2a+d+2) / Gamma(a+2+d/2)
    ref2 = math.pi ** (dim / 2) * (dim / 2) * t ** (2 * a + dim + 2) * rgamma(a + 2 + dim / 2)
    val2 = riesz_pairing(a, t, lambda x: np.sum(x * x, axis=-1), dim)
    assert val2 == pytest.approx(ref2, rel=1e-10, abs=1e-12)


def test_distribution_values_refused():
    prof = e_nu_profile(0, 3)
    with pytest.raises(DistributionActionError):
        prof.value(1.0, 0.5)
    assert e_nu_profile(2, 3).value(1.0, 2.0) == 0.0


def test_pointwise_expansion_refuses_distributions(sphere_coeffs):
    with pytest.raises(DistributionActionError):
        hadamard_expansion(sphere_coeffs, 0.3, 0.1)
    assert hadamard_expansion(sphere_coeffs, 0.3, 0.4) == 0.0
    # the k = 2 term has exponent 1/2 and is an honest function
    val = hadamard_expansion(sphere_coeffs, 0.3, 0.1, start=2)
    assert np.isfinite(val) and val != 0


def test_spectral_pairing_at_zero_reproduces_test_function(s2):
    bump = lambda sig: np.exp(-2.0 * (1 - np.cos(sig)))
    spec = s2.with_jmax(80)
    assert spectral_cos_pairing(spec, 0.0, bump) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        spectral_cos_pairing(s2.with_jmax(6), 0.0, lambda sig: np.exp(-40.0 * (1 - np.cos(sig))))


@pytest.mark.parametrize("nu", [1, 2])
def test_e_nu_identities(nu):
    for rep in e_nu_check(nu, 0.8, dim=3):
        assert rep.passed, (rep.quantity, rep.computed, rep.reference)


def test_e_nu_initial_vanishing():
    bump = GaussianBump((0.0, 0.0, 0.0), 0.5)
    for nu in (1, 2):
        assert e_nu_initial_vanishing(nu, 3, bump) == pytest.approx(2 * nu + 1, abs=0.05)
