import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from conewave.cone_kernel import (RadialTriple, SpectralParameter, classify_regime, euclidean_kernel,
                                  kernel_bessel_oracle, kernel_closed, kernel_integral,
                                  mode_radial_kernels, t1_kernel, t2_kernel, t3_kernel)
from conewave.cross_section import ConeGeometry, ShiftedSphere, SphereZeroPotential, build_spectrum
from conewave.errors import BoundaryError, RegimeBoundaryError

SIG = np.array([0.0, 0.4, 1.3, 2.6, math.pi])


def close(a, b, tol):
    a, b = np.asarray(a), np.asarray(b)
    return np.max(np.abs(a - b)) <= tol * max(float(np.max(np.abs(b))), 1e-12)


def test_spectral_parameter():
    sp = SpectralParameter(0.75, 1.0, 3)
    assert sp.omega == pytest.approx(0.75 + 1.25j)
    assert sp.mu == pytest.approx(-0.25 + 1.25j)
    assert sp.bessel_order == pytest.approx(0.75 - 1.25j)
    assert SpectralParameter.sine(4).omega == 1.5
    for bad in (0.5, 1.0, 1.2):
        with pytest.raises(BoundaryError):
            SpectralParameter(bad)


@given(st.floats(0.05, 6), st.floats(0.05, 3), st.floats(0.05, 3))
def test_regime_classification(t, r, rp):
    assume(min(abs(t - abs(r - rp)), abs(t - r - rp)) > 1e-6 * (r + rp))
    reg = classify_regime(RadialTriple(t, r, rp))
    if t < abs(r - rp):
        assert reg.regime == "zero"
    elif t < r + rp:
        assert reg.regime == "interior"
        assert math.cos(reg.angle) == pytest.approx((r * r + rp * rp - t * t) / (2 * r * rp), abs=1e-12)
    else:
        assert reg.regime == "exterior"
        assert math.cosh(reg.angle) == pytest.approx((t * t - r * r - rp * rp) / (2 * r * rp), rel=1e-12)


def test_light_cone_raises():
    with pytest.raises(RegimeBoundaryError):
        classify_regime(RadialTriple(2.0, 1.0, 1.0))
    with pytest.raises(RegimeBoundaryError):
        classify_regime(RadialTriple(0.5, 1.0, 1.5))
    with pytest.raises(ValueError):
        RadialTriple(-1.0, 1.0, 1.0)


def test_zero_regime_exact(s2):
    sp = SpectralParameter(0.7, 0.5, 3)
    rt = RadialTriple(0.2, 1.0, 2.0)
    for fn in (kernel_closed, kernel_integral):
        kv = fn(sp, rt, SIG, s2.finite(8))
        assert kv.regime == "zero" and np.all(kv.value == 0)
    sp0 = SpectralParameter(0.7, 0.0, 3)
    # the oracle integrates numerically, so it sees the vanishing only to quadrature accuracy
    assert np.max(np.abs(kernel_bessel_oracle(sp0, rt, SIG, s2.finite(8)).value)) <= 1e-8
    vals, _ = mode_radial_kernels(sp, rt, s2.nus)
    assert np.all(vals == 0)


@pytest.mark.parametrize("t", [1.1, 3.4])
@pytest.mark.parametrize("eps", [0.6, 0.9])
def test_three_routes_agree_finite(shifted2, t, eps):
    spec = shifted2.finite(12)
    sp = SpectralParameter(eps, 0.0, 3)
    rt = RadialTriple(t, 1.0, 1.5)
    a = kernel_closed(sp, rt, SIG, spec).value
    b = kernel_integral(sp, rt, SIG, spec).value
    c = kernel_bessel_oracle(sp, rt, SIG, spec).value
    assert close(a, c, 1e-6)
    assert close(b, c, 1e-6)


def test_closed_and_integral_agree_complex_omega(s3):
    spec = s3.finite(10)
    sp = SpectralParameter(0.75, 1.0, 4)
    for rt in (RadialTriple(1.2, 1.0, 0.8), RadialTriple(2.5, 1.0, 0.8)):
        a = kernel_closed(sp, rt, SIG, spec)
        b = kernel_integral(sp, rt, SIG, spec)
        assert close(a.value, b.value, 1e-6)


@pytest.mark.parametrize("s", [0.0, 1.0])
@pytest.mark.parametrize("t", [1.0, 2.5])
def test_integral_route_reproduces_euclidean_kernel(s2, s, t):
    sp = SpectralParameter(0.75, s, 3)
    rt = RadialTriple(t, 1.0, 1.2)
    sig = np.array([0.3, 1.0, 2.5])
    assert close(kernel_integral(sp, rt, sig, s2).value, euclidean_kernel(sp, rt, sig), 1e-8)


def test_exterior_decomposition(shifted2):
    spec = shifted2.finite(10)
    sp = SpectralParameter(0.8, 0.5, 3)
    rt = RadialTriple(3.0, 1.0, 1.1)
    t1, _ = t1_kernel(sp, rt, SIG, spec)
    t2, _ = t2_kernel(sp, rt, SIG, spec)
    t3, _ = t3_kernel(sp, rt, SIG, spec)
    assert np.all(t2 == 0)
    from conewave.specfun import rgamma_complex
    mu = sp.mu
    e = np.exp(1j * math.pi * mu)
    total = (e * t1 + t2 - 1j * np.sin(math.pi * mu) * t3) * rgamma_complex(sp.bessel_order) / math.sqrt(2 * math.pi)
    assert close(total, kernel_closed(sp, rt, SIG, spec).value, 1e-7)


def test_sine_propagator_cos_form(shifted2):
    # at omega = (n-1)/2 the correction vanishes and both exterior forms agree
    spec = shifted2.finite(8)
    sp = SpectralParameter.sine(3)
    rt = RadialTriple(3.0, 1.0, 1.1)
    a = kernel_closed(sp, rt, SIG, spec, exterior_form="corrected").value
    b = kernel_closed(sp, rt, SIG, spec, exterior_form="cos").value
    assert close(a, b, 1e-12)


def test_oracle_rejects_complex_omega(s2):
    with pytest.raises(ValueError):
        kernel_bessel_oracle(SpectralParameter(0.75, 1.0, 3), RadialTriple(1.0, 1.0, 1.0), 0.3, s2.finite(3))


def test_dimension_mismatch(s2):
    with pytest.raises(ValueError):
        kernel_closed(SpectralParameter(0.75, 0.0, 4), RadialTriple(1.0, 1.0, 1.2), 0.3, s2)
