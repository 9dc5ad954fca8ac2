import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from conewave.cross_section import (CircleAB, ConeGeometry, ExplicitSpectrum, ShiftedSphere,
                                    SphereZeroPotential, build_spectrum, cos_mode_kernel,
                                    damped_cos_pi_kernel, read_spectrum_file, schur_norm_star,
                                    sigma_rule, sphere_multiplicity, sphere_volume,
                                    write_spectrum_file, zonal_kernel_rows)
from conewave.errors import ConfigError, TruncationWarning, UnsupportedCrossSection


def test_sphere_volumes_and_multiplicities():
    assert sphere_volume(1) == pytest.approx(2 * math.pi)
    assert sphere_volume(2) == pytest.approx(4 * math.pi)
    assert sphere_volume(3) == pytest.approx(2 * math.pi ** 2)
    assert list(sphere_multiplicity(np.arange(4), 2)) == pytest.approx([1, 3, 5, 7])
    assert list(sphere_multiplicity(np.arange(4), 3)) == pytest.approx([1, 4, 9, 16])
    assert list(sphere_multiplicity(np.arange(3), 1)) == [1, 2, 2]


def test_s2_spectrum_and_kernels(s2):
    assert s2.nus[:4] == pytest.approx([0.5, 1.5, 2.5, 3.5])
    assert s2.eigenvalues[:3] == pytest.approx([0, 2, 6])
    sig = np.linspace(0, math.pi, 7)
    rows = s2.addition_kernels(sig, upto=5)
    for l in range(6):
        ref = (2 * l + 1) / (4 * math.pi) * special.eval_legendre(l, np.cos(sig))
        assert np.allclose(rows[l], ref, atol=1e-14)


def test_s3_kernels_are_chebyshev_u(s3):
    sig = np.linspace(0.1, 3.0, 5)
    rows = s3.addition_kernels(sig, upto=4)
    for l in range(5):
        ref = (l + 1) / (2 * math.pi ** 2) * np.sin((l + 1) * sig) / np.sin(sig)
        assert np.allclose(rows[l], ref, atol=1e-13)


def test_zonal_rows_longdouble_agree_with_double():
    x = np.cos(np.linspace(0, math.pi, 9))
    a = zonal_kernel_rows(2, 10, x, sphere_volume(2))
    b = zonal_kernel_rows(2, 10, x.astype(np.longdouble), sphere_volume(2))
    assert b.dtype == np.longdouble
    assert np.allclose(a, b.astype(float), atol=1e-14)


def test_addition_kernel_integrates_to_multiplicity(s2):
    s, W = sigma_rule(s2)
    rows = s2.addition_kernels(s, upto=6)
    # int_Y K_l(y,y')K_m(y',y) = delta_lm K_l(0)
    gram = (rows * W) @ rows.T
    diag = s2.multiplicities[:7] / s2.volume
    assert np.allclose(gram, np.diag(diag), atol=1e-11)


def test_unsupported_pairs():
    with pytest.raises(UnsupportedCrossSection):
        build_spectrum(ConeGeometry(4), SphereZeroPotential(2))
    with pytest.raises(UnsupportedCrossSection):
        build_spectrum(ConeGeometry(3), CircleAB(0.2))
    with pytest.raises(ValueError):
        build_spectrum(ConeGeometry(2), CircleAB(1.5))


def test_circle_ab_ordering():
    spec = build_spectrum(ConeGeometry(2), CircleAB(0.3), 6)
    assert np.all(np.diff(spec.nus) >= 0)
    assert spec.nus[:3] == pytest.approx([0.3, 0.7, 1.3])


@pytest.mark.parametrize("src,n", [(SphereZeroPotential(2), 3), (SphereZeroPotential(3), 4),
                                   (ShiftedSphere(2, 0.3), 3), (CircleAB(0.37), 2)])
def test_phi_closed_matches_sum(src, n):
    spec = build_spectrum(ConeGeometry(n), src, 400)
    sig = np.linspace(0.2, 2.9, 6)
    w = np.array([0.4 + 0.3j, -2.0 + 0.5j])
    closed = spec.phi(w, sig, method="closed")
    summed = spec.phi(w, sig, method="sum")
    assert np.allclose(closed, summed, atol=1e-11, rtol=1e-10)


@given(st.floats(0.05, 3.0))
def test_damped_cos_pi_closed_vs_sum(h):
    spec = build_spectrum(ConeGeometry(3), ShiftedSphere(2, 0.3), 64)
    sig = np.array([0.0, 0.7, 2.0, math.pi])
    a = damped_cos_pi_kernel(spec, h, sig, method="closed")
    b = damped_cos_pi_kernel(spec, h, sig, method="sum", tol=1e-13)
    assert np.allclose(a, b, atol=1e-10 * max(1.0, np.max(np.abs(a))))


def test_s2_damped_cos_pi_vanishes(s2):
    # cos(pi (l + 1/2)) = 0 for every l
    vals = damped_cos_pi_kernel(s2, 0.3, np.linspace(0, math.pi, 11), method="closed")
    assert np.max(np.abs(vals)) < 1e-10
    assert schur_norm_star(s2, 0.3) < 1e-10


def test_cos_mode_kernel_warns_when_tail_large(s2):
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        cos_mode_kernel(s2, 0.5, [0.3], mollifier=1e4)
    assert any(issubclass(r.category, TruncationWarning) for r in rec)


def test_finite_truncation_is_complete(s2):
    fin = s2.finite(10)
    assert fin.complete and fin.jmax == 10 and not fin.has_closed_form
    assert fin.tail_bound() == 0.0
    assert "j<=10" in fin.label


def test_spectrum_file_round_trip(tmp_path, s3):
    sig = np.linspace(0, math.pi, 121)
    spec = s3.finite(4)
    p = tmp_path / "s3.spec"
    write_spectrum_file(p, spec, sig)
    loaded = build_spectrum(ConeGeometry(4), read_spectrum_file(p))
    assert loaded.jmax == 4
    assert np.allclose(loaded.nus, spec.nus)
    probe = np.array([0.3, 1.7, 2.9])
    assert np.allclose(loaded.addition_kernels(probe), spec.addition_kernels(probe), atol=1e-3)


@pytest.mark.parametrize("body,needle", [
    ("mode 2 3\nmode 0 1\n", "non-decreasing"),
    ("mode 0 1.5\n", "multiplicity"),
    ("kernel 0 1\n", "before any mode"),
    ("volume x\n", "non-numeric"),
    ("frobnicate 1\n", "unrecognised"),
    ("# only a comment\n", "no modes"),
])
def test_spectrum_file_errors(tmp_path, body, needle):
    p = tmp_path / "bad.spec"
    p.write_text(body)
    with pytest.raises(ConfigError, match=needle):
        read_spectrum_file(p)


def test_explicit_negative_nu_squared_rejected():
    src = ExplicitSpectrum(((-1.0, 1, None),), volume=1.0)
    with pytest.raises(ConfigError):
        build_spectrum(ConeGeometry(3), src)
