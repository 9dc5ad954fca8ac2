import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from conewave.cone_kernel import SpectralParameter
from conewave.cross_section import CircleAB, ConeGeometry, build_spectrum
from conewave.errors import ResolutionError
from conewave.propagator import (ConeGrid, angular_grid, assemble_kernel_matrix, in_p_window,
                                 multiplier_sup, multiplier_sup_closed, operator_norm,
                                 theorem_sweep)


@pytest.mark.parametrize("which", ["s2", "s3", "circle"])
def test_angular_grid_reproduces_projections(which, s2, s3):
    spec = {"s2": s2, "s3": s3, "circle": build_spectrum(ConeGeometry(2), CircleAB(0.3), 8)}[which]
    deg = 3
    grid = angular_grid(spec, deg)
    kern = spec.addition_kernels(grid.distance.ravel())
    m = grid.weights.size
    assert grid.weights.sum() == pytest.approx(spec.volume, rel=1e-12)
    for j in range(4 if which != "circle" else 7):
        kj = kern[j].reshape(m, m)
        # K_j is the kernel of an orthogonal projection: K_j * K_j = K_j
        sq = (kj * grid.weights[None, :]) @ kj
        assert np.allclose(sq, kj, atol=1e-12)


def test_cone_grid_measure_and_dilation(s2):
    g = ConeGrid.for_time(s2, 2.0, radial_cells=10, angular_degree=2)
    assert g.weights.sum() == pytest.approx(g.analytic_measure(s2.volume), rel=1e-12)
    d = g.dilated(3.0)
    assert d.weights.sum() == pytest.approx(27 * g.weights.sum(), rel=1e-12)
    r = g.refined()
    assert r.edges[0] == pytest.approx(g.edges[0] / 2) and r.size > g.size


def test_in_p_window():
    assert in_p_window(1.5, 3) and in_p_window(3, 3)
    assert in_p_window(1.5, 4) and not in_p_window(1.2, 4)
    assert in_p_window(4.0, 4) and not in_p_window(8.0, 4)


def test_multiplier_oracles_agree():
    for eps in (0.6, 0.75, 0.9):
        sp = SpectralParameter(eps, 0.0, 4)
        assert multiplier_sup(sp, samples=2001) == pytest.approx(multiplier_sup_closed(sp), rel=1e-6)


@given(arrays(float, (6, 6), elements=st.floats(-3, 3)),
       arrays(float, 6, elements=st.floats(0.1, 5)),
       st.sampled_from([1.3, 1.5, 2.5, 4.0]))
def test_operator_norm_bracket(a, w, p):
    est = operator_norm(a, w, p)
    assert est.lower <= est.upper * (1 + 1e-9)
    b = (w ** (1 / p))[:, None] * a / (w ** (1 / p))[None, :]
    rng = np.random.default_rng(1)
    for _ in range(5):
        x = rng.standard_normal(6)
        ratio = np.linalg.norm(b @ x, ord=p) / np.linalg.norm(x, ord=p)
        assert ratio <= est.upper * (1 + 1e-9)


def test_operator_norm_exact_cases():
    d = np.diag([0.5, -2.0, 1.0])
    w = np.array([1.0, 2.0, 3.0])
    for p in (1.0, 1.5, 2.0, 3.0, math.inf):
        est = operator_norm(d, w, p)
        assert est.upper == pytest.approx(2.0, rel=1e-9)
    # p = 2 with unit weights is the spectral norm
    a = np.random.default_rng(0).standard_normal((8, 8))
    assert operator_norm(a, np.ones(8), 2.0).value == pytest.approx(np.linalg.norm(a, 2), rel=1e-8)


def test_s2_sweep_is_dilation_invariant_and_below_oracle(s2):
    sp = SpectralParameter(0.75, 0.0, 3)
    est = theorem_sweep(sp, [2.0, 3.0], [1.0, 4.0], s2, radial_cells=12, angular_degree=2)
    by = {(e.p, e.t): e for e in est}
    for p in (2.0, 3.0):
        assert by[(p, 4.0)].upper == pytest.approx(by[(p, 1.0)].upper, rel=1e-8)
    assert by[(2.0, 1.0)].value <= multiplier_sup_closed(sp) * 1.05
    assert all(e.lower <= e.upper * (1 + 1e-9) for e in est)


def test_sine_matrix_is_real(s2):
    grid = ConeGrid.for_time(s2, 1.0, radial_cells=8, angular_degree=2)
    km = assemble_kernel_matrix(None, 1.0, grid, s2, which="sine")
    assert km.matrix.dtype == float
    assert km.omega == 1.0


def test_resolution_errors(s2):
    sp = SpectralParameter(0.75, 0.0, 3)
    grid = ConeGrid.for_time(s2, 1.0, radial_cells=8, angular_degree=2)
    with pytest.raises(ResolutionError):
        assemble_kernel_matrix(sp, 1.0, grid, s2.with_jmax(1))
    coarse = ConeGrid(3, np.array([0.01, 2.0, 5.0]), grid.angular, 1.0)
    with pytest.raises(ResolutionError):
        assemble_kernel_matrix(sp, 1.0, coarse, s2)
    with pytest.raises(ValueError):
        assemble_kernel_matrix(sp, 1.0, grid, s2, which="cos")
