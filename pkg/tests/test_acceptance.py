"""The twelve acceptance criteria, each at its stated tolerance.

Every test prints one ``CRITERION k: PASS|FAIL`` line and the terminal
summary repeats them. Run with ``pytest tests/test_acceptance.py -v -s``.
"""
import math
import time

import numpy as np
import pytest

from conewave.cone_kernel import (RadialTriple, SpectralParameter, classify_regime,
                                  kernel_bessel_oracle, kernel_closed, kernel_integral,
                                  mode_radial_kernels, t1_kernel)
from conewave.cross_section import (ConeGeometry, ShiftedSphere, SphereZeroPotential, build_spectrum,
                                    damped_cos_pi_kernel, schur_norm_star)
from conewave.parametrix import (e_nu_check, flat_model, hadamard_pairing, parametrix_coefficients,
                                 spectral_cos_pairing, sphere_model, transport_alpha0)
from conewave.propagator import (ConeGrid, assemble_kernel_matrix, multiplier_sup,
                                 multiplier_sup_closed, theorem_sweep)
from conewave.schur_bounds import (k_row_integral, kerest1_sweep, kerest2_sweep, refinement_stable,
                                   t1_row_integral, t2_edge_slope, t2_pointwise_bound_check)
from conewave.specfun import weber_schafheitlin, weber_schafheitlin_quadrature, ws_regime

RNG_SEED = 20240601


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


# 1 -----------------------------------------------------------------------------

def _ws_points(regime, count, rng):
    out = []
    while len(out) < count:
        mu, lam = rng.uniform(0.6, 1.5), rng.uniform(0.5, 3.0)
        a, b, c = rng.uniform(0.2, 5.0, 3)
        lo, hi = abs(b - c), b + c
        if min(abs(a - lo), abs(a - hi)) < 0.02 * hi:
            continue
        got = "zero" if a < lo else ("interior" if a < hi else "exterior")
        if got == regime:
            out.append((mu, lam, a, b, c))
    return out


def test_criterion_01_weber_schafheitlin(criterion):
    rng = np.random.default_rng(RNG_SEED)
    start = time.perf_counter()
    worst = {}
    for regime in ("interior", "exterior", "zero"):
        errs = []
        for mu, lam, a, b, c in _ws_points(regime, 20, rng):
            assert ws_regime(a, b, c) == regime
            val = complex(weber_schafheitlin(mu, lam, a, b, c))
            ref, _ = weber_schafheitlin_quadrature(mu, lam, a, b, c)
            if regime == "zero":
                assert val == 0
                errs.append(abs(ref))
            else:
                errs.append(rel(val, ref))
        worst[regime] = max(errs)
    elapsed = time.perf_counter() - start
    ok = worst["interior"] <= 1e-6 and worst["exterior"] <= 1e-6 and worst["zero"] <= 1e-8 and elapsed <= 120
    criterion(1, ok, f"max rel err interior {worst['interior']:.2e}, exterior {worst['exterior']:.2e}; "
                     f"max |quadrature| in vanishing regime {worst['zero']:.2e}; {elapsed:.1f}s")
    assert ok


# 2 -----------------------------------------------------------------------------

def _kernel_points(rng, count):
    """Non-boundary (t, r, r', sigma) samples split between the two live regimes."""
    pts = []
    while len(pts) < count:
        r, rp = rng.uniform(0.3, 2.0, 2)
        want = "interior" if len(pts) % 2 == 0 else "exterior"
        lo, hi = abs(r - rp), r + rp
        t = rng.uniform(lo + 0.05 * hi, 0.95 * hi) if want == "interior" else rng.uniform(1.05 * hi, 2.0 * hi)
        pts.append((t, r, rp, float(rng.uniform(0.05, math.pi - 0.05))))
    return pts


def test_criterion_02_three_way_kernel(criterion):
    rng = np.random.default_rng(RNG_SEED + 2)
    start = time.perf_counter()
    specs = {3: build_spectrum(ConeGeometry(3), ShiftedSphere(2, 0.3), 12).finite(),
             4: build_spectrum(ConeGeometry(4), SphereZeroPotential(3), 12).finite()}
    worst, count, oracle_count = 0.0, 0, 0
    for idx, (t, r, rp, sig) in enumerate(_kernel_points(rng, 20)):
        n = 3 if idx % 4 < 2 else 4
        eps = (0.6, 0.75, 0.9)[idx % 3]
        s = 0.0 if idx % 5 < 3 else 1.0
        sp = SpectralParameter(eps, s, n)
        rt = RadialTriple(t, r, rp)
        a = kernel_closed(sp, rt, sig, specs[n]).value
        b = kernel_integral(sp, rt, sig, specs[n]).value
        worst = max(worst, rel(a, b))
        if s == 0.0:
            c = kernel_bessel_oracle(sp, rt, sig, specs[n]).value
            worst = max(worst, rel(a, c), rel(b, c))
            oracle_count += 1
        count += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-5 and elapsed <= 600
    criterion(2, ok, f"{count} points ({oracle_count} with oracle), max pairwise rel err {worst:.2e}; "
                     f"{elapsed:.1f}s")
    assert ok


# 3 -----------------------------------------------------------------------------

def test_criterion_03_exact_zero_support(criterion, s2, shifted2):
    rng = np.random.default_rng(RNG_SEED + 3)
    sig = np.linspace(0.0, math.pi, 9)
    checked = 0
    exact = True
    for _ in range(20):
        r = rng.uniform(0.5, 3.0)
        rp = r + rng.uniform(0.2, 2.0) * (1 if rng.random() < 0.5 else -1) * min(1.0, r / 3)
        rp = abs(rp) + 0.05
        t = rng.uniform(0.01, 0.98) * abs(r - rp)
        rt = RadialTriple(t, r, rp)
        assert classify_regime(rt).regime == "zero"
        for spec in (s2.finite(10), shifted2.finite(10), shifted2):
            n = spec.geometry.n
            sp = SpectralParameter(0.75, 1.0, n)
            for fn in (kernel_closed, kernel_integral):
                exact &= bool(np.all(fn(sp, rt, sig, spec).value == 0))
            exact &= bool(np.all(mode_radial_kernels(sp, rt, spec.nus)[0] == 0))
            checked += 1
    # assembled matrices: cell pairs entirely outside the light cone are exact zeros
    sp = SpectralParameter(0.75, 0.0, 3)
    grid = ConeGrid.for_time(s2, 1.0, radial_cells=16, angular_degree=2)
    mat = assemble_kernel_matrix(sp, 1.0, grid, s2).matrix
    e = grid.edges
    m = grid.angular.weights.size
    cells = e.size - 1
    zero_blocks = 0
    for i in range(cells):
        for j in range(cells):
            gap = max(e[i] - e[j + 1], e[j] - e[i + 1])
            if gap > 1.0:
                exact &= bool(np.all(mat[i * m:(i + 1) * m, j * m:(j + 1) * m] == 0))
                zero_blocks += 1
    criterion(3, exact, f"{checked} zero-regime triples x 9 sigma on 3 spectra and {zero_blocks} "
                        f"matrix blocks: all bitwise zero" if exact else "nonzero value found")
    assert exact


# 4 -----------------------------------------------------------------------------

def test_criterion_04_strong_huygens(criterion, s2):
    rng = np.random.default_rng(RNG_SEED + 4)
    sig = np.linspace(0.0, math.pi, 13)
    worst_t1 = 0.0
    sp = SpectralParameter(0.75, 0.0, 3)
    for _ in range(10):
        r, rp = rng.uniform(0.2, 2.0, 2)
        t = (r + rp) * rng.uniform(1.05, 4.0)
        vals, _ = t1_kernel(sp, RadialTriple(t, r, rp), sig, s2)
        worst_t1 = max(worst_t1, float(np.max(np.abs(vals))))
    worst_h = 0.0
    for h in np.geomspace(1e-3, 10.0, 13):
        for method in ("closed", "sum"):
            worst_h = max(worst_h, float(np.max(np.abs(damped_cos_pi_kernel(s2, h, sig, method=method)))))
        worst_h = max(worst_h, schur_norm_star(s2, h))
    worst_row = max(t1_row_integral(sp, t, q * t, s2) for t in (1.0, 2.0) for q in (0.05, 0.25, 0.5, 0.75, 0.95))
    ok = max(worst_t1, worst_h, worst_row) <= 1e-10
    criterion(4, ok, f"S2: max|T1| {worst_t1:.1e}, max damped kernel {worst_h:.1e}, "
                     f"max T1 row integral {worst_row:.1e}")
    assert ok


# 5 -----------------------------------------------------------------------------

def test_criterion_05_kerest1(criterion, shifted2):
    rep = kerest1_sweep(shifted2, np.geomspace(1e-3, 10.0, 13), rel_tol=0.05)
    ok = rep.passed and math.isfinite(rep.computed)
    criterion(5, ok, f"nu_l = l+0.8: sup ratio {rep.computed:.5g} coarse, {rep.reference:.5g} refined "
                     f"(change {100 * rep.relative_change:.2f}%)")
    assert ok


# 6 -----------------------------------------------------------------------------

def test_criterion_06_kerest2(criterion, shifted2):
    parts, ok = [], True
    for eps in (0.6, 0.75, 0.9):
        rep = kerest2_sweep(shifted2, eps, np.geomspace(1e-2, 10.0, 10), rel_tol=0.05)
        ok &= rep.passed and math.isfinite(rep.computed)
        parts.append(f"eps={eps}: {rep.computed:.4g}/{rep.reference:.4g} ({100 * rep.relative_change:.2f}%)")
    criterion(6, ok, "; ".join(parts))
    assert ok


# 7 -----------------------------------------------------------------------------

def test_criterion_07_t2_majorant(criterion, s2):
    rng = np.random.default_rng(RNG_SEED + 7)
    eps, t = 0.75, 1.0
    sp = SpectralParameter(eps, 0.0, 3)
    samples = []
    while len(samples) < 200:
        r, rp = rng.uniform(0.05, 1.5, 2)
        if abs(r - rp) + 0.01 < t < r + rp - 0.01:
            A = math.acos((r * r + rp * rp - t * t) / (2 * r * rp))
            samples.append((r, rp, float(rng.uniform(0.01, 0.99)) * A))
    rep = t2_pointwise_bound_check(sp, t, samples, s2)
    slopes = [t2_edge_slope(sp, RadialTriple(t, r, rp), s2, np.geomspace(1e-6, 1e-4, 6))
              for r, rp in ((0.8, 0.9), (0.6, 0.7), (1.2, 0.5))]
    ok = rep.passed and rep.details["count"] == 200 and math.isfinite(rep.computed) \
        and all(abs(sl + eps) <= 0.1 for sl in slopes)
    criterion(7, ok, f"200 interior points: fitted constant C = {rep.computed:.4g}; "
                     f"edge slopes {', '.join(f'{sl:.3f}' for sl in slopes)} (expected {-eps})")
    assert ok


# 8 -----------------------------------------------------------------------------

def test_criterion_08_schur_uniformity(criterion, s2, shifted2):
    sp = SpectralParameter(0.75, 0.0, 3)
    ratios = (0.05, 0.25, 0.5, 0.75, 0.95)
    dil = 0.0
    row1 = [t1_row_integral(sp, 1.0, q, shifted2) for q in ratios]
    row2 = [t1_row_integral(sp, 2.5, 2.5 * q, shifted2) for q in ratios]
    dil = max(dil, max(rel(a, b) for a, b in zip(row1, row2)))
    fine = [t1_row_integral(sp, 1.0, q, shifted2, resolution=2) for q in ratios]
    stable = refinement_stable(max(row1), max(fine), 0.10)
    ks = {}
    for which in (1, 2):
        a = [k_row_integral(which, 0.75, 3, 1.0, q, s2) for q in ratios]
        b = [k_row_integral(which, 0.75, 3, 3.0, 3.0 * q, s2) for q in ratios]
        f = [k_row_integral(which, 0.75, 3, 1.0, q, s2, order=16) for q in ratios]
        dil = max(dil, max(rel(x, y) for x, y in zip(a, b)))
        stable &= refinement_stable(max(a), max(f), 0.10)
        ks[which] = (max(a), max(f))
    ok = dil <= 1e-6 and stable
    criterion(8, ok, f"dilation rel diff {dil:.1e}; sup T1 row {max(row1):.4g}/{max(fine):.4g}, "
                     f"sup K1 {ks[1][0]:.4g}/{ks[1][1]:.4g}, sup K2 {ks[2][0]:.4g}/{ks[2][1]:.4g} (coarse/refined)")
    assert ok


# 9, 10 -------------------------------------------------------------------------

T_LIST = (0.5, 1.0, 2.0, 4.0, 8.0)
P_LIST = (1.5, 2.0, 3.0)


def _uniformity(est):
    out = {}
    for p in P_LIST:
        ups = [e.upper for e in est if e.p == p]
        out[p] = max(ups) / min(ups)
    return out


@pytest.fixture(scope="module")
def s3_spec():
    return build_spectrum(ConeGeometry(4), SphereZeroPotential(3), 64)


def test_criterion_09_uniform_bounds(criterion, s3_spec):
    sp = SpectralParameter(0.75, 0.0, 4)
    oracle = multiplier_sup_closed(sp)
    assert multiplier_sup(sp, samples=4001) == pytest.approx(oracle, rel=1e-6)
    ok, parts = True, []
    for refine in (False, True):
        est = theorem_sweep(sp, P_LIST, T_LIST, s3_spec, radial_cells=24, angular_degree=2, refine=refine)
        uni = _uniformity(est)
        l2 = max(e.value for e in est if e.p == 2.0)
        ok &= all(v <= 1.25 for v in uni.values()) and l2 <= 1.05 * oracle
        ok &= all(e.lower <= e.upper * (1 + 1e-8) for e in est)
        parts.append(f"{'refined' if refine else 'coarse'}: max/min "
                     + ", ".join(f"p={p:g} {v:.6f}" for p, v in uni.items())
                     + f"; ||F||_2 {l2:.4f}")
    criterion(9, ok, "; ".join(parts) + f"; multiplier sup {oracle:.4f}")
    assert ok


def test_criterion_10_sine_propagator(criterion, s3_spec):
    ok, parts = True, []
    for refine in (False, True):
        est = theorem_sweep(None, P_LIST, T_LIST, s3_spec, which="sine", radial_cells=24,
                            angular_degree=2, refine=refine)
        uni = _uniformity(est)
        ok &= all(v <= 1.25 for v in uni.values())
        ok &= all(e.lower <= e.upper * (1 + 1e-8) for e in est)
        parts.append(f"{'refined' if refine else 'coarse'}: max/min of norm/t "
                     + ", ".join(f"p={p:g} {v:.6f}" for p, v in uni.items()))
    criterion(10, ok, "; ".join(parts))
    assert ok


# 11 ----------------------------------------------------------------------------

def test_criterion_11_parametrix(criterion):
    ok = True
    sphere = sphere_model(2)
    ok &= transport_alpha0(sphere, np.zeros(2)) == 1.0
    flat_err = 0.0
    for m in (2, 3):
        coeffs = parametrix_coefficients(flat_model(m), depth=1, radius=0.2, spacing=0.05)
        pts = np.random.default_rng(m).uniform(-0.12, 0.12, (10, m))
        flat_err = max(flat_err, float(np.max(np.abs(coeffs.alpha(0, pts) - 1.0))),
                       float(np.max(np.abs(coeffs.alpha(1, pts) + (m - 1) ** 2 / 4))))
    ok &= flat_err <= 1e-8
    pts = np.random.default_rng(11).uniform(-1.5, 1.5, (50, 2))
    pts = pts[np.linalg.norm(pts, axis=1) < 2.0]
    mod = np.abs(transport_alpha0(sphere, pts)) * sphere.sqrt_det(pts) ** 0.5
    mod_err = float(np.max(np.abs(mod - 1.0)))
    ok &= mod_err <= 1e-6
    s_list = (0.4, 0.2, 0.1, 0.05)
    coeffs = parametrix_coefficients(sphere, depth=2, radius=0.45)
    spec = build_spectrum(ConeGeometry(3), SphereZeroPotential(2), 80)
    test = lambda y: np.exp(np.cos(np.linalg.norm(y, axis=-1)) - 1.0)
    zonal = lambda sg: np.exp(np.cos(sg) - 1)
    errs = []
    for s in s_list:
        value, _ = hadamard_pairing(coeffs, s, test, 2)
        errs.append(abs(spectral_cos_pairing(spec, s, zonal) - value))
    monotone = all(b < a for a, b in zip(errs, errs[1:]))
    slope = float(np.polyfit(np.log(s_list), np.log(errs), 1)[0])
    ok &= monotone and abs(slope - 6.0) <= 0.5
    criterion(11, ok, f"flat err {flat_err:.1e}; modulus law err {mod_err:.1e}; K=2 errors "
                      + ", ".join(f"{e:.2e}" for e in errs) + f"; slope {slope:.3f} (predicted 6)")
    assert ok


# 12 ----------------------------------------------------------------------------

def test_criterion_12_e_nu(criterion):
    worst, ok = 0.0, True
    for nu in (1, 2):
        for dim in (2, 3, 4):
            for t in (0.5, 1.0):
                for rep in e_nu_check(nu, t, dim=dim):
                    if rep.quantity.startswith("box"):
                        continue
                    worst = max(worst, rep.relative_change)
                    ok &= rep.relative_change < 1e-6
    criterion(12, ok, f"max weak-form residual {worst:.1e} over nu=1,2, dims 2-4, t=0.5,1")
    assert ok
