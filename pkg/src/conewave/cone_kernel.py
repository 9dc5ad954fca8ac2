"""Pointwise kernel of ``F_{omega,t}(nu) = (pi/2)**1/2 (t nu)**(omega-n/2) J_{n/2-omega}(t nu)``
on a metric cone, with ``nu = sqrt((i grad + A)**2 + beta**2)``.

Three independent routes are provided:

``kernel_closed``
    per-mode Legendre functions of the light-cone angle, summed against the
    cross-section addition kernels;
``kernel_integral``
    one-dimensional integrals of cross-section wave kernels: a contour
    integral of the generating function across the light cone (interior) and
    a damped-kernel integral over ``h > E`` (exterior);
``kernel_bessel_oracle``
    direct triple-Bessel quadrature per mode (real ``omega`` only).

The kernel vanishes identically when ``t < |r - r'|``.

The exterior kernel carries the per-mode factor
``sin(pi(1/2 - mu - nu)) exp(-i pi mu)`` with ``mu = omega - (n-1)/2``; the
decomposition ``(exp(i pi mu) T1 + T2 - i sin(pi mu) T3) / (sqrt(2 pi)
Gamma(n/2-omega))`` reproduces it, where ``T3`` collects the
``exp(-i pi nu)`` half-wave. ``exterior_form="cos"`` drops the ``T3`` part
(exact when ``sin(pi mu) = 0``, e.g. for the sine propagator).
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .cross_section import CrossSectionSpectrum, SphereZeroPotential
from .errors import (BoundaryError, RegimeBoundaryError, TruncationWarning,
                     UnsupportedCrossSection)
from .quadrature import singular_endpoint_rule
from .specfun import (ferrers_p_many, legendre_q_many, rgamma_complex,
                      weber_schafheitlin_quadrature)

__all__ = [
    "SpectralParameter", "RadialTriple", "RegimeData", "KernelValue", "classify_regime",
    "mode_angle_profile", "mode_radial_kernels", "kernel_closed", "kernel_integral", "kernel_bessel_oracle",
    "t1_kernel", "t2_kernel", "t3_kernel", "euclidean_kernel", "exterior_h_integrals",
    "interior_contour_integral",
]


@dataclass(frozen=True)
class SpectralParameter:
    """``omega = epsilon + i s ((n+1)/2 - epsilon)`` with ``epsilon`` in (1/2, 1).

    ``omega_override`` admits other real parts (``SpectralParameter.sine(n)``
    gives the sine propagator ``omega = (n-1)/2``).
    """

    epsilon: float
    s: float = 0.0
    n: int = 3
    omega_override: complex | None = None

    def __post_init__(self):
        if self.omega_override is None and not (0.5 < self.epsilon < 1.0):
            raise BoundaryError("epsilon must lie strictly inside (1/2, 1)")
        if self.n < 2:
            raise ValueError("n must be >= 2")

    @classmethod
    def sine(cls, n: int) -> "SpectralParameter":
        return cls(epsilon=0.5 * (n - 1), s=0.0, n=n, omega_override=complex(0.5 * (n - 1)))

    @property
    def omega(self) -> complex:
        if self.omega_override is not None:
            return complex(self.omega_override)
        return complex(self.epsilon, self.s * (0.5 * (self.n + 1) - self.epsilon))

    @property
    def beta(self) -> float:
        return 0.5 * (self.n - 2)

    @property
    def mu(self) -> complex:
        """Legendre order ``omega - (n-1)/2`` of the closed-form kernel."""
        return self.omega - 0.5 * (self.n - 1)

    @property
    def bessel_order(self) -> complex:
        return 0.5 * self.n - self.omega


@dataclass(frozen=True)
class RadialTriple:
    t: float
    r: float
    rprime: float

    def __post_init__(self):
        if not (self.t > 0 and self.r > 0 and self.rprime > 0):
            raise ValueError("t, r, r' must be positive")


@dataclass(frozen=True)
class RegimeData:
    regime: str  # "zero", "interior" or "exterior"
    angle: float | None  # A (interior) or the hyperbolic angle (exterior)


@dataclass(frozen=True)
class KernelValue:
    value: complex | np.ndarray
    error_estimate: float
    method: str
    regime: str
    jmax_used: int


def classify_regime(rt: RadialTriple, boundary_tol: float = 1e-9) -> RegimeData:
    """Light-cone regime of ``(t, r, r')``; raises on the boundaries."""
    t, r, rp = rt.t, rt.r, rt.rprime
    lo, hi = abs(r - rp), r + rp
    if abs(t - lo) <= boundary_tol * hi or abs(t - hi) <= boundary_tol * hi:
        raise RegimeBoundaryError(f"t={t} on the light cone of r={r}, r'={rp}")
    if t < lo:
        return RegimeData("zero", None)
    c = (r * r + rp * rp - t * t) / (2 * r * rp)
    if t < hi:
        return RegimeData("interior", math.acos(max(-1.0, min(1.0, c))))
    return RegimeData("exterior", math.acosh(-c))


def _prefactor(sp: SpectralParameter, rt: RadialTriple) -> complex:
    w = sp.omega
    return cmath.exp(2 * (w - 0.5 * sp.n) * math.log(rt.t) - w * math.log(rt.r * rt.rprime))


def _check_spectrum(sp: SpectralParameter, spectrum: CrossSectionSpectrum):
    if spectrum.geometry.n != sp.n:
        raise ValueError(f"spectrum is for n={spectrum.geometry.n}, parameter for n={sp.n}")


def _mode_weights(spectrum: CrossSectionSpectrum, mollifier: float | None):
    if mollifier is None:
        return None
    return np.exp(-(spectrum.nus / mollifier) ** 2)


def mode_angle_profile(sp: SpectralParameter, nus, regime: str, angle: float,
                       exterior_form: str = "corrected", rtol: float = 1e-12):
    """Per-mode kernels with the radial prefactor removed.

    ``k_j(t, r, r') = t**(2 omega - n) (r r')**(-omega) * profile_j(angle)``
    where ``angle`` is ``A`` (interior) or the hyperbolic angle (exterior).
    Returns ``(values, errors)``.
    """
    nus = np.asarray(nus, dtype=float)
    mu = sp.mu
    if regime == "interior":
        p, err = ferrers_p_many(nus - 0.5, mu, angle, rtol)
        fac = 0.5 * cmath.exp(-mu * math.log(math.sin(angle)))
        return fac * p, abs(fac) * err
    if regime != "exterior":
        raise ValueError("regime must be 'interior' or 'exterior'")
    q, err = legendre_q_many(nus - 0.5, mu, angle, rtol)
    fac = cmath.exp(-mu * (float(_log_two_sinh(angle)) - math.log(2.0))) / math.pi
    if exterior_form == "corrected":
        trig = np.sin(math.pi * (0.5 - mu - nus)) * cmath.exp(-1j * math.pi * mu)
    elif exterior_form == "cos":
        trig = np.cos(math.pi * nus).astype(complex)
    else:
        raise ValueError("exterior_form must be 'corrected' or 'cos'")
    return fac * trig * q, np.abs(fac * trig) * err


def mode_radial_kernels(sp: SpectralParameter, rt: RadialTriple, nus, regime: RegimeData | None = None,
                        exterior_form: str = "corrected", rtol: float = 1e-12):
    """Per-mode radial kernels ``k_j(t, r, r')`` for the listed ``nu_j``.

    Returns ``(values, errors)``; the full kernel is ``sum_j k_j K_j(sigma)``.
    """
    nus = np.asarray(nus, dtype=float)
    reg = classify_regime(rt) if regime is None else regime
    if reg.regime == "zero":
        return np.zeros(nus.size, dtype=complex), np.zeros(nus.size)
    pref = _prefactor(sp, rt)
    vals, err = mode_angle_profile(sp, nus, reg.regime, reg.angle, exterior_form, rtol)
    return pref * vals, abs(pref) * err


def kernel_closed(sp: SpectralParameter, rt: RadialTriple, sigma, spectrum: CrossSectionSpectrum,
                  mollifier: float | None = None, exterior_form: str = "corrected",
                  tol: float = 1e-10, jmax_cap: int = 1024) -> KernelValue:
    """Kernel from per-mode closed forms.

    For an infinite family the truncation is doubled until the last block
    changes the sum by less than ``tol`` (relative); reaching ``jmax_cap``
    issues a :class:`TruncationWarning`. Complete spectra are summed exactly.
    """
    _check_spectrum(sp, spectrum)
    reg = classify_regime(rt)
    scalar = np.ndim(sigma) == 0
    sig = np.atleast_1d(np.asarray(sigma, dtype=float))
    if reg.regime == "zero":
        zero = 0j if scalar else np.zeros(sig.size, dtype=complex)
        return KernelValue(zero, 0.0, "closed", "zero", spectrum.jmax)
    spec = spectrum
    prev = None
    while True:
        k, kerr = mode_radial_kernels(sp, rt, spec.nus, reg, exterior_form)
        wts = _mode_weights(spec, mollifier)
        if wts is not None:
            k, kerr = k * wts, kerr * wts
        val = spec.mode_sum(k, sig)
        bound = spec.kernel_bound()
        err = float(np.sum(kerr * bound))
        if spec.complete:
            break
        if prev is not None:
            change = float(np.max(np.abs(val - prev)))
            if change <= tol * max(float(np.max(np.abs(val))), 1e-300):
                err += change
                break
            if spec.jmax >= jmax_cap:
                err += change
                warnings.warn(f"kernel mode sum not settled at jmax={spec.jmax} (change {change:.1e})",
                              TruncationWarning)
                break
        prev = val
        spec = spec.with_jmax(min(jmax_cap, 2 * spec.jmax + 1))
    return KernelValue(complex(val[0]) if scalar else val, err, "closed", reg.regime, spec.jmax)


# ---------------------------------------------------------------------------
# integral route
# ---------------------------------------------------------------------------

def _phi_eval(spectrum, w, sig, weights, phi_method):
    method = phi_method
    if method == "auto":
        method = "closed" if (spectrum.has_closed_form and weights is None) else "sum"
    return spectrum.phi(w, sig, method=method, weights=weights)


def interior_contour_integral(sp: SpectralParameter, angle: float, sigma, spectrum: CrossSectionSpectrum,
                              weights=None, phi_method: str = "auto", order: int = 12,
                              estimate_error: bool = True):
    """``int_0^A (cos h - cos A)**(beta-omega) cos(h nu)(sigma) dh``.

    Written as ``1/2 int_{-A}^{A} (cos w - cos A)**(beta-omega) Phi(w) dw`` and
    deformed into the upper half-plane along ``w = tau + i H cos(pi tau/(2A))``,
    which keeps ``cos w - cos A`` off the negative axis. Both endpoint
    singularities are folded into graded rules. Returns ``(values, error)``.
    """
    sig = np.atleast_1d(np.asarray(sigma, dtype=float))
    A = float(angle)
    a = sp.beta - sp.omega
    height = min(2.0 * A / math.pi, 1.5)
    c = math.pi / (2 * A)
    numax = float(np.max(spectrum.nus)) if (phi_method == "sum" or weights is not None
                                              or not spectrum.has_closed_form) else 4.0
    width = min(3.0 / max(numax, 1.0), A / 6)

    def one(order_):
        v, w = singular_endpoint_rule(A, a, order=order_, depth=56, max_width=width)
        sv = np.sin(c * v)
        cv = np.cos(c * v)
        total = 0
        for side in (1.0, -1.0):
            # side +1: tau = A - v ; side -1: tau = -A + v
            wpt = side * (A - v) + 1j * height * sv
            q = 1.0 - side * 1j * height * sv / np.where(v > 0, v, 1.0)
            q[0] = 1.0 - side * 1j * height * c
            # cos w - cos A = v * psi(v)
            if side > 0:
                psi = 2.0 * np.sin(0.5 * (wpt + A)) * np.sin(0.5 * v * q) / np.where(v > 0, v, 1.0)
                psi[0] = math.sin(A) * q[0]
            else:
                psi = 2.0 * np.sin(0.5 * v * q) * np.sin(0.5 * (A - wpt)) / np.where(v > 0, v, 1.0)
                psi[0] = q[0] * math.sin(A)
            dw = 1.0 - side * 1j * height * c * cv if side > 0 else 1.0 + 1j * height * c * cv
            fac = np.exp(a * np.log(psi)) * dw * w
            ph = _phi_eval(spectrum, wpt, sig, weights, phi_method)
            total = total + fac @ ph
        return 0.5 * total

    hi = one(order)
    if not estimate_error:
        return hi, 0.0
    lo = one(max(6, order // 2 + 1))
    return hi, float(np.max(np.abs(hi - lo)))


def _log_two_sinh(x):
    return x + np.log(-np.expm1(-2.0 * x))


def exterior_h_integrals(sp: SpectralParameter, angle: float, sigma, spectrum: CrossSectionSpectrum,
                         weights=None, phi_method: str = "auto", order: int = 12, tol: float = 1e-12,
                         estimate_error: bool = True):
    """``int_E^inf (cosh h - cosh E)**(beta-omega) Phi(+-pi + i h) dh`` for both signs.

    Returns ``(I_plus, I_minus, error)``. The damped wave kernel
    ``cos(pi nu) exp(-h nu)`` is ``(Phi(pi+ih) + Phi(-pi+ih))/2``.
    """
    sig = np.atleast_1d(np.asarray(sigma, dtype=float))
    E = float(angle)
    a = sp.beta - sp.omega
    nu0 = float(np.min(spectrum.nus))
    rate = nu0 - a.real
    if rate <= 0:
        raise UnsupportedCrossSection("exterior integral diverges: nu_0 <= beta - Re(omega)")
    length = (-math.log(tol * 1e-3) + 5.0) / rate
    summed = phi_method == "sum" or weights is not None or not spectrum.has_closed_form
    numax = (float(np.max(spectrum.nus)) if summed else nu0) + 1.0
    osc = abs(a.imag)
    depth = int(math.ceil(math.log2(length / (1e-6 * min(E, 1.0))))) + 2
    log_sinh_E = float(_log_two_sinh(E)) - math.log(2.0)

    def width(x):
        w_ = max(3.0 / numax, x / 3.0)
        return min(w_, 3.0 / osc) if osc > 0 else w_

    def one(order_):
        v, w = singular_endpoint_rule(length, a, order=order_, depth=depth, max_width=width)
        logpsi = np.empty_like(v)
        logpsi[0] = log_sinh_E
        vv = v[1:]
        logpsi[1:] = _log_two_sinh(E + 0.5 * vv) + _log_two_sinh(0.5 * vv) - np.log(2.0 * vv)
        fac = np.exp(a * logpsi) * w
        h = E + v
        plus = _phi_eval(spectrum, math.pi + 1j * h, sig, weights, phi_method)
        minus = _phi_eval(spectrum, -math.pi + 1j * h, sig, weights, phi_method)
        last = abs(fac[-1]) / abs(w[-1]) * float(np.max(np.abs(plus[-1]) + np.abs(minus[-1])))
        return fac @ plus, fac @ minus, last * length ** a.real / rate

    p_hi, m_hi, tail = one(order)
    if not estimate_error:
        return p_hi, m_hi, tail
    p_lo, m_lo, _ = one(max(6, order // 2 + 1))
    err = float(np.max(np.abs(p_hi - p_lo)) + np.max(np.abs(m_hi - m_lo))) + tail
    return p_hi, m_hi, err


def _norm_const(sp: SpectralParameter) -> complex:
    return rgamma_complex(sp.bessel_order) / math.sqrt(2 * math.pi)


def t1_kernel(sp, rt, sigma, spectrum, weights=None, phi_method="auto"):
    """``T1``: exterior integral of the damped kernel ``exp(-h nu) cos(pi nu)``."""
    reg = classify_regime(rt)
    sig = np.atleast_1d(np.asarray(sigma, dtype=float))
    if reg.regime != "exterior":
        return np.zeros(sig.size, dtype=complex), 0.0
    ip, im, err = exterior_h_integrals(sp, reg.angle, sig, spectrum, weights, phi_method)
    pref = _prefactor(sp, rt)
    return pref * 0.5 * (ip + im), abs(pref) * err


def t3_kernel(sp, rt, sigma, spectrum, weights=None, phi_method="auto"):
    """``T3``: exterior integral of ``exp(-h nu) exp(-i pi nu)``."""
    reg = classify_regime(rt)
    sig = np.atleast_1d(np.asarray(sigma, dtype=float))
    if reg.regime != "exterior":
        return np.zeros(sig.size, dtype=complex), 0.0
    ip, im, err = exterior_h_integrals(sp, reg.angle, sig, spectrum, weights, phi_method)
    pref = _prefactor(sp, rt)
    return pref * im, abs(pref) * err


def t2_kernel(sp, rt, sigma, spectrum, weights=None, phi_method="auto"):
    """``T2``: interior integral of ``cos(h nu)`` over ``0 < h < A``."""
    reg = classify_regime(rt)
    sig = np.atleast_1d(np.asarray(sigma, dtype=float))
    if reg.regime != "interior":
        return np.zeros(sig.size, dtype=complex), 0.0
    g, err = interior_contour_integral(sp, reg.angle, sig, spectrum, weights, phi_method)
    pref = _prefactor(sp, rt)
    return pref * g, abs(pref) * err


def kernel_integral(sp: SpectralParameter, rt: RadialTriple, sigma, spectrum: CrossSectionSpectrum,
                    mollifier: float | None = None, exterior_form: str = "corrected",
                    phi_method: str = "auto") -> KernelValue:
    """Kernel from the one-dimensional wave-kernel integrals (second route)."""
    _check_spectrum(sp, spectrum)
    reg = classify_regime(rt)
    scalar = np.ndim(sigma) == 0
    sig = np.atleast_1d(np.asarray(sigma, dtype=float))
    if reg.regime == "zero":
        zero = 0j if scalar else np.zeros(sig.size, dtype=complex)
        return KernelValue(zero, 0.0, "integral", "zero", spectrum.jmax)
    weights = _mode_weights(spectrum, mollifier)
    norm = _norm_const(sp)
    pref = _prefactor(sp, rt)
    if reg.regime == "interior":
        g, err = interior_contour_integral(sp, reg.angle, sig, spectrum, weights, phi_method)
        val = norm * pref * g
        err = abs(norm * pref) * err
    else:
        ip, im, err = exterior_h_integrals(sp, reg.angle, sig, spectrum, weights, phi_method)
        e = cmath.exp(1j * math.pi * sp.mu)
        if exterior_form == "corrected":
            core = 0.5 * e * ip + 0.5 / e * im
        elif exterior_form == "cos":
            core = 0.5 * e * (ip + im)
        else:
            raise ValueError("exterior_form must be 'corrected' or 'cos'")
        val = norm * pref * core
        err = abs(norm * pref) * err
    return KernelValue(complex(val[0]) if scalar else val, err, "integral", reg.regime, spectrum.jmax)


def kernel_bessel_oracle(sp: SpectralParameter, rt: RadialTriple, sigma, spectrum: CrossSectionSpectrum,
                         mollifier: float | None = None, rtol: float = 1e-10) -> KernelValue:
    """Kernel from per-mode triple-Bessel quadrature (real ``omega`` only)."""
    _check_spectrum(sp, spectrum)
    if abs(sp.omega.imag) > 0:
        raise ValueError("the Bessel oracle is restricted to real omega (s = 0)")
    reg = classify_regime(rt)
    scalar = np.ndim(sigma) == 0
    sig = np.atleast_1d(np.asarray(sigma, dtype=float))
    if not spectrum.complete:
        warnings.warn("Bessel oracle sums only the listed modes of an infinite family", TruncationWarning)
    w = sp.omega.real
    kappa = 0.5 * sp.n - w
    pref = math.sqrt(0.5 * math.pi) * rt.t ** (w - 0.5 * sp.n) * (rt.r * rt.rprime) ** (-sp.beta)
    k = np.empty(spectrum.nus.size)
    kerr = np.empty(spectrum.nus.size)
    for j, nu in enumerate(spectrum.nus):
        k[j], kerr[j] = weber_schafheitlin_quadrature(kappa, nu, rt.t, rt.r, rt.rprime, rtol)
    wts = _mode_weights(spectrum, mollifier)
    if wts is not None:
        k, kerr = k * wts, kerr * wts
    val = pref * spectrum.mode_sum(k.astype(complex), sig)
    err = pref * float(np.sum(kerr * spectrum.kernel_bound()))
    return KernelValue(complex(val[0]) if scalar else val, err, "oracle", reg.regime, spectrum.jmax)


def euclidean_kernel(sp: SpectralParameter, rt: RadialTriple, sigma) -> np.ndarray:
    """Kernel on the flat cone over the round sphere (Euclidean space).

    ``(pi/2)**1/2 2**omega (2 pi)**(-n/2) / Gamma(1-omega) * t**(2 omega - n)
    * (t**2 - |x-x'|**2)_+**(-omega)``, with ``|x-x'|`` from the law of
    cosines; pointwise off the light cone.
    """
    w = sp.omega
    sig = np.asarray(sigma, dtype=float)
    d2 = rt.r ** 2 + rt.rprime ** 2 - 2 * rt.r * rt.rprime * np.cos(sig)
    gap = rt.t ** 2 - d2
    c = (math.sqrt(0.5 * math.pi) * cmath.exp(w * math.log(2.0)) * (2 * math.pi) ** (-0.5 * sp.n)
         * rgamma_complex(1.0 - w) * cmath.exp((2 * w - sp.n) * math.log(rt.t)))
    pos = np.where(gap > 0, gap, 1.0)
    return np.where(gap > 0, c * np.exp(-w * np.log(pos)), 0j)


def is_euclidean(spectrum: CrossSectionSpectrum) -> bool:
    return isinstance(spectrum.source, SphereZeroPotential) and not spectrum.complete
