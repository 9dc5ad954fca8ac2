"""Special functions in the conventions the cone kernels need.

* ``gamma_complex`` / ``loggamma_complex``: Lanczos approximation with
  reflection, accurate to ~1e-14 relative for moderate imaginary parts.
* ``bessel_j``: Bessel J of real order, power series for small arguments and
  Miller backward recurrence otherwise.
* ``legendre_p`` / ``legendre_q``: Ferrers P on the cut and the second-kind
  Q off the cut (the branch with the ``exp(i*pi*mu)`` factor), both evaluated
  from their one-dimensional integral representations with the endpoint
  singularity handled by graded panels.
* ``weber_schafheitlin``: closed form of the triple-Bessel integral
  ``int_0^inf t**(1-mu) J_mu(a t) J_lam(b t) J_lam(c t) dt`` in all three
  regimes, plus an independent oscillatory-quadrature oracle.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .errors import (BoundaryError, DivergentTailError, OscillatoryQuadratureError,
                     PoleError, RegimeBoundaryError, SingularQuadratureError)
from .quadrature import gauss_laguerre, geometric_edges, panel_rule, refine_edges, singular_endpoint_rule

__all__ = [
    "as_complex", "gamma_complex", "loggamma_complex", "rgamma_complex", "bessel_j",
    "LegendreArgs", "legendre_p", "legendre_q", "ferrers_p_many", "legendre_q_many",
    "weber_schafheitlin", "weber_schafheitlin_quadrature", "ws_regime",
]


def as_complex(z, checked: bool = True) -> complex:
    """Coerce to ``complex``; in checked mode NaN and infinite parts are rejected."""
    z = complex(z)
    if checked and not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"non-finite complex value {z!r}")
    return z


# ---------------------------------------------------------------------------
# Gamma
# ---------------------------------------------------------------------------

_LANCZOS_G = 607.0 / 128.0
_LANCZOS_COEF = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _check_pole(z: complex) -> None:
    if z.imag == 0.0 and z.real <= 0.0:
        k = round(z.real)
        if abs(z.real - k) <= 1e-14 * max(1.0, abs(z.real)):
            raise PoleError(f"Gamma has a pole at {z.real:g}")


def _lanczos_log(z: complex) -> complex:
    # valid for Re z >= 1/2
    z = z - 1.0
    x = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        x += _LANCZOS_COEF[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * cmath.log(t) - t + cmath.log(x)


def loggamma_complex(z) -> complex:
    """log Gamma(z); the imaginary part is a continuous branch, not principal."""
    z = as_complex(z)
    _check_pole(z)
    if z.real >= 0.5:
        return _lanczos_log(z)
    # reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z)
    return math.log(math.pi) - cmath.log(cmath.sin(math.pi * z)) - _lanczos_log(1.0 - z)


def gamma_complex(z) -> complex:
    """Gamma(z) for complex z; raises :class:`PoleError` at 0, -1, -2, ..."""
    z = as_complex(z)
    _check_pole(z)
    if z.imag == 0.0 and z.real > 0 and z.real < 171:
        return complex(math.gamma(z.real)) if z.real == round(z.real) else cmath.exp(_lanczos_log(z))
    if z.real >= 0.5:
        return cmath.exp(_lanczos_log(z))
    return math.pi / (cmath.sin(math.pi * z) * cmath.exp(_lanczos_log(1.0 - z)))


def rgamma_complex(z) -> complex:
    """1/Gamma(z), entire: returns 0 at the poles of Gamma."""
    z = as_complex(z)
    try:
        return 1.0 / gamma_complex(z)
    except PoleError:
        return 0j


# ---------------------------------------------------------------------------
# Bessel J of real order
# ---------------------------------------------------------------------------

def _bessel_series(nu: float, x: float) -> float:
    half = 0.5 * x
    term = math.exp(nu * math.log(half) - math.lgamma(nu + 1.0)) if x > 0 else (1.0 if nu == 0 else 0.0)
    total = term
    q = -half * half
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + nu))
        total += term
        if abs(term) <= 1e-17 * abs(total) or k > 500:
            return total


def _bessel_miller(nu: float, x: float) -> float:
    n0 = int(math.floor(nu))
    mu = nu - n0
    start = max(n0, int(x)) + 20 + int(4.0 * x ** (1.0 / 3.0)) + int(math.sqrt(40.0 * max(n0, x)))
    start += start % 2
    f_next, f = 0.0, 1e-30
    target = 0.0
    norm = 0.0
    for k in range(start, 0, -1):
        # f holds the unnormalised J_{mu+k}
        if k == n0:
            target = f
        if k % 2 == 0:
            m = k // 2
            norm += (mu + k) * math.exp(math.lgamma(mu + m) - math.lgamma(m + 1.0)) * f
        f_prev = 2.0 * (mu + k) / x * f - f_next
        f_next, f = f, f_prev
        if abs(f) > 1e250:
            f_next *= 1e-250
            f *= 1e-250
            target *= 1e-250
            norm *= 1e-250
    if n0 == 0:
        target = f
    norm += math.gamma(mu + 1.0) * f
    return target * math.exp(mu * math.log(0.5 * x)) / norm


def _bessel_scalar(nu: float, x: float) -> float:
    if x == 0.0:
        return 1.0 if nu == 0.0 else 0.0
    if x < 0.0:
        raise ValueError("bessel_j is implemented for x >= 0")
    if x * x <= 14.0 * (nu + 1.0) or x < 1e-3:
        return _bessel_series(nu, x)
    return _bessel_miller(nu, x)


def bessel_j(order: float, x):
    """Bessel function J_order(x) for real order >= 0 and x >= 0.

    Accepts a scalar or an array for ``x``. Small arguments use the ascending
    series (only where its cancellation is mild); larger arguments use Miller
    backward recurrence normalised by the Neumann-type identity
    ``(x/2)**mu = sum_k (mu+2k) Gamma(mu+k)/k! J_{mu+2k}(x)``.
    """
    nu = float(order)
    if not math.isfinite(nu) or nu < 0:
        raise ValueError("bessel_j requires a finite order >= 0")
    if np.ndim(x) == 0:
        return _bessel_scalar(nu, float(x))
    xs = np.asarray(x, dtype=float)
    return np.array([_bessel_scalar(nu, float(v)) for v in xs.ravel()]).reshape(xs.shape)


# ---------------------------------------------------------------------------
# Legendre functions from integral representations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LegendreArgs:
    """Arguments of a Legendre function.

    ``kind="trig"`` means the argument is ``cos(theta)`` with theta in (0, pi)
    (Ferrers P); ``kind="hyper"`` means ``cosh(theta)`` with theta > 0 (Q).
    """

    mu: complex
    degree: complex
    theta: float
    kind: str = "trig"

    def __post_init__(self):
        object.__setattr__(self, "mu", as_complex(self.mu))
        object.__setattr__(self, "degree", as_complex(self.degree))
        if self.kind not in ("trig", "hyper"):
            raise ValueError("kind must be 'trig' or 'hyper'")
        if not math.isfinite(self.theta):
            raise ValueError("theta must be finite")


_QUAD_ORDERS = (10, 20, 40)


def _log_two_sinh(x):
    # log(2 sinh x) for x > 0 without overflow or cancellation
    x = np.asarray(x, dtype=float)
    return x + np.log(-np.expm1(-2.0 * x))


def _ferrers_rule(theta, a, freq, order):
    width = 3.0 / freq if freq > 0 else None
    v, w = singular_endpoint_rule(theta, a, order=order, depth=52, max_width=width)
    phi = np.empty_like(v)
    phi[0] = math.sin(theta)
    vv = v[1:]
    phi[1:] = 2.0 * np.sin(theta - 0.5 * vv) * np.sin(0.5 * vv) / vv
    if a.imag == 0.0:
        f = phi ** a.real
    else:
        f = np.exp(a * np.log(phi))
    return theta - v, w * f


def ferrers_p_many(degrees, mu, theta: float, rtol: float = 1e-12):
    """Ferrers P^mu_degree(cos theta) for an array of degrees sharing mu, theta.

    Uses ``Gamma(1/2-mu) P = (pi/2)**-1/2 sin(theta)**mu
    int_0^theta (cos s - cos theta)**(-mu-1/2) cos((degree+1/2) s) ds``
    which needs ``Re mu < 1/2``. Returns ``(values, error_estimates)``.
    """
    lam = np.atleast_1d(np.asarray(degrees, dtype=complex))
    mu = as_complex(mu)
    if not (0.0 < theta < math.pi):
        raise BoundaryError("theta must lie strictly inside (0, pi)")
    if mu.real >= 0.5:
        raise BoundaryError("integral representation of P needs Re(mu) < 1/2")
    a = -mu - 0.5
    k = lam + 0.5
    freq = float(np.max(np.abs(k.real)) + np.max(np.abs(k.imag)) * 0 + 1.0)
    pref = (0.5 * math.pi) ** -0.5 * cmath.exp(mu * math.log(math.sin(theta))) * rgamma_complex(0.5 - mu)
    prev = None
    for order in _QUAD_ORDERS:
        s, w = _ferrers_rule(theta, a, freq, order)
        val = np.cos(np.outer(k, s)) @ w
        if prev is not None:
            err = np.abs(val - prev)
            scale = np.maximum(np.abs(val), 1e-300)
            if np.all(err <= rtol * np.maximum(scale, np.max(np.abs(val)) * 1e-3)):
                return pref * val, np.abs(pref) * err
        prev = val
    raise SingularQuadratureError(
        f"Ferrers P quadrature did not converge (theta={theta}, mu={mu})")


def legendre_q_many(degrees, mu, theta: float, rtol: float = 1e-12):
    """Second-kind Q^mu_degree(cosh theta) for an array of degrees.

    Uses ``Gamma(1/2-mu) Q = (pi/2)**1/2 exp(i pi mu) sinh(theta)**mu
    int_theta^inf (cosh s - cosh theta)**(-mu-1/2) exp(-(degree+1/2) s) ds``.
    The integrand decays like ``exp(-Re(degree+mu+1) s)``; a non-positive rate
    raises :class:`DivergentTailError`.
    """
    lam = np.atleast_1d(np.asarray(degrees, dtype=complex))
    mu = as_complex(mu)
    if not theta > 0.0:
        raise BoundaryError("theta must be positive")
    if mu.real >= 0.5:
        raise BoundaryError("integral representation of Q needs Re(mu) < 1/2")
    decay = (lam + mu + 1.0).real
    if np.any(decay <= 0.0):
        raise DivergentTailError("Q integral diverges: Re(degree + mu + 1) <= 0")
    a = -mu - 0.5
    k = lam + 0.5
    kmin = float(np.min(decay))
    kmax = float(np.max(k.real)) + 1.0
    osc = float(np.max(np.abs(k.imag))) + abs(a.imag)
    length = (-math.log(rtol * 1e-3) + 5.0) / kmin
    log_sinh_theta = float(_log_two_sinh(theta)) - math.log(2.0)
    pref = ((0.5 * math.pi) ** 0.5 * cmath.exp(1j * math.pi * mu)
            * cmath.exp(mu * log_sinh_theta) * rgamma_complex(0.5 - mu))

    def width(x):
        w = max(3.0 / kmax, x / 3.0)
        return min(w, 3.0 / osc) if osc > 0 else w

    prev = None
    for order in _QUAD_ORDERS:
        v, w = singular_endpoint_rule(length, a, order=order, depth=56, max_width=width)
        logpsi = np.empty_like(v)
        logpsi[0] = log_sinh_theta
        vv = v[1:]
        logpsi[1:] = _log_two_sinh(theta + 0.5 * vv) + _log_two_sinh(0.5 * vv) - np.log(2.0 * vv)
        expo = a * logpsi[None, :] - np.outer(k, theta + v)
        val = np.exp(expo) @ w
        if prev is not None:
            err = np.abs(val - prev)
            # tail beyond the cut, from the integrand size at the cut
            tail = np.abs(np.exp(expo[:, -1])) * length ** a.real / np.maximum(decay, 1e-300)
            err = err + tail
            if np.all(err <= rtol * np.maximum(np.abs(val), np.max(np.abs(val)) * 1e-3)):
                return pref * val, np.abs(pref) * err
        prev = val
    raise SingularQuadratureError(
        f"Legendre Q quadrature did not converge (theta={theta}, mu={mu})")


def legendre_p(args: LegendreArgs, rtol: float = 1e-12, return_error: bool = False):
    """Ferrers P^mu_degree(cos theta) for ``args.kind == "trig"``."""
    if args.kind != "trig":
        raise ValueError("legendre_p expects a 'trig' argument")
    val, err = ferrers_p_many([args.degree], args.mu, args.theta, rtol)
    return (complex(val[0]), float(err[0])) if return_error else complex(val[0])


def legendre_q(args: LegendreArgs, rtol: float = 1e-12, return_error: bool = False):
    """Second-kind Q^mu_degree(cosh theta) for ``args.kind == "hyper"``."""
    if args.kind != "hyper":
        raise ValueError("legendre_q expects a 'hyper' argument")
    val, err = legendre_q_many([args.degree], args.mu, args.theta, rtol)
    return (complex(val[0]), float(err[0])) if return_error else complex(val[0])


# ---------------------------------------------------------------------------
# Triple-Bessel integral
# ---------------------------------------------------------------------------

def ws_regime(a: float, b: float, c: float, boundary_tol: float = 1e-9) -> str:
    """Classify ``a`` against the triangle window ``|b-c| < a < b+c``.

    Returns ``"zero"``, ``"interior"`` or ``"exterior"``; raises
    :class:`RegimeBoundaryError` within ``boundary_tol`` (relative) of an edge.
    """
    if min(a, b, c) <= 0:
        raise ValueError("a, b, c must be positive")
    lo, hi = abs(b - c), b + c
    scale = hi
    if abs(a - lo) <= boundary_tol * scale or abs(a - hi) <= boundary_tol * scale:
        raise RegimeBoundaryError(f"a={a} lies on the boundary |b-c| or b+c")
    if a < lo:
        return "zero"
    if a < hi:
        return "interior"
    return "exterior"


def weber_schafheitlin(mu, lam, a: float, b: float, c: float, rtol: float = 1e-12,
                       return_error: bool = False):
    """Closed form of ``int_0^inf t**(1-mu) J_mu(a t) J_lam(b t) J_lam(c t) dt``.

    * ``a < |b-c|``: exactly zero.
    * ``|b-c| < a < b+c``, with ``cos A = (b**2+c**2-a**2)/(2bc)``:
      ``(bc)**(mu-1) sin(A)**(mu-1/2) / (sqrt(2 pi) a**mu) P^{1/2-mu}_{lam-1/2}(cos A)``.
    * ``a > b+c``, with ``cosh E = (a**2-b**2-c**2)/(2bc)``:
      ``(bc)**(mu-1) sinh(E)**(mu-1/2) / (sqrt(pi**3/2) a**mu)
      * sin(pi (mu-lam)) exp(-i pi (1/2-mu)) Q^{1/2-mu}_{lam-1/2}(cosh E)``.
    """
    mu = as_complex(mu)
    lam = as_complex(lam)
    regime = ws_regime(a, b, c)
    if regime == "zero":
        return (0j, 0.0) if return_error else 0j
    order = 0.5 - mu
    base = cmath.exp((mu - 1.0) * math.log(b * c) - mu * math.log(a))
    if regime == "interior":
        ang = math.acos(max(-1.0, min(1.0, (b * b + c * c - a * a) / (2 * b * c))))
        p, err = ferrers_p_many([lam - 0.5], order, ang, rtol)
        fac = base * cmath.exp((mu - 0.5) * math.log(math.sin(ang))) / math.sqrt(2 * math.pi)
        val, err = fac * complex(p[0]), abs(fac) * float(err[0])
    else:
        ang = math.acosh((a * a - b * b - c * c) / (2 * b * c))
        q, err = legendre_q_many([lam - 0.5], order, ang, rtol)
        phase = cmath.sin(math.pi * (mu - lam)) * cmath.exp(-1j * math.pi * order)
        fac = (base * cmath.exp((mu - 0.5) * math.log(math.sinh(ang)))
               / math.sqrt(math.pi ** 3 / 2) * phase)
        val, err = fac * complex(q[0]), abs(fac) * float(err[0])
    return (val, err) if return_error else val


_HANKEL = {1: (_sp.hankel1e, 1.0), -1: (_sp.hankel2e, -1.0)}


def _ws_lower(mu, lam, a, b, c, cut, order):
    total = a + b + c
    first = min(cut, math.pi / total)
    edges = np.concatenate(([0.0], geometric_edges(first, 24)))
    edges = np.concatenate((edges, refine_edges([first, cut], math.pi / total)[1:]))
    t, w = panel_rule(edges, order)
    f = t ** (1.0 - mu) * _sp.jv(mu, a * t) * _sp.jv(lam, b * t) * _sp.jv(lam, c * t)
    return float(np.dot(w, f)), float(np.dot(w, np.abs(f)))


def _ws_tail(mu, lam, a, b, c, cut, nodes):
    x, wl = gauss_laguerre(nodes)
    total = 0j
    for s1 in (1, -1):
        for s2 in (1, -1):
            for s3 in (1, -1):
                freq = s1 * a + s2 * b + s3 * c
                sgn = 1.0 if freq > 0 else -1.0
                u = x / abs(freq)
                t = cut + 1j * sgn * u
                h1, e1 = _HANKEL[s1]
                h2, e2 = _HANKEL[s2]
                h3, e3 = _HANKEL[s3]
                g = (t ** (1.0 - mu) * h1(mu, a * t) * h2(lam, b * t) * h3(lam, c * t))
                # exp(i F t) = exp(i F cut) exp(-|F| u); the Laguerre weight carries exp(-x)
                total += (1j * sgn * cmath.exp(1j * freq * cut) / abs(freq)) * np.dot(wl, g)
    return total / 8.0


def weber_schafheitlin_quadrature(mu: float, lam: float, a: float, b: float, c: float,
                                  rtol: float = 1e-10):
    """Oracle for the triple-Bessel integral by direct oscillatory quadrature.

    The range ``[0, cut]`` uses Gauss panels resolving the fastest oscillation.
    Beyond ``cut`` each Bessel factor is split into Hankel functions; every one
    of the eight products carries a single phase ``exp(i F t)`` and its contour
    is rotated into the half-plane where that phase decays, leaving a
    Gauss-Laguerre integral. Returns ``(value, error_estimate)``.
    """
    mu = float(mu)
    lam = float(lam)
    if mu <= -0.5:
        raise OscillatoryQuadratureError("integral diverges at infinity for mu <= -1/2")
    if lam <= -1.0:
        raise OscillatoryQuadratureError("integral diverges at 0 for lam <= -1")
    ws_regime(a, b, c)
    freqs = [abs(s1 * a + s2 * b + s3 * c) for s1 in (1, -1) for s2 in (1, -1) for s3 in (1, -1)]
    fmin = min(freqs)
    cut = max(30.0 / fmin, 2.0 * (max(abs(mu), abs(lam)) + 15.0) / min(a, b, c))
    lo_hi, scale = _ws_lower(mu, lam, a, b, c, cut, 16)
    lo_lo, _ = _ws_lower(mu, lam, a, b, c, cut, 11)
    tail_hi = _ws_tail(mu, lam, a, b, c, cut, 80)
    tail_lo = _ws_tail(mu, lam, a, b, c, cut, 60)
    value = lo_hi + tail_hi.real
    err = abs(lo_hi - lo_lo) + abs(tail_hi - tail_lo) + abs(tail_hi.imag)
    if err > max(rtol * abs(value), 1e-12 * scale) and err > 1e-13:
        raise OscillatoryQuadratureError(
            f"triple-Bessel quadrature unconverged: value={value:.3e}, err={err:.1e}")
    return value, err
