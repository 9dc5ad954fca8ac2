"""Short-time Hadamard parametrix for ``cos(s nu)`` on the cross-section.

``nu = sqrt((i grad + A)^2 + (n-2)^2/4)`` acts on an ``m = n-1`` dimensional
manifold given in geodesic normal coordinates around a base point. The
parametrix is

    cos(s nu)(0, x) ~ sum_k U_k(x) s (s^2 - |x|^2)_+^(k - n/2) / Gamma(k - n/2 + 1)

with ``U_k = pi^(1-n/2) 4^(-k) alpha_k`` and the transport coefficients
``alpha_k`` solving the radial transport recursion. The constants are fixed
by the flat, potential-free case, where ``E_0`` is the fundamental solution
of the wave operator:

    E_nu(t, x) = (1/2) pi^((1-d)/2) 4^(-nu) (t^2 - |x|^2)_+^(nu - (d-1)/2) / Gamma(nu - (d-1)/2 + 1)

in ``d`` space dimensions, so that ``2 d/dt E_nu = t E_(nu-1)`` and
``-2 grad E_nu = x E_(nu-1)``.

Profiles with exponent ``<= -1`` are distributions; they are only ever paired
with test functions, through the Riemann-Liouville form of
``(t^2 - h^2)_+^a / Gamma(a+1)`` in the variable ``h^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.interpolate import CubicSpline, NdBSpline, make_interp_spline
from scipy.fft import dct
from scipy.special import roots_jacobi

from .cross_section import CrossSectionSpectrum, sphere_volume, zonal_kernel_rows
from .errors import ChartError, ConfigError, DerivativeNoiseError, DistributionActionError
from .propagator import _sphere_points
from .quadrature import gauss_legendre
from .schur_bounds import BoundCheckReport

__all__ = [
    "MetricModel", "flat_model", "sphere_model", "warped_model", "load_metric_file",
    "rotation_potential", "constant_potential",
    "transport_alpha0", "transport_alpha_nu", "apply_q",
    "ParametrixCoeffs", "parametrix_coefficients",
    "DistributionProfile", "e_nu_profile", "riesz_pairing",
    "hadamard_expansion", "hadamard_pairing", "spectral_cos_pairing",
    "GaussianBump", "e_nu_check", "e_nu_initial_vanishing",
]

_RADIAL_NODES = 24


def _rgamma(x: float) -> float:
    """``1/Gamma(x)``, zero at the poles."""
    if x <= 0 and float(x).is_integer():
        return 0.0
    return 1.0 / math.gamma(x)


def _richardson(values):
    """Combine second-order estimates at steps ``h, 2h, 4h`` (finest first)."""
    d1, d2, d4 = values
    r1 = (4 * d1 - d2) / 3
    r2 = (4 * d2 - d4) / 3
    best = (16 * r1 - r2) / 15
    return best, np.abs(best - r1)


# ---------------------------------------------------------------------------
# metric models
# ---------------------------------------------------------------------------

class MetricModel:
    """Metric and magnetic potential on a normal-coordinate chart.

    ``metric(x)`` maps points of shape ``(..., m)`` to ``(..., m, m)``;
    ``potential(x)`` returns the covector ``(..., m)`` (zero when omitted).
    The constructor checks ``g(0) = I``, positivity and the radial gauge
    ``g(x) x = x`` on sampled rays.
    """

    def __init__(self, dimension: int, metric: Callable, potential: Callable | None = None, *,
                 chart_radius: float = math.inf, name: str = "custom",
                 grad_log_sqrt_det: Callable | None = None, gauge_tol: float = 1e-8,
                 step: float = 1e-2):
        self.m = int(dimension)
        if self.m < 1:
            raise ValueError("dimension must be >= 1")
        self.n = self.m + 1
        self._metric = metric
        self._potential = potential
        self.chart_radius = float(chart_radius)
        self.name = name
        self._grad_log_theta = grad_log_sqrt_det
        self.step = float(step)
        self._validate(gauge_tol)

    # -- raw fields --------------------------------------------------------
    def _check_chart(self, x):
        r = np.linalg.norm(x, axis=-1)
        if np.any(r > self.chart_radius):
            raise ChartError(f"point at radius {float(np.max(r)):.4g} outside the chart radius {self.chart_radius}")

    def metric(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self._check_chart(x)
        return np.asarray(self._metric(x), dtype=float)

    def potential(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self._potential is None:
            return np.zeros_like(x)
        return np.asarray(self._potential(x), dtype=float)

    @property
    def magnetic(self) -> bool:
        return self._potential is not None

    def sqrt_det(self, x) -> np.ndarray:
        return np.sqrt(np.linalg.det(self.metric(x)))

    def _validate(self, tol):
        g0 = self.metric(np.zeros(self.m))
        if not np.allclose(g0, np.eye(self.m), atol=1e-12, rtol=0):
            raise ConfigError("metric must equal the identity at the chart origin")
        rng = np.random.default_rng(12345)
        dirs = rng.standard_normal((32, self.m))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        rmax = min(self.chart_radius, 1.0) * 0.95
        radii = rmax * np.linspace(0.1, 1.0, 8)
        pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, self.m)
        g = self.metric(pts)
        if not np.allclose(g, np.swapaxes(g, -1, -2), atol=1e-12):
            raise ConfigError("metric is not symmetric")
        if np.any(np.linalg.eigvalsh(g)[:, 0] <= 0):
            raise ConfigError("metric is not positive definite on the chart")
        gx = np.einsum("...ij,...j->...i", g, pts)
        err = np.max(np.linalg.norm(gx - pts, axis=-1) / np.linalg.norm(pts, axis=-1))
        if err > tol:
            raise ConfigError(f"coordinates are not radially gauged: |g(x)x - x|/|x| = {err:.2e}")

    # -- derived fields ----------------------------------------------------
    def _fd(self, f, x, j):
        """Richardson-extrapolated derivative of ``f`` along axis ``j`` (values, error)."""
        e = np.zeros(self.m)
        e[j] = 1.0
        h = self.step
        ests = [(f(x + k * h * e) - f(x - k * h * e)) / (2 * k * h) for k in (0.25, 0.5, 1.0)]
        return _richardson(ests)

    def grad_log_sqrt_det(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self._grad_log_theta is not None:
            return np.asarray(self._grad_log_theta(x), dtype=float)
        f = lambda y: np.log(self.sqrt_det(y))
        return np.stack([self._fd(f, x, j)[0] for j in range(self.m)], axis=-1)

    def transport_factor(self, x) -> np.ndarray:
        """``rho(x) = sum_jk g_jk(x) b^k(x) x_j`` with ``b = a + 2i A``."""
        x = np.asarray(x, dtype=float)
        g = self.metric(x)
        ginv = np.linalg.inv(g)
        a = -np.einsum("...jk,...j->...k", ginv, self.grad_log_sqrt_det(x))
        b = a + 2j * np.einsum("...kj,...j->...k", ginv, self.potential(x))
        return np.einsum("...jk,...k,...j->...", g, b, x)

    def first_order_coefficient(self, x) -> np.ndarray:
        """``c^k`` in ``-Delta_g u = -g^jk d_j d_k u - c^k d_k u``."""
        x = np.asarray(x, dtype=float)
        ginv = np.linalg.inv(self.metric(x))
        div = 0.0
        for j in range(self.m):
            col = lambda y, _j=j: np.linalg.inv(self.metric(y))[..., _j, :]
            div = div + self._fd(col, x, j)[0]
        return div + np.einsum("...jk,...j->...k", ginv, self.grad_log_sqrt_det(x))

    def zeroth_order(self, x) -> np.ndarray:
        """``B = i div A + |A|_g^2 + (n-2)^2/4``."""
        x = np.asarray(x, dtype=float)
        const = (self.n - 2) ** 2 / 4.0
        if not self.magnetic:
            return np.full(x.shape[:-1], const, dtype=complex)
        ginv = np.linalg.inv(self.metric(x))
        A = self.potential(x)
        raised = lambda y: np.einsum("...kj,...j->...k", np.linalg.inv(self.metric(y)), self.potential(y))
        div = sum(self._fd(lambda y, _j=j: raised(y)[..., _j], x, j)[0] for j in range(self.m))
        div = div + np.einsum("...k,...k->...", raised(x), self.grad_log_sqrt_det(x))
        norm2 = np.einsum("...jk,...j,...k->...", ginv, A, A)
        return 1j * div + norm2 + const

    def raised_potential(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.einsum("...kj,...j->...k", np.linalg.inv(self.metric(x)), self.potential(x))

    def with_potential(self, potential: Callable | None, name: str | None = None) -> "MetricModel":
        return MetricModel(self.m, self._metric, potential, chart_radius=self.chart_radius,
                           name=name or self.name, grad_log_sqrt_det=self._grad_log_theta, step=self.step)


def _warped_metric(q):
    """``g = w w^T + q(r)^2 (I - w w^T)`` for a radial profile ``q = f(r)/r``."""
    def metric(x):
        x = np.asarray(x, dtype=float)
        m = x.shape[-1]
        r = np.linalg.norm(x, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        w = x / safe[..., None]
        proj = np.einsum("...i,...j->...ij", w, w)
        proj = np.where((r > 0)[..., None, None], proj, 0.0)
        qq = np.asarray(q(r), dtype=float) ** 2
        eye = np.eye(m)
        return proj + qq[..., None, None] * (eye - proj)
    return metric


def flat_model(dimension: int = 2, potential: Callable | None = None) -> MetricModel:
    return MetricModel(dimension, lambda x: np.broadcast_to(np.eye(x.shape[-1]), x.shape + (x.shape[-1],)),
                       potential, name="flat",
                       grad_log_sqrt_det=lambda x: np.zeros_like(np.asarray(x, dtype=float)))


def _sinc(r):
    return np.sinc(np.asarray(r) / math.pi)


def _log_sinc_slope(r):
    """``d/dr log(sin r / r) = cot r - 1/r`` with a series near zero."""
    r = np.asarray(r, dtype=float)
    small = np.abs(r) < 1e-2
    rs = np.where(small, 1.0, r)
    exact = 1.0 / np.tan(rs) - 1.0 / rs
    r2 = r * r
    series = -r / 3 * (1 + r2 / 15 * (1 + 2 * r2 / 63))
    return np.where(small, series, exact)


def sphere_model(dimension: int = 2, potential: Callable | None = None) -> MetricModel:
    """Round unit sphere ``S^m`` in normal coordinates (``f(r) = sin r``)."""
    m = int(dimension)

    def grad(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        slope = np.where(r > 0, _log_sinc_slope(r) / safe, -1.0 / 3.0)
        return (m - 1) * slope[..., None] * x

    return MetricModel(m, _warped_metric(_sinc), potential, chart_radius=math.pi - 0.05,
                       name="sphere", grad_log_sqrt_det=grad)


def warped_model(radii, warp, dimension: int = 2, potential: Callable | None = None,
                 name: str = "custom") -> MetricModel:
    """Rotationally symmetric metric ``dr^2 + f(r)^2 dw^2`` from samples of ``f``.

    The ratio ``f(r)/r`` is interpolated by a cubic spline in ``r^2`` so the
    metric stays smooth at the origin; it is pinned to 1 there.
    """
    r = np.asarray(radii, dtype=float)
    f = np.asarray(warp, dtype=float)
    if r.ndim != 1 or r.shape != f.shape or r.size < 4:
        raise ConfigError("warping table needs at least four (r, f) rows")
    if np.any(np.diff(r) <= 0) or r[0] < 0:
        raise ConfigError("warping radii must be nonnegative and strictly increasing")
    keep = r > 0
    q = f[keep] / r[keep]
    if np.any(q <= 0):
        raise ConfigError("warping function must stay positive")
    spline = CubicSpline(np.concatenate([[0.0], r[keep] ** 2]), np.concatenate([[1.0], q]))
    profile = lambda s: spline(np.asarray(s) ** 2)
    return MetricModel(dimension, _warped_metric(profile), potential, chart_radius=float(r[-1]), name=name)


def load_metric_file(path, dimension: int = 2, potential: Callable | None = None) -> MetricModel:
    """Read ``r f(r)`` rows (``#`` comments allowed) into :func:`warped_model`."""
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.replace(",", " ").split()
            if len(parts) != 2:
                raise ConfigError(f"{path}:{lineno}: expected 'r f(r)', got {line.strip()!r}")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ConfigError(f"{path}: no samples")
    arr = np.array(rows)
    return warped_model(arr[:, 0], arr[:, 1], dimension, potential, name=str(path))


def rotation_potential(strength: float) -> Callable:
    """``A = strength * (-x_2, x_1)`` on a two-dimensional chart."""
    def pot(x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != 2:
            raise ConfigError("the rotation potential needs a two-dimensional chart")
        return strength * np.stack([-x[..., 1], x[..., 0]], axis=-1)
    return pot


def constant_potential(covector, base: Callable | None = None) -> Callable:
    """``base + covector``: a pure-gauge shift of ``base``."""
    c = np.asarray(covector, dtype=float)

    def pot(x):
        x = np.asarray(x, dtype=float)
        out = np.broadcast_to(c, x.shape).copy()
        return out if base is None else out + np.asarray(base(x))
    return pot


# ---------------------------------------------------------------------------
# transport coefficients
# ---------------------------------------------------------------------------

def _radial_rule():
    """Gauss-Legendre on ``[0, 1]``."""
    x, w = gauss_legendre(_RADIAL_NODES)
    return (x + 1) / 2, w / 2


def transport_alpha0(model: MetricModel, x) -> np.ndarray:
    """``alpha_0(x) = exp(1/2 int_0^1 rho(s x)/s ds)``.

    ``rho(s x)/s`` is evaluated as ``sum g_jk(sx) b^k(sx) x_j``, which is
    regular at ``s = 0``.
    """
    x = np.asarray(x, dtype=float)
    model._check_chart(x)
    nodes, weights = _radial_rule()
    pts = nodes[:, None, None] * x.reshape(-1, model.m)[None, :, :]
    g = model.metric(pts)
    ginv = np.linalg.inv(g)
    a = -np.einsum("...jk,...j->...k", ginv, model.grad_log_sqrt_det(pts))
    b = a + 2j * np.einsum("...kj,...j->...k", ginv, model.potential(pts))
    xs = np.broadcast_to(x.reshape(-1, model.m)[None, :, :], pts.shape)
    integrand = np.einsum("...jk,...k,...j->...", g, b, xs)
    total = np.tensordot(weights, integrand, axes=(0, 0))
    out = np.exp(0.5 * total)
    return out.reshape(x.shape[:-1]) if x.ndim > 1 else out[0]


def apply_q(model: MetricModel, u: Callable, x, step: float = 0.02):
    """``Q u`` at points ``x`` for a callable ``u`` (finite differences, Richardson).

    Returns ``(values, error_estimate)``.
    """
    x = np.asarray(x, dtype=float)
    m = model.m
    eye = np.eye(m)
    u0 = np.asarray(u(x))
    grads, hess = [], {}
    err = np.zeros(u0.shape)
    for j in range(m):
        ests_g, ests_h = [], []
        for k in (0.25, 0.5, 1.0):
            h = k * step
            up, dn = np.asarray(u(x + h * eye[j])), np.asarray(u(x - h * eye[j]))
            ests_g.append((up - dn) / (2 * h))
            ests_h.append((up - 2 * u0 + dn) / (h * h))
        g_val, g_err = _richardson(ests_g)
        h_val, h_err = _richardson(ests_h)
        grads.append(g_val)
        hess[j, j] = h_val
        err = err + g_err + h_err
    for j in range(m):
        for l in range(j + 1, m):
            ests = []
            for k in (0.25, 0.5, 1.0):
                h = k * step
                pp = np.asarray(u(x + h * (eye[j] + eye[l])))
                pm = np.asarray(u(x + h * (eye[j] - eye[l])))
                mp = np.asarray(u(x - h * (eye[j] - eye[l])))
                mm = np.asarray(u(x - h * (eye[j] + eye[l])))
                ests.append((pp - pm - mp + mm) / (4 * h * h))
            val, e = _richardson(ests)
            hess[j, l] = hess[l, j] = val
            err = err + 2 * e
    grad = np.stack(grads, axis=-1)
    H = np.empty(u0.shape + (m, m), dtype=np.result_type(u0, float))
    for (j, l), v in hess.items():
        H[..., j, l] = v
    return _q_from_derivatives(model, x, u0, grad, H), err


def _q_from_derivatives(model, x, u0, grad, H):
    ginv = np.linalg.inv(model.metric(x))
    c = model.first_order_coefficient(x)
    out = -np.einsum("...jk,...jk->...", ginv, H) - np.einsum("...k,...k->...", c, grad)
    if model.magnetic:
        out = out + 2j * np.einsum("...k,...k->...", model.raised_potential(x), grad)
    return out + model.zeroth_order(x) * u0


def transport_alpha_nu(model: MetricModel, x, nu: int, previous: Callable | None = None,
                       step: float = 0.02, tol: float = 1e-6) -> np.ndarray:
    """``alpha_nu(x) = alpha_0(x) int_0^1 s^(nu-1) (-Q alpha_(nu-1))(s x)/alpha_0(s x) ds``.

    ``previous`` evaluates ``alpha_(nu-1)``; by default it is this function
    one level down (cost grows geometrically with ``nu``; use
    :func:`parametrix_coefficients` for tables).
    """
    if nu < 1:
        raise ValueError("nu must be >= 1")
    if previous is None:
        previous = (lambda y: transport_alpha0(model, y)) if nu == 1 else \
            (lambda y: transport_alpha_nu(model, y, nu - 1, None, step, tol))
    x = np.asarray(x, dtype=float)
    pts_in = x.reshape(-1, model.m)
    nodes, weights = _radial_rule()
    pts = (nodes[:, None, None] * pts_in[None, :, :]).reshape(-1, model.m)
    q, err = apply_q(model, previous, pts, step)
    scale = max(float(np.max(np.abs(q))), 1.0)
    if float(np.max(err)) > tol * scale:
        raise DerivativeNoiseError(f"finite-difference error {float(np.max(err)):.2e} exceeds {tol:.1e}")
    f = (-q / transport_alpha0(model, pts)).reshape(nodes.size, -1)
    integral = np.tensordot(weights * nodes ** (nu - 1), f, axes=(0, 0))
    out = transport_alpha0(model, pts_in) * integral
    return out.reshape(x.shape[:-1]) if x.ndim > 1 else out[0]


@dataclass
class ParametrixCoeffs:
    """Transport coefficients ``alpha_0..alpha_N`` on a chart grid.

    ``alpha_0`` is evaluated directly; ``alpha_nu`` for ``nu >= 1`` by the
    radial integral of the interpolated source ``-Q alpha_(nu-1)/alpha_0``.
    """

    model: MetricModel
    depth: int
    radius: float
    axis: np.ndarray
    alpha_grid: list
    sources: list
    noise: list = field(default_factory=list)

    @property
    def normalization(self) -> float:
        """``U_0(0) = pi^(1 - n/2)`` from matching the flat wave kernel."""
        return math.pi ** (1 - self.model.n / 2)

    def _check(self, x):
        r = np.linalg.norm(x, axis=-1)
        if np.any(r > self.radius * (1 + 1e-12)):
            raise ChartError(f"point at radius {float(np.max(r)):.4g} beyond the tabulated radius {self.radius}")

    def alpha(self, nu: int, x) -> np.ndarray:
        if not 0 <= nu <= self.depth:
            raise ValueError(f"alpha_{nu} not tabulated (depth {self.depth})")
        x = np.asarray(x, dtype=float)
        self._check(x)
        a0 = transport_alpha0(self.model, x)
        if nu == 0:
            return a0
        flat = x.reshape(-1, self.model.m)
        nodes, weights = _radial_rule()
        pts = nodes[:, None, None] * flat[None, :, :]
        vals = self.sources[nu - 1](pts)
        integral = np.tensordot(weights * nodes ** (nu - 1), vals, axes=(0, 0))
        out = np.asarray(a0).reshape(-1) * integral
        return out.reshape(x.shape[:-1]) if x.ndim > 1 else out[0]

    def amplitude(self, k: int, x) -> np.ndarray:
        """``U_k(0, x)`` in the expansion of ``cos(s nu)``."""
        return self.normalization * 4.0 ** (-k) * self.alpha(k, x)


def _grid_q(model, u, axis, pts, step):
    """``Q u`` on the interior of a Cartesian grid (``u`` has one axis per dimension)."""
    m = model.m
    margin = 4
    core = tuple(slice(margin, -margin) for _ in range(m))

    def shifted(offsets):
        sl = tuple(slice(margin + o, u.shape[i] - margin + o) for i, o in enumerate(offsets))
        return u[sl]

    u0 = u[core]
    grads, H = [], {}
    err = np.zeros(u0.shape)
    for j in range(m):
        eg, eh = [], []
        for k in (1, 2, 4):
            off = [0] * m
            off[j] = k
            up = shifted(off)
            off[j] = -k
            dn = shifted(off)
            eg.append((up - dn) / (2 * k * step))
            eh.append((up - 2 * u0 + dn) / (k * step) ** 2)
        g, ge = _richardson(eg)
        h, he = _richardson(eh)
        grads.append(g)
        H[j, j] = h
        err = err + ge + he
    for j in range(m):
        for l in range(j + 1, m):
            ests = []
            for k in (1, 2, 4):
                o = [0] * m
                o[j], o[l] = k, k
                pp = shifted(o)
                o[j], o[l] = k, -k
                pm = shifted(o)
                o[j], o[l] = -k, k
                mp = shifted(o)
                o[j], o[l] = -k, -k
                mm = shifted(o)
                ests.append((pp - pm - mp + mm) / (4 * (k * step) ** 2))
            v, e = _richardson(ests)
            H[j, l] = H[l, j] = v
            err = err + 2 * e
    grad = np.stack(grads, axis=-1)
    Hm = np.empty(u0.shape + (m, m), dtype=u.dtype)
    for (j, l), v in H.items():
        Hm[..., j, l] = v
    return _q_from_derivatives(model, pts[core], u0, grad, Hm), err


def _tensor_spline(axes, values, k=5):
    """Exact tensor-product interpolating spline (one 1-D solve per axis)."""
    coef = np.asarray(values, dtype=float)
    knots = []
    for i, ax in enumerate(axes):
        spl = make_interp_spline(ax, np.moveaxis(coef, i, 0), k=k)
        knots.append(spl.t)
        coef = np.moveaxis(spl.c, 0, i)
    return NdBSpline(tuple(knots), coef, k)


def _interpolant(axes, values):
    parts = [_tensor_spline(axes, values.real)]
    if np.iscomplexobj(values) and np.any(values.imag != 0):
        parts.append(_tensor_spline(axes, values.imag))

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, x.shape[-1])
        out = parts[0](flat).astype(complex)
        if len(parts) > 1:
            out += 1j * parts[1](flat)
        return out.reshape(x.shape[:-1])
    return evaluate


def parametrix_coefficients(model: MetricModel, depth: int = 2, radius: float = 0.5,
                            spacing: float = 0.02, tol: float = 1e-6) -> ParametrixCoeffs:
    """Tabulate ``alpha_0..alpha_depth`` on the ball of the given radius.

    Each level of the recursion needs a four-cell margin for the
    difference stencils and three more for the quintic interpolant, so the
    grid extends beyond ``radius`` accordingly.
    """
    m = model.m
    h = float(spacing)
    half = radius + (4 * depth + 3) * h
    count = int(math.ceil(half / h))
    if math.sqrt(m) * count * h > model.chart_radius:
        raise ChartError(f"tabulation cube of half-width {count * h:.3g} leaves the chart")
    if (2 * count + 1) ** m > 2_000_000:
        raise ChartError("tabulation grid too large; increase spacing or reduce radius")
    axis1 = h * np.arange(-count, count + 1)
    axes = [axis1] * m
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    alpha = [transport_alpha0(model, mesh)]
    sources, noise = [], []
    nodes, weights = _radial_rule()
    lo = 0
    for nu in range(1, depth + 1):
        prev = alpha[-1]
        sub = tuple(slice(lo, prev.shape[i] + lo) for i in range(m))
        pts = mesh[sub]
        q, err = _grid_q(model, prev, axes, pts, h)
        lo += 4
        core = tuple(slice(lo, mesh.shape[i] - lo) for i in range(m))
        scale = max(float(np.max(np.abs(q))), 1.0)
        level_noise = float(np.max(err)) / scale
        noise.append(level_noise)
        if level_noise > tol:
            raise DerivativeNoiseError(f"grid derivative error {level_noise:.2e} exceeds {tol:.1e} at level {nu}")
        src = -q / alpha[0][core]
        sub_axes = [axis1[lo:axis1.size - lo]] * m
        source = _interpolant(sub_axes, src)
        sources.append(source)
        if nu < depth:
            pts_core = mesh[core]
            rad = nodes.reshape((-1,) + (1,) * (m + 1)) * pts_core[None]
            vals = source(rad)
            integral = np.tensordot(weights * nodes ** (nu - 1), vals, axes=(0, 0))
            alpha.append(alpha[0][core] * integral)
    return ParametrixCoeffs(model, depth, float(radius), axis1, alpha, sources, noise)


# ---------------------------------------------------------------------------
# distribution profiles
# ---------------------------------------------------------------------------

def _sphere_rule(m: int, degree: int = 24):
    """Directions and weights on ``S^(m-1)`` (total weight = its area)."""
    if m == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if m == 2:
        k = 2 * degree + 1
        th = 2 * math.pi * np.arange(k) / k
        return np.stack([np.cos(th), np.sin(th)], axis=1), np.full(k, 2 * math.pi / k)
    return _sphere_points(m - 1, degree)


def _jacobi01(count: int, a: float, b: float):
    """Nodes/weights for ``int_0^1 (1-u)^a u^b f(u) du``."""
    y, w = roots_jacobi(count, a, b)
    return (1 + y) / 2, w / 2 ** (a + b + 1)


def _chebyshev_interpolant(f, degree: int, lo: float, hi: float) -> cheb.Chebyshev:
    """Interpolant at first-kind Chebyshev points via a DCT, with the
    rounding-level tail chopped (derivatives would amplify it)."""
    count = degree + 1
    theta = math.pi * (np.arange(count) + 0.5) / count
    nodes = lo + (hi - lo) * (np.cos(theta) + 1) / 2
    coef = dct(np.asarray(f(nodes), dtype=float), type=2) / count
    coef[0] /= 2
    big = np.nonzero(np.abs(coef) > 8 * np.finfo(float).eps * max(np.max(np.abs(coef)), 1e-300))[0]
    coef = coef[:big[-1] + 1] if big.size else coef[:1]
    return cheb.Chebyshev(coef, domain=[lo, hi])


def riesz_pairing(exponent: float, t: float, test_function: Callable, dim: int,
                  degree: int = 28, nodes: int = 40) -> float:
    """``< (t^2 - |x|^2)_+^a / Gamma(a+1), F >`` over ``R^dim`` for any real ``a``.

    With ``v = |x|^2`` and ``psi(v)`` half the integral of ``F`` over the
    sphere of radius ``sqrt(v)``, the pairing is the Riemann-Liouville
    integral of order ``a+1`` of ``v^((dim-2)/2) psi(v)`` at ``v = t^2``. For
    ``a <= -1`` it is ``N`` derivatives of the integral of order ``a+1+N``;
    ``psi`` is a Chebyshev interpolant so its derivatives are explicit.
    """
    a = float(exponent)
    x = float(t) ** 2
    if x <= 0:
        return 0.0
    dirs, dw = _sphere_rule(dim)
    beta = (dim - 2) / 2.0

    def psi(v):
        v = np.asarray(v, dtype=float)
        pts = np.sqrt(v)[:, None, None] * dirs[None, :, :]
        vals = np.asarray(test_function(pts))
        return 0.5 * vals @ dw

    series = _chebyshev_interpolant(psi, degree, 0.0, x)
    N = 0
    while a + 1 + N <= 0:
        N += 1
    order = a + 1 + N
    c = order + beta
    total = 0.0
    deriv = series
    for i in range(N + 1):
        if i > 0:
            deriv = deriv.deriv()
        u, w = _jacobi01(nodes, order - 1, beta + i)
        Hi = (w @ deriv(x * u)) * _rgamma(order)
        falling = 1.0
        for q in range(N - i):
            falling *= c - q
        total = total + math.comb(N, i) * falling * x ** (c - (N - i)) * Hi
    return total


@dataclass(frozen=True)
class DistributionProfile:
    """``constant * (t^2 - |x|^2)_+^a / Gamma(a+1)`` on ``R^dim``."""

    exponent: float
    dim: int
    constant: float = 1.0
    label: str = ""

    def value(self, t, r):
        if self.exponent <= -1:
            raise DistributionActionError(
                f"{self.label or 'profile'} with exponent {self.exponent} has no pointwise values; pair it")
        t = np.asarray(t, dtype=float)
        r = np.asarray(r, dtype=float)
        gap = t * t - r * r
        inside = (gap > 0) & (t > 0)
        safe = np.where(inside, gap, 1.0)
        return np.where(inside, self.constant * safe ** self.exponent * _rgamma(self.exponent + 1), 0.0)

    def pair(self, t: float, test_function: Callable) -> float:
        if t <= 0:
            return 0.0
        return self.constant * riesz_pairing(self.exponent, t, test_function, self.dim)


def e_nu_profile(nu: int, dim: int = 3) -> DistributionProfile:
    """``E_nu`` in ``dim`` space dimensions (flat-space normalisation)."""
    a = nu - (dim - 1) / 2.0
    return DistributionProfile(a, dim, 0.5 * math.pi ** ((1 - dim) / 2) * 4.0 ** (-nu), f"E_{nu}")


# ---------------------------------------------------------------------------
# the expansion
# ---------------------------------------------------------------------------

def hadamard_expansion(coeffs: ParametrixCoeffs, s: float, sigma: float, K: int | None = None,
                       direction=None, start: int = 0) -> complex:
    """Pointwise sum of terms ``start..K`` at distance ``sigma`` along ``direction``.

    Terms whose exponent ``k - n/2`` is ``<= -1`` are distributions and are
    refused unless ``sigma >= s`` (outside the support everything vanishes).
    """
    K = coeffs.depth if K is None else int(K)
    if K > coeffs.depth:
        raise ValueError(f"expansion depth {K} exceeds the tabulated depth {coeffs.depth}")
    if not 0 < s <= math.pi:
        raise ValueError("s must lie in (0, pi]")
    if sigma >= s:
        return 0.0
    n = coeffs.model.n
    bad = [k for k in range(start, K + 1) if k - n / 2 <= -1]
    if bad:
        raise DistributionActionError(f"terms {bad} have non-integrable exponents; use hadamard_pairing")
    d = np.zeros(coeffs.model.m)
    d[0] = 1.0
    if direction is not None:
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
    x = sigma * d
    total = 0.0
    for k in range(start, K + 1):
        a = k - n / 2
        total = total + coeffs.amplitude(k, x) * s * (s * s - sigma * sigma) ** a * _rgamma(a + 1)
    return total


def hadamard_pairing(coeffs: ParametrixCoeffs, s: float, test_function: Callable,
                     K: int | None = None) -> tuple[complex, list]:
    """``int cos(s nu)(0, x) phi(x) dV(x)`` from the first ``K+1`` terms.

    ``test_function`` takes chart points ``(..., m)``. Returns the sum and the
    individual term values.
    """
    K = coeffs.depth if K is None else int(K)
    if K > coeffs.depth:
        raise ValueError(f"expansion depth {K} exceeds the tabulated depth {coeffs.depth}")
    if s > coeffs.radius:
        raise ChartError(f"s = {s} exceeds the tabulated radius {coeffs.radius}")
    model = coeffs.model
    n = model.n
    terms = []
    for k in range(K + 1):
        def weighted(x, _k=k):
            shape = x.shape[:-1]
            flat = x.reshape(-1, model.m)
            vals = coeffs.amplitude(_k, flat) * model.sqrt_det(flat) * np.asarray(test_function(flat))
            return vals.reshape(shape)
        re = riesz_pairing(k - n / 2, s, lambda x: weighted(x).real, model.m)
        im = riesz_pairing(k - n / 2, s, lambda x: weighted(x).imag, model.m) if model.magnetic else 0.0
        terms.append(s * (re + 1j * im) if model.magnetic else s * re)
    return sum(terms), terms


def _gauss_legendre_extended(count: int):
    """Gauss-Legendre nodes and weights on [-1, 1] in ``np.longdouble``.

    Double-precision nodes are polished by Newton steps on P_count evaluated
    in extended precision.
    """
    x0, _ = np.polynomial.legendre.leggauss(count)
    x = x0.astype(np.longdouble)
    one = np.longdouble(1)
    for _ in range(3):
        p_prev, p = np.ones_like(x), x.copy()
        for k in range(1, count):
            p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
        dp = count * (x * p - p_prev) / (x * x - one)
        x = x - p / dp
    p_prev, p = np.ones_like(x), x.copy()
    for k in range(1, count):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    dp = count * (x * p - p_prev) / (x * x - one)
    return x, 2 / ((one - x * x) * dp * dp)


def spectral_cos_pairing(spectrum: CrossSectionSpectrum, s: float, zonal_test: Callable,
                         nodes: int | None = None) -> float:
    """``sum_j cos(s nu_j) <K_j(0, .), phi>`` for a zonal test function ``phi(sigma)``.

    The smooth test function plays the role of the mollifier. The mode
    coefficients are integrals with strong cancellation, so they are computed
    in extended precision (``zonal_test`` must accept ``np.longdouble``
    arrays). Summation stops at the first coefficient that sinks into the
    rounding floor; if that never happens within the listed modes the test
    function is not resolved and ``ValueError`` is raised.
    """
    if spectrum.kind != "sphere" or spectrum.source.dim < 2:
        raise ValueError("the spectral pairing is implemented for round spheres S^d, d >= 2")
    dim = spectrum.source.dim
    nodes = nodes or 2 * spectrum.jmax + 4
    ct, w = _gauss_legendre_extended(nodes)
    sigma = np.arccos(ct)
    # dV = |S^(d-1)| sin^(d-2) sigma d(cos sigma)
    dens = sphere_volume(dim - 1) * (1 - ct * ct) ** ((dim - 2) / 2)
    phi = np.asarray(zonal_test(sigma))
    if phi.dtype != np.longdouble:
        phi = phi.astype(np.longdouble)
    weighted = w * dens * phi
    kern = zonal_kernel_rows(dim, spectrum.jmax, ct, spectrum.volume)
    coeffs = kern @ weighted
    floor = 64 * np.finfo(np.longdouble).eps * (np.abs(kern) @ np.abs(weighted))
    below = np.nonzero(np.abs(coeffs) <= 10 * floor)[0]
    if not below.size or below[0] >= spectrum.jmax - 2:
        raise ValueError(f"test function not resolved by {spectrum.jmax + 1} modes")
    keep = slice(0, int(below[0]))
    nus = np.asarray(spectrum.nus[keep], dtype=np.longdouble)
    return float(np.sum(np.cos(np.longdouble(s) * nus) * coeffs[keep]))


# ---------------------------------------------------------------------------
# E_nu identities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianBump:
    """``exp(-|x - centre|^2 / (2 width^2))`` with analytic derivatives."""

    centre: tuple
    width: float = 0.5

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        d = x - np.asarray(self.centre)
        return np.exp(-np.sum(d * d, axis=-1) / (2 * self.width ** 2))

    def gradient(self, x, j):
        x = np.asarray(x, dtype=float)
        return -(x[..., j] - self.centre[j]) / self.width ** 2 * self(x)

    def laplacian(self, x):
        x = np.asarray(x, dtype=float)
        d = x - np.asarray(self.centre)
        w2 = self.width ** 2
        return (np.sum(d * d, axis=-1) / w2 ** 2 - len(self.centre) / w2) * self(x)


def _time_derivative(f, t, order, step):
    ests = []
    for k in (0.25, 0.5, 1.0):
        h = k * step
        if order == 1:
            ests.append((f(t + h) - f(t - h)) / (2 * h))
        else:
            ests.append((f(t + h) - 2 * f(t) + f(t - h)) / (h * h))
    return _richardson(ests)


def _rel(lhs, rhs):
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)


def e_nu_check(nu: int, t: float, dim: int = 3, bump: GaussianBump | None = None,
               tol: float = 1e-6) -> list[BoundCheckReport]:
    """Weak-form residuals of ``2 dE_nu/dt = t E_(nu-1)``, ``-2 grad E_nu = x E_(nu-1)``
    and ``box E_nu = nu E_(nu-1)`` against a fixed bump at time ``t``.
    """
    if nu < 1:
        raise ValueError("nu must be >= 1")
    bump = bump or GaussianBump(tuple([0.3] + [0.1] * (dim - 1))[:dim], 0.5)
    if len(bump.centre) != dim:
        raise ValueError("bump dimension mismatch")
    E, Em = e_nu_profile(nu, dim), e_nu_profile(nu - 1, dim)
    paired = lambda tt: E.pair(tt, bump)
    step = 0.05 * t
    dt, dt_err = _time_derivative(paired, t, 1, step)
    reports = []
    params = {"nu": nu, "t": t, "dim": dim}
    lhs, rhs = 2 * dt, t * Em.pair(t, bump)
    reports.append(BoundCheckReport("2 dt E_nu = t E_(nu-1)", dict(params), lhs, rhs, tol,
                                    _rel(lhs, rhs) < tol, 2 * float(dt_err)))
    worst, pair_l, pair_r = 0.0, 0.0, 0.0
    for j in range(dim):
        l = 2 * E.pair(t, lambda x, _j=j: bump.gradient(x, _j))
        r = Em.pair(t, lambda x, _j=j: x[..., _j] * bump(x))
        if _rel(l, r) >= worst:
            worst, pair_l, pair_r = _rel(l, r), l, r
    reports.append(BoundCheckReport("-2 grad E_nu = x E_(nu-1)", dict(params), pair_l, pair_r, tol,
                                     worst < tol))
    d2, d2_err = _time_derivative(paired, t, 2, step)
    lhs = d2 - E.pair(t, bump.laplacian)
    rhs = nu * Em.pair(t, bump)
    reports.append(BoundCheckReport("box E_nu = nu E_(nu-1)", dict(params), lhs, rhs, tol,
                                    _rel(lhs, rhs) < tol, float(d2_err)))
    return reports


def e_nu_initial_vanishing(nu: int, dim: int = 3, bump: GaussianBump | None = None,
                           times=(1e-3, 2e-3, 4e-3)) -> float:
    """Fitted power ``p`` in ``<E_nu(t), bump> ~ t^p`` as ``t -> 0+``.

    ``p = 2 nu + 1`` means the pairing and its first ``2 nu`` time derivatives
    vanish at ``0+``.
    """
    bump = bump or GaussianBump(tuple([0.0] * dim), 0.5)
    E = e_nu_profile(nu, dim)
    vals = [abs(E.pair(t, bump)) for t in times]
    slope = np.polyfit(np.log(times), np.log(vals), 1)[0]
    return float(slope)
