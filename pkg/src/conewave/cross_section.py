"""Cross-section spectra: eigenmodes, addition kernels and wave kernels on Y.

A cone ``C(Y) = (0, inf) x Y`` is described by the spectrum of
``L_A + beta**2`` on its cross-section, ``beta = (n-2)/2``. Each mode carries
``nu_j = sqrt(lambda_j + beta**2)`` and an addition kernel ``sum_k
phi_k(y) conj(phi_k(y'))`` that depends on ``y, y'`` only through a scalar
``sigma`` (geodesic distance on spheres, signed angle on the circle).

Every family can be summed mode by mode; the sphere families and the
Aharonov-Bohm circle also expose the closed generating function
``Phi(w, sigma) = sum_j K_j(sigma) exp(i nu_j w)`` for ``Im w > 0``, from which
``cos(h nu)`` boundary values and the damped kernels ``exp(-h nu)cos(pi nu)``
follow without truncation.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import cosdg

from .errors import ConfigError, TruncationError, TruncationWarning, UnsupportedCrossSection
from .quadrature import graded_interval_rule

__all__ = [
    "ConeGeometry", "SphereZeroPotential", "ShiftedSphere", "CircleAB", "ExplicitSpectrum",
    "ModeData", "CrossSectionSpectrum", "build_spectrum", "cos_mode_kernel",
    "damped_cos_pi_kernel", "schur_norm_star", "sigma_rule", "read_spectrum_file",
    "write_spectrum_file", "sphere_volume", "sphere_multiplicity", "zonal_kernel_rows",
]


@dataclass(frozen=True)
class ConeGeometry:
    """Dimension of the cone; the cross-section has dimension ``n - 1``."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("cone dimension n must be an integer >= 2")

    @property
    def beta(self) -> float:
        return 0.5 * (self.n - 2)


@dataclass(frozen=True)
class SphereZeroPotential:
    """Round sphere S^dim with no magnetic potential (cone = Euclidean space)."""

    dim: int


@dataclass(frozen=True)
class ShiftedSphere:
    """Sphere addition kernels with every ``nu`` raised by ``shift``.

    ``nu_l = l + (dim-1)/2 + shift``. This is a function of the round
    Laplacian (not a differential operator when ``shift`` is non-zero) and
    serves as a cross-section whose wave group has no antipodal refocusing.
    """

    dim: int
    shift: float


@dataclass(frozen=True)
class CircleAB:
    """Unit circle with Aharonov-Bohm flux ``alpha`` in [0, 1): ``lambda_k = (k+alpha)**2``."""

    alpha: float


@dataclass(frozen=True)
class ExplicitSpectrum:
    """User-supplied finite spectrum.

    ``modes`` holds ``(eigenvalue, multiplicity, table)`` where ``table`` is an
    optional ``(sigma, value)`` array sampling the mode's addition kernel.
    ``density`` is an optional ``(sigma, w)`` table of the distance density.
    """

    modes: tuple
    volume: float = float("nan")
    diameter: float = math.pi
    density: tuple | None = None
    name: str = "explicit"


@dataclass(frozen=True)
class ModeData:
    index: int
    eigenvalue: float
    nu: float
    multiplicity: int
    addition_kernel: Callable[[np.ndarray], np.ndarray] = field(repr=False)


def sphere_volume(dim: int) -> float:
    """Surface measure of the unit sphere S^dim."""
    return 2.0 * math.pi ** (0.5 * (dim + 1)) / math.gamma(0.5 * (dim + 1))


def sphere_multiplicity(l, dim: int):
    """Dimension of the degree-``l`` spherical harmonics on S^dim."""
    l = np.asarray(l, dtype=float)
    if dim == 1:
        return np.where(l == 0, 1.0, 2.0)
    from scipy.special import gammaln
    return (2 * l + dim - 1) * np.exp(gammaln(l + dim - 1) - gammaln(l + 1) - gammaln(dim))


def _sphere_kernel_rows(dim: int, lmax: int, sigma: np.ndarray, vol: float) -> np.ndarray:
    """Addition kernels K_l(sigma), l = 0..lmax, by Gegenbauer recurrence."""
    x = np.cos(sigma)
    out = np.empty((lmax + 1, sigma.size))
    if dim == 1:
        out[0] = 1.0 / (2 * math.pi)
        for l in range(1, lmax + 1):
            out[l] = np.cos(l * sigma) / math.pi
        return out
    out[:] = zonal_kernel_rows(dim, lmax, x, vol)
    return out


def zonal_kernel_rows(dim: int, lmax: int, x: np.ndarray, vol: float) -> np.ndarray:
    """Addition kernels of S^dim (dim >= 2) as functions of ``x = cos(sigma)``.

    The recurrence runs in the dtype of ``x``, so extended-precision input
    gives extended-precision kernels.
    """
    lam = 0.5 * (dim - 1)
    out = np.empty((lmax + 1, x.size), dtype=x.dtype)
    c_prev = np.ones_like(x)
    out[0] = c_prev / vol
    if lmax == 0:
        return out
    c = 2 * lam * x
    out[1] = (1 + lam) / lam * c / vol
    for l in range(1, lmax):
        c_next = (2 * (l + lam) * x * c - (l + 2 * lam - 1) * c_prev) / (l + 1)
        c_prev, c = c, c_next
        out[l + 1] = (l + 1 + lam) / lam * c / vol
    return out


def _sphere_weighted_sum(dim: int, coeffs: np.ndarray, sigma: np.ndarray, vol: float) -> np.ndarray:
    """``sum_l coeffs[l, :, None] * K_l(sigma)`` without storing every K_l.

    ``coeffs`` has shape (L, M); the result has shape (M, len(sigma)).
    """
    lmax = coeffs.shape[0] - 1
    x = np.cos(sigma)
    acc = np.zeros((coeffs.shape[1], sigma.size), dtype=np.result_type(coeffs, float))
    if dim == 1:
        for l in range(lmax + 1):
            k = (1.0 if l == 0 else 2.0) * np.cos(l * sigma) / (2 * math.pi)
            acc += coeffs[l][:, None] * k[None, :]
        return acc
    lam = 0.5 * (dim - 1)
    c_prev = np.ones_like(x)
    acc += coeffs[0][:, None] * (c_prev / vol)[None, :]
    if lmax == 0:
        return acc
    c = 2 * lam * x
    acc += coeffs[1][:, None] * ((1 + lam) / lam * c / vol)[None, :]
    for l in range(1, lmax):
        c_next = (2 * (l + lam) * x * c - (l + 2 * lam - 1) * c_prev) / (l + 1)
        c_prev, c = c, c_next
        acc += coeffs[l + 1][:, None] * ((l + 1 + lam) / lam * c / vol)[None, :]
    return acc


class CrossSectionSpectrum:
    """Modes ``0..jmax`` of a cross-section, with addition kernels and sums.

    ``complete`` is true when the listed modes are the whole spectrum (finite
    explicit spectra, or truncations declared as the object of study). For
    infinite families, sums report a tail bound built from ``|K_j| <= m_j/vol``.
    """

    def __init__(self, geometry: ConeGeometry, source, jmax: int, complete: bool = False):
        self.geometry = geometry
        self.source = source
        self.jmax = int(jmax)
        self.complete = bool(complete)
        self._setup()

    # -- construction -----------------------------------------------------
    def _setup(self):
        src = self.source
        n = self.geometry.n
        beta = self.geometry.beta
        if isinstance(src, (SphereZeroPotential, ShiftedSphere)):
            d = src.dim
            if n != d + 1:
                raise UnsupportedCrossSection(f"S^{d} is the cross-section of a cone of dimension {d + 1}, not {n}")
            shift = getattr(src, "shift", 0.0)
            if beta + shift <= 0 and d > 1:
                raise UnsupportedCrossSection("shift makes nu_0 non-positive")
            l = np.arange(self.jmax + 1)
            self.nus = l + 0.5 * (d - 1) + shift
            self.eigenvalues = self.nus ** 2 - beta ** 2
            self.multiplicities = sphere_multiplicity(l, d).round().astype(int)
            self.volume = sphere_volume(d)
            self.diameter = math.pi
            self.sigma_domain = (0.0, math.pi)
            self.is_complex = False
            self.kind = "sphere"
        elif isinstance(src, CircleAB):
            if n != 2:
                raise UnsupportedCrossSection("the Aharonov-Bohm circle is the cross-section of a planar cone")
            alpha = float(src.alpha)
            if not 0.0 <= alpha < 1.0:
                raise ValueError("flux alpha must lie in [0, 1)")
            ks = np.arange(-self.jmax - 1, self.jmax + 2)
            order = np.argsort(np.abs(ks + alpha), kind="stable")
            ks = ks[order][: self.jmax + 1]
            self.ks = ks
            self.nus = np.abs(ks + alpha)
            self.eigenvalues = self.nus ** 2
            self.multiplicities = np.ones(ks.size, dtype=int)
            self.volume = 2 * math.pi
            self.diameter = math.pi
            self.sigma_domain = (-math.pi, math.pi)
            self.is_complex = True
            self.kind = "circle"
        elif isinstance(src, ExplicitSpectrum):
            lams = np.array([m[0] for m in src.modes], dtype=float)
            if np.any(np.diff(lams) < 0):
                raise ConfigError("eigenvalues must be listed in non-decreasing order")
            if np.any(lams + beta ** 2 < 0):
                raise ConfigError("eigenvalue below -beta**2 gives imaginary nu")
            self.jmax = len(lams) - 1
            self.complete = True
            self.nus = np.sqrt(lams + beta ** 2)
            self.eigenvalues = lams
            self.multiplicities = np.array([int(m[1]) for m in src.modes])
            self.volume = float(src.volume)
            self.diameter = float(src.diameter)
            self.sigma_domain = (0.0, self.diameter)
            self.is_complex = any(np.iscomplexobj(np.asarray(m[2])) for m in src.modes if m[2] is not None)
            self._splines = []
            for lam_, mult, table in src.modes:
                if table is None:
                    self._splines.append(None)
                    continue
                tab = np.asarray(table)
                self._splines.append(CubicSpline(tab[:, 0].real, tab[:, 1], bc_type="natural"))
            self.kind = "explicit"
        else:
            raise UnsupportedCrossSection(f"unknown cross-section {src!r}")

    def with_jmax(self, jmax: int) -> "CrossSectionSpectrum":
        """Same family with a different truncation (explicit spectra are fixed)."""
        if self.kind == "explicit":
            return self
        return CrossSectionSpectrum(self.geometry, self.source, jmax, self.complete)

    def finite(self, jmax: int | None = None) -> "CrossSectionSpectrum":
        """The first ``jmax+1`` modes declared as a complete (finite) spectrum."""
        spec = self.with_jmax(self.jmax if jmax is None else jmax)
        out = CrossSectionSpectrum(spec.geometry, spec.source, spec.jmax, complete=True)
        return out

    # -- descriptors --------------------------------------------------------
    @property
    def has_closed_form(self) -> bool:
        return self.kind in ("sphere", "circle") and not self.complete

    @property
    def label(self) -> str:
        src = self.source
        if isinstance(src, SphereZeroPotential):
            base = f"S{src.dim}"
        elif isinstance(src, ShiftedSphere):
            base = f"S{src.dim}+{src.shift:g}"
        elif isinstance(src, CircleAB):
            base = f"AB{src.alpha:g}"
        else:
            base = src.name
        return base + (f"[j<={self.jmax}]" if self.complete and self.kind != "explicit" else "")

    def distance_density(self, sigma) -> np.ndarray:
        """Measure of ``{y': dist(y, y') = sigma}`` (uniform in ``y`` by homogeneity)."""
        sigma = np.asarray(sigma, dtype=float)
        if self.kind == "sphere":
            d = self.source.dim
            if d == 1:
                return np.full_like(sigma, 2.0)
            return sphere_volume(d - 1) * np.sin(sigma) ** (d - 1)
        if self.kind == "circle":
            return np.ones_like(sigma)
        dens = self.source.density
        if dens is None:
            raise UnsupportedCrossSection("explicit spectrum has no distance-density table")
        tab = np.asarray(dens, dtype=float)
        return np.interp(sigma, tab[:, 0], tab[:, 1])

    @property
    def modes(self) -> tuple[ModeData, ...]:
        out = []
        for j in range(self.jmax + 1):
            out.append(ModeData(j, float(self.eigenvalues[j]), float(self.nus[j]),
                                int(self.multiplicities[j]), self._single_kernel(j)))
        return tuple(out)

    def _single_kernel(self, j: int):
        def kernel(sigma, _j=j):
            sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
            return self.addition_kernels(sigma, upto=_j)[_j]
        return kernel

    # -- kernels and sums ---------------------------------------------------
    def addition_kernels(self, sigma, upto: int | None = None) -> np.ndarray:
        """Array of shape (modes, len(sigma)) with ``K_j(sigma)``."""
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        jm = self.jmax if upto is None else min(upto, self.jmax)
        if self.kind == "sphere":
            return _sphere_kernel_rows(self.source.dim, jm, sigma, self.volume)
        if self.kind == "circle":
            return np.exp(1j * np.outer(self.ks[: jm + 1], sigma)) / (2 * math.pi)
        rows = []
        for j in range(jm + 1):
            spl = self._splines[j]
            if spl is None:
                raise UnsupportedCrossSection(f"mode {j} has no addition-kernel table")
            rows.append(spl(sigma))
        return np.array(rows)

    def mode_sum(self, coeffs, sigma) -> np.ndarray:
        """``sum_j coeffs[j, m] K_j(sigma)`` for a (modes, M) coefficient array."""
        coeffs = np.asarray(coeffs)
        squeeze = coeffs.ndim == 1
        if squeeze:
            coeffs = coeffs[:, None]
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        if self.kind == "sphere":
            if coeffs.shape[0] != self.jmax + 1:
                raise ValueError("coefficient rows must match the number of modes")
            if np.iscomplexobj(coeffs):
                out = (_sphere_weighted_sum(self.source.dim, coeffs.real, sigma, self.volume)
                       + 1j * _sphere_weighted_sum(self.source.dim, coeffs.imag, sigma, self.volume))
            else:
                out = _sphere_weighted_sum(self.source.dim, coeffs, sigma, self.volume)
        else:
            out = coeffs.T @ self.addition_kernels(sigma)
        return out[0] if squeeze else out

    def kernel_bound(self) -> np.ndarray:
        """Per-mode bound ``sup_sigma |K_j(sigma)|``."""
        if self.kind in ("sphere", "circle"):
            return self.multiplicities / self.volume
        grid = np.linspace(*self.sigma_domain, 401)
        return np.max(np.abs(self.addition_kernels(grid)), axis=1)

    def tail_bound(self, damping: float = 0.0, mollifier: float | None = None,
                   max_terms: int = 5_000_000) -> float:
        """Bound on ``sum_{j > jmax} |K_j| exp(-damping nu_j) exp(-(nu_j/mollifier)**2)``."""
        if self.complete:
            return 0.0
        if damping <= 0 and mollifier is None:
            return math.inf
        j0 = self.jmax + 1
        rate = damping + (0.0 if mollifier is None else 1e-300)
        # sum enough explicit terms that the remainder is below double precision
        span = 60.0 / damping if damping > 0 else 8.0 * mollifier
        count = int(min(max_terms, math.ceil(span + 10 * (self.geometry.n + 1) / max(rate, 1e-3))))
        if self.kind == "sphere":
            l = j0 + np.arange(count)
            nu = l + (self.nus[0] - 0.0)
            mult = sphere_multiplicity(l, self.source.dim)
            bound = mult / self.volume
        else:
            m = j0 + np.arange(count)
            nu = 0.5 * m + self.nus[0] - 0.5
            bound = np.ones(count) / self.volume
        expo = -damping * nu
        if mollifier is not None:
            expo = expo - (nu / mollifier) ** 2
        terms = bound * np.exp(expo)
        total = float(np.sum(terms))
        if count >= max_terms and terms[-1] > 1e-300:
            return math.inf
        return total

    def phi(self, w, sigma, method: str = "auto", weights=None, tol: float = 1e-12) -> np.ndarray:
        """Generating function ``sum_j w_j K_j(sigma) exp(i nu_j w)`` for ``Im w > 0``.

        ``method="closed"`` uses the resummed formula (sphere families and the
        AB circle, no mode weights); ``"sum"`` adds the listed modes and checks
        the tail; ``"auto"`` picks the closed form when available.
        """
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        if method == "auto":
            method = "closed" if (self.has_closed_form and weights is None) else "sum"
        if method == "closed":
            if not self.has_closed_form or weights is not None:
                raise UnsupportedCrossSection("no closed-form generating function for this spectrum")
            return self._phi_closed(w, sigma)
        if not self.complete:
            eta = float(np.min(w.imag))
            tb = self.tail_bound(eta) if weights is None else 0.0
            if tb > tol:
                warnings.warn(f"generating-function tail {tb:.2e} exceeds {tol:.1e}", TruncationWarning)
        coeff = np.exp(1j * np.outer(self.nus, w))
        if weights is not None:
            coeff = coeff * np.asarray(weights)[:, None]
        return self.mode_sum(coeff, sigma)

    def _phi_closed(self, w: np.ndarray, sigma: np.ndarray) -> np.ndarray:
        z = np.exp(1j * w)[:, None]
        if self.kind == "sphere":
            return np.exp(1j * self.nus[0] * w)[:, None] * self._sphere_series(z, sigma)
        alpha = float(self.source.alpha)
        ww = w[:, None]
        s = sigma[None, :]
        first = np.exp(1j * alpha * ww) / (1 - np.exp(1j * (ww + s)))
        second = np.exp(-1j * alpha * ww) * np.exp(1j * (ww - s)) / (1 - np.exp(1j * (ww - s)))
        return (first + second) / (2 * math.pi)

    def _sphere_series(self, z: np.ndarray, sigma: np.ndarray) -> np.ndarray:
        """``sum_l K_l(sigma) z^l`` for the sphere families, ``|z| <= 1``."""
        p = 0.5 * (self.source.dim - 1) + 1.0
        e1 = np.exp(1j * sigma)[None, :]
        u = 1 - z * e1
        v = 1 - z / e1
        # |z| <= 1 keeps u, v in the closed right half plane: principal roots
        if p == 1.0:
            core = 1.0 / (u * v)
        elif p == 1.5:
            core = 1.0 / (u * v * np.sqrt(u * v))
        elif p == 2.0:
            core = 1.0 / (u * v) ** 2
        else:
            core = u ** (-p) * v ** (-p)
        return (1 - z * z) * core / self.volume


def cospi(x):
    """``cos(pi x)``, exactly zero at half-integers."""
    return cosdg(180.0 * np.asarray(x, dtype=float))


def build_spectrum(geometry: ConeGeometry, cross_section, jmax: int = 64) -> CrossSectionSpectrum:
    """Spectrum object for a cross-section description (see module docstring)."""
    if jmax < 0:
        raise ValueError("jmax must be non-negative")
    return CrossSectionSpectrum(geometry, cross_section, jmax)


def default_mollifier(spectrum: CrossSectionSpectrum) -> float:
    """Gaussian width tied to the truncation: weight exp(-36) at the last mode."""
    return max(spectrum.nus[-1], 1.0) / 6.0


def cos_mode_kernel(spectrum: CrossSectionSpectrum, h: float, sigma, mollifier: float | None = None,
                    tol: float = 1e-10) -> np.ndarray:
    """Smoothed ``cos(h nu)(sigma) = sum_j cos(h nu_j) exp(-(nu_j/M)**2) K_j(sigma)``.

    Without a mollifier the sum is exact only for complete spectra; for an
    infinite family a default width tied to ``jmax`` is used and a
    :class:`TruncationWarning` is issued when the mollified tail exceeds ``tol``.
    """
    nus = spectrum.nus
    if mollifier is None and not spectrum.complete:
        mollifier = default_mollifier(spectrum)
    weights = np.ones_like(nus) if mollifier is None else np.exp(-(nus / mollifier) ** 2)
    tail = spectrum.tail_bound(0.0, mollifier) if not spectrum.complete else 0.0
    if tail > tol:
        warnings.warn(f"cos(h nu) tail bound {tail:.2e} exceeds {tol:.1e}", TruncationWarning)
    return spectrum.mode_sum(np.cos(h * nus) * weights, sigma)


def damped_cos_pi_kernel(spectrum: CrossSectionSpectrum, h: float, sigma, method: str = "sum",
                         tol: float = 1e-12, jmax_cap: int = 400_000) -> np.ndarray:
    """``sum_j cos(pi nu_j) exp(-h nu_j) K_j(sigma)`` for ``h > 0``.

    ``method="sum"`` adds modes, raising ``jmax`` (up to ``jmax_cap``) until the
    tail bound is below ``tol`` and otherwise raising :class:`TruncationError`;
    ``method="closed"`` uses ``(Phi(pi+ih) + Phi(-pi+ih))/2``.
    """
    if h <= 0:
        raise ValueError("damping h must be positive")
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    if method == "auto":
        method = "closed" if spectrum.has_closed_form else "sum"
    if method == "closed" and spectrum.kind == "sphere" and spectrum.has_closed_form:
        # nu_l = nu_0 + l: both endpoints share z = -exp(-h), so the average
        # is cos(pi nu_0) times one series, exactly zero when nu_0 is a half-integer
        z = np.array([[-math.exp(-h)]], dtype=complex)
        lead = cospi(spectrum.nus[0]) * math.exp(-h * spectrum.nus[0])
        return lead * spectrum._sphere_series(z, sigma)[0]
    if method == "closed":
        ph = spectrum.phi(np.array([math.pi + 1j * h, -math.pi + 1j * h]), sigma, method="closed")
        return 0.5 * (ph[0] + ph[1])
    spec = spectrum
    if not spec.complete:
        jm = spec.jmax
        while spec.tail_bound(h) > tol:
            if jm >= jmax_cap:
                raise TruncationError(f"tail {spec.tail_bound(h):.2e} above {tol:.1e} at jmax cap {jmax_cap}")
            jm = min(jmax_cap, max(2 * jm, int(40.0 / h)))
            spec = spec.with_jmax(jm)
    coeff = cospi(spec.nus) * np.exp(-h * spec.nus)
    if spec.is_complex:
        coeff = coeff.astype(complex)
    return spec.mode_sum(coeff, sigma)


def sigma_rule(spectrum: CrossSectionSpectrum, scale: float = 1.0, resolution: int = 1, order: int = 12):
    """Quadrature over the distance variable graded toward both ends.

    ``scale`` is the smallest feature width to resolve; returns ``(sigma,
    weights * density)`` so that ``sum f(sigma_k) W_k`` integrates ``f`` over Y.
    """
    lo, hi = spectrum.sigma_domain
    length = hi - lo
    # kernel features sit at coincidence and at the antipode, so grading
    # toward both ends resolves them; the interior only needs a modest width
    depth = int(max(4, math.ceil(math.log2(max(length / max(scale, 1e-14), 2.0)) + 4)))
    width = min(0.25, length / 8) / resolution
    if spectrum.kind == "explicit":
        width = min(width, max(scale, 1e-3) * 4.0)
    s, w = graded_interval_rule(lo, hi, order=order, depth=depth + 2 * (resolution - 1),
                                max_width=width)
    return s, w * spectrum.distance_density(s)


def schur_norm_star(spectrum: CrossSectionSpectrum, h: float, method: str = "auto",
                    resolution: int = 1, tol: float = 1e-12) -> float:
    """``sup_y int_Y |H_h(y, y')| dmu(y')`` for the damped kernel ``H_h``.

    By homogeneity this is one distance integral, and by the symmetry
    ``|H_h(y, y')| = |H_h(y', y)|`` it equals the transposed norm as well.
    """
    s, W = sigma_rule(spectrum, scale=min(h, 1.0) * 0.25, resolution=resolution)
    vals = damped_cos_pi_kernel(spectrum, h, s, method=method, tol=tol)
    return float(np.sum(np.abs(vals) * W))


# ---------------------------------------------------------------------------
# Spectrum files
# ---------------------------------------------------------------------------

def read_spectrum_file(path) -> ExplicitSpectrum:
    """Parse a line-oriented spectrum file.

    Records::

        volume 12.566370614359172
        diameter 3.141592653589793
        density <sigma> <w>
        mode <eigenvalue> <multiplicity>
        kernel <sigma> <value> [<imag>]

    ``kernel`` lines attach to the most recent ``mode``. ``#`` starts a comment.
    """
    path = Path(path)
    modes: list[list] = []
    density: list[tuple[float, float]] = []
    volume, diameter = float("nan"), math.pi
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key, vals = parts[0].lower(), parts[1:]
        try:
            nums = [float(v) for v in vals]
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: non-numeric field in {raw!r}") from exc
        if key == "volume" and len(nums) == 1:
            volume = nums[0]
        elif key == "diameter" and len(nums) == 1:
            diameter = nums[0]
        elif key == "density" and len(nums) == 2:
            density.append((nums[0], nums[1]))
        elif key == "mode" and len(nums) == 2:
            if nums[1] != int(nums[1]) or nums[1] < 1:
                raise ConfigError(f"{path}:{lineno}: multiplicity must be a positive integer")
            if modes and nums[0] < modes[-1][0]:
                raise ConfigError(f"{path}:{lineno}: eigenvalues must be non-decreasing")
            modes.append([nums[0], int(nums[1]), []])
        elif key == "kernel" and len(nums) in (2, 3):
            if not modes:
                raise ConfigError(f"{path}:{lineno}: kernel sample before any mode")
            value = complex(nums[1], nums[2]) if len(nums) == 3 else nums[1]
            modes[-1][2].append((nums[0], value))
        else:
            raise ConfigError(f"{path}:{lineno}: unrecognised record {raw!r}")
    if not modes:
        raise ConfigError(f"{path}: no modes")
    packed = []
    for lam, mult, table in modes:
        tab = None
        if table:
            tab = np.array(table)
            if np.any(np.diff(tab[:, 0].real) <= 0):
                raise ConfigError(f"{path}: kernel samples must have increasing sigma")
        packed.append((lam, mult, tab))
    return ExplicitSpectrum(tuple(packed), volume, diameter,
                            tuple(density) if density else None, name=path.stem)


def write_spectrum_file(path, spectrum: CrossSectionSpectrum, sigma: Sequence[float]) -> None:
    """Write the modes of ``spectrum`` with kernel tables sampled at ``sigma``."""
    table = spectrum.addition_kernels(np.asarray(sigma, dtype=float))
    sigma = [float(s) for s in sigma]
    lines = [f"volume {spectrum.volume!r}", f"diameter {spectrum.diameter!r}"]
    for s, w in zip(sigma, spectrum.distance_density(sigma)):
        lines.append(f"density {s!r} {float(w)!r}")
    for j in range(spectrum.jmax + 1):
        lines.append(f"mode {float(spectrum.eigenvalues[j])!r} {int(spectrum.multiplicities[j])}")
        for s, v in zip(sigma, table[j]):
            if np.iscomplexobj(v) and v.imag != 0:
                lines.append(f"kernel {s!r} {float(v.real)!r} {float(v.imag)!r}")
            else:
                lines.append(f"kernel {s!r} {float(np.real(v))!r}")
    Path(path).write_text("\n".join(lines) + "\n")
