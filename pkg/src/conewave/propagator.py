"""Kernel matrices for ``F_{omega,t}`` on a truncated cone and their Lp norms.

Discretisation
--------------
* Radial direction: log-spaced cells on ``[r_min, r_max]`` (by default
  ``[t/100, 20t]``). The radial kernel of each angular mode is averaged over
  cell pairs (Galerkin projection onto cell-constant functions), which is a
  conditional expectation and therefore never increases an Lp norm.
* Cross-section: a product quadrature on the sphere (or equispaced points on
  the circle) that integrates products of retained modes exactly, so the
  sampled addition kernels act as orthogonal projections.
* Angular modes: by default every mode the cross-section grid resolves is
  kept with unit weight (a sharp spectral cut). An optional Gaussian width
  ``M`` instead assembles ``F_{omega,t} exp(-(nu/M)**2)``, dropping modes
  whose weight falls below ``1e-4`` of the first.

Matrix entries are ``K(x_i, x_j) * mu_j`` so that ``(A f)_i`` approximates
``int K(x_i, y) f(y) dmu(y)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .cone_kernel import SpectralParameter, mode_angle_profile
from .cross_section import CrossSectionSpectrum
from .errors import PowerIterationStall, ResolutionError, SingularQuadratureError, UnsupportedCrossSection
from .quadrature import gauss_legendre, graded_interval_rule
from .specfun import bessel_j

__all__ = [
    "AngularGrid", "ConeGrid", "KernelMatrix", "OperatorNormEstimate", "angular_grid",
    "assemble_kernel_matrix", "operator_norm", "theorem_sweep", "multiplier_sup",
    "multiplier_sup_closed", "p_power_lower_bound", "in_p_window",
]

MODE_CUTOFF = 1e-4


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

@dataclass
class AngularGrid:
    """Quadrature nodes on the cross-section and their pairwise distances.

    ``degree`` is the largest mode degree whose pairwise products the rule
    integrates exactly. ``distance`` is signed on the circle.
    """

    points: np.ndarray
    weights: np.ndarray
    distance: np.ndarray
    degree: int
    kind: str


def _sphere_points(dim: int, degree: int):
    L = int(degree)
    if dim == 1:
        m = 2 * L + 1
        phi = 2 * math.pi * np.arange(m) / m
        return np.stack([np.cos(phi), np.sin(phi)], axis=1), np.full(m, 2 * math.pi / m)
    if dim == 2:
        x, w = gauss_legendre(L + 1)
        m = 2 * L + 1
        phi = 2 * math.pi * np.arange(m) / m
        ct, ph = np.meshgrid(x, phi, indexing="ij")
        st = np.sqrt(1 - ct ** 2)
        pts = np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=-1).reshape(-1, 3)
        wts = np.outer(w, np.full(m, 2 * math.pi / m)).ravel()
        return pts, wts
    if dim == 3:
        mc = L + 1
        k = np.arange(1, mc + 1)
        u = np.cos(k * math.pi / (mc + 1))  # Gauss-Chebyshev (second kind) in cos(chi)
        wu = math.pi / (mc + 1) * np.sin(k * math.pi / (mc + 1)) ** 2
        x, w = gauss_legendre(L + 1)
        m = 2 * L + 1
        phi = 2 * math.pi * np.arange(m) / m
        U, X, P = np.meshgrid(u, x, phi, indexing="ij")
        sc = np.sqrt(1 - U ** 2)
        st = np.sqrt(1 - X ** 2)
        pts = np.stack([U, sc * X, sc * st * np.cos(P), sc * st * np.sin(P)], axis=-1).reshape(-1, 4)
        wts = (wu[:, None, None] * w[None, :, None] * np.full(m, 2 * math.pi / m)[None, None, :]).ravel()
        return pts, wts
    raise UnsupportedCrossSection(f"no product grid for S^{dim}")


def angular_grid(spectrum: CrossSectionSpectrum, degree: int) -> AngularGrid:
    """Cross-section grid exact for products of modes up to ``degree``."""
    dim = spectrum.geometry.n - 1
    if spectrum.kind == "circle":
        m = 2 * int(degree) + 1
        theta = 2 * math.pi * np.arange(m) / m
        diff = theta[:, None] - theta[None, :]
        signed = (diff + math.pi) % (2 * math.pi) - math.pi
        pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        return AngularGrid(pts, np.full(m, 2 * math.pi / m), signed, int(degree), "circle")
    if spectrum.kind == "explicit" and abs(spectrum.diameter - math.pi) > 1e-12:
        raise UnsupportedCrossSection("explicit spectra are placed on the round sphere (diameter pi)")
    pts, wts = _sphere_points(dim, degree)
    dist = np.arccos(np.clip(pts @ pts.T, -1.0, 1.0))
    return AngularGrid(pts, wts, dist, int(degree), "sphere")


@dataclass
class ConeGrid:
    """Cell-constant radial discretisation times a cross-section grid.

    Nodes are ordered radial-major: index ``i * len(angular) + a``.
    """

    n: int
    edges: np.ndarray
    angular: AngularGrid
    t_ref: float

    @classmethod
    def for_time(cls, spectrum: CrossSectionSpectrum, t: float, radial_cells: int = 24,
                 angular_degree: int = 3, r_min_factor: float = 0.01, r_max_factor: float = 20.0):
        """Grid dilated with ``t``: log-spaced cells on ``[t r_min_factor, t r_max_factor]``."""
        if t <= 0:
            raise ValueError("t must be positive")
        edges = np.geomspace(t * r_min_factor, t * r_max_factor, int(radial_cells) + 1)
        return cls(spectrum.geometry.n, edges, angular_grid(spectrum, angular_degree), float(t))

    @property
    def cell_measure(self) -> np.ndarray:
        """``int_cell r**(n-1) dr`` for each radial cell."""
        e = self.edges
        return (e[1:] ** self.n - e[:-1] ** self.n) / self.n

    @property
    def centres(self) -> np.ndarray:
        e = self.edges
        return np.sqrt(e[1:] * e[:-1])

    @property
    def weights(self) -> np.ndarray:
        """Measure of each node: cell measure times angular weight."""
        return np.outer(self.cell_measure, self.angular.weights).ravel()

    @property
    def size(self) -> int:
        return (self.edges.size - 1) * self.angular.weights.size

    def analytic_measure(self, volume: float) -> float:
        return volume * (self.edges[-1] ** self.n - self.edges[0] ** self.n) / self.n

    def refined(self, factor: int = 2, widen: float = 2.0) -> "ConeGrid":
        """``factor`` times as many radial cells on a range widened by ``widen`` at both ends."""
        lo, hi = self.edges[0] / widen, self.edges[-1] * widen
        cells = int(round((self.edges.size - 1) * factor * math.log(hi / lo)
                          / math.log(self.edges[-1] / self.edges[0])))
        return ConeGrid(self.n, np.geomspace(lo, hi, cells + 1), self.angular, self.t_ref)

    def dilated(self, c: float) -> "ConeGrid":
        return ConeGrid(self.n, self.edges * c, self.angular, self.t_ref * c)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

@dataclass
class KernelMatrix:
    matrix: np.ndarray
    grid: ConeGrid
    t: float
    omega: complex
    which: str
    modes_used: int
    mollifier: float
    support_cells: int = 0
    details: dict = field(default_factory=dict)


def _mode_degrees(spectrum: CrossSectionSpectrum) -> np.ndarray:
    if spectrum.kind == "circle":
        return np.abs(spectrum.ks)
    return np.arange(spectrum.jmax + 1)


def _retained_modes(spectrum, mollifier, degree):
    """Indices and weights of the modes entering the matrix.

    ``mollifier=None`` keeps every mode the angular grid resolves with unit
    weight (a sharp spectral cut); a finite width applies ``exp(-(nu/width)^2)``.
    """
    nus = spectrum.nus
    if mollifier is None:
        deg = _mode_degrees(spectrum)
        keep = deg <= degree
        if not spectrum.complete and deg.max() < degree:
            raise ResolutionError("angular grid resolves modes beyond the spectrum truncation; raise jmax")
        return np.nonzero(keep)[0], np.ones_like(nus, dtype=float)
    weights = np.exp(-(nus / mollifier) ** 2)
    keep = weights >= MODE_CUTOFF * weights.max()
    if not spectrum.complete and keep[-1]:
        raise ResolutionError("mollifier keeps modes beyond the spectrum truncation; raise jmax")
    deg = _mode_degrees(spectrum)
    if np.any(deg[keep] > degree):
        raise ResolutionError(f"retained modes reach degree {int(deg[keep].max())} but the angular grid "
                              f"is exact only to degree {degree}")
    return np.nonzero(keep)[0], weights


def default_mollifier(spectrum: CrossSectionSpectrum, degree: int) -> float:
    """Width that leaves weight ``exp(-9)`` on the last mode the grid resolves."""
    deg = _mode_degrees(spectrum)
    inside = spectrum.nus[deg <= degree]
    return float(inside.max()) / 3.0 if inside.size else 1.0


class ModeProfileTable:
    """Spline tables of the per-mode angle profiles (independent of ``t``).

    Interior profiles are tabulated against ``u = log(A/(pi-A))`` and exterior
    ones against ``log`` of the hyperbolic angle; in those variables the
    endpoint power laws are smooth. Outside the tables the profiles continue
    with their leading power (or exponential) behaviour.
    """

    def __init__(self, sp: SpectralParameter, nus, exterior_form: str = "corrected",
                 span: float = 18.0, ext_max: float = 16.0, step: float | None = None):
        self.sp = sp
        self.nus = np.asarray(nus, dtype=float)
        mu = sp.mu
        self.mu = mu
        if step is None:
            step = min(0.05, 0.25 / (float(self.nus.max()) + 1.0))
        u = np.arange(-span, span + step / 2, step)
        vals = []
        for x in u:
            try:
                vals.append(mode_angle_profile(sp, self.nus, "interior", math.pi / (1.0 + math.exp(-x)),
                                               exterior_form)[0])
            except SingularQuadratureError:
                # the integral representation degrades next to A = pi; the
                # omitted sliver has negligible measure and is extrapolated
                if x < 4.0:
                    raise
                break
        self.u = u[: len(vals)]
        self.int_vals = np.array(vals)
        # exterior variable: log(E) below E = 1, E - 1 above (C1 at the joint);
        # the leading decay exp(-rate E) is divided out before interpolating
        self.rate = self.nus + 0.5 + mu
        self.v = np.arange(-span, ext_max - 1.0 + step / 2, step)
        cal_a = self._ext_angle(self.v)
        self.ext_vals = np.array([mode_angle_profile(sp, self.nus, "exterior", float(x), exterior_form)[0]
                                  for x in cal_a]) * np.exp(np.outer(cal_a, self.rate))
        self._int = CubicSpline(self.u, self.int_vals, axis=0)
        self._ext = CubicSpline(self.v, self.ext_vals, axis=0)
        self.ext_max = float(cal_a[-1])

    @staticmethod
    def _ext_angle(v):
        v = np.asarray(v, dtype=float)
        return np.where(v < 0, np.exp(np.minimum(v, 0.0)), 1.0 + v)

    @staticmethod
    def _ext_var(cal_a):
        return np.where(cal_a < 1.0, np.log(np.minimum(cal_a, 1.0)), cal_a - 1.0)

    def interior(self, log_a, log_pi_minus_a):
        """Profiles at interior angles given ``log A`` and ``log(pi - A)``; shape (points, modes)."""
        u = np.asarray(log_a) - np.asarray(log_pi_minus_a)
        lo, hi = self.u[0], self.u[-1]
        out = self._int(np.clip(u, lo, hi))
        below = u < lo
        if np.any(below):
            # profile ~ A**(-2 mu) as A -> 0
            out[below] *= np.exp(-2 * self.mu * (u[below] - lo))[:, None]
        above = u > hi
        if np.any(above) and self.mu.real > 0:
            out[above] *= np.exp(2 * self.mu * (u[above] - hi))[:, None]
        return out

    def exterior(self, cal_a):
        cal_a = np.asarray(cal_a, dtype=float)
        v = self._ext_var(cal_a)
        lo, hi = self.v[0], self.v[-1]
        out = self._ext(np.clip(v, lo, hi)) * np.exp(-np.outer(cal_a, self.rate))
        below = v < lo
        if np.any(below) and self.mu.real > 0:
            out[below] *= np.exp(-2 * self.mu * (v[below] - lo))[:, None]
        return out


def radial_kernel_values(table: ModeProfileTable, t: float, r, rp):
    """Per-mode radial kernels at point pairs, shape (points, modes); exact zeros off the cone."""
    sp = table.sp
    r = np.asarray(r, dtype=float)
    rp = np.asarray(rp, dtype=float)
    four = 4.0 * r * rp
    X = (t - np.abs(r - rp)) * (t + np.abs(r - rp)) / four
    Y = (r + rp - t) * (r + rp + t) / four
    out = np.zeros((r.size, table.nus.size), dtype=complex)
    interior = (X > 0) & (Y > 0)
    exterior = Y <= 0
    if np.any(interior):
        sx, sy = np.sqrt(X[interior]), np.sqrt(Y[interior])
        la = np.log(2 * np.arctan2(sx, sy))
        lb = np.log(2 * np.arctan2(sy, sx))
        out[interior] = table.interior(la, lb)
    if np.any(exterior):
        cal_a = 2 * np.arcsinh(np.sqrt(-Y[exterior]))
        out[exterior] = table.exterior(np.maximum(cal_a, 1e-300))
    w = sp.omega
    live = interior | exterior
    pref = np.exp((2 * w - sp.n) * math.log(t) - w * np.log(r[live] * rp[live]))
    out[live] *= pref[:, None]
    return out


@lru_cache(maxsize=32)
def _unit_graded(order: int, depth: int):
    """Gauss rule on [0, 1] graded geometrically toward both ends."""
    x, w = graded_interval_rule(0.0, 1.0, order=order, depth=depth)
    return x, w


def _split_rule(lo, hi, breaks, order, depth):
    """Graded rule on [lo, hi] split at the interior ``breaks``."""
    pts = sorted({lo, hi, *[b for b in breaks if lo < b < hi]})
    ux, uw = _unit_graded(order, depth)
    xs, ws = [], []
    for a, b in zip(pts[:-1], pts[1:]):
        xs.append(a + (b - a) * ux)
        ws.append((b - a) * uw)
    return np.concatenate(xs), np.concatenate(ws)


def _radial_blocks(table: ModeProfileTable, t: float, grid: ConeGrid, inner_depth: int = 10,
                   outer_depth: int = 3):
    """Cell-pair averages of the per-mode radial kernels, shape (modes, cells, cells).

    The inner ``r'`` rule is split at the light-cone lines ``r' = r +- t`` and
    ``r' = t - r`` and graded toward them; the outer ``r`` rule is split where
    those lines cross the cell edges.
    """
    n = grid.n
    edges = grid.edges
    cells = edges.size - 1
    meas = grid.cell_measure
    out = np.zeros((table.nus.size, cells, cells), dtype=complex)
    pairs = 0
    for i in range(cells):
        a, b = edges[i], edges[i + 1]
        for k in range(i, cells):
            c, d = edges[k], edges[k + 1]
            if c - b >= t:
                break  # every pair is outside the light cone: exactly zero
            ro, wo = _split_rule(a, b, (c - t, d - t, c + t, d + t, t - c, t - d), 5, outer_depth)
            rr, rq, ww = [], [], []
            for x, wx in zip(ro, wo):
                xi, wi = _split_rule(c, d, (x - t, x + t, t - x), 4, inner_depth)
                rr.append(np.full(xi.size, x))
                rq.append(xi)
                ww.append(wx * wi)
            rr, rq, ww = np.concatenate(rr), np.concatenate(rq), np.concatenate(ww)
            vals = radial_kernel_values(table, t, rr, rq)
            jac = ww * rr ** (n - 1) * rq ** (n - 1)
            out[:, i, k] = (jac @ vals) / (meas[i] * meas[k])
            out[:, k, i] = out[:, i, k]
            pairs += 1
    return out, pairs


def assemble_kernel_matrix(sp: SpectralParameter, t: float, grid: ConeGrid, spectrum: CrossSectionSpectrum,
                           which: str = "F", mollifier: float | None = None,
                           table: ModeProfileTable | None = None) -> KernelMatrix:
    """Measure-weighted kernel matrix of ``F_{omega,t}`` (or of the sine propagator).

    ``which="sine"`` uses ``omega = (n-1)/2`` where ``F`` equals
    ``sin(t sqrt L)/(t sqrt L)``; its norms are those of the sine propagator
    divided by ``t``. A ``table`` built for the same parameter and modes may
    be passed in to reuse it across times.
    """
    if which == "sine":
        sp = SpectralParameter.sine(spectrum.geometry.n)
    elif which != "F":
        raise ValueError("which must be 'F' or 'sine'")
    if sp.n != spectrum.geometry.n or grid.n != sp.n:
        raise ValueError("dimension mismatch between parameter, grid and spectrum")
    if grid.edges[1] - grid.edges[0] > 0.5 * t:
        raise ResolutionError("innermost radial cell is wider than t/2")
    degree = grid.angular.degree
    idx, mweights = _retained_modes(spectrum, mollifier, degree)
    nus = spectrum.nus[idx]
    if table is None or table.sp.omega != sp.omega or not np.array_equal(table.nus, nus):
        table = ModeProfileTable(sp, nus)
    radial, pairs = _radial_blocks(table, t, grid)
    ang = grid.angular
    kern = spectrum.addition_kernels(ang.distance.ravel())
    meas = grid.cell_measure
    real = not np.iscomplexobj(kern) and np.max(np.abs(radial.imag)) <= 1e-13 * max(np.max(np.abs(radial)), 1e-300)
    dtype = float if real else complex
    cells, m = meas.size, ang.weights.size
    mat = np.zeros((cells * m, cells * m), dtype=dtype)
    for pos, j in enumerate(idx):
        zj = kern[j].reshape(m, m) * ang.weights[None, :]
        rj = radial[pos] * meas[None, :] * mweights[j]
        if real:
            mat += np.kron(rj.real, zj.real)
        else:
            mat += np.kron(rj, zj)
    width = math.inf if mollifier is None else float(mollifier)
    return KernelMatrix(mat, grid, float(t), sp.omega, which, int(idx.size), width,
                        pairs, {"nus": nus.tolist(), "table": table})


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

@dataclass
class OperatorNormEstimate:
    """Bracket ``lower <= ||A||_{p->p} <= upper`` for one operator.

    ``value`` is the best point estimate (the converged power iteration at
    ``p = 2`` and the exact sums at ``p = 1, inf``; the upper bound otherwise).
    """

    p: float
    t: float
    lower: float
    upper: float
    method: str
    value: float = float("nan")
    grid_size: int = 0
    exploratory: bool = False

    def __post_init__(self):
        if math.isnan(self.value):
            self.value = self.upper


def _weighted(matrix, weights, p):
    """Matrix of the same operator acting on unweighted ``l^p``."""
    if math.isinf(p):
        return matrix
    dp = weights ** (1.0 / p)
    return (dp[:, None] * matrix) / dp[None, :]


def _norm_one(matrix, weights):
    return float(np.max(np.sum(np.abs(matrix) * weights[:, None], axis=0) / weights))


def _norm_inf(matrix):
    return float(np.max(np.sum(np.abs(matrix), axis=1)))


def _power_iteration(b, rtol=1e-10, maxiter=3000, seed=0, block=16):
    """Largest singular value of ``b`` by block subspace iteration on ``b^H b``.

    A small block with a Rayleigh-Ritz step keeps convergence fast when the
    top singular values are clustered (several modes with nearly equal norms).
    Returns ``(value, vector)``.
    """
    rng = np.random.default_rng(seed)
    k = min(block, b.shape[1])
    v = rng.standard_normal((b.shape[1], k))
    if np.iscomplexobj(b):
        v = v + 1j * rng.standard_normal(v.shape)
    v, _ = np.linalg.qr(v)
    prev = 0.0
    for _ in range(maxiter):
        w = b.conj().T @ (b @ v)
        gram = v.conj().T @ w
        vals, vecs = np.linalg.eigh((gram + gram.conj().T) / 2)
        lam = float(vals[-1])
        if lam <= 0.0:
            return 0.0, v[:, 0]
        top = v @ vecs[:, -1]
        if abs(lam - prev) <= rtol * lam:
            return float(np.linalg.norm(b @ top)), top
        prev = lam
        v, _ = np.linalg.qr(w @ vecs[:, ::-1])
    raise PowerIterationStall(f"subspace iteration did not settle in {maxiter} steps")


def _dual(y, p):
    """``|y|**(p-1) sign(y)`` normalised in ``l^q`` (the ``l^p`` norming functional)."""
    a = np.abs(y)
    nrm = np.linalg.norm(a, ord=p) if not math.isinf(p) else float(a.max())
    if nrm == 0:
        return y
    if np.iscomplexobj(y):
        phase = np.where(a > 0, y / np.where(a > 0, a, 1), 0)
    else:
        phase = np.sign(y)
    return phase * (a / nrm) ** (p - 1)


def p_power_lower_bound(b, p, x0, iterations=40):
    """Higham's ``p``-norm power method from ``x0``; returns a certified lower bound."""
    q = p / (p - 1.0)
    x = x0 / np.linalg.norm(x0, ord=p)
    best = float(np.linalg.norm(b @ x, ord=p))
    for _ in range(iterations):
        y = b @ x
        est = float(np.linalg.norm(y, ord=p))
        best = max(best, est)
        z = b.conj().T @ _dual(y, p)
        zq = float(np.linalg.norm(z, ord=q))
        if zq <= float(np.real(np.vdot(z, x))) * (1 + 1e-12):
            break
        x = _dual(z, q)
        x /= np.linalg.norm(x, ord=p)
    return best


def _probes(grid: ConeGrid, matrix, weights, p):
    """Test functions for lower bounds: point masses, radial shells, and kernel-matched rows."""
    probes = []
    m = grid.angular.weights.size
    cells = grid.edges.size - 1
    row_mass = np.sum(np.abs(matrix), axis=1)
    top = np.argsort(row_mass)[-4:]
    for i in top:
        # extremal test function for the functional f -> (Af)(x_i)
        row = matrix[i]
        f = np.conj(np.sign(row)) * np.abs(row / weights) ** (1.0 / (p - 1.0))
        probes.append(f)
        e = np.zeros(matrix.shape[1], dtype=matrix.dtype)
        e[i] = 1.0
        probes.append(e)
    for i in np.linspace(0, cells - 1, min(cells, 6)).astype(int):
        f = np.zeros(matrix.shape[1], dtype=matrix.dtype)
        f[i * m:(i + 1) * m] = 1.0
        probes.append(f)
    return probes


def operator_norm(matrix, grid_or_weights, p: float, probe_iterations: int = 40,
                  anchors: dict | None = None, t: float = float("nan")) -> OperatorNormEstimate:
    """Bracket the ``L^p(mu) -> L^p(mu)`` norm of a measure-weighted kernel matrix.

    ``p = 1`` and ``p = inf`` are exact weighted column/row sums and ``p = 2``
    is a power iteration. Other ``p`` get the Riesz-Thorin upper bound from
    the nearest two of those three and a lower bound from probe functions
    refined by the ``p``-norm power method.
    """
    if isinstance(grid_or_weights, ConeGrid):
        grid, weights = grid_or_weights, grid_or_weights.weights
    else:
        grid, weights = None, np.asarray(grid_or_weights, dtype=float)
    a = np.asarray(matrix)
    if p < 1:
        raise ValueError("p must be >= 1")
    if p == 1:
        v = _norm_one(a, weights)
        return OperatorNormEstimate(1.0, t, v, v, "column-sum", v, a.shape[0])
    if math.isinf(p):
        v = _norm_inf(a)
        return OperatorNormEstimate(p, t, v, v, "row-sum", v, a.shape[0])
    if p == 2:
        v, _ = _power_iteration(_weighted(a, weights, 2.0))
        return OperatorNormEstimate(2.0, t, v, v, "power-iteration", v, a.shape[0])
    anchors = dict(anchors or {})
    for key in (1.0, 2.0, math.inf):
        if key not in anchors:
            anchors[key] = operator_norm(a, weights, key).upper
    if p < 2:
        theta = (1.0 - 1.0 / p) / 0.5  # 1/p = (1-theta)/1 + theta/2
        upper = anchors[1.0] ** (1 - theta) * anchors[2.0] ** theta
    else:
        theta = 1.0 - 2.0 / p  # 1/p = (1-theta)/2 + theta/inf
        upper = anchors[2.0] ** (1 - theta) * anchors[math.inf] ** theta
    b = _weighted(a, weights, p)
    dp = weights ** (1.0 / p)
    lower = 0.0
    starts = []
    for f in (_probes(grid, a, weights, p) if grid is not None else []):
        g = dp * f
        nrm = np.linalg.norm(g, ord=p)
        if nrm == 0:
            continue
        g = g / nrm
        val = float(np.linalg.norm(b @ g, ord=p))
        starts.append((val, g))
        lower = max(lower, val)
    if not starts:
        g = np.ones(a.shape[1]) / a.shape[1] ** (1.0 / p)
        starts.append((float(np.linalg.norm(b @ g, ord=p)), g))
    starts.sort(key=lambda s: s[0])
    for _, g in starts[-2:]:
        lower = max(lower, p_power_lower_bound(b, p, g, probe_iterations))
    return OperatorNormEstimate(float(p), t, lower, upper, "riesz-thorin/probe", upper, a.shape[0])


# ---------------------------------------------------------------------------
# sweeps and oracles
# ---------------------------------------------------------------------------

def in_p_window(p: float, n: int) -> bool:
    """``|1/p - 1/2| < 1/(n-1)``: the exponents covered by the uniform bounds."""
    return abs(1.0 / p - 0.5) < 1.0 / (n - 1)


def theorem_sweep(sp: SpectralParameter | None, p_list, t_list, spectrum: CrossSectionSpectrum,
                  which: str = "F", radial_cells: int = 24, angular_degree: int = 2,
                  mollifier: float | None = None, refine: bool = False) -> list[OperatorNormEstimate]:
    """Norm brackets for every ``(p, t)``; with ``refine`` the grid is refined 2x and widened 2x.

    For ``which="sine"`` the reported numbers are ``||sin(t sqrt L)/sqrt L||_{p->p} / t``.
    """
    n = spectrum.geometry.n
    if sp is None:
        sp = SpectralParameter.sine(n)
    out = []
    table = None
    for t in t_list:
        grid = ConeGrid.for_time(spectrum, t, radial_cells, angular_degree)
        if refine:
            grid = grid.refined()
        km = assemble_kernel_matrix(sp, t, grid, spectrum, which, mollifier, table)
        table = km.details["table"]
        anchors = {}
        for key in (1.0, 2.0, math.inf):
            anchors[key] = operator_norm(km.matrix, grid, key, t=t).upper
        for p in p_list:
            est = operator_norm(km.matrix, grid, p, anchors=anchors, t=t)
            est.method = f"{which}:{est.method}"
            est.exploratory = not in_p_window(p, n)
            out.append(est)
    return out


def multiplier_sup_closed(sp: SpectralParameter) -> float:
    """``sup_x |(pi/2)**(1/2) x**(-kappa) J_kappa(x)|`` for real ``kappa = n/2 - omega >= -1/2``.

    The supremum is the ``x -> 0`` limit ``(pi/2)**(1/2) / (2**kappa Gamma(kappa+1))``.
    """
    w = sp.omega
    if abs(w.imag) > 0:
        raise UnsupportedCrossSection("the closed supremum is stated for real omega only")
    kappa = 0.5 * sp.n - w.real
    if kappa < -0.5:
        raise ValueError("kappa must be >= -1/2")
    return math.sqrt(0.5 * math.pi) / (2 ** kappa * math.gamma(kappa + 1))


def multiplier_sup(sp: SpectralParameter, x_max: float = 400.0, samples: int = 40001) -> float:
    """Numerical supremum of the scalar multiplier over ``x = t lambda`` (real ``omega``)."""
    w = sp.omega
    if abs(w.imag) > 0:
        raise UnsupportedCrossSection("the scalar multiplier oracle needs real omega")
    kappa = 0.5 * sp.n - w.real
    x = np.linspace(1e-6, x_max, samples)
    vals = math.sqrt(0.5 * math.pi) * x ** (-kappa) * np.asarray(bessel_j(kappa, x))
    # past x_max the envelope is below sqrt(2/pi) x**(-kappa-1/2) * sqrt(pi/2)
    tail = x_max ** (-kappa - 0.5)
    return float(max(np.max(np.abs(vals)), tail))
