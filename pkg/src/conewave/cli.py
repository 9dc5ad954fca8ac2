"""Command-line driver: configuration, subcommands and CSV/JSON output.

Configuration comes from built-in defaults, then an optional ``key = value``
file (``--config``), then command-line flags; later sources win. Every
subcommand writes ``<subcommand>.csv`` (one row per parameter point, fixed
column order) and ``<subcommand>.json`` (run summary) into the output
directory: ``--output-dir``, else ``$CONEWAVE_OUTPUT_DIR``, else
``./conewave-out``.

Exit status: 0 when every row passes, 1 when some row fails, 2 for
configuration errors, 3 when a numerical routine raises.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ConewaveError, ConfigError

__all__ = ["RunConfig", "ResultRecord", "parse_config", "run", "main", "COLUMNS", "SUBCOMMANDS"]

SUBCOMMANDS = ("specfun-test", "kernel-eval", "schur-check", "norm-sweep", "parametrix")

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters; see ``DEFAULTS_TABLE`` in the README."""

    n: int = 3
    cross_section: str = "S2"
    spectrum_file: str | None = None
    jmax: int = 64
    epsilon: float = 0.75
    s: float = 0.0
    # kernel-eval
    t: tuple = (2.0,)
    r: tuple = (_SQRT2,)
    rprime: tuple = (_SQRT2,)
    sigma: tuple = (math.pi / 4,)
    method: str = "all"
    finite: bool = True
    # norm-sweep
    t_list: tuple = (0.5, 1.0, 2.0, 4.0, 8.0)
    p_list: tuple = (1.5, 2.0, 3.0)
    grid_size: int = 24
    angular_degree: int = 2
    which: str = "F"
    refine: bool = False
    uniformity_tol: float = 0.25
    # schur-check
    epsilon_list: tuple = (0.6, 0.75, 0.9)
    h_list: tuple = tuple(float(x) for x in np.geomspace(1e-3, 10.0, 13))
    cal_a_list: tuple = tuple(float(x) for x in np.geomspace(1e-2, 10.0, 10))
    ratio_list: tuple = (0.25, 0.5, 0.75)
    schur_t_list: tuple = (1.0, 2.0)
    samples: int = 20
    # parametrix
    model: str = "sphere"
    metric_file: str | None = None
    magnetic_alpha: float = 0.0
    depth: int = 2
    s_list: tuple = (0.4, 0.2, 0.1, 0.05)
    sigma_list: tuple = (0.0, 0.1, 0.2, 0.3)
    bump_kappa: float = 1.0
    # shared
    tol: float = 1e-6
    refine_tol: float = 0.05
    seed: int = 0
    output_dir: str | None = None
    figures: str | None = None

    def __post_init__(self):
        _validate(self)


_LIST_KEYS = {f.name for f in fields(RunConfig) if f.type == "tuple"}
_INT_KEYS = {"n", "jmax", "grid_size", "angular_degree", "samples", "depth", "seed"}
_FLOAT_KEYS = {"epsilon", "s", "magnetic_alpha", "tol", "refine_tol", "uniformity_tol", "bump_kappa"}
_BOOL_KEYS = {"refine", "finite"}
_CHOICES = {"method": ("closed", "integral", "oracle", "all"), "which": ("F", "sine"),
            "model": ("flat", "sphere", "custom-file")}


def _validate(cfg: RunConfig) -> None:
    if not 0.5 < cfg.epsilon < 1.0:
        raise ConfigError(f"epsilon = {cfg.epsilon} must lie in (1/2, 1)")
    if cfg.n < 2:
        raise ConfigError("n must be >= 2")
    for key in _LIST_KEYS:
        values = getattr(cfg, key)
        if len(values) == 0:
            raise ConfigError(f"{key} must not be empty")
        if not all(math.isfinite(v) for v in values):
            raise ConfigError(f"{key} contains a non-finite value")
    for key in ("tol", "refine_tol", "uniformity_tol"):
        if not getattr(cfg, key) > 0:
            raise ConfigError(f"{key} must be positive")
    for key, allowed in _CHOICES.items():
        if getattr(cfg, key) not in allowed:
            raise ConfigError(f"{key} must be one of {', '.join(allowed)}")
    if any(p < 1 for p in cfg.p_list):
        raise ConfigError("p_list entries must be >= 1")
    if cfg.jmax < 1 or cfg.grid_size < 2 or cfg.angular_degree < 0 or cfg.depth < 0 or cfg.samples < 1:
        raise ConfigError("jmax, grid_size, samples must be positive and depth, angular_degree non-negative")
    if cfg.model == "custom-file" and not cfg.metric_file:
        raise ConfigError("model = custom-file needs metric_file")


def _coerce(key: str, text: str, where: str):
    text = text.strip()
    try:
        if key in _LIST_KEYS:
            return tuple(float(v) for v in text.replace(",", " ").split())
        if key in _INT_KEYS:
            return int(text)
        if key in _FLOAT_KEYS:
            return float(text)
        if key in _BOOL_KEYS:
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value {text!r} for key {key!r}") from exc
    return text or None


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, lists are comma separated."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value, f"{path}:{lineno}")
    return out


def parse_config(config_file=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the config file, then ``overrides`` (already-typed or string values)."""
    values = {}
    if config_file is not None:
        values.update(read_config_file(config_file))
    known = {f.name for f in fields(RunConfig)}
    for key, value in (overrides or {}).items():
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"unknown key {key!r}")
        if value is None:
            continue
        values[key] = _coerce(key, value, "flag") if isinstance(value, str) else value
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# records and emission
# ---------------------------------------------------------------------------

COLUMNS = {
    "specfun-test": ["op", "args", "value_re", "value_im", "oracle_re", "oracle_im", "rel_err",
                     "err_est", "tolerance", "passed"],
    "kernel-eval": ["n", "cross_section", "epsilon", "s", "t", "r", "rprime", "sigma", "method",
                    "regime", "value_re", "value_im", "err_est", "rel_diff_closed", "passed"],
    "schur-check": ["check", "spectrum", "epsilon", "parameter", "computed", "reference", "err_est",
                    "tolerance", "trivial_zero", "passed"],
    "norm-sweep": ["which", "n", "cross_section", "epsilon", "s", "p", "t", "lower", "upper", "value",
                   "err_est", "method", "grid_size", "exploratory", "passed"],
    "parametrix": ["model", "magnetic_alpha", "quantity", "k", "s", "sigma", "value_re", "value_im",
                   "reference", "err_est", "passed"],
}


@dataclass
class ResultRecord:
    subcommand: str
    values: dict
    passed: bool
    wall_time: float = 0.0


@dataclass
class RunOutcome:
    records: list
    summary: dict = field(default_factory=dict)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ConewaveError(f"non-finite value {value!r} in a result row")
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "" if value is None else str(value)


def render_csv(subcommand: str, records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    cols = COLUMNS[subcommand]
    writer.writerow(cols)
    for rec in records:
        row = dict(rec.values, passed=rec.passed)
        writer.writerow([_fmt(row.get(c)) for c in cols])
    return buf.getvalue()


def output_directory(cfg: RunConfig) -> Path:
    return Path(cfg.output_dir or os.environ.get("CONEWAVE_OUTPUT_DIR") or "conewave-out")


# ---------------------------------------------------------------------------
# shared builders
# ---------------------------------------------------------------------------

def _cross_section(cfg: RunConfig):
    from .cross_section import CircleAB, ShiftedSphere, SphereZeroPotential, read_spectrum_file
    if cfg.spectrum_file:
        return read_spectrum_file(cfg.spectrum_file)
    text = cfg.cross_section.strip()
    try:
        if text.upper().startswith("AB"):
            return CircleAB(float(text[2:]))
        if text.upper().startswith("S"):
            body = text[1:]
            if "+" in body:
                dim, shift = body.split("+", 1)
                return ShiftedSphere(int(dim), float(shift))
            return SphereZeroPotential(int(body))
    except ValueError as exc:
        raise ConfigError(f"cannot parse cross_section {text!r}") from exc
    raise ConfigError(f"cross_section {text!r}: use S<d>, S<d>+<shift>, AB<alpha> or spectrum_file")


def _spectrum(cfg: RunConfig):
    from .cross_section import ConeGeometry, CrossSectionSpectrum
    from .errors import UnsupportedCrossSection
    src = _cross_section(cfg)
    try:
        return CrossSectionSpectrum(ConeGeometry(cfg.n), src, cfg.jmax)
    except UnsupportedCrossSection as exc:
        raise ConfigError(str(exc)) from exc


def _label(cfg: RunConfig) -> str:
    return Path(cfg.spectrum_file).stem if cfg.spectrum_file else cfg.cross_section


def _rel(a, b) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _specfun_rows(cfg: RunConfig):
    from scipy import special
    from .specfun import (LegendreArgs, bessel_j, gamma_complex, legendre_p, legendre_q,
                          weber_schafheitlin, weber_schafheitlin_quadrature)
    rows = []

    def add(op, args, value, oracle, tol, err=0.0, absolute=False):
        value, oracle = complex(value), complex(oracle)
        rel = abs(value - oracle) if absolute else _rel(value, oracle)
        rows.append(ResultRecord("specfun-test", {
            "op": op, "args": args, "value_re": value.real, "value_im": value.imag,
            "oracle_re": oracle.real, "oracle_im": oracle.imag, "rel_err": rel, "err_est": err,
            "tolerance": tol}, rel <= tol))

    add("gamma_complex", "z=1", gamma_complex(1), 1.0, 1e-12)
    add("gamma_complex", "z=0.5", gamma_complex(0.5), math.sqrt(math.pi), 1e-12)
    add("gamma_complex", "|G(1+i)|^2", abs(gamma_complex(1 + 1j)) ** 2, math.pi / math.sinh(math.pi), 1e-12)
    for z in (2.5 + 3j, -3.7 + 0.4j, 0.3 - 15j, 9.5 + 19j):
        add("gamma_complex", f"z={z}", gamma_complex(z), special.gamma(z), 1e-12)
        add("gamma_recurrence", f"z={z}", gamma_complex(z + 1), z * gamma_complex(z), 1e-12)
    add("bessel_j", "order=0,x=0", bessel_j(0, 0.0), 1.0, 1e-10)
    add("bessel_j", "order=1,x=0", bessel_j(1, 0.0), 0.0, 1e-10, absolute=True)
    add("bessel_j", "order=0.5,x=pi/2", bessel_j(0.5, math.pi / 2), 2 / math.pi, 1e-10)
    for order, x in ((0.3, 2.7), (2.5, 17.0), (7.25, 40.0), (20.0, 12.0)):
        add("bessel_j", f"order={order},x={x}", bessel_j(order, x), special.jv(order, x), 1e-10)
    v, e = legendre_p(LegendreArgs(0, 1, math.pi / 3), return_error=True)
    add("legendre_p", "mu=0,deg=1,theta=pi/3", v, 0.5, 1e-10, e)
    v, e = legendre_p(LegendreArgs(0, 0, 1.1), return_error=True)
    add("legendre_p", "mu=0,deg=0,theta=1.1", v, 1.0, 1e-10, e)
    v, e = legendre_q(LegendreArgs(0, 0, math.acosh(2.0), "hyper"), return_error=True)
    add("legendre_q", "mu=0,deg=0,z=2", v, 0.5 * math.log(3.0), 1e-10, e)
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.samples):
        mu = rng.uniform(0.6, 1.5)
        lam = rng.uniform(0.5, 3.0)
        b, c = rng.uniform(0.2, 5.0, 2)
        lo, hi = abs(b - c), b + c
        a = rng.uniform(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo))
        val, err = weber_schafheitlin(mu, lam, a, b, c, return_error=True)
        ref, rerr = weber_schafheitlin_quadrature(mu, lam, a, b, c)
        add("weber_schafheitlin", f"mu={mu:.6f},lam={lam:.6f},a={a:.6f},b={b:.6f},c={c:.6f}",
            val, ref, 1e-6, err + rerr)
    return rows, {}


def _kernel_rows(cfg: RunConfig):
    from .cone_kernel import (RadialTriple, SpectralParameter, classify_regime, kernel_bessel_oracle,
                              kernel_closed, kernel_integral)
    from .errors import RegimeBoundaryError
    spec = _spectrum(cfg)
    if cfg.finite and not spec.complete:
        spec = spec.finite()
    sp = SpectralParameter(cfg.epsilon, cfg.s, cfg.n)
    methods = ("closed", "integral", "oracle") if cfg.method == "all" else (cfg.method,)
    if cfg.s != 0 and "oracle" in methods:
        methods = tuple(m for m in methods if m != "oracle")
    rows = []
    for t in cfg.t:
        for r in cfg.r:
            for rp in cfg.rprime:
                rt = RadialTriple(t, r, rp)
                try:
                    classify_regime(rt)
                except RegimeBoundaryError as exc:
                    raise ConfigError(f"(t, r, r') = ({t}, {r}, {rp}) lies on the light cone") from exc
                sig = np.asarray(cfg.sigma, dtype=float)
                results = {}
                for m in methods:
                    fn = {"closed": kernel_closed, "integral": kernel_integral,
                          "oracle": kernel_bessel_oracle}[m]
                    results[m] = fn(sp, rt, sig, spec)
                base = results.get("closed")
                for m, kv in results.items():
                    vals = np.atleast_1d(kv.value)
                    for k, sg in enumerate(sig):
                        v = complex(vals[k])
                        diff = _rel(v, complex(np.atleast_1d(base.value)[k])) if base is not None else 0.0
                        ok = diff <= 1e-5 or (kv.regime == "zero" and v == 0)
                        rows.append(ResultRecord("kernel-eval", {
                            "n": cfg.n, "cross_section": _label(cfg), "epsilon": cfg.epsilon, "s": cfg.s,
                            "t": t, "r": r, "rprime": rp, "sigma": float(sg), "method": m,
                            "regime": kv.regime, "value_re": v.real, "value_im": v.imag,
                            "err_est": float(kv.error_estimate), "rel_diff_closed": diff}, bool(ok)))
    return rows, {}


def _schur_rows(cfg: RunConfig):
    from .cone_kernel import SpectralParameter
    from .schur_bounds import (k_row_integral, kerest1_sweep, kerest2_sweep, t1_row_integral,
                               t2_pointwise_bound_check)
    spec = _spectrum(cfg)
    label = _label(cfg)
    rows = []
    zero_tol = 1e-12

    def add(check, eps, param, computed, reference, err, tol, passed):
        trivial = abs(computed) <= zero_tol and abs(reference) <= zero_tol
        rows.append(ResultRecord("schur-check", {
            "check": check, "spectrum": label, "epsilon": eps, "parameter": param,
            "computed": computed, "reference": reference, "err_est": err, "tolerance": tol,
            "trivial_zero": trivial}, bool(passed or trivial)))

    rep = kerest1_sweep(spec, cfg.h_list, rel_tol=cfg.refine_tol)
    add("kerest1_sup_ratio", None,
        f"h in [{min(cfg.h_list):g},{max(cfg.h_list):g}]", rep.computed, rep.reference,
        rep.error_estimate, cfg.refine_tol, rep.passed)
    for eps in cfg.epsilon_list:
        rep = kerest2_sweep(spec, eps, cfg.cal_a_list, rel_tol=cfg.refine_tol)
        add("kerest2_sup_weighted", eps, f"A in [{min(cfg.cal_a_list):g},{max(cfg.cal_a_list):g}]",
            rep.computed, rep.reference, rep.error_estimate, cfg.refine_tol, rep.passed)
    sp = SpectralParameter(cfg.epsilon, cfg.s, cfg.n)
    t0 = cfg.schur_t_list[0]
    for q in cfg.ratio_list:
        ref = t1_row_integral(sp, t0, q * t0, spec)
        for t in cfg.schur_t_list[1:]:
            val = t1_row_integral(sp, t, q * t, spec)
            add("t1_row_dilation", cfg.epsilon, f"r/t={q:g},t={t:g}", val, ref, abs(val - ref), 1e-6,
                _rel(val, ref) <= 1e-6)
        fine = t1_row_integral(sp, t0, q * t0, spec, resolution=2)
        add("t1_row_refined", cfg.epsilon, f"r/t={q:g},t={t0:g}", ref, fine, abs(ref - fine),
            cfg.refine_tol, _rel(ref, fine) <= cfg.refine_tol)
    if cfg.n >= 3:
        for which in (1, 2):
            for q in cfg.ratio_list:
                val = k_row_integral(which, cfg.epsilon, cfg.n, t0, q * t0, spec)
                fine = k_row_integral(which, cfg.epsilon, cfg.n, t0, q * t0, spec, order=16)
                add(f"k{which}_row_integral", cfg.epsilon, f"r/t={q:g}", val, fine, abs(val - fine),
                    cfg.refine_tol, math.isfinite(val) and _rel(val, fine) <= cfg.refine_tol)
    rng = np.random.default_rng(cfg.seed)
    samples = []
    while len(samples) < cfg.samples:
        r, rp = rng.uniform(0.1, 1.5, 2) * t0
        if abs(r - rp) + 0.02 * t0 < t0 < r + rp - 0.02 * t0:
            A = math.acos((r * r + rp * rp - t0 * t0) / (2 * r * rp))
            samples.append((r, rp, float(rng.uniform(0.02, 0.98)) * A))
    rep = t2_pointwise_bound_check(sp, t0, samples, spec)
    add("t2_over_majorant", cfg.epsilon, f"{rep.details['count']} interior points", rep.computed,
        rep.reference, 0.0, 0.0, rep.passed)
    return rows, {}


def _norm_rows(cfg: RunConfig):
    from .cone_kernel import SpectralParameter
    from .propagator import in_p_window, multiplier_sup_closed, theorem_sweep
    spec = _spectrum(cfg)
    sp = SpectralParameter(cfg.epsilon, cfg.s, cfg.n) if cfg.which == "F" else SpectralParameter.sine(cfg.n)
    oracle = multiplier_sup_closed(sp) if sp.omega.imag == 0 else None
    est = theorem_sweep(sp, cfg.p_list, cfg.t_list, spec, which=cfg.which, radial_cells=cfg.grid_size,
                        angular_degree=cfg.angular_degree, refine=cfg.refine)
    rows = []
    for e in est:
        ok = e.lower <= e.upper * (1 + 1e-8)
        if e.p == 2 and oracle is not None:
            ok = ok and e.value <= oracle * 1.05
        rows.append(ResultRecord("norm-sweep", {
            "which": cfg.which, "n": cfg.n, "cross_section": _label(cfg), "epsilon": cfg.epsilon,
            "s": cfg.s, "p": e.p, "t": e.t, "lower": e.lower, "upper": e.upper, "value": e.value,
            "err_est": e.upper - e.lower, "method": e.method, "grid_size": e.grid_size,
            "exploratory": e.exploratory}, bool(ok)))
    uniform = {}
    for p in cfg.p_list:
        ups = [e.upper for e in est if e.p == p]
        ratio = max(ups) / min(ups)
        uniform[repr(float(p))] = {"max_over_min": ratio, "passed": ratio <= 1 + cfg.uniformity_tol,
                                   "in_window": in_p_window(p, cfg.n)}
        if in_p_window(p, cfg.n) and ratio > 1 + cfg.uniformity_tol:
            for rec in rows:
                if rec.values["p"] == p:
                    rec.passed = False
    return rows, {"uniformity": uniform, "multiplier_sup": oracle}


def _model(cfg: RunConfig):
    from .parametrix import flat_model, load_metric_file, rotation_potential, sphere_model
    m = cfg.n - 1
    pot = None
    if cfg.magnetic_alpha:
        if m != 2:
            raise ConfigError("magnetic_alpha needs a two-dimensional cross-section (n = 3)")
        pot = rotation_potential(cfg.magnetic_alpha)
    if cfg.model == "flat":
        return flat_model(m, pot)
    if cfg.model == "sphere":
        return sphere_model(m, pot)
    return load_metric_file(cfg.metric_file, m, pot)


def _parametrix_rows(cfg: RunConfig):
    from .cross_section import ConeGeometry, SphereZeroPotential, build_spectrum
    from .parametrix import (hadamard_expansion, hadamard_pairing, parametrix_coefficients,
                             spectral_cos_pairing)
    model = _model(cfg)
    radius = max(max(cfg.s_list), max(cfg.sigma_list)) * 1.05 + 1e-3
    coeffs = parametrix_coefficients(model, cfg.depth, radius)
    rows = []
    base = {"model": cfg.model, "magnetic_alpha": cfg.magnetic_alpha}

    def add(quantity, k, s, sigma, value, reference, err, passed):
        value = complex(value)
        rows.append(ResultRecord("parametrix", dict(base, quantity=quantity, k=k, s=s, sigma=sigma,
                                                    value_re=value.real, value_im=value.imag,
                                                    reference=reference, err_est=err), bool(passed)))

    x_dir = np.zeros(model.m)
    x_dir[0] = 1.0
    for sigma in cfg.sigma_list:
        x = sigma * x_dir
        a0 = complex(coeffs.alpha(0, x))
        mod_ref = float(model.sqrt_det(x)) ** -0.5
        add("alpha_0", 0, 0.0, sigma, a0, mod_ref, 1e-12, abs(abs(a0) - mod_ref) <= cfg.tol * mod_ref)
        for k in range(1, cfg.depth + 1):
            noise = coeffs.noise[k - 1] if k - 1 < len(coeffs.noise) else 0.0
            add(f"alpha_{k}", k, 0.0, sigma, coeffs.alpha(k, x), None, noise, True)
    n = model.n
    first_classical = next((k for k in range(cfg.depth + 1) if k - n / 2 > -1), None)
    if first_classical is not None:
        for s in cfg.s_list:
            for sigma in cfg.sigma_list:
                if sigma < s:
                    v = hadamard_expansion(coeffs, s, sigma, cfg.depth, start=first_classical)
                    add(f"expansion_terms_{first_classical}_{cfg.depth}", first_classical, s, sigma, v,
                        None, 0.0, True)
    spectral = cfg.model == "sphere" and not cfg.magnetic_alpha and model.m >= 2
    kap = cfg.bump_kappa
    test = lambda y: np.exp(kap * (np.cos(np.linalg.norm(y, axis=-1)) - 1.0))
    zonal = lambda sg: np.exp(kap * (np.cos(sg) - 1))
    spec = build_spectrum(ConeGeometry(n), SphereZeroPotential(model.m), 80) if spectral else None
    errors = []
    for s in cfg.s_list:
        value, _ = hadamard_pairing(coeffs, s, test, cfg.depth)
        if spectral:
            ref = spectral_cos_pairing(spec, s, zonal)
            errors.append(abs(ref - complex(value).real))
            add("pairing_vs_spectral", cfg.depth, s, 0.0, value, ref, abs(ref - complex(value).real), True)
        else:
            add("pairing", cfg.depth, s, 0.0, value, None, 0.0, True)
    summary = {"normalization": coeffs.normalization, "noise": list(coeffs.noise)}
    if spectral and len(errors) >= 2:
        ss = np.array(cfg.s_list, dtype=float)
        ee = np.array(errors)
        order = np.argsort(ss)[::-1]
        monotone = bool(np.all(np.diff(ee[order]) < 0))
        slope = float(np.polyfit(np.log(ss), np.log(np.maximum(ee, 1e-300)), 1)[0])
        predicted = 2 * cfg.depth + 2
        ok = monotone and abs(slope - predicted) <= 0.5
        summary.update({"remainder_slope": slope, "predicted_slope": predicted, "monotone": monotone})
        for rec in rows:
            if rec.values["quantity"] == "pairing_vs_spectral":
                rec.passed = ok
    return rows, summary


_RUNNERS = {
    "specfun-test": _specfun_rows,
    "kernel-eval": _kernel_rows,
    "schur-check": _schur_rows,
    "norm-sweep": _norm_rows,
    "parametrix": _parametrix_rows,
}


def run(cfg: RunConfig, subcommand: str, write: bool = True) -> tuple[int, RunOutcome]:
    """Run one subcommand; returns ``(exit_status, outcome)`` and writes the output files."""
    if subcommand not in _RUNNERS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    start = time.perf_counter()
    rows, extra = _RUNNERS[subcommand](cfg)
    elapsed = time.perf_counter() - start
    failed = sum(not r.passed for r in rows)
    summary = {
        "subcommand": subcommand,
        "rows": len(rows),
        "passed": len(rows) - failed,
        "failed": failed,
        "wall_time_s": elapsed,
        "config": {f.name: getattr(cfg, f.name) for f in fields(RunConfig)},
        **extra,
    }
    outcome = RunOutcome(rows, summary)
    if write:
        out = output_directory(cfg)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{subcommand}.csv").write_text(render_csv(subcommand, rows))
        (out / f"{subcommand}.json").write_text(json.dumps(summary, indent=2, default=_json_default) + "\n")
        if cfg.figures:
            from .plotting import render_figures
            summary["figures"] = [str(p) for p in render_figures(subcommand, rows, summary, cfg.figures)]
            (out / f"{subcommand}.json").write_text(json.dumps(summary, indent=2, default=_json_default) + "\n")
    return (0 if failed == 0 else 1), outcome


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

_FLAGS = {
    "specfun-test": ["samples", "seed"],
    "kernel-eval": ["n", "epsilon", "s", "t", "r", "rprime", "sigma", "cross_section", "spectrum_file",
                    "jmax", "method", "finite"],
    "schur-check": ["n", "epsilon", "s", "cross_section", "spectrum_file", "jmax", "epsilon_list",
                    "h_list", "cal_a_list", "ratio_list", "schur_t_list", "samples", "seed", "refine_tol"],
    "norm-sweep": ["n", "epsilon", "s", "p_list", "t_list", "grid_size", "angular_degree", "cross_section",
                   "spectrum_file", "jmax", "which", "refine", "uniformity_tol"],
    "parametrix": ["n", "model", "metric_file", "magnetic_alpha", "depth", "s_list", "sigma_list",
                   "bump_kappa", "tol"],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conewave", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--figures", help="also render figures into this directory (needs matplotlib)")
        for key in _FLAGS[name]:
            p.add_argument("--" + key.replace("_", "-"), dest=key, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    values = vars(args)
    subcommand = values.pop("subcommand")
    config_file = values.pop("config")
    try:
        cfg = parse_config(config_file, values)
        status, outcome = run(cfg, subcommand)
    except ConfigError as exc:
        print(f"conewave: configuration error: {exc}", file=sys.stderr)
        return 2
    except ConewaveError as exc:
        print(f"conewave: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    s = outcome.summary
    print(f"{subcommand}: {s['passed']}/{s['rows']} rows passed -> {output_directory(cfg)}")
    return status


if __name__ == "__main__":
    sys.exit(main())
