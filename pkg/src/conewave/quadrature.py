"""Composite Gauss rules for smooth, oscillatory and endpoint-singular integrands.

Every rule here returns plain ``(nodes, weights)`` arrays so callers can
evaluate integrands in one vectorised sweep and reuse the same nodes for
several integrands (for example a whole batch of Legendre degrees).
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1] (cached, read-only)."""
    x, w = np.polynomial.legendre.leggauss(int(order))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=16)
def gauss_laguerre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Laguerre nodes and weights for the weight exp(-u) on [0, inf)."""
    x, w = np.polynomial.laguerre.laggauss(int(order))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(edges, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on consecutive panels ``edges[i]..edges[i+1]``."""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(order)
    lo = edges[:-1, None]
    hi = edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (half * x + 0.5 * (hi + lo)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def refine_edges(edges, max_width) -> np.ndarray:
    """Split panels so that each is at most ``max_width`` wide.

    ``max_width`` is either a number or a callable of the panel's left edge,
    which lets oscillation- or decay-driven limits vary along the axis.
    """
    edges = np.asarray(edges, dtype=float)
    out = [edges[0]]
    for lo, hi in zip(edges[:-1], edges[1:]):
        width = max_width(lo) if callable(max_width) else max_width
        pieces = 1 if width is None or width <= 0 else int(np.ceil((hi - lo) / width - 1e-12))
        pieces = max(pieces, 1)
        out.extend(np.linspace(lo, hi, pieces + 1)[1:])
    return np.asarray(out)


def geometric_edges(length: float, depth: int, ratio: float = 0.5) -> np.ndarray:
    """Panel edges on [0, length] shrinking geometrically toward 0 (0 excluded)."""
    k = np.arange(depth, -1, -1, dtype=float)
    return length * ratio**k


def singular_endpoint_rule(length: float, exponent: complex, order: int = 10,
                           depth: int = 48, max_width=None):
    """Rule for ``int_0^length v**exponent * F(v) dv`` with ``F`` smooth.

    The power ``v**exponent`` is folded into the weights. Panels shrink by
    halves toward ``v = 0``; the innermost piece ``[0, v_min]`` is integrated
    in closed form with ``F`` frozen at ``F(0)``, so the node ``v = 0`` carries
    weight ``v_min**(exponent+1)/(exponent+1)``. The error of that frozen
    piece is of order ``v_min**(Re exponent + 2)``.

    Returns ``(nodes, weights)`` with complex weights when the exponent is.
    """
    a = complex(exponent)
    if a.real <= -1.0:
        raise ValueError("endpoint exponent must have real part > -1")
    edges = geometric_edges(length, depth)
    if max_width is not None:
        edges = refine_edges(edges, max_width)
    v, w = panel_rule(edges, order)
    v_min = edges[0]
    if a.imag == 0.0:
        w = w * v ** a.real
        head = v_min ** (a.real + 1.0) / (a.real + 1.0)
    else:
        w = w * np.exp(a * np.log(v))
        head = np.exp((a + 1.0) * np.log(v_min)) / (a + 1.0)
    nodes = np.concatenate(([0.0], v))
    weights = np.concatenate(([head], w))
    return nodes, weights


def two_sided_singular_rule(length: float, exp_left: complex, exp_right: complex,
                            order: int = 10, depth: int = 48, max_width=None):
    """Rule for ``int_0^L v**a (L-v)**b F(v) dv`` with both endpoint powers folded in."""
    half = 0.5 * length
    vl, wl = singular_endpoint_rule(half, exp_left, order, depth, max_width)
    vr, wr = singular_endpoint_rule(half, exp_right, order, depth, max_width)
    a, b = complex(exp_left), complex(exp_right)
    if b != 0:
        wl = wl * np.exp(b * np.log(length - vl))
    if a != 0:
        wr = wr * np.exp(a * np.log(length - vr))
    nodes = np.concatenate((vl, length - vr[::-1]))
    weights = np.concatenate((wl, wr[::-1]))
    if np.all(np.imag(weights) == 0):
        weights = np.real(weights)
    return nodes, weights


def graded_interval_rule(lo: float, hi: float, order: int = 10, depth: int = 30,
                         grade_lo: bool = True, grade_hi: bool = True,
                         max_width=None):
    """Gauss rule on [lo, hi] with geometric grading toward the chosen ends.

    Used for integrands that are bounded but have non-smooth (kinks, log or
    fractional-power) behaviour at the ends.
    """
    length = hi - lo
    if length <= 0:
        return np.empty(0), np.empty(0)
    if grade_lo and grade_hi:
        g = geometric_edges(0.5 * length, depth)
        edges = np.concatenate(([0.0], g, length - g[::-1][1:], [length]))
    elif grade_lo:
        edges = np.concatenate(([0.0], geometric_edges(length, depth)))
    elif grade_hi:
        edges = np.concatenate(([0.0], length - geometric_edges(length, depth)[::-1]))
    else:
        edges = np.array([0.0, length])
    edges = np.unique(edges)
    if max_width is not None:
        edges = refine_edges(edges, max_width)
    x, w = panel_rule(edges, order)
    return lo + x, w


def tanh_sinh_rule(lo: float, hi: float, level: int = 6, h0: float = 1.0):
    """Double-exponential rule on [lo, hi]; robust to endpoint singularities.

    ``level`` halves the step ``h0`` that many times; abscissae closer to an
    endpoint than the float spacing are dropped.
    """
    h = h0 / 2**level
    kmax = int(np.ceil(3.2 / h))
    t = h * np.arange(-kmax, kmax + 1)
    s = 0.5 * np.pi * np.sinh(t)
    x = np.tanh(s)
    w = 0.5 * np.pi * np.cosh(t) / np.cosh(s) ** 2 * h
    half = 0.5 * (hi - lo)
    # distance to the nearest endpoint computed without cancellation
    dist = half / (np.exp(np.abs(s)) * np.cosh(s))
    keep = (dist > 0) & (w > 1e-300)
    nodes = np.where(x >= 0, hi - dist, lo + dist)[keep]
    return nodes, (half * w)[keep], dist[keep]
