"""Figures for the CLI results (opt-in via ``--figures``; needs matplotlib).

Each subcommand gets one PNG drawn from the same rows as its CSV, which
stays the primary record.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ConfigError

__all__ = ["render_figures"]


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise ConfigError("--figures needs matplotlib (pip install 'artifact[figures]')") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _column(rows, key):
    return np.array([r.values[key] for r in rows], dtype=float)


def _specfun(ax, rows, summary):
    errs = np.maximum(_column(rows, "rel_err"), 1e-18)
    ops = [r.values["op"] for r in rows]
    colours = ["tab:green" if r.passed else "tab:red" for r in rows]
    ax.scatter(np.arange(len(rows)), errs, c=colours, s=14)
    ax.set_yscale("log")
    ax.set_xticks(np.arange(len(rows)))
    ax.set_xticklabels(ops, rotation=90, fontsize=6)
    ax.set_ylabel("relative error vs oracle")


def _kernel(ax, rows, summary):
    for method in sorted({r.values["method"] for r in rows}):
        sub = [r for r in rows if r.values["method"] == method]
        ax.plot(_column(sub, "sigma"), _column(sub, "value_re"), "o-", label=f"{method} (re)", ms=3)
    ax.set_xlabel("sigma")
    ax.set_ylabel("kernel value")
    ax.legend(fontsize=7)


def _schur(ax, rows, summary):
    labels = [f"{r.values['check']}\n{r.values['parameter']}" for r in rows]
    comp = np.abs(_column(rows, "computed"))
    ref = np.abs(_column(rows, "reference"))
    x = np.arange(len(rows))
    ax.bar(x - 0.2, np.maximum(comp, 1e-18), 0.4, label="computed")
    ax.bar(x + 0.2, np.maximum(ref, 1e-18), 0.4, label="reference")
    ax.set_yscale("log")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=90, fontsize=5)
    ax.legend(fontsize=7)


def _norms(ax, rows, summary):
    for p in sorted({r.values["p"] for r in rows}):
        sub = [r for r in rows if r.values["p"] == p]
        t = _column(sub, "t")
        ax.fill_between(t, _column(sub, "lower"), _column(sub, "upper"), alpha=0.25)
        ax.plot(t, _column(sub, "upper"), "o-", ms=3, label=f"p = {p:g}")
    ax.set_xscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("norm bracket")
    ax.legend(fontsize=7)


def _parametrix(ax, rows, summary):
    pair = [r for r in rows if r.values["quantity"] == "pairing_vs_spectral"]
    if pair:
        s = _column(pair, "s")
        err = np.maximum(_column(pair, "err_est"), 1e-18)
        ax.loglog(s, err, "o-", label="expansion error")
        slope = summary.get("predicted_slope")
        if slope:
            ax.loglog(s, err[0] * (s / s[0]) ** slope, "--", label=f"slope {slope}")
        ax.set_xlabel("s")
        ax.set_ylabel("|expansion - spectral sum|")
    else:
        for q in sorted({r.values["quantity"] for r in rows if r.values["quantity"].startswith("alpha")}):
            sub = [r for r in rows if r.values["quantity"] == q]
            ax.plot(_column(sub, "sigma"), _column(sub, "value_re"), "o-", ms=3, label=q)
        ax.set_xlabel("sigma")
    ax.legend(fontsize=7)


_DRAW = {"specfun-test": _specfun, "kernel-eval": _kernel, "schur-check": _schur,
         "norm-sweep": _norms, "parametrix": _parametrix}


def render_figures(subcommand: str, rows, summary: dict, directory) -> list[Path]:
    """Draw the figure for ``subcommand`` into ``directory``; returns the written paths."""
    plt = _pyplot()
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    _DRAW[subcommand](ax, rows, summary)
    ax.set_title(subcommand)
    fig.tight_layout()
    path = out / f"{subcommand}.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]
