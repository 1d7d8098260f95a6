"""Render the simulation CSV artifacts into figures.

Reads the decay and sweep CSV schemas emitted by the main package and writes
static images: a log-scale decay curve against its exponential envelope with
the fitted rate annotated, and log-log scaling scatters with fitted slopes.
Rendering is read-only and deterministic: the same CSV and style produce the
same bytes.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__version__ = "0.1.0"

_METADATA = {"Software": f"burgersplots {__version__}"}


class ColumnError(ValueError):
    """The CSV is missing a required column or has no rows."""


@dataclass
class FigureSpec:
    """What to render: input CSVs, figure kind, output path, axis options."""

    inputs: tuple
    kind: str
    output: str
    options: dict = field(default_factory=dict)


def _read_csv(path, columns):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ColumnError(f"{path}: empty CSV")
        missing = [c for c in columns if c not in reader.fieldnames]
        if missing:
            raise ColumnError(f"{path}: missing columns {missing}")
        rows = [[float(r[c]) for c in columns] for r in reader]
    if not rows:
        raise ColumnError(f"{path}: no data rows")
    return np.array(rows).T


def fit_decay_rate(t, norm):
    """Least-squares decay rate of log(norm) against t."""
    keep = norm > 0
    if keep.sum() < 2:
        raise ColumnError("decay fit needs at least two positive norms")
    return float(-np.polyfit(t[keep], np.log(norm[keep]), 1)[0])


def fit_slope(x, y):
    """Log-log slope through (x, y); needs at least three points."""
    if len(x) < 3:
        raise ColumnError("slope fit needs at least three points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ColumnError("slope fit needs positive values")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _save(fig, path):
    fig.savefig(path, metadata=_METADATA if str(path).endswith(".png") else
                {"Date": None}, dpi=110)
    plt.close(fig)


def plot_decay(csv_path, out_path):
    """Decay curve on a log scale with its exponential envelope.

    Returns the fitted rate that is annotated on the figure.
    """
    t, norm, bound = _read_csv(csv_path, ("t", "norm", "bound"))
    rate = fit_decay_rate(t, norm)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogy(t, norm, lw=1.4, label="norm")
    ax.semilogy(t, bound, lw=1.0, ls="--", color="k",
                label="envelope $e^{-4\\pi^2 t}$")
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.legend(loc="upper right", frameon=False)
    ax.text(0.02, 0.06, f"fitted rate = {rate:.3f}", transform=ax.transAxes)
    ax.set_title("backward-equation decay")
    fig.tight_layout()
    _save(fig, out_path)
    return rate


def plot_scaling(csv_path, out_path, reference=None):
    """Log-log scaling scatter with the fitted slope annotated.

    `reference` optionally draws a power-law guide line with that exponent.
    Returns the fitted slope.
    """
    x, y = _read_csv(csv_path, ("param", "value"))
    slope = fit_slope(x, y)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.loglog(x, y, "o-", lw=1.2)
    if reference is not None:
        guide = y[0] * (x / x[0]) ** reference
        ax.loglog(x, guide, ls=":", color="gray",
                  label=f"slope {reference:+g} guide")
        ax.legend(loc="best", frameon=False)
    ax.set_xlabel("parameter")
    ax.set_ylabel("value")
    ax.text(0.02, 0.06, f"fitted slope = {slope:.3f}", transform=ax.transAxes)
    ax.set_title("scaling sweep")
    fig.tight_layout()
    _save(fig, out_path)
    return slope


def render(spec):
    """Render one FigureSpec; returns the annotated fit value."""
    if spec.kind == "decay":
        return plot_decay(spec.inputs[0], spec.output)
    if spec.kind == "scaling":
        return plot_scaling(spec.inputs[0], spec.output,
                            reference=spec.options.get("reference"))
    raise ValueError(f"unknown figure kind {spec.kind!r}")


def main(argv=None):
    p = argparse.ArgumentParser(prog="burgersplots", description=__doc__)
    p.add_argument("kind", choices=("decay", "scaling"))
    p.add_argument("csv")
    p.add_argument("out")
    p.add_argument("--reference", type=float, default=None,
                   help="guide-line exponent for scaling plots")
    args = p.parse_args(argv)
    try:
        value = render(FigureSpec(inputs=(args.csv,), kind=args.kind,
                                  output=args.out,
                                  options={"reference": args.reference}))
    except (ColumnError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"{args.out}: annotated {value:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
