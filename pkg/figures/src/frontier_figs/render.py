"""Render experiment CSV files into figures.

Four kinds are understood, one per documented CSV schema:

* ``tail``: displacement tail estimates; log-scale points with error bars,
  the least-squares slope of log(p/z) on z, and the reference slope -sqrt2.
* ``lambda-location``: median displacement offset against the critical
  t^(1/3) location, with quartile bars.
* ``neveu``: absorbed-count statistic medians and consecutive-y ratio rows,
  with the stabilization reference at ratio one.
* ``feller``: fixed-tube Monte Carlo against the exact series value.

Rendering is deterministic for a fixed input (fixed svg hash salt, no
embedded dates).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "frontier-figs"

import matplotlib.pyplot as plt
import numpy as np

SQRT2 = math.sqrt(2.0)

KINDS = ("tail", "lambda-location", "neveu", "feller")

_SCHEMAS = {
    "tail": ("z", "p_hat", "stderr", "ci_lo", "ci_hi", "shape"),
    "lambda-location": ("t", "median", "q25", "q75", "offset_vs_critical",
                        "censored_fraction", "critical_location"),
    "neveu": ("kind", "y_from", "y_to", "t", "median", "q25", "q75",
              "diagnostic"),
    "feller": ("t", "dt", "replicas", "mc", "stderr", "exact", "zscore"),
}


class SchemaError(ValueError):
    """CSV columns do not match the documented schema for the figure kind."""


@dataclass(frozen=True)
class FigureSpec:
    input_csv: str
    kind: str
    output: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; "
                              f"expected one of {', '.join(KINDS)}")


@dataclass
class RenderInfo:
    """What was drawn; annotations are also embedded in the figure text."""

    output: str
    kind: str
    n_rows: int
    annotations: Dict[str, float] = field(default_factory=dict)


def _read_rows(path: str, kind: str) -> List[Dict[str, str]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = tuple(reader.fieldnames or ())
        expected = _SCHEMAS[kind]
        if header != expected:
            raise SchemaError(
                f"{path}: expected columns {','.join(expected)} for kind "
                f"{kind!r}, found {','.join(header) if header else 'nothing'}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _fit_tail_slope(z: np.ndarray, p: np.ndarray) -> Tuple[float, float]:
    """Least squares of log(p/z) on z; same reduction the estimator suite
    applies, recomputed here from the CSV alone."""
    keep = p > 0
    if keep.sum() < 2:
        raise SchemaError("tail fit needs at least two positive estimates")
    y = np.log(p[keep] / z[keep])
    design = np.vstack([z[keep], np.ones(keep.sum())]).T
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(slope), float(intercept)


def _render_tail(rows, ax) -> Dict[str, float]:
    z = np.array([float(r["z"]) for r in rows])
    p = np.array([float(r["p_hat"]) for r in rows])
    lo = np.array([float(r["ci_lo"]) for r in rows])
    hi = np.array([float(r["ci_hi"]) for r in rows])
    slope, intercept = _fit_tail_slope(z, p)
    zz = np.linspace(z.min(), z.max(), 100)
    ax.errorbar(z, p, yerr=[np.maximum(p - lo, 0), np.maximum(hi - p, 0)],
                fmt="o", capsize=3, label="Monte Carlo", zorder=3)
    ax.plot(zz, zz * np.exp(intercept + slope * zz), "-",
            label=f"fit slope = {slope:.3f}")
    ax.plot(zz, zz * np.exp(intercept + (slope + SQRT2) * zz.mean()
                            - SQRT2 * zz), "--",
            label=f"reference slope = {-SQRT2:.3f}")
    ax.set_yscale("log")
    ax.set_xlabel("z (dimensionless)")
    ax.set_ylabel("P(displacement tail), log scale")
    ax.set_title("Displacement tail against the z e^(-sqrt2 z) shape")
    ax.annotate(f"fit slope = {slope:.3f}", xy=(0.05, 0.08),
                xycoords="axes fraction")
    ax.legend()
    return {"fit_slope": slope, "fit_intercept": intercept,
            "reference_slope": -SQRT2}


def _render_lambda_location(rows, ax) -> Dict[str, float]:
    t = np.array([float(r["t"]) for r in rows])
    med = np.array([float(r["median"]) for r in rows])
    q25 = np.array([float(r["q25"]) for r in rows])
    q75 = np.array([float(r["q75"]) for r in rows])
    crit = np.array([float(r["critical_location"]) for r in rows])
    off = med - crit
    yerr = [np.maximum(med - q25, 0), np.maximum(q75 - med, 0)]
    ax.errorbar(t, off, yerr=yerr, fmt="s", capsize=3,
                label="median offset (quartile bars)")
    ax.axhline(0.0, linestyle="--", color="k", label="critical location")
    ax.set_xlabel("t (time)")
    ax.set_ylabel("median displacement minus a t^(1/3) (space)")
    ax.set_title("Displacement location drift")
    ax.legend()
    return {"max_abs_offset": float(np.max(np.abs(off)))}


def _render_neveu(rows, ax) -> Dict[str, float]:
    stat = [r for r in rows if r["kind"] == "statistic"]
    ratio = [r for r in rows if r["kind"] == "ratio"]
    if stat:
        y = np.array([float(r["y_to"]) for r in stat])
        med = np.array([float(r["median"]) for r in stat])
        q25 = np.array([float(r["q25"]) for r in stat])
        q75 = np.array([float(r["q75"]) for r in stat])
        ax.errorbar(y, med, yerr=[med - q25, q75 - med], fmt="o", capsize=3,
                    label="y e^(-sqrt2 y) K(y, t)")
    if ratio:
        y = np.array([float(r["y_to"]) for r in ratio])
        med = np.array([float(r["median"]) for r in ratio])
        q25 = np.array([float(r["q25"]) for r in ratio])
        q75 = np.array([float(r["q75"]) for r in ratio])
        ax.errorbar(y, med, yerr=[med - q25, q75 - med], fmt="^", capsize=3,
                    label="consecutive-y ratio")
    ax.axhline(1.0, linestyle="--", color="k", label="stabilization")
    ax.set_xlabel("y (space)")
    ax.set_ylabel("statistic (dimensionless)")
    ax.set_title("Absorbed-count stabilization")
    ax.legend()
    return {"n_statistic_rows": float(len(stat)), "n_ratio_rows": float(len(ratio))}


def _render_feller(rows, ax) -> Dict[str, float]:
    t = np.array([float(r["t"]) for r in rows])
    mc = np.array([float(r["mc"]) for r in rows])
    se = np.array([float(r["stderr"]) for r in rows])
    exact = np.array([float(r["exact"]) for r in rows])
    ax.errorbar(t, mc, yerr=3 * se, fmt="o", capsize=3,
                label="Monte Carlo (3 sigma)")
    ax.plot(t, exact, "x", markersize=10, label="exact series")
    ax.set_xlabel("t (time)")
    ax.set_ylabel("probability")
    ax.set_title("Fixed-tube survival: Monte Carlo against the exact series")
    ax.legend()
    zmax = float(np.max(np.abs((mc - exact) / np.where(se > 0, se, 1.0))))
    return {"max_abs_zscore": zmax}


_RENDERERS = {
    "tail": _render_tail,
    "lambda-location": _render_lambda_location,
    "neveu": _render_neveu,
    "feller": _render_feller,
}


def render(spec: FigureSpec) -> RenderInfo:
    """Render the CSV named by the spec; returns what was drawn.

    Raises SchemaError when the file's columns do not match the kind, and
    lets I/O errors propagate as OSError.
    """
    rows = _read_rows(spec.input_csv, spec.kind)
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    try:
        annotations = _RENDERERS[spec.kind](rows, ax)
        fig.tight_layout()
        fig.savefig(spec.output, metadata=_deterministic_metadata(spec.output))
    finally:
        plt.close(fig)
    return RenderInfo(output=spec.output, kind=spec.kind, n_rows=len(rows),
                      annotations=annotations)


def _deterministic_metadata(path: str):
    if path.endswith(".svg"):
        return {"Date": None}
    if path.endswith(".png"):
        return {"Software": None}
    return None
