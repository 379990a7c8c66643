"""Acceptance for the figure package: the rendered tail figure's annotated
slope agrees with the estimator suite's slope fit to three decimals, and a
synthetic exact-model CSV makes the fitted and reference slopes coincide."""

import csv
import math
import subprocess
import sys

import pytest

from frontier_figs import FigureSpec, render

SQRT2 = math.sqrt(2.0)


def report(ok: bool, label: str, detail: str) -> bool:
    print(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    return ok


def test_a11_tail_figure_slope_matches_estimator(tmp_path):
    # produce a tail CSV through the simulation package's public command
    # line (its only interface this package touches), then compare the
    # figure's annotated slope against the estimator suite's fit
    out_csv = tmp_path / "tail.csv"
    cmd = [sys.executable, "-m", "frontier_lab.cli", "lambda-tail",
           "--t", "30", "--z", "2,3,4,5", "--replicas", "6000",
           "--seed", "7", "--dt", "0.5", "--out", str(out_csv)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr

    info = render(FigureSpec(str(out_csv), "tail", str(tmp_path / "tail.svg")))

    from frontier_lab.estimators import MCEstimate, TailRow, TailTable, tail_slope_fit

    rows = []
    with open(out_csv, newline="") as fh:
        for r in csv.DictReader(fh):
            p = float(r["p_hat"])
            rows.append(TailRow(
                z=float(r["z"]),
                p_hat=MCEstimate(value=p, stderr=float(r["stderr"]), n=6000,
                                 ci95=(float(r["ci_lo"]), float(r["ci_hi"])),
                                 seed=7),
                shape=float(r["shape"]),
            ))
    slope, _, _ = tail_slope_fit(TailTable(t=30.0, rows=tuple(rows)))

    drawn = info.annotations["fit_slope"]
    ok = round(drawn, 3) == round(slope, 3)
    svg_text = (tmp_path / "tail.svg").read_text()
    ok = ok and (f"fit slope = {slope:.3f}" in svg_text)
    assert report(
        ok, "A11 tail figure slope parity",
        f"figure={drawn:.6f} estimator={slope:.6f} (three decimals: "
        f"{drawn:.3f} vs {slope:.3f}); annotation embedded in SVG",
    )


def test_a11_synthetic_exact_model_coincides(tmp_path):
    out_csv = tmp_path / "exact.csv"
    lines = ["z,p_hat,stderr,ci_lo,ci_hi,shape"]
    for z in (2.0, 3.0, 4.0, 5.0):
        p = 0.3 * z * math.exp(-SQRT2 * z)
        lines.append(f"{z},{p},{0.01 * p},{0.99 * p},{1.01 * p},"
                     f"{z * math.exp(-SQRT2 * z)}")
    out_csv.write_text("\n".join(lines) + "\n")
    info = render(FigureSpec(str(out_csv), "tail", str(tmp_path / "exact.svg")))
    slope = info.annotations["fit_slope"]
    ok = abs(slope - (-SQRT2)) <= 1e-3
    svg_text = (tmp_path / "exact.svg").read_text()
    ok = ok and ("fit slope = -1.414" in svg_text)
    assert report(
        ok, "A11 synthetic exact model",
        f"fit={slope:.6f} reference={-SQRT2:.6f} |diff|={abs(slope + SQRT2):.2e} "
        "(tol 1e-3); fitted and reference slopes coincide",
    )
