"""Render a :class:`~neurofuzzy.experiments.SweepReport` to CSV, SVG and text.

Figures use the object-oriented matplotlib API (no pyplot state), so
rendering is safe from worker threads. SVG output keeps text as ``<text>``
elements and pins the id salt, which makes files diffable across runs.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from .data import compute_metrics
from .fuzzy import AnfisModel

REPORT_HEADER = (
    "axis",
    "value",
    "train_mse",
    "train_rmse",
    "test_mse",
    "test_rmse",
    "r_train",
    "r_test",
    "wall_ms",
)
FRACTION_TABLE_HEADER = ("Data Selection", "Train MSE", "Train RMSE", "Test MSE", "Test RMSE", "R-Train", "R Test")

SVG_RC = {
    "svg.fonttype": "none",
    "svg.hashsalt": "neurofuzzy",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
}
FORMATS = ("csv", "svg", "txt")


def _num(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _value(v) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def report_rows(report, timing=True):
    for c in report.cells:
        tr, te = c.train, c.test
        yield [
            c.axis,
            _value(c.value),
            _num(tr.mse if tr else None),
            _num(tr.rmse if tr else None),
            _num(te.mse if te else None),
            _num(te.rmse if te else None),
            _num(tr.r if tr else None),
            _num(te.r if te else None),
            f"{c.wall_ms:.1f}" if timing else "0",
        ]


def write_report_csv(report, path, timing=True):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        w.writerows(report_rows(report, timing))


def write_fraction_table_csv(report, path):
    """Training-fraction results, one row per fraction, values to two decimals."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FRACTION_TABLE_HEADER)
        for c in report.cells:
            pct = f"{float(c.value) * 100:g}%"
            if not c.ok:
                w.writerow([pct] + [""] * 6)
                continue
            w.writerow(
                [pct]
                + [f"{v:.2f}" for v in (c.train.mse, c.train.rmse, c.test.mse, c.test.rmse, c.train.r, c.test.r)]
            )


# ---------------------------------------------------------------- figures


def metric_figure(report) -> Figure:
    """RMSE and MSE against the sweep axis, one line per family and split."""
    fig = Figure(figsize=(7.0, 3.2))
    ax_rmse, ax_mse = fig.subplots(1, 2)
    for axis in dict.fromkeys(c.axis for c in report.cells):
        cells = [c for c in report.family(axis) if c.ok]
        if not cells:
            continue
        xs = [float(c.value) for c in cells]
        for split, style in (("train", "o--"), ("test", "s-")):
            m = [getattr(c, split) for c in cells]
            label = f"{axis} {split}"
            ax_rmse.plot(xs, [v.rmse for v in m], style, label=label)
            ax_mse.plot(xs, [v.mse for v in m], style, label=label)
    ax_rmse.set_ylabel("RMSE (degC)")
    ax_mse.set_ylabel("MSE (degC$^2$)")
    for ax in (ax_rmse, ax_mse):
        ax.set_xlabel(report.axis_label)
        ax.legend(fontsize=7)
    fig.suptitle(report.name)
    fig.tight_layout()
    return fig


def scatter_figure(pred, actual, title="") -> Figure:
    """Predicted against observed values with the Pearson R written on the plot."""
    m = compute_metrics(pred, actual)
    fig = Figure(figsize=(3.6, 3.6))
    ax = fig.subplots()
    ax.scatter(actual, pred, s=4, alpha=0.5, linewidths=0)
    lo = float(min(np.min(pred), np.min(actual)))
    hi = float(max(np.max(pred), np.max(actual)))
    ax.plot([lo, hi], [lo, hi], "k-", lw=0.8)
    ax.set_xlabel("observed DPT (degC)")
    ax.set_ylabel("predicted DPT (degC)")
    ax.set_title(title)
    ax.text(
        0.04,
        0.96,
        f"R = {m.r:.8f}\nRMSE = {m.rmse:.4f}",
        transform=ax.transAxes,
        va="top",
        gid="r-annotation",
    )
    fig.tight_layout()
    return fig


def membership_figure(model: AnfisModel, n_points=400) -> Figure:
    """Degree of membership against each input, one panel per input."""
    fig = Figure(figsize=(3.2 * model.n_inputs, 2.8))
    axes = np.atleast_1d(fig.subplots(1, model.n_inputs))
    for ax, part in zip(axes, model.inputs):
        # include the centers so every curve reaches its peak exactly
        grid = np.union1d(np.linspace(part.lo, part.hi, n_points), part.centers)
        for i, mf in enumerate(part.mfs):
            ax.plot(grid, mf(grid), label=f"mf{i + 1}")
        ax.set_xlabel(part.name)
        ax.set_ylim(0, 1.05)
    axes[0].set_ylabel("degree of membership")
    axes[-1].legend(fontsize=7)
    fig.tight_layout()
    return fig


def save_svg(fig: Figure, path):
    with matplotlib.rc_context(SVG_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})


def _slug(v) -> str:
    return _value(v).replace(".", "p")


# ---------------------------------------------------------------- summary


def summary_text(report, timing=True) -> str:
    lines = [f"{report.name}: {report.axis_label}", ""]
    head = f"{'axis':<16}{'value':>8}{'trainRMSE':>11}{'testRMSE':>10}{'R train':>9}{'R test':>9}"
    if timing:
        head += f"{'ms':>10}"
    lines.append(head)
    for c in report.cells:
        row = f"{c.axis:<16}{_value(c.value):>8}"
        if c.ok:
            row += f"{c.train.rmse:>11.4f}{c.test.rmse:>10.4f}{c.train.r:>9.4f}{c.test.r:>9.4f}"
        else:
            row += f"  FAILED {c.error}"
        if timing:
            row += f"{c.wall_ms:>10.1f}"
        lines.append(row)
    lines.append("")
    for k, v in {**report.seeds, **report.notes}.items():
        lines.append(f"{k}: {v}")
    return "\n".join(lines) + "\n"


def render_report(report, out_dir, formats=FORMATS, timing=True, scatter=True) -> list[Path]:
    """Write the report under ``out_dir`` and return the created paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValueError(f"unknown report format(s): {sorted(unknown)}")
    written = []
    if "csv" in formats:
        p = out / f"{report.name}.csv"
        write_report_csv(report, p, timing)
        written.append(p)
        if report.name == "sweep_split":
            p = out / f"{report.name}_table.csv"
            write_fraction_table_csv(report, p)
            written.append(p)
    if "svg" in formats:
        p = out / f"{report.name}_metrics.svg"
        save_svg(metric_figure(report), p)
        written.append(p)
        for c in report.cells:
            tag = f"{c.axis}_{_slug(c.value)}"
            if scatter and c.test_pred is not None:
                p = out / f"{report.name}_scatter_{tag}.svg"
                save_svg(scatter_figure(c.test_pred, c.test_actual, f"{c.axis} = {_value(c.value)} (test)"), p)
                written.append(p)
            if isinstance(c.model, AnfisModel):
                p = out / f"{report.name}_mf_{tag}.svg"
                save_svg(membership_figure(c.model), p)
                written.append(p)
    if "txt" in formats:
        p = out / f"{report.name}.txt"
        p.write_text(summary_text(report, timing), encoding="utf-8")
        written.append(p)
    return written
