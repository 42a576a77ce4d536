"""Deterministic parameter sweeps over ANFIS and BNN training.

Every sweep returns a :class:`SweepReport` with one :class:`Cell` per axis
value. A cell that fails records its error message and leaves the other
cells untouched.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, Metrics, compute_metrics, split_random
from .errors import InvalidArgumentError, NeuroFuzzyError
from .hybrid import AnfisTrainConfig, fit_anfis, train_anfis
from .mlp import LmConfig, fit_bnn

log = logging.getLogger(__name__)

MAX_MF_COUNT = 8
DEFAULT_FRACTION = 0.65


@dataclass
class Cell:
    axis: str
    value: float
    train: Metrics | None = None
    test: Metrics | None = None
    wall_ms: float = 0.0
    rules: int | None = None
    error: str | None = None
    model: object = field(default=None, repr=False)
    test_pred: np.ndarray | None = field(default=None, repr=False)
    test_actual: np.ndarray | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class SweepReport:
    name: str
    axis_label: str
    cells: list[Cell]
    seeds: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    @property
    def values(self):
        return [c.value for c in self.cells]

    def family(self, axis: str) -> list[Cell]:
        return [c for c in self.cells if c.axis == axis]


def relative_spread(values) -> float:
    """``(max - min) / mean`` of the finite entries."""
    v = np.asarray([x for x in values if x is not None and math.isfinite(x)], dtype=float)
    if v.size == 0:
        return math.nan
    return float((v.max() - v.min()) / v.mean())


def _run_cells(jobs, workers):
    # jobs: list of zero-argument callables returning Cell
    if workers <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: job(), jobs))


def _isolated(axis, value, fn):
    def job():
        t0 = time.perf_counter()
        try:
            cell = fn()
        except (NeuroFuzzyError, ArithmeticError, np.linalg.LinAlgError) as exc:
            log.warning("%s=%s failed: %s", axis, value, exc)
            cell = Cell(axis, value, error=f"{type(exc).__name__}: {exc}")
        cell.wall_ms = (time.perf_counter() - t0) * 1e3
        return cell

    return job


def _anfis_cell(axis, value, split, cfg):
    model, _ = train_anfis(split, cfg)
    pred = model.predict(split.test.x)
    return Cell(
        axis,
        value,
        compute_metrics(model.predict(split.train.x), split.train.y),
        compute_metrics(pred, split.test.y),
        rules=model.n_rules,
        model=model,
        test_pred=pred,
        test_actual=split.test.y,
    )


def _bnn_cell(axis, value, split, hidden, cfg):
    reg, _ = fit_bnn(split, hidden, cfg)
    pred = reg.predict(split.test.x)
    return Cell(
        axis,
        value,
        compute_metrics(reg.predict(split.train.x), split.train.y),
        compute_metrics(pred, split.test.y),
        model=reg,
        test_pred=pred,
        test_actual=split.test.y,
    )


def sweep_mf_counts(ds: Dataset, counts, cfg: AnfisTrainConfig, fraction=DEFAULT_FRACTION, workers=1):
    """One ANFIS per membership-function count, all on the same split."""
    counts = [int(k) for k in counts]
    if not counts or any(not 2 <= k <= MAX_MF_COUNT for k in counts):
        raise InvalidArgumentError(f"MF counts must lie in [2, {MAX_MF_COUNT}], got {counts}")
    split = split_random(ds, fraction, cfg.seed)
    jobs = [
        _isolated("mf_count", k, lambda k=k: _anfis_cell("mf_count", k, split, dataclasses.replace(cfg, mf_count=k)))
        for k in counts
    ]
    return SweepReport(
        "sweep_mf",
        "membership functions per input",
        _run_cells(jobs, workers),
        seeds={"split": cfg.seed},
        notes={"fraction": fraction, "epochs": cfg.epochs},
    )


def sweep_iterations(ds: Dataset, checkpoints, cfg: AnfisTrainConfig, fraction=DEFAULT_FRACTION):
    """Snapshot one long run at each checkpoint.

    The cell at ``c`` reports the model a run of ``c`` epochs would have
    returned, i.e. the lowest-training-MSE epoch among the first ``c``.
    """
    checkpoints = [int(c) for c in checkpoints]
    if not checkpoints or checkpoints[0] < 1 or any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise InvalidArgumentError(f"checkpoints must be positive and strictly increasing, got {checkpoints}")
    split = split_random(ds, fraction, cfg.seed)
    run_cfg = dataclasses.replace(cfg, epochs=checkpoints[-1], record_test_metrics=True)
    stamps = []
    t0 = time.perf_counter()
    try:
        _, history = fit_anfis(
            split.train.x,
            split.train.y,
            run_cfg,
            split.test.x,
            split.test.y,
            on_epoch=lambda rec: stamps.append((time.perf_counter() - t0) * 1e3),
        )
    except (NeuroFuzzyError, ArithmeticError, np.linalg.LinAlgError) as exc:
        msg = f"{type(exc).__name__}: {exc}"
        cells = [Cell("epochs", c, error=msg) for c in checkpoints]
    else:
        cells = []
        for c in checkpoints:
            rec = history.best_up_to(c)
            cells.append(Cell("epochs", c, rec.train, rec.test, wall_ms=stamps[c - 1]))
    return SweepReport(
        "sweep_iters",
        "training epochs",
        cells,
        seeds={"split": cfg.seed},
        notes={"fraction": fraction, "mf_count": cfg.mf_count},
    )


def sweep_train_fraction(ds: Dataset, fractions, cfg: AnfisTrainConfig, workers=1):
    """Independent split and training run per training fraction.

    The ``i``-th fraction is split with seed ``cfg.seed + i``.
    """
    fractions = [float(f) for f in fractions]
    if not fractions or any(not 0 < f < 1 for f in fractions):
        raise InvalidArgumentError(f"fractions must lie in (0, 1), got {fractions}")

    def run(i, f):
        return _anfis_cell("train_fraction", f, split_random(ds, f, cfg.seed + i), cfg)

    jobs = [_isolated("train_fraction", f, lambda i=i, f=f: run(i, f)) for i, f in enumerate(fractions)]
    cells = _run_cells(jobs, workers)
    r_test = [c.test.r for c in cells if c.ok]
    return SweepReport(
        "sweep_split",
        "training fraction",
        cells,
        seeds={f"split_{i}": cfg.seed + i for i in range(len(fractions))},
        notes={
            "mf_count": cfg.mf_count,
            "epochs": cfg.epochs,
            "r_test_spread": float(max(r_test) - min(r_test)) if r_test else math.nan,
        },
    )


def compare_scale_factors(
    ds: Dataset,
    anfis_counts,
    bnn_sizes,
    anfis_cfg: AnfisTrainConfig,
    lm_cfg: LmConfig | None = None,
    fraction=DEFAULT_FRACTION,
    bnn_scale="width",
    depth_width=10,
    workers=1,
):
    """Test RMSE of ANFIS over MF counts against BNN over its scale factor.

    ``bnn_scale="width"`` varies the width of both hidden layers;
    ``"depth"`` varies the number of hidden layers of ``depth_width`` units.
    """
    if not anfis_counts or not bnn_sizes:
        raise InvalidArgumentError("both scale-factor lists must be non-empty")
    if bnn_scale not in ("width", "depth"):
        raise InvalidArgumentError(f"bnn_scale must be 'width' or 'depth', got {bnn_scale!r}")
    lm_cfg = lm_cfg or LmConfig(seed=anfis_cfg.seed)
    split = split_random(ds, fraction, anfis_cfg.seed)
    bnn_axis = f"bnn_{bnn_scale}"

    def hidden(s):
        return (s, s) if bnn_scale == "width" else (depth_width,) * s

    jobs = [
        _isolated(
            "anfis_mf",
            k,
            lambda k=k: _anfis_cell("anfis_mf", k, split, dataclasses.replace(anfis_cfg, mf_count=int(k))),
        )
        for k in anfis_counts
    ]
    jobs += [
        _isolated(bnn_axis, s, lambda s=s: _bnn_cell(bnn_axis, s, split, hidden(int(s)), lm_cfg))
        for s in bnn_sizes
    ]
    cells = _run_cells(jobs, workers)
    report = SweepReport(
        "compare",
        "scale factor",
        cells,
        seeds={"split": anfis_cfg.seed, "bnn_init": lm_cfg.seed},
        notes={"fraction": fraction, "bnn_scale": bnn_scale},
    )
    for axis in ("anfis_mf", bnn_axis):
        report.notes[f"{axis}_rmse_spread"] = relative_spread(
            [c.test.rmse for c in report.family(axis) if c.ok]
        )
    return report
