"""Hybrid learning for :class:`~neurofuzzy.fuzzy.AnfisModel`.

Every epoch solves the consequent parameters exactly by linear least
squares with the premises frozen, then takes one gradient-descent step on
the Gaussian centers and sigmas with the consequents frozen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .data import FEATURES, Metrics, SplitDataset, compute_metrics
from .errors import (
    DegenerateActivationError,
    DivergenceError,
    InvalidArgumentError,
    TrainingDataError,
)
from .fuzzy import DEGENERATE_FLOOR, AnfisModel

LSE_RCOND = 1e-10


@dataclass
class AnfisTrainConfig:
    epochs: int = 100
    learning_rate: float = 0.01
    seed: int = 42
    mf_count: int = 4
    sigma_floor: float = 1e-4  # fraction of each input's span
    record_test_metrics: bool = True
    range_margin: float = 0.01
    ridge: float = 1e-6

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidArgumentError(f"epochs must be >= 1, got {self.epochs}")
        if not self.learning_rate > 0:
            raise InvalidArgumentError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.mf_count < 2:
            raise InvalidArgumentError(f"mf_count must be >= 2, got {self.mf_count}")
        if not self.sigma_floor > 0:
            raise InvalidArgumentError("sigma_floor must be positive")
        if self.ridge < 0:
            raise InvalidArgumentError("ridge must be non-negative")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train: Metrics
    test: Metrics | None = None


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int | None = None
    stop_reason: str = ""

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def train_mse(self):
        return np.array([r.train.mse for r in self.records])

    @property
    def train_rmse(self):
        return np.array([r.train.rmse for r in self.records])

    @property
    def test_mse(self):
        return np.array([r.test.mse if r.test else math.nan for r in self.records])

    @property
    def test_rmse(self):
        return np.array([r.test.rmse if r.test else math.nan for r in self.records])

    def best_up_to(self, epoch: int) -> EpochRecord:
        """Record a run stopped after ``epoch`` epochs would have returned."""
        head = self.records[:epoch]
        if not head:
            raise InvalidArgumentError(f"history has no epoch {epoch}")
        i = int(np.argmin([r.train.mse for r in head]))
        return head[i]


@dataclass(frozen=True)
class PremiseGradients:
    """d(SSE)/d(center) and d(SSE)/d(sigma), one array per input."""

    centers: list[np.ndarray]
    sigmas: list[np.ndarray]

    def flat(self) -> np.ndarray:
        return np.concatenate([*self.centers, *self.sigmas])


def _checked_strengths(model: AnfisModel, x) -> np.ndarray:
    w = model.strengths(x)
    total = w.sum(axis=1)
    bad = np.flatnonzero(~(total >= DEGENERATE_FLOOR))
    if bad.size:
        k = int(bad[0])
        raise TrainingDataError(f"no rule fires for training sample {k} ({np.asarray(x)[k].tolist()})", k)
    return w / total[:, None]


def design_matrix(model: AnfisModel, x) -> np.ndarray:
    """Least-squares design ``A`` with ``A @ consequents.ravel() == predict(x)``."""
    x = np.asarray(x, dtype=float)
    wbar = _checked_strengths(model, x)
    xe = np.column_stack([x, np.ones(len(x))])
    return (wbar[:, :, None] * xe[:, None, :]).reshape(len(x), -1)


def lse_consequents(model: AnfisModel, x, y, ridge: float = 0.0) -> np.ndarray:
    """Least-squares consequents for the model's current premises.

    With ``ridge == 0`` this is the minimum-norm solution: singular values
    below ``1e-10`` times the largest are treated as zero, so rank-deficient
    designs (many rules, few samples) are handled without error.

    ``ridge > 0`` adds ``ridge * |theta|^2`` to the objective, which is what
    a recursive least-squares pass started from covariance ``I / ridge``
    converges to. It keeps rules that almost never fire in the training
    data from taking enormous coefficients.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if len(x) == 0 or len(x) != len(y):
        raise InvalidArgumentError("need a non-empty sample set with one target per sample")
    if ridge < 0:
        raise InvalidArgumentError("ridge must be non-negative")
    a = design_matrix(model, x)
    if ridge == 0:
        theta, *_ = np.linalg.lstsq(a, y, rcond=LSE_RCOND)
    else:
        gram = a.T @ a
        gram[np.diag_indices_from(gram)] += ridge
        factor = scipy.linalg.cho_factor(gram)
        theta = scipy.linalg.cho_solve(factor, a.T @ y)
        # one refinement step recovers the accuracy lost to squaring
        theta += scipy.linalg.cho_solve(factor, a.T @ (y - a @ theta) - ridge * theta)
    return theta.reshape(model.n_rules, model.n_inputs + 1)


def premise_gradients(model: AnfisModel, x, y) -> PremiseGradients:
    """Analytic gradient of the sum of squared errors w.r.t. every center and sigma.

    With ``y = sum_i wbar_i f_i`` and Gaussian memberships, the derivative
    of ``y`` with respect to a parameter of membership function ``m`` on
    input ``j`` is ``sum over rules using m of wbar_i (f_i - y)`` times the
    derivative of ``log mu_m(x_j)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if len(x) == 0:
        raise InvalidArgumentError("batch is empty")
    wbar = model.normalized_strengths(x)
    f = model.rule_outputs(x)
    pred = np.einsum("nr,nr->n", wbar, f)
    resid = pred - y
    # d(SSE)/d(log w_i) per sample and rule
    g = (2.0 * resid)[:, None] * wbar * (f - pred[:, None])
    g = g.reshape((len(x),) + model.mf_counts)

    dc, ds = [], []
    for j, part in enumerate(model.inputs):
        others = tuple(a + 1 for a in range(model.n_inputs) if a != j)
        gj = g.sum(axis=others)  # (n, k_j)
        diff = x[:, j][:, None] - part.centers
        s = part.sigmas
        dc.append(np.sum(gj * diff / s**2, axis=0))
        ds.append(np.sum(gj * diff**2 / s**3, axis=0))
    return PremiseGradients(dc, ds)


def initial_model(x, mf_count, names=FEATURES, margin=0.01) -> AnfisModel:
    """Even grid over the per-feature data range widened by ``margin`` of the span."""
    x = np.asarray(x, dtype=float)
    lo, hi = x.min(axis=0), x.max(axis=0)
    span = hi - lo
    for name, s in zip(names, span):
        if not s > 0:
            raise TrainingDataError(f"feature {name} is constant in the training data")
    return AnfisModel.from_grid(names, lo - margin * span, hi + margin * span, mf_count)


def _premise_step(model: AnfisModel, grads: PremiseGradients, n, cfg):
    # Steps are taken on the mean squared error with each input rescaled to
    # unit span, so one learning rate suits every feature.
    centers, sigmas = [], []
    for part, gc, gs in zip(model.inputs, grads.centers, grads.sigmas):
        scale = cfg.learning_rate * part.span**2 / n
        c = part.centers - scale * gc
        s = np.maximum(part.sigmas - scale * gs, cfg.sigma_floor * part.span)
        # keep centers strictly ordered so the grid stays well formed
        gap = 1e-9 * part.span
        for m in range(1, len(c)):
            c[m] = max(c[m], c[m - 1] + gap)
        centers.append(c)
        sigmas.append(s)
    return model.with_premises(centers, sigmas)


def fit_anfis(x, y, cfg: AnfisTrainConfig, x_test=None, y_test=None, names=FEATURES, model=None, on_epoch=None):
    """Hybrid training on arrays. Returns ``(best_model, history)``.

    The returned model is the one from the epoch with the lowest training
    MSE; its consequents are the least-squares solution for its premises.
    ``on_epoch`` is called with each :class:`EpochRecord` as it is made.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if len(x) == 0:
        raise InvalidArgumentError("training set is empty")
    if model is None:
        model = initial_model(x, cfg.mf_count, names, cfg.range_margin)
    track_test = cfg.record_test_metrics and x_test is not None and len(x_test) > 0

    history = TrainHistory()
    best, best_mse = None, math.inf
    for epoch in range(1, cfg.epochs + 1):
        model = model.with_consequents(lse_consequents(model, x, y, cfg.ridge))
        train = compute_metrics(model.predict(x), y)
        if not math.isfinite(train.mse):
            raise DivergenceError(f"non-finite training loss at epoch {epoch}", epoch)
        test = None
        if track_test:
            try:
                test = compute_metrics(model.predict(x_test), y_test)
            except DegenerateActivationError:
                test = Metrics(math.nan, math.nan, math.nan)
        record = EpochRecord(epoch, train, test)
        history.records.append(record)
        if on_epoch is not None:
            on_epoch(record)
        if train.mse < best_mse:
            best, best_mse = model, train.mse
            history.best_epoch = epoch
        if epoch == cfg.epochs:
            break
        grads = premise_gradients(model, x, y)
        if not np.all(np.isfinite(grads.flat())):
            raise DivergenceError(f"non-finite premise gradient at epoch {epoch}", epoch)
        model = _premise_step(model, grads, len(x), cfg)
    history.stop_reason = "max_epochs"
    return best, history


def train_anfis(data: SplitDataset, cfg: AnfisTrainConfig):
    """Train on ``data.train``, tracking ``data.test`` metrics per epoch."""
    return fit_anfis(data.train.x, data.train.y, cfg, data.test.x, data.test.y)
