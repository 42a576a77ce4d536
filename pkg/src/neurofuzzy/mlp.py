"""Bilayered feedforward regressor trained with Levenberg-Marquardt."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .data import FEATURES, TARGET, MinMaxScaler, SplitDataset, compute_metrics
from .errors import DivergenceError, InvalidArgumentError
from .hybrid import EpochRecord, TrainHistory

ACTIVATIONS = ("tanh", "identity")


@dataclass(frozen=True, eq=False)
class MlpModel:
    """Fully connected network with a linear scalar output.

    ``weights[l]`` has shape ``(size[l + 1], size[l])``. Parameters flatten
    layer by layer as ``W_l`` (row-major) followed by ``b_l``.
    """

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    activation: str = "tanh"

    def __post_init__(self):
        ws = tuple(np.array(w, dtype=float) for w in self.weights)
        bs = tuple(np.array(b, dtype=float).ravel() for b in self.biases)
        if not ws or len(ws) != len(bs):
            raise InvalidArgumentError("need one bias vector per weight matrix")
        for i, (w, b) in enumerate(zip(ws, bs)):
            if w.ndim != 2 or w.shape[0] != b.size:
                raise InvalidArgumentError(f"layer {i}: weight {w.shape} does not match bias {b.shape}")
            if i and w.shape[1] != ws[i - 1].shape[0]:
                raise InvalidArgumentError(f"layer {i}: expects {w.shape[1]} inputs, previous layer has {ws[i - 1].shape[0]}")
        if ws[-1].shape[0] != 1:
            raise InvalidArgumentError("output layer must have a single unit")
        if self.activation not in ACTIVATIONS:
            raise InvalidArgumentError(f"unknown activation {self.activation!r}")
        for a in ws + bs:
            a.flags.writeable = False
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def params(self) -> np.ndarray:
        return np.concatenate([p for w, b in zip(self.weights, self.biases) for p in (w.ravel(), b)])

    def with_params(self, theta) -> MlpModel:
        theta = np.asarray(theta, dtype=float)
        if theta.size != self.n_params:
            raise InvalidArgumentError(f"expected {self.n_params} parameters, got {theta.size}")
        ws, bs, k = [], [], 0
        for w, b in zip(self.weights, self.biases):
            ws.append(theta[k : k + w.size].reshape(w.shape))
            k += w.size
            bs.append(theta[k : k + b.size])
            k += b.size
        return MlpModel(tuple(ws), tuple(bs), self.activation)

    def _phi(self, z):
        return np.tanh(z) if self.activation == "tanh" else z

    def _activations(self, x):
        acts = [x]
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            acts.append(self._phi(acts[-1] @ w.T + b))
        out = acts[-1] @ self.weights[-1].T + self.biases[-1]
        return acts, out[:, 0]

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.layer_sizes[0]:
            raise InvalidArgumentError(f"expected {self.layer_sizes[0]} features, got shape {x.shape}")
        return self._activations(x)[1]


def init_mlp(layer_sizes, seed, activation="tanh") -> MlpModel:
    """Glorot-uniform weights, zero biases."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise InvalidArgumentError(f"invalid layer sizes {layer_sizes}")
    rng = np.random.default_rng(seed)
    ws, bs = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        ws.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        bs.append(np.zeros(fan_out))
    return MlpModel(tuple(ws), tuple(bs), activation)


def mlp_forward(model: MlpModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.layer_sizes[0],):
        raise InvalidArgumentError(f"expected {model.layer_sizes[0]} features, got shape {x.shape}")
    return float(model.predict(x[None, :])[0])


def mlp_jacobian(model: MlpModel, x, y):
    """Residuals ``pred - y`` and the Jacobian of predictions w.r.t. parameters.

    Returns ``(e, J)`` with ``J`` of shape ``(n_samples, n_params)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if len(x) == 0 or len(x) != len(y):
        raise InvalidArgumentError("need a non-empty batch with one target per sample")
    acts, pred = model._activations(x)
    if not np.all(np.isfinite(pred)):
        raise DivergenceError("non-finite network output")
    n = len(x)
    blocks = []
    delta = np.ones((n, 1))
    for layer in range(len(model.weights) - 1, -1, -1):
        a_in = acts[layer]
        blocks.append(delta)
        blocks.append((delta[:, :, None] * a_in[:, None, :]).reshape(n, -1))
        if layer:
            back = delta @ model.weights[layer]
            if model.activation == "tanh":
                back = back * (1.0 - a_in**2)
            delta = back
    jac = np.hstack(blocks[::-1])
    return pred - y, jac


@dataclass
class LmConfig:
    lambda0: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 0.1
    max_iters: int = 200
    grad_tol: float = 1e-8
    val_patience: int = 6
    seed: int = 0
    lambda_max: float = 1e12

    def __post_init__(self):
        if not self.lambda0 > 0:
            raise InvalidArgumentError("lambda0 must be positive")
        if not (0 < self.lambda_down < 1 < self.lambda_up):
            raise InvalidArgumentError("need 0 < lambda_down < 1 < lambda_up")
        if self.max_iters < 1 or self.val_patience < 1:
            raise InvalidArgumentError("max_iters and val_patience must be >= 1")
        if self.grad_tol < 0:
            raise InvalidArgumentError("grad_tol must be non-negative")


@dataclass(frozen=True)
class LmStep:
    iteration: int
    lam: float
    train_sse: float
    val_sse: float
    trials: int


@dataclass
class LmHistory(TrainHistory):
    """Per accepted step: metrics in ``records`` and solver state in ``steps``.

    Entry 0 describes the starting point.
    """

    steps: list[LmStep] = field(default_factory=list)

    @property
    def train_sse(self):
        return np.array([s.train_sse for s in self.steps])

    @property
    def val_sse(self):
        return np.array([s.val_sse for s in self.steps])


def _sse(model, x, y):
    r = model.predict(x) - y
    return float(r @ r)


def train_lm(model: MlpModel, train, val, cfg: LmConfig):
    """Levenberg-Marquardt on the sum of squared errors.

    ``train`` and ``val`` are ``(x, y)`` pairs. Steps solve
    ``(J'J + lambda I) delta = -J'e`` and are accepted only if they lower
    the training SSE. Returns the parameters with the best validation SSE
    together with the history.
    """
    x, y = (np.asarray(a, dtype=float) for a in train)
    xv, yv = (np.asarray(a, dtype=float) for a in val)
    y, yv = y.ravel(), yv.ravel()
    if len(x) == 0 or len(xv) == 0:
        raise InvalidArgumentError("train and validation sets must be non-empty")

    theta = model.params()
    e, jac = mlp_jacobian(model, x, y)
    sse = float(e @ e)
    val_sse = _sse(model, xv, yv)
    if not (math.isfinite(sse) and math.isfinite(val_sse)):
        raise DivergenceError("non-finite initial SSE", 0)

    history = LmHistory()
    history.steps.append(LmStep(0, cfg.lambda0, sse, val_sse, 0))
    history.records.append(_record(0, model, x, y, xv, yv))
    best, best_val, stale = model, val_sse, 0
    history.best_epoch = 0
    lam = cfg.lambda0
    eye = np.eye(theta.size)
    history.stop_reason = "max_iters"

    for it in range(1, cfg.max_iters + 1):
        grad = jac.T @ e
        if np.linalg.norm(grad) < cfg.grad_tol:
            history.stop_reason = "grad_tol"
            break
        jtj = jac.T @ jac
        trials = 0
        while True:
            trials += 1
            try:
                delta = scipy.linalg.solve(jtj + lam * eye, -grad, assume_a="pos")
                cand = model.with_params(theta + delta)
                cand_sse = _sse(cand, x, y)
            except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
                cand_sse = math.inf
            else:
                if math.isnan(cand_sse):
                    raise DivergenceError(f"non-finite training SSE at iteration {it}", it)
            if cand_sse < sse:
                lam *= cfg.lambda_down
                break
            lam *= cfg.lambda_up
            if lam > cfg.lambda_max:
                break
        if lam > cfg.lambda_max:
            history.stop_reason = "stalled"
            break

        model, theta = cand, theta + delta
        e, jac = mlp_jacobian(model, x, y)
        sse = float(e @ e)
        val_sse = _sse(model, xv, yv)
        if not math.isfinite(val_sse):
            raise DivergenceError(f"non-finite validation SSE at iteration {it}", it)
        history.steps.append(LmStep(it, lam, sse, val_sse, trials))
        history.records.append(_record(it, model, x, y, xv, yv))
        if val_sse < best_val:
            best, best_val, stale = model, val_sse, 0
            history.best_epoch = it
        else:
            stale += 1
            if stale >= cfg.val_patience:
                history.stop_reason = "val_patience"
                break
    return best, history


def _record(it, model, x, y, xv, yv):
    return EpochRecord(it, compute_metrics(model.predict(x), y), compute_metrics(model.predict(xv), yv))


@dataclass(frozen=True, eq=False)
class BnnRegressor:
    """A trained network plus the min-max scalers it was trained under."""

    network: MlpModel
    x_scaler: MinMaxScaler
    y_scaler: MinMaxScaler
    feature_names: tuple[str, ...] = FEATURES
    target_name: str = TARGET

    def predict(self, x) -> np.ndarray:
        z = self.network.predict(self.x_scaler.apply(x))
        return self.y_scaler.invert(z[:, None])[:, 0]


def fit_bnn(data: SplitDataset, hidden=(10, 10), cfg: LmConfig | None = None, activation="tanh"):
    """Scale to [-1, 1] on the training partition, then train with LM.

    The test partition doubles as the validation set for early stopping.
    """
    cfg = cfg or LmConfig()
    xs = MinMaxScaler.fit(data.train.x, FEATURES)
    ys = MinMaxScaler.fit(data.train.y, (TARGET,))
    net = init_mlp((len(FEATURES), *hidden, 1), cfg.seed, activation)
    scale_y = lambda v: ys.apply(v[:, None])[:, 0]  # noqa: E731
    net, history = train_lm(
        net,
        (xs.apply(data.train.x), scale_y(data.train.y)),
        (xs.apply(data.test.x), scale_y(data.test.y)),
        cfg,
    )
    return BnnRegressor(net, xs, ys), history
