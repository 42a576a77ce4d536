"""Gaussian membership functions, grid partitions and the ANFIS forward pass.

The model is a first-order Takagi-Sugeno rule base whose rules are the
Cartesian product of every input's membership functions. Rules are
addressed in row-major order over that grid: the first input varies
slowest.

Batch functions take ``x`` of shape ``(n_samples, n_inputs)``; the single
sample variants take a 1-D vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateActivationError, InvalidArgumentError

# Sums of firing strengths below this are treated as "no rule fired".
DEGENERATE_FLOOR = 1e-300

# Width giving a 0.5 crossing between neighbours spaced one unit apart.
_HALF_CROSSING = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class GaussianMf:
    """Bell-shaped membership curve ``exp(-(x - center)^2 / (2 sigma^2))``."""

    center: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.center) and math.isfinite(self.sigma)):
            raise InvalidArgumentError("membership function parameters must be finite")
        if self.sigma <= 0:
            raise InvalidArgumentError(f"sigma must be positive, got {self.sigma}")

    def __call__(self, x):
        return np.exp(-((np.asarray(x, dtype=float) - self.center) ** 2) / (2.0 * self.sigma**2))


def mf_eval(mf: GaussianMf, x: float) -> float:
    """Degree of membership of scalar ``x`` in ``mf``."""
    if not math.isfinite(x):
        raise InvalidArgumentError(f"x must be finite, got {x}")
    return math.exp(-((x - mf.center) ** 2) / (2.0 * mf.sigma**2))


def grid_partition(lo: float, hi: float, k: int) -> list[GaussianMf]:
    """Place ``k`` evenly spaced Gaussians on ``[lo, hi]``.

    Centers include both endpoints and neighbouring curves cross at a
    membership degree of exactly 0.5.
    """
    if k < 2:
        raise InvalidArgumentError(f"need at least 2 membership functions, got {k}")
    if not lo < hi:
        raise InvalidArgumentError(f"empty range [{lo}, {hi}]")
    centers = np.linspace(lo, hi, k)
    sigma = (hi - lo) / (k - 1) * _HALF_CROSSING
    return [GaussianMf(float(c), sigma) for c in centers]


@dataclass(frozen=True)
class InputPartition:
    """Membership functions covering one input axis."""

    name: str
    lo: float
    hi: float
    mfs: tuple[GaussianMf, ...]

    def __post_init__(self):
        object.__setattr__(self, "mfs", tuple(self.mfs))
        if not self.lo < self.hi:
            raise InvalidArgumentError(f"{self.name}: lo must be below hi")
        if not self.mfs:
            raise InvalidArgumentError(f"{self.name}: no membership functions")
        centers = self.centers
        if np.any(np.diff(centers) <= 0):
            raise InvalidArgumentError(f"{self.name}: centers must be strictly increasing")

    @classmethod
    def grid(cls, name, lo, hi, k):
        return cls(name, lo, hi, tuple(grid_partition(lo, hi, k)))

    @property
    def centers(self) -> np.ndarray:
        return np.array([mf.center for mf in self.mfs])

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([mf.sigma for mf in self.mfs])

    @property
    def span(self) -> float:
        return self.hi - self.lo

    def degrees(self, x: np.ndarray) -> np.ndarray:
        """Membership degrees of a 1-D sample vector, shape ``(n, k)``."""
        x = np.asarray(x, dtype=float)[:, None]
        return np.exp(-((x - self.centers) ** 2) / (2.0 * self.sigmas**2))


def _readonly(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class AnfisModel:
    """Grid-partitioned first-order Takagi-Sugeno model.

    Attributes:
        inputs: One partition per input feature.
        consequents: Array of shape ``(n_rules, n_inputs + 1)``; row ``i``
            holds the linear coefficients of rule ``i`` followed by its
            constant term.
    """

    inputs: tuple[InputPartition, ...]
    consequents: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if not self.inputs:
            raise InvalidArgumentError("model needs at least one input")
        theta = _readonly(self.consequents)
        if theta.shape != (self.n_rules, self.n_inputs + 1):
            raise InvalidArgumentError(
                f"consequents must have shape {(self.n_rules, self.n_inputs + 1)}, got {theta.shape}"
            )
        object.__setattr__(self, "consequents", theta)

    @classmethod
    def from_grid(cls, names, lows, highs, mf_counts, consequents=None):
        """Build an evenly partitioned model; consequents default to zero."""
        if isinstance(mf_counts, int):
            mf_counts = [mf_counts] * len(names)
        inputs = tuple(
            InputPartition.grid(n, lo, hi, k) for n, lo, hi, k in zip(names, lows, highs, mf_counts)
        )
        n_rules = int(np.prod([len(p.mfs) for p in inputs]))
        if consequents is None:
            consequents = np.zeros((n_rules, len(inputs) + 1))
        return cls(inputs, consequents)

    @property
    def n_inputs(self) -> int:
        return len(self.inputs)

    @property
    def mf_counts(self) -> tuple[int, ...]:
        return tuple(len(p.mfs) for p in self.inputs)

    @property
    def n_rules(self) -> int:
        return int(np.prod(self.mf_counts))

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.inputs)

    def rule_index(self, flat: int) -> tuple[int, ...]:
        """Per-input membership function indices of rule ``flat``."""
        if not 0 <= flat < self.n_rules:
            raise InvalidArgumentError(f"rule {flat} out of range")
        return tuple(int(i) for i in np.unravel_index(flat, self.mf_counts))

    def flat_rule(self, index: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(index), self.mf_counts))

    def with_consequents(self, consequents) -> AnfisModel:
        return AnfisModel(self.inputs, consequents)

    def with_premises(self, centers, sigmas) -> AnfisModel:
        """Copy of the model with new per-input centers and sigmas.

        Centers are kept in the order given; callers that move centers must
        keep them strictly increasing.
        """
        inputs = tuple(
            InputPartition(p.name, p.lo, p.hi, tuple(GaussianMf(float(c), float(s)) for c, s in zip(cs, ss)))
            for p, cs, ss in zip(self.inputs, centers, sigmas)
        )
        return AnfisModel(inputs, self.consequents)

    # batch evaluation -------------------------------------------------

    def _check_batch(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.n_inputs:
            raise InvalidArgumentError(
                f"expected samples with {self.n_inputs} features, got shape {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise InvalidArgumentError("inputs must be finite")
        return x

    def memberships(self, x) -> list[np.ndarray]:
        x = self._check_batch(x)
        return [p.degrees(x[:, j]) for j, p in enumerate(self.inputs)]

    def strengths(self, x) -> np.ndarray:
        """Raw firing strengths, shape ``(n_samples, n_rules)``."""
        degrees = self.memberships(x)
        w = degrees[0]
        for d in degrees[1:]:
            w = (w[:, :, None] * d[:, None, :]).reshape(len(w), -1)
        return w

    def normalized_strengths(self, x) -> np.ndarray:
        w = self.strengths(x)
        total = w.sum(axis=1)
        bad = np.flatnonzero(~(total >= DEGENERATE_FLOOR))
        if bad.size:
            raise DegenerateActivationError(
                f"no rule fires for sample {int(bad[0])} (strength sum {total[bad[0]]:.3g})"
            )
        return w / total[:, None]

    def rule_outputs(self, x) -> np.ndarray:
        """Linear consequent of every rule at every sample, ``(n_samples, n_rules)``."""
        x = self._check_batch(x)
        return x @ self.consequents[:, :-1].T + self.consequents[:, -1]

    def predict(self, x) -> np.ndarray:
        x = self._check_batch(x)
        wbar = self.normalized_strengths(x)
        return np.einsum("nr,nr->n", wbar, self.rule_outputs(x))


# single-sample API ----------------------------------------------------


def firing_strengths(model: AnfisModel, x) -> np.ndarray:
    """Product of antecedent memberships for every rule at one sample."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n_inputs,):
        raise InvalidArgumentError(f"expected {model.n_inputs} features, got shape {x.shape}")
    return model.strengths(x[None, :])[0]


def normalize_strengths(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise InvalidArgumentError("firing strengths must be finite and non-negative")
    total = w.sum()
    if total < DEGENERATE_FLOOR:
        raise DegenerateActivationError(f"firing strength sum {total:.3g} is degenerate")
    return w / total


def rule_output(consequent_row, x) -> float:
    """Evaluate one rule's linear consequent: coefficients . x + constant."""
    row = np.asarray(consequent_row, dtype=float)
    x = np.asarray(x, dtype=float)
    if row.ndim != 1 or x.ndim != 1 or row.size != x.size + 1:
        raise InvalidArgumentError(
            f"consequent row of length {row.size} does not match {x.size} features"
        )
    return float(row[:-1] @ x + row[-1])


def anfis_predict(model: AnfisModel, x) -> float:
    wbar = normalize_strengths(firing_strengths(model, x))
    x = np.asarray(x, dtype=float)
    f = model.consequents[:, :-1] @ x + model.consequents[:, -1]
    return float(wbar @ f)
