import numpy as np
import pytest

from neurofuzzy.data import gen_synthetic
from neurofuzzy.fuzzy import AnfisModel, GaussianMf, InputPartition


@pytest.fixture(scope="session")
def benchmark():
    """The fixed synthetic benchmark: 6,940 days, seed 42, 1 degC noise."""
    return gen_synthetic(6940, 42, 1.0)


def random_model(rng, mf_counts=(2, 2, 2), lo=-1.0, hi=1.0, jitter=0.3):
    """Grid model with perturbed centers/sigmas and random consequents."""
    inputs = []
    for j, k in enumerate(mf_counts):
        base = np.linspace(lo, hi, k)
        step = (hi - lo) / max(k - 1, 1)
        centers = np.sort(base + rng.uniform(-jitter, jitter, k) * step * 0.4)
        sigmas = step * rng.uniform(0.3, 0.8, k)
        inputs.append(InputPartition(f"x{j}", lo, hi, tuple(GaussianMf(c, s) for c, s in zip(centers, sigmas))))
    n_rules = int(np.prod(mf_counts))
    return AnfisModel(tuple(inputs), rng.normal(size=(n_rules, len(mf_counts) + 1)))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
