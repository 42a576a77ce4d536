import numpy as np
import pytest

from neurofuzzy.data import compute_metrics, gen_synthetic, split_random
from neurofuzzy.errors import InvalidArgumentError
from neurofuzzy.experiments import (
    compare_scale_factors,
    relative_spread,
    sweep_iterations,
    sweep_mf_counts,
    sweep_train_fraction,
)
from neurofuzzy.hybrid import AnfisTrainConfig, train_anfis
from neurofuzzy.mlp import LmConfig


@pytest.fixture(scope="module")
def ds():
    return gen_synthetic(600, 1)


FAST = AnfisTrainConfig(epochs=3, seed=5)


def numbers(report):
    return [(c.axis, c.value, c.train, c.test) for c in report.cells]


class TestSweepMf:
    def test_rule_counts(self, ds):
        rep = sweep_mf_counts(ds, [4, 6], FAST)
        assert [c.rules for c in rep.cells] == [64, 216]
        assert rep.values == [4, 6]

    def test_single(self, ds):
        assert len(sweep_mf_counts(ds, [2], FAST).cells) == 1

    @pytest.mark.parametrize("counts", [[], [1], [9], [4, 12]])
    def test_out_of_range(self, ds, counts):
        with pytest.raises(InvalidArgumentError):
            sweep_mf_counts(ds, counts, FAST)

    def test_workers_do_not_change_results(self, ds):
        a = sweep_mf_counts(ds, [2, 3, 4], FAST, workers=1)
        b = sweep_mf_counts(ds, [2, 3, 4], FAST, workers=3)
        assert numbers(a) == numbers(b)

    def test_benchmark_four_and_six(self, benchmark):
        rep = sweep_mf_counts(benchmark, [4, 6], AnfisTrainConfig(epochs=100, seed=42))
        assert all(c.ok and c.test.r >= 0.9 for c in rep.cells)


class TestSweepIterations:
    def test_one_run_many_rows(self, ds):
        rep = sweep_iterations(ds, [2, 5, 8], FAST)
        assert rep.values == [2, 5, 8]
        assert all(c.ok for c in rep.cells)
        assert [c.wall_ms for c in rep.cells] == sorted(c.wall_ms for c in rep.cells)

    @pytest.mark.parametrize("c", [1, 4])
    def test_snapshot_equals_fresh_run(self, ds, c):
        rep = sweep_iterations(ds, [c, 6], FAST)
        split = split_random(ds, 0.65, FAST.seed)
        model, _ = train_anfis(split, AnfisTrainConfig(epochs=c, seed=FAST.seed))
        assert rep.cells[0].train == compute_metrics(model.predict(split.train.x), split.train.y)
        assert rep.cells[0].test == compute_metrics(model.predict(split.test.x), split.test.y)

    @pytest.mark.parametrize("cps", [[], [0, 3], [5, 5], [10, 4]])
    def test_checkpoints_validated(self, ds, cps):
        with pytest.raises(InvalidArgumentError):
            sweep_iterations(ds, cps, FAST)


class TestSweepFraction:
    def test_matches_direct_run(self, ds):
        rep = sweep_train_fraction(ds, [0.65], FAST)
        split = split_random(ds, 0.65, FAST.seed)
        model, _ = train_anfis(split, FAST)
        assert rep.cells[0].test == compute_metrics(model.predict(split.test.x), split.test.y)

    def test_independent_seeds(self, ds):
        rep = sweep_train_fraction(ds, [0.7, 0.75, 0.85, 0.95], FAST)
        assert rep.values == [0.7, 0.75, 0.85, 0.95]
        assert rep.seeds == {"split_0": 5, "split_1": 6, "split_2": 7, "split_3": 8}
        r = [c.test.r for c in rep.cells]
        assert rep.notes["r_test_spread"] == pytest.approx(max(r) - min(r))

    def test_invalid(self, ds):
        with pytest.raises(InvalidArgumentError):
            sweep_train_fraction(ds, [0.5, 1.0], FAST)


class TestCompare:
    def test_singletons(self, ds):
        rep = compare_scale_factors(ds, [3], [4], FAST, LmConfig(max_iters=5))
        assert [c.axis for c in rep.cells] == ["anfis_mf", "bnn_width"]
        assert rep.notes["anfis_mf_rmse_spread"] == 0.0

    def test_failing_cell_is_isolated(self, ds):
        lm = LmConfig(max_iters=5)
        rep = compare_scale_factors(ds, [2], [0, 3], FAST, lm)
        bad, good = rep.family("bnn_width")
        assert not bad.ok and "InvalidArgumentError" in bad.error
        assert good.ok
        alone = compare_scale_factors(ds, [2], [3], FAST, lm)
        assert good.test == alone.family("bnn_width")[0].test

    def test_depth_axis(self, ds):
        rep = compare_scale_factors(ds, [2], [1, 3], FAST, LmConfig(max_iters=3), bnn_scale="depth", depth_width=4)
        assert [c.model.network.layer_sizes for c in rep.family("bnn_depth")] == [(3, 4, 1), (3, 4, 4, 4, 1)]

    def test_empty_lists(self, ds):
        with pytest.raises(InvalidArgumentError):
            compare_scale_factors(ds, [], [2], FAST)

    def test_deterministic(self, ds):
        lm = LmConfig(max_iters=5)
        a = compare_scale_factors(ds, [2, 3], [2, 4], FAST, lm)
        b = compare_scale_factors(ds, [2, 3], [2, 4], FAST, lm, workers=2)
        assert numbers(a) == numbers(b)


def test_relative_spread():
    assert relative_spread([1.0, 2.0, 3.0]) == pytest.approx(1.0)
    assert relative_spread([2.0, None, float("nan")]) == 0.0
    assert np.isnan(relative_spread([]))
