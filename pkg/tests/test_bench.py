import csv

import numpy as np
import pytest

from nnsparse import bench
from nnsparse.bench import (ExperimentPlan, TrialOutcome, gen_instance, run_sweep,
                            success_check, summarize, trial_rng, trial_seed)
from nnsparse.recovery import ALGORITHMS


def strip_time(outcomes):
    return [(o.algorithm, o.k, o.trial_index, o.success, o.rel_error, o.iterations,
             o.seed_used) for o in outcomes]


class TestInstances:
    def test_dense_boundary(self):
        inst = gen_instance(5, 8, 8, 0.0, 1)
        assert np.count_nonzero(inst.x_star) == 8 and np.all(inst.x_star >= 0)

    def test_noiseless_exact(self):
        inst = gen_instance(20, 40, 5, 0.0, 2)
        assert np.linalg.norm(inst.y - inst.A @ inst.x_star) == 0.0

    def test_noise_norm(self):
        inst = gen_instance(20, 40, 5, 1e-4, 2)
        assert np.linalg.norm(inst.noise) == pytest.approx(1e-4, rel=1e-12)
        np.testing.assert_allclose(inst.y, inst.A @ inst.x_star + inst.noise, atol=0)

    def test_column_norms(self):
        inst = gen_instance(600, 1000, 1, 0.0, 3)
        mean = np.mean(np.sum(inst.A ** 2, axis=0))
        assert 0.9 <= mean <= 1.1

    def test_support_size_and_values(self):
        inst = gen_instance(10, 30, 7, 0.0, 4)
        assert np.count_nonzero(inst.x_star) == 7

    def test_deterministic_stream(self):
        key = trial_seed(7, 25, 3)
        a, b = gen_instance(10, 20, 3, 1e-3, key), gen_instance(10, 20, 3, 1e-3, trial_rng(key))
        np.testing.assert_array_equal(a.A, b.A)
        np.testing.assert_array_equal(a.y, b.y)
        assert trial_seed(7, 25, 3) != trial_seed(7, 25, 4) != trial_seed(8, 25, 3)

    def test_fisher_yates_uniform_first_slot(self):
        rng = trial_rng(5)
        counts = np.zeros(5)
        for _ in range(5000):
            counts[bench._partial_fisher_yates(rng, 5, 1)[0]] += 1
        assert np.all(np.abs(counts / 5000 - 0.2) < 0.03)

    @pytest.mark.parametrize("k", [0, 21])
    def test_k_range(self, k):
        with pytest.raises(ValueError):
            gen_instance(10, 20, k, 0.0, 0)


class TestSuccess:
    def test_exact(self):
        assert success_check([1.0, 2.0], [1.0, 2.0]) == (True, 0.0)

    def test_zero_estimate(self):
        assert success_check([0.0, 0.0], [1.0, 2.0]) == (False, 1.0)

    def test_small_scaling(self):
        x = np.array([3.0, 0.0, 4.0])
        ok, err = success_check(x * (1 + 5e-5), x)
        assert ok and err == pytest.approx(5e-5)

    def test_zero_truth(self):
        with pytest.raises(ValueError):
            success_check([1.0], [0.0])


class TestPlan:
    def test_validation(self):
        with pytest.raises(ValueError):
            ExperimentPlan(10, 20, [5, 3], 1)
        with pytest.raises(ValueError):
            ExperimentPlan(10, 20, [5], 0)
        with pytest.raises(ValueError):
            ExperimentPlan(10, 20, [25], 1)

    def test_paper_plan(self):
        p = bench.paper_plan()
        assert (p.m, p.n, p.trials_per_k) == (600, 2000, 50)
        assert p.k_grid == list(range(5, 401, 5)) and len(p.k_grid) == 80
        assert [c.algorithm for c in p.algorithms] == list(ALGORITHMS)

    def test_desk_plan(self):
        p = bench.desk_plan(1e-4)
        assert (p.m, p.n, p.trials_per_k, p.success_tol) == (150, 500, 20, 1e-3)
        assert p.k_grid[-1] == 125


class TestSweep:
    def test_easy_regime(self):
        plan = ExperimentPlan(40, 80, [2], 1, seed=1)
        outcomes, summary = run_sweep(plan)
        assert len(outcomes) == 6
        assert all(summary.success_frequency[a, 2] == 1.0 for a in ALGORITHMS)
        assert all(o.success == (o.rel_error <= plan.success_tol) for o in outcomes)

    def test_empty_algorithms(self):
        outcomes, summary = run_sweep(ExperimentPlan(10, 20, [2], 1, algorithms=[]))
        assert outcomes == [] and summary.algorithms == []

    def test_paired_instances(self):
        plan = ExperimentPlan(20, 40, [3], 2, seed=4)
        outcomes, _ = run_sweep(plan)
        for t in range(2):
            assert len({o.seed_used for o in outcomes if o.trial_index == t}) == 1

    def test_deterministic_and_parallel(self):
        plan = ExperimentPlan(20, 40, [2, 6], 2, noise_level=1e-4, seed=9)
        a, _ = run_sweep(plan)
        b, _ = run_sweep(plan)
        c, _ = run_sweep(plan, workers=2)
        assert strip_time(a) == strip_time(b) == strip_time(c)

    def test_progress(self):
        calls = []
        run_sweep(ExperimentPlan(10, 20, [1, 2], 1, algorithms=["NDRTP"]),
                  progress=lambda d, t: calls.append((d, t)))
        assert calls == [(1, 2), (2, 2)]


class TestSummary:
    def outcomes(self):
        pattern = {5: [1, 1, 1, 1], 10: [1, 1, 1, 0], 15: [1, 1, 0, 0], 20: [0, 0, 0, 0]}
        return [TrialOutcome("X", k, t, bool(s), 0.0 if s else 1.0, 0.5 if s else 9.0, 3, 0)
                for k, row in pattern.items() for t, s in enumerate(row)]

    def test_frequencies_and_thresholds(self):
        s = summarize(self.outcomes(), ["X"], [5, 10, 15, 20])
        assert [s.success_frequency["X", k] for k in (5, 10, 15, 20)] == [1, .75, .5, 0]
        assert s.thresholds["X"] == {0.9: 5, 0.8: 5, 0.5: 15}
        assert s.mean_time_success["X", 10] == 0.5 and s.mean_time_success["X", 20] is None
        assert s.frequency_table().shape == (1, 4)

    def test_no_level_reached(self):
        s = summarize(self.outcomes()[-4:], ["X"], [20])
        assert s.thresholds["X"][0.5] == 0

    def test_writers(self, tmp_path):
        outs = self.outcomes()
        s = summarize(outs, ["X"], [5, 10, 15, 20])
        bench.write_outcomes(tmp_path / "o.csv", outs)
        assert bench.read_outcomes(tmp_path / "o.csv") == outs
        assert open(tmp_path / "o.csv").readline().strip() == \
            "algo,k,trial,seed,success,rel_error,iters,wall_time_s"
        bench.write_summary(tmp_path / "s.csv", s)
        rows = list(csv.DictReader(open(tmp_path / "s.csv")))
        assert rows[3] == {"algo": "X", "k": "20", "success_freq": "0.0",
                           "mean_time_success": ""}
        bench.write_thresholds(tmp_path / "t.csv", s)
        assert open(tmp_path / "t.csv").read().splitlines() == [
            "success_frequency,X", "0.9,5", "0.8,5", "0.5,15"]
        bench.write_plot_data(tmp_path, s)
        lines = open(tmp_path / "plot_time_log2.dat").read().split("\n")
        assert lines[0] == "# X" and lines[1] == "5 -1.0"
