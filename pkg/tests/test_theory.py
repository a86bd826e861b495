import csv
import itertools
import math

import numpy as np
import pytest

from nnsparse import theory
from nnsparse.nnls import active_set_oracle
from nnsparse.theory import (GOLDEN, bound_constants, check_contraction, check_lemma1,
                             check_lemma2, check_lemma3, check_relu_contraction,
                             check_ric_monotone, check_theorem2, near_isometry_matrix,
                             ric_bruteforce, ric_montecarlo)


def ric_oracle(A, s):
    # one eigen-decomposition per support, no batching
    worst = 0.0
    for T in itertools.combinations(range(A.shape[1]), s):
        sub = A[:, list(T)]
        ev = np.linalg.eigvalsh(sub.T @ sub)
        worst = max(worst, ev[-1] - 1.0, 1.0 - ev[0])
    return worst


def sigma_oracle(A):
    ev = np.sort(np.linalg.eigvalsh(A @ A.T))
    return math.sqrt(ev[-1]), math.sqrt(max(ev[0], 0.0))


class TestRic:
    def test_isometry(self):
        A = np.hstack([np.eye(4), np.zeros((4, 0))])
        assert ric_bruteforce(A, 2).delta == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("c", [0.5, 1.0, 1.7])
    def test_scalar(self, c):
        assert ric_bruteforce(c * np.eye(5), 3).delta == pytest.approx(abs(c * c - 1))

    def test_random_vs_oracle(self, rng):
        A = rng.standard_normal((8, 12)) / np.sqrt(8)
        est = ric_bruteforce(A, 2)
        assert est.delta == pytest.approx(ric_oracle(A, 2), rel=1e-12)
        assert est.supports_checked == math.comb(12, 2) and est.mode == "exact_bruteforce"

    def test_small_chunks(self, rng):
        A = rng.standard_normal((6, 10)) / np.sqrt(6)
        assert ric_bruteforce(A, 3, chunk=7).delta == pytest.approx(ric_bruteforce(A, 3).delta)

    def test_montecarlo_is_lower_bound(self, rng):
        A = rng.standard_normal((8, 12)) / np.sqrt(8)
        mc = ric_montecarlo(A, 3, 50, rng)
        assert mc.delta <= ric_bruteforce(A, 3).delta + 1e-15
        assert mc.mode == "monte_carlo_lower_bound"

    def test_refuses_large_enumeration(self):
        with pytest.raises(theory.EnumerationTooLarge):
            ric_bruteforce(np.ones((2, 60)), 30)

    def test_monotone(self, rng):
        rep = check_ric_monotone(rng.standard_normal((6, 9)) / np.sqrt(6), 5)
        assert rep.passed


class TestLemmas:
    def test_lemma1_isometry(self):
        A = np.eye(6)
        rep = check_lemma1(A, 3, trials=500, rng=1)
        assert rep.passed and rep.params["delta"] == pytest.approx(0.0, abs=1e-15)
        parts = {r.name: r for r in rep.results}
        # with delta = 0 the left sides of (b) and (c) vanish
        assert parts["b"].worst_ratio == 0.0 and parts["c"].worst_ratio == 0.0

    def test_lemma1_random(self, rng):
        assert check_lemma1(rng.standard_normal((8, 12)) / np.sqrt(8), 3, 2000, 2).passed

    def test_lemma1_detects_wrong_delta(self, rng):
        A = rng.standard_normal((8, 12)) / np.sqrt(8)
        rep = check_lemma1(A, 3, 2000, 2, delta=0.01)
        assert not rep.passed

    def test_lemma2(self):
        rep = check_lemma2(12, 3, 2000, 5)
        assert rep.passed and rep.results[0].worst_ratio <= 1.0

    def test_relu(self):
        assert check_relu_contraction(10, 2000, 5).passed

    def test_lemma3_random(self, rng):
        A = rng.standard_normal((6, 10)) / np.sqrt(6)
        lo, hi = _window(A, 0.5)
        assert check_lemma3(A, 0.5, (lo + hi) / 2, 3, 2000, 4).passed

    def test_lemma3_zero_stepsize(self, rng):
        A = rng.standard_normal((6, 10)) / np.sqrt(6)
        rep = check_lemma3(A, 0.5, 0.0, 3, 1000, 4)
        assert rep.passed and rep.params["coefficient"] == pytest.approx(
            rep.params["delta"] + rep.params["sigma1"] ** 2)

    def test_lemma3_single_eigenvalue(self):
        A = math.sqrt(2.0) * np.eye(4)
        rep = check_lemma3(A, 0.5, 1.0, 2, 200, 0)
        assert rep.passed
        assert abs(rep.params["q_direct"] - rep.params["q_formula"]) <= 1e-12

    def test_lemma3_refuses_large_stepsize(self, rng):
        A = rng.standard_normal((6, 10)) / np.sqrt(6)
        _, hi = _window(A, 0.5)
        rep = check_lemma3(A, 0.5, hi + 0.1, 3, 10, 0)
        assert not rep.hypothesis_ok and not rep.passed
        assert any(line.startswith("REFUSED") for line in rep.lines())


def _window(A, eps):
    s1, sm = sigma_oracle(A)
    return sm ** 2 + (sm / s1) ** 2 * eps, sm ** 2 + eps


class TestBoundConstants:
    def test_perfect_isometry_alpha_zero(self):
        eps = 0.3
        bc = bound_constants(None, eps, 1 + eps, 1, deltas={1: 0.0, 2: 0.0, 3: 0.0},
                             sigma=(1.0, 1.0))
        assert bc.alpha == pytest.approx(0.0, abs=1e-15)

    def test_gamma_at_upper_endpoint(self):
        s1, sm, eps = 1.3, 0.8, 0.4
        bc = bound_constants(None, eps, sm ** 2 + eps, 1,
                             deltas={1: 0.1, 2: 0.2, 3: 0.3}, sigma=(s1, sm))
        assert bc.gamma == pytest.approx(GOLDEN * s1)

    def test_hand_assembled(self):
        A = near_isometry_matrix(6, 9, 0.02, 3)
        eps, lam, k = 0.5, 1.0, 1
        bc = bound_constants(A, eps, lam, k)
        dk, d2k, d3k = (ric_oracle(A, s) for s in (1, 2, 3))
        s1, sm = sigma_oracle(A)
        core = d3k + s1 ** 2 - lam * s1 ** 2 / (s1 ** 2 + eps)
        assert bc.alpha == pytest.approx(GOLDEN * core, rel=1e-9)
        assert bc.gamma == pytest.approx(GOLDEN * lam * s1 / (sm ** 2 + eps), rel=1e-9)
        f = math.sqrt(2 / (1 - d2k ** 2))
        assert bc.rho == pytest.approx(f * core, rel=1e-9)
        assert bc.tau == pytest.approx(f * lam * s1 / (sm ** 2 + eps)
                                       + math.sqrt(1 + dk) / (1 - d2k), rel=1e-9)
        assert bc.condition_ndrt == pytest.approx(d3k + s1 ** 2 - sm ** 2, rel=1e-9)

    def test_rho_undefined_when_d2k_ge_1(self):
        bc = bound_constants(None, 0.5, 1.0, 1, deltas={1: 0.5, 2: 1.2, 3: 1.5},
                             sigma=(1.0, 0.5))
        assert math.isnan(bc.rho) and math.isnan(bc.tau)
        assert not bc.certifies_ndrtp(0.6)

    def test_certified_constants_contract(self):
        from nnsparse.cli import certified_instances
        for A, lam, bc in certified_instances(4, seed=9):
            assert bc.alpha < 1 and bc.rho < 1


class TestTheorem2:
    def test_exact_projection(self, rng):
        A = near_isometry_matrix(11, 12, 0.01, 0)
        x = np.zeros(12)
        x[[2, 7]] = [1.0, 0.5]
        z = active_set_oracle(A[:, [2, 7]], A @ x).w
        np.testing.assert_allclose(z, [1.0, 0.5], atol=1e-10)

    def test_zero_signal(self):
        A = near_isometry_matrix(11, 12, 0.01, 0)
        np.testing.assert_array_equal(active_set_oracle(A[:, [0, 3]], np.zeros(11)).w, 0)

    def test_random(self):
        rep = check_theorem2(near_isometry_matrix(11, 12, 0.01, 1), 2, 300, 3)
        assert rep.hypothesis_ok and rep.passed

    def test_refuses_when_d2k_ge_1(self, rng):
        rep = check_theorem2(rng.standard_normal((8, 12)) / np.sqrt(8), 2, 10, 0)
        assert not rep.hypothesis_ok


class TestContraction:
    def test_refuses_uncertified(self, rng):
        A = rng.standard_normal((8, 12)) / np.sqrt(8)
        rep = check_contraction(A, 1, 0.5, 1.0, "NDRT", trials=1, rng=0)
        assert not rep.hypothesis_ok

    def test_certified_instance(self):
        from nnsparse.cli import certified_instances
        (A, lam, bc), = certified_instances(1, seed=4)
        for algo in ("NDRT", "NDRTP"):
            rep = check_contraction(A, 1, 0.5, lam, algo, trials=2, rng=1, constants=bc)
            assert rep.hypothesis_ok and rep.passed

    def test_unknown_algorithm(self):
        with pytest.raises(ValueError):
            check_contraction(np.eye(3), 1, 0.5, 1.0, "RHT")

    def test_near_isometry_validation(self):
        with pytest.raises(ValueError):
            near_isometry_matrix(5, 5)


def test_write_reports(tmp_path):
    reps = [check_lemma2(8, 2, 50, 0), check_relu_contraction(5, 50, 0)]
    path = tmp_path / "r.csv"
    theory.write_reports(path, reps)
    rows = list(csv.DictReader(open(path)))
    assert [r["check"] for r in rows] == ["lemma2", "relu_contraction"]
    assert all(r["passed"] == "1" for r in rows)
    assert {"worst_ratio", "min_slack", "seed"} <= set(rows[0])
