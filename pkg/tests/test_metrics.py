import numpy as np
import pytest

from labeldist import (
    DegenerateInput,
    EvalReport,
    InvalidArgument,
    epsilon_error,
    evaluate,
    mae,
    pearson,
    rmse,
)


class TestMae:
    def test_perfect(self):
        x = np.array([1.0, 2.0, 3.0])
        assert mae(x, x) == 0.0

    def test_two_sample_arithmetic(self):
        assert mae(np.array([2.0, 4.0]), np.array([1.0, 6.0])) == 1.5

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            p = rng.standard_normal(50)
            t = rng.standard_normal(50)
            acc = 0.0
            for a, b in zip(p, t):
                acc += abs(a - b)
            assert abs(mae(p, t) - acc / 50) < 1e-12

    def test_empty_rejected(self):
        with pytest.raises(DegenerateInput):
            mae(np.array([]), np.array([]))

    def test_length_mismatch_rejected(self):
        with pytest.raises(InvalidArgument):
            mae(np.zeros(3), np.zeros(4))


class TestRmse:
    def test_perfect(self):
        x = np.linspace(0, 1, 5)
        assert rmse(x, x) == 0.0

    def test_three_four_error_pair(self):
        out = rmse(np.array([3.0, 4.0]), np.array([0.0, 0.0]))
        assert out == pytest.approx(np.sqrt(12.5), abs=1e-12)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            p = rng.standard_normal(40)
            t = rng.standard_normal(40)
            acc = 0.0
            for a, b in zip(p, t):
                acc += (a - b) ** 2
            assert abs(rmse(p, t) - np.sqrt(acc / 40)) < 1e-12

    def test_dominates_mae(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            p = rng.standard_normal(30)
            t = rng.standard_normal(30)
            assert rmse(p, t) >= mae(p, t) - 1e-12


class TestEpsilonError:
    def test_perfect_predictions(self):
        y = np.array([10.0, 20.0])
        assert epsilon_error(y, y, np.array([2.0, 3.0])) == 0.0

    def test_one_sigma_miss_everywhere(self):
        # frozen closed form 1 - exp(-1/2)
        truths = np.array([10.0, 20.0, 30.0])
        sigmas = np.array([1.0, 2.0, 4.0])
        preds = truths + sigmas
        out = epsilon_error(preds, truths, sigmas)
        assert out == pytest.approx(0.3934693402873666, abs=1e-4)

    def test_huge_miss_saturates(self):
        out = epsilon_error(np.array([1000.0]), np.array([0.0]), np.array([1.0]))
        assert out == pytest.approx(1.0, abs=1e-12)

    def test_bounded_and_monotone(self):
        rng = np.random.default_rng(4)
        truths = rng.uniform(0, 100, 20)
        sigmas = rng.uniform(0.5, 3.0, 20)
        errors = rng.uniform(0, 5, 20)
        base = epsilon_error(truths + errors, truths, sigmas)
        assert 0.0 <= base <= 1.0
        worse = errors.copy()
        worse[7] += 1.0
        assert epsilon_error(truths + worse, truths, sigmas) >= base

    def test_scalar_sigma_broadcasts(self):
        truths = np.array([5.0, 6.0])
        assert epsilon_error(truths + 2.0, truths, 2.0) == pytest.approx(
            0.3934693402873666, abs=1e-4
        )

    def test_nonpositive_sigma_rejected(self):
        with pytest.raises(InvalidArgument):
            epsilon_error(np.ones(2), np.zeros(2), np.array([1.0, 0.0]))


class TestPearson:
    def test_identical_nonconstant(self):
        x = np.array([1.0, 3.0, 2.0, 5.0])
        assert pearson(x, x) == pytest.approx(1.0, abs=1e-12)

    def test_perfect_anticorrelation(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        assert pearson(-x + 10.0, x) == pytest.approx(-1.0, abs=1e-12)

    def test_matches_covariance_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            p = rng.standard_normal(60)
            t = rng.standard_normal(60)
            pm, tm = p.mean(), t.mean()
            cov = float(np.sum((p - pm) * (t - tm)))
            denom = np.sqrt(np.sum((p - pm) ** 2) * np.sum((t - tm) ** 2))
            assert pearson(p, t) == pytest.approx(cov / denom, abs=1e-10)

    def test_affine_invariance(self):
        rng = np.random.default_rng(6)
        p = rng.standard_normal(40)
        t = rng.standard_normal(40)
        base = pearson(p, t)
        assert pearson(3.0 * p + 7.0, t) == pytest.approx(base, abs=1e-10)
        assert pearson(p, 0.5 * t - 2.0) == pytest.approx(base, abs=1e-10)

    def test_constant_input_rejected(self):
        with pytest.raises(DegenerateInput):
            pearson(np.full(5, 2.0), np.arange(5.0))


class TestEvaluate:
    def test_report_fields_with_sigmas(self):
        rng = np.random.default_rng(7)
        truths = rng.uniform(0, 100, 30)
        preds = truths + rng.standard_normal(30)
        report = evaluate(preds, truths, np.full(30, 2.0))
        assert report.n == 30
        assert report.rmse >= report.mae >= 0.0
        assert -1.0 <= report.pearson <= 1.0
        assert 0.0 <= report.epsilon_error <= 1.0
        d = report.to_dict()
        assert set(d) == {"n", "mae", "rmse", "pearson", "epsilon_error"}

    def test_report_omits_epsilon_without_sigmas(self):
        rng = np.random.default_rng(8)
        truths = rng.uniform(0, 100, 30)
        preds = truths + rng.standard_normal(30)
        report = evaluate(preds, truths, None)
        assert report.epsilon_error is None
        assert "epsilon_error" not in report.to_dict()
