import numpy as np
import pytest

from labeldist import (
    HeadGradients,
    check_dex_head,
    check_end_to_end,
    check_joint_head,
    check_mr_head,
    check_ranking_head,
    fd_gradient,
    joint_backward,
    run_suite,
    scaled_deviation,
    suite_worst,
)


class TestFdGradient:
    def test_quadratic_has_linear_gradient(self):
        # f reads the perturbed array by reference; sum(a * x^2) has
        # gradient 2*a*x, exact to second order
        rng = np.random.default_rng(1)
        a = rng.random(7) + 0.5
        x = rng.standard_normal(7)
        g = fd_gradient(lambda: float(np.sum(a * x * x)), x, h=1e-6)
        assert np.max(np.abs(g - 2 * a * x)) < 1e-7

    def test_linear_function_is_exact(self):
        w = np.array([2.0, -3.0, 0.5])
        x = np.zeros(3)
        g = fd_gradient(lambda: float(w @ x), x, h=1e-6)
        assert np.max(np.abs(g - w)) < 1e-9

    def test_matrix_argument(self):
        M = np.array([[1.0, 2.0], [3.0, 4.0]])
        X = np.zeros((2, 2))
        g = fd_gradient(lambda: float(np.sum(X * M)), X, h=1e-6)
        assert np.max(np.abs(g - M)) < 1e-9

    def test_restores_input_exactly(self):
        x = np.array([1.0, 2.0, 3.0])
        before = x.copy()
        fd_gradient(lambda: float(x.sum()), x, h=1e-6)
        assert np.array_equal(x, before)


class TestScaledDeviation:
    def test_identical_arrays_give_zero(self):
        a = np.array([1.0, -2.0, 3.0])
        assert scaled_deviation(a, a.copy()) == 0.0

    def test_scales_by_reference_magnitude(self):
        n = np.array([100.0, 0.0])
        a = np.array([100.0, 1e-5])
        # absolute gap 1e-5 against reference norm 100
        assert scaled_deviation(a, n) == pytest.approx(1e-7)

    def test_small_reference_uses_floor(self):
        n = np.zeros(3)
        a = np.full(3, 1e-9)
        assert scaled_deviation(a, n) == pytest.approx(1e-9 / 1e-8)


class TestJointHeadChecks:
    def test_head_only_many_seeds(self):
        for seed in range(10):
            res = check_joint_head(
                seed=seed, feature_dim=8, grid_points=21, weight=1.0, backbone_dims=None
            )
            assert res.worst < 1e-6, f"seed {seed}: {res.errors}"

    def test_weight_grid(self):
        for weight in (0.0, 0.01, 1.0, 10.0):
            res = check_joint_head(
                seed=3, feature_dim=6, grid_points=11, weight=weight, backbone_dims=None
            )
            assert res.worst < 1e-6

    def test_expectation_only_variant(self):
        res = check_joint_head(
            seed=4,
            feature_dim=6,
            grid_points=11,
            weight=1.0,
            include_distribution_loss=False,
            backbone_dims=None,
        )
        assert res.worst < 1e-6

    def test_with_backbone_chain(self):
        for seed in range(5):
            res = check_joint_head(
                seed=seed, feature_dim=8, grid_points=21, weight=1.0, backbone_dims=(5, 7)
            )
            assert res.worst < 1e-6
            assert any(k.startswith("backbone_w") for k in res.errors)
            assert "backbone_input" in res.errors

    def test_corrupted_backward_is_detected(self):
        # flip the sign of the expectation term inside the analytic gradient;
        # the finite-difference comparison must notice
        def corrupted(features, params, fwd, config):
            good = joint_backward(features, params, fwd, config)
            flipped = good.d_logits - 2.0 * config.expectation_weight * np.sign(
                fwd.y_hat - fwd.y
            ) * fwd.pred.probs * (params.space.labels - fwd.y_hat)
            return HeadGradients(flipped, good.d_weight, good.d_bias, good.d_features)

        res = check_joint_head(
            seed=5,
            feature_dim=6,
            grid_points=11,
            weight=1.0,
            backbone_dims=None,
            backward_fn=corrupted,
        )
        assert res.worst > 1e-3, "sign-flipped gradient slipped through"

    def test_zeroed_backward_is_detected(self):
        def zeroed(features, params, fwd, config):
            good = joint_backward(features, params, fwd, config)
            return HeadGradients(
                np.zeros_like(good.d_logits),
                np.zeros_like(good.d_weight),
                np.zeros_like(good.d_bias),
                np.zeros_like(good.d_features),
            )

        res = check_joint_head(
            seed=6, feature_dim=6, grid_points=11, weight=1.0, backbone_dims=None,
            backward_fn=zeroed,
        )
        assert res.worst > 1e-2


class TestOtherHeadChecks:
    def test_mr_both_norms(self):
        for seed in range(8):
            for norm in ("l1", "l2"):
                res = check_mr_head(seed=seed, feature_dim=8, norm=norm)
                assert res.worst < 1e-6, f"seed {seed} {norm}: {res.errors}"

    def test_dex(self):
        for seed in range(8):
            res = check_dex_head(seed=seed, feature_dim=8, grid_points=21)
            assert res.worst < 1e-6

    def test_ranking(self):
        for seed in range(8):
            res = check_ranking_head(seed=seed, feature_dim=8, grid_points=21)
            assert res.worst < 1e-6


class TestEndToEnd:
    def test_twenty_seeds_through_backbone(self):
        for seed in range(20):
            res = check_end_to_end(seed=seed)
            assert res.worst < 1e-5, f"seed {seed}: worst {res.worst}"


class TestRunSuite:
    def test_small_suite_all_families(self):
        results = run_suite(n_configs=8, base_seed=0)
        worst = suite_worst(results)
        assert set(worst) == {"joint", "mr", "dex", "ranking"}
        for family, value in worst.items():
            assert value < 1e-6, f"{family}: {value}"
        assert all(len(v) == 8 for v in results.values())

    def test_config_cycle_covers_axes(self):
        results = run_suite(n_configs=8, base_seed=0, heads_to_check=("joint",))
        names = [r.name for r in results["joint"]]
        for fragment in ("d=4", "d=16", "K=11", "K=101"):
            assert any(fragment in n for n in names), fragment
