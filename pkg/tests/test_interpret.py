import numpy as np
import pytest

from labeldist import (
    DegenerateBaseline,
    Distribution,
    FeatureMap,
    HeadParams,
    InvalidArgument,
    class_activation_maps,
    global_avg_pool,
    head_forward,
    init_head,
    make_label_space,
    occlusion_sensitivity,
    score_map,
)


def space_k(k):
    return make_label_space(0.0, float(k - 1), 1.0)


class TestClassActivationMaps:
    def test_zero_weights_give_bias_planes(self):
        space = space_k(4)
        params = HeadParams(np.zeros((4, 3)), np.array([1.0, -2.0, 0.5, 3.0]), space)
        maps = FeatureMap(np.random.default_rng(0).standard_normal((3, 5, 5)))
        cams = class_activation_maps(maps, params)
        assert cams.shape == (4, 5, 5)
        for k, b in enumerate(params.bias):
            assert np.all(cams[k] == b)

    def test_one_hot_row_selects_channel(self):
        space = space_k(2)
        W = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        params = HeadParams(W, np.zeros(2), space)
        values = np.random.default_rng(1).standard_normal((3, 4, 4))
        cams = class_activation_maps(FeatureMap(values), params)
        assert np.array_equal(cams[0], values[1])
        assert np.array_equal(cams[1], values[2])

    def test_matches_per_pixel_loop_oracle(self):
        rng = np.random.default_rng(2)
        space = space_k(5)
        params = HeadParams(rng.standard_normal((5, 3)), rng.standard_normal(5), space)
        values = rng.standard_normal((3, 4, 6))
        cams = class_activation_maps(FeatureMap(values), params)
        for k in range(5):
            for i in range(4):
                for j in range(6):
                    acc = params.bias[k]
                    for c in range(3):
                        acc += params.weight[k, c] * values[c, i, j]
                    assert abs(cams[k, i, j] - acc) < 1e-12

    def test_channel_mismatch_rejected(self):
        params = init_head(space_k(4), 3, seed=0)
        with pytest.raises(InvalidArgument):
            class_activation_maps(FeatureMap(np.zeros((5, 4, 4))), params)

    def test_commutes_with_average_pooling(self):
        # pooling the activation maps equals running the head on pooled
        # features; this is the identity that makes the maps meaningful
        rng = np.random.default_rng(3)
        space = space_k(7)
        params = HeadParams(rng.standard_normal((7, 4)), rng.standard_normal(7), space)
        maps = FeatureMap(rng.standard_normal((4, 6, 6)))
        pooled_cams = class_activation_maps(maps, params).mean(axis=(1, 2))
        logits = head_forward(global_avg_pool(maps), params)
        assert np.max(np.abs(pooled_cams - logits)) < 1e-10


class TestScoreMap:
    def test_single_class_identity(self):
        from labeldist import LabelSpace

        space = LabelSpace(0.0, 0.0, 1.0, np.array([0.0]))
        cams = np.random.default_rng(4).standard_normal((1, 3, 3))
        s = score_map(cams, Distribution(space, np.array([1.0])))
        assert np.array_equal(s.values, cams[0])

    def test_uniform_mix_is_mean(self):
        rng = np.random.default_rng(5)
        space = space_k(4)
        cams = rng.standard_normal((4, 3, 5))
        s = score_map(cams, Distribution(space, np.full(4, 0.25)))
        assert np.max(np.abs(s.values - cams.mean(axis=0))) < 1e-12

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(6)
        space = space_k(6)
        p = rng.random(6)
        p /= p.sum()
        cams = rng.standard_normal((6, 4, 4))
        s = score_map(cams, Distribution(space, p))
        for i in range(4):
            for j in range(4):
                acc = 0.0
                for k in range(6):
                    acc += p[k] * cams[k, i, j]
                assert abs(s.values[i, j] - acc) < 1e-12

    def test_linear_in_distribution(self):
        rng = np.random.default_rng(7)
        space = space_k(5)
        cams = rng.standard_normal((5, 3, 3))
        p = rng.random(5)
        p /= p.sum()
        q = rng.random(5)
        q /= q.sum()
        mix = 0.3 * p + 0.7 * q
        a = score_map(cams, Distribution(space, mix)).values
        b = (
            0.3 * score_map(cams, Distribution(space, p)).values
            + 0.7 * score_map(cams, Distribution(space, q)).values
        )
        assert np.max(np.abs(a - b)) < 1e-12

    def test_length_mismatch_rejected(self):
        space = space_k(4)
        with pytest.raises(InvalidArgument):
            score_map(np.zeros((3, 2, 2)), Distribution(space, np.full(4, 0.25)))


def mean_of_masked_cell(batch):
    # toy evaluator reading only cell (0, 0) of each grid
    return batch[:, 0, 0] * 10.0 + 50.0


class TestOcclusionSensitivity:
    def test_grid_geometry(self):
        rng = np.random.default_rng(8)
        inputs = rng.standard_normal((3, 224, 224))
        targets = mean_of_masked_cell(inputs)
        fill = np.zeros((224, 224))
        grid = occlusion_sensitivity(
            mean_of_masked_cell, inputs, targets + 1.0, (32, 32), 32, fill
        )
        assert grid.relative_loss.shape == (7, 7)

    def test_stripe_masks(self):
        rng = np.random.default_rng(9)
        inputs = rng.standard_normal((2, 224, 224))
        targets = mean_of_masked_cell(inputs) + 1.0
        fill = np.zeros((224, 224))
        grid = occlusion_sensitivity(
            mean_of_masked_cell, inputs, targets, (32, 224), 32, fill
        )
        assert grid.relative_loss.shape == (7, 1)

    def test_no_op_fill_gives_zero_matrix(self):
        base = np.random.default_rng(10).standard_normal((8, 8))
        inputs = np.stack([base] * 4)
        targets = mean_of_masked_cell(inputs) + 2.0
        grid = occlusion_sensitivity(
            mean_of_masked_cell, inputs, targets, (2, 2), 2, base
        )
        assert np.all(grid.relative_loss == 0.0)

    def test_locality_of_sensitive_cell(self):
        rng = np.random.default_rng(11)
        inputs = rng.standard_normal((5, 8, 8))
        targets = mean_of_masked_cell(inputs) + 1.0
        fill = np.full((8, 8), 100.0)
        grid = occlusion_sensitivity(
            mean_of_masked_cell, inputs, targets, (2, 2), 2, fill
        )
        # only the block containing (0, 0) can move the predictions
        assert grid.relative_loss[0, 0] != 0.0
        rest = grid.relative_loss.copy()
        rest[0, 0] = 0.0
        assert np.all(rest == 0.0)

    def test_zero_clean_error_rejected(self):
        inputs = np.zeros((3, 4, 4))
        targets = mean_of_masked_cell(inputs)  # exact predictions
        with pytest.raises(DegenerateBaseline):
            occlusion_sensitivity(
                mean_of_masked_cell, inputs, targets, (2, 2), 2, np.ones((4, 4))
            )

    def test_mask_larger_than_grid_rejected(self):
        inputs = np.zeros((2, 4, 4))
        with pytest.raises(InvalidArgument):
            occlusion_sensitivity(
                mean_of_masked_cell, inputs, np.ones(2), (8, 8), 2, np.zeros((4, 4))
            )
