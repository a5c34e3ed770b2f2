import numpy as np
import pytest

from kplearn.datasets import (CorruptionSpec, ToyConfig, ToyGenerator,
                              bspline4, bspline4_centered, center_outputs,
                              corrupt, generate_toy, kfold_cv,
                              standardize_channels, train_test_split)
from kplearn.functions import PartialSample, SampledFunction, snr


# ---------------------------------------------------------------------------
# spline bump


def test_bspline_support():
    t = np.array([-0.5, 0.0, 4.0, 4.5])
    vals = bspline4(t)
    assert vals[0] == 0.0 and vals[3] == 0.0
    assert vals[1] == 0.0 and vals[2] == pytest.approx(0.0, abs=1e-12)


def test_bspline_symmetry_and_peak():
    t = np.linspace(0, 4, 401)
    vals = bspline4(t)
    np.testing.assert_allclose(vals, vals[::-1], atol=1e-12)
    assert bspline4(np.array([2.0]))[0] == pytest.approx(2.0 / 3.0)
    assert vals.argmax() == 200


def test_bspline_partition_values():
    # cardinal cubic splines at integer shifts sum to one
    t = np.linspace(2.0, 3.0, 50)
    total = sum(bspline4(t - k) for k in range(-3, 3))
    np.testing.assert_allclose(total, 1.0, atol=1e-12)


def test_bspline_centered():
    assert bspline4_centered(np.array([0.0]))[0] == pytest.approx(2.0 / 3.0)
    assert bspline4_centered(np.array([-0.51]))[0] == 0.0
    assert bspline4_centered(np.array([0.51]))[0] == 0.0


# ---------------------------------------------------------------------------
# generator


def test_zero_coefficients_zero_output():
    gen = ToyGenerator(ToyConfig())
    sample = gen.sample_from_coefficients(np.zeros((3, 4)))
    for f in sample.outputs:
        np.testing.assert_array_equal(f.values, 0.0)
    for x in sample.inputs:
        np.testing.assert_array_equal(np.asarray(x), 0.0)


def test_basis_coefficient_reads_gp_path():
    gen = ToyGenerator(ToyConfig())
    e1 = np.zeros((1, 4))
    e1[0, 0] = 1.0
    sample = gen.sample_from_coefficients(e1)
    np.testing.assert_array_equal(sample.outputs[0].values, gen.gp_paths[:, 0])
    np.testing.assert_allclose(np.asarray(sample.inputs[0]),
                               bspline4_centered(gen.input_grid - 1.0),
                               atol=1e-12)


def test_generator_deterministic():
    a = generate_toy(ToyConfig(gp_seed=3, sample_seed=5), 6)
    b = generate_toy(ToyConfig(gp_seed=3, sample_seed=5), 6)
    for fa, fb in zip(a.outputs, b.outputs):
        np.testing.assert_array_equal(fa.values, fb.values)
    for xa, xb in zip(a.inputs, b.inputs):
        np.testing.assert_array_equal(np.asarray(xa), np.asarray(xb))


def test_generator_seed_override():
    gen = ToyGenerator(ToyConfig(sample_seed=5))
    base = gen.generate(4)
    override = gen.generate(4, seed=11)
    same = gen.generate(4, seed=5)
    assert not np.array_equal(base.outputs[0].values,
                              override.outputs[0].values)
    np.testing.assert_array_equal(base.outputs[0].values,
                                  same.outputs[0].values)


def test_generator_shapes():
    config = ToyConfig(input_grid=150, output_grid=80)
    sample = generate_toy(config, 3)
    assert len(sample) == 3
    assert np.asarray(sample.inputs[0]).shape == (150,)
    assert len(sample.outputs[0]) == 80
    assert sample.outputs[0].locations[0] == 0.0
    assert sample.outputs[0].locations[-1] == 1.0


def test_config_validation():
    with pytest.raises(ValueError):
        ToyConfig(lengthscales=(0.1, 0.2))
    with pytest.raises(ValueError):
        ToyConfig(lengthscales=(0.1, -0.2, 0.1, 0.2))
    with pytest.raises(ValueError):
        ToyConfig(sigma_x=-1.0)
    with pytest.raises(ValueError):
        ToyGenerator(ToyConfig()).generate(0)


# ---------------------------------------------------------------------------
# corruptions


def base_sample(n=6, m=50, seed=0):
    rng = np.random.default_rng(seed)
    locs = np.linspace(0, 1, m)
    outputs = [SampledFunction(locs, rng.standard_normal(m))
               for _ in range(n)]
    return PartialSample([rng.standard_normal(3) for _ in range(n)], outputs)


def test_zero_level_corruptions_are_identity():
    sample = base_sample()
    for spec in (CorruptionSpec("local_outliers", fraction=0.0),
                 CorruptionSpec("missing", fraction=0.0),
                 CorruptionSpec("local_noise", sigma=0.0)):
        out = corrupt(sample, spec)
        for f, g in zip(sample.outputs, out.outputs):
            np.testing.assert_array_equal(f.values, g.values)
            np.testing.assert_array_equal(f.locations, g.locations)


def test_local_outliers_counts_and_range():
    sample = base_sample(m=40)
    out = corrupt(sample, CorruptionSpec("local_outliers", fraction=0.25,
                                         seed=1))
    for f, g in zip(sample.outputs, out.outputs):
        changed = np.sum(f.values != g.values)
        assert changed <= round(0.25 * 40)
        assert changed >= 1
        assert g.values.min() >= f.values.min() - 1e-12
        assert g.values.max() <= f.values.max() + 1e-12
        np.testing.assert_array_equal(f.locations, g.locations)
    for x, z in zip(sample.inputs, out.inputs):
        np.testing.assert_array_equal(np.asarray(x), np.asarray(z))


def test_label_noise_replaces_whole_functions():
    gen = ToyGenerator(ToyConfig())
    sample = gen.generate(10)
    out = corrupt(sample, CorruptionSpec("label_noise", fraction=0.3, seed=2),
                  generator=gen)
    replaced = sum(
        not np.array_equal(f.values, g.values)
        for f, g in zip(sample.outputs, out.outputs))
    assert replaced == 3
    for x, z in zip(sample.inputs, out.inputs):
        np.testing.assert_array_equal(np.asarray(x), np.asarray(z))


def test_label_noise_needs_generator():
    with pytest.raises(ValueError):
        corrupt(base_sample(), CorruptionSpec("label_noise", fraction=0.2))


def test_missing_drops_half():
    sample = base_sample(m=200)
    out = corrupt(sample, CorruptionSpec("missing", fraction=0.5, seed=3))
    for f, g in zip(sample.outputs, out.outputs):
        assert len(g) == 100
        assert np.all(np.diff(g.locations) > 0)
        assert set(g.locations).issubset(set(f.locations))


def test_missing_keeps_at_least_one():
    sample = base_sample(m=5)
    with pytest.warns(UserWarning):
        out = corrupt(sample, CorruptionSpec("missing", fraction=1.0))
    for g in out.outputs:
        assert len(g) == 1


def test_local_noise_snr():
    rng = np.random.default_rng(4)
    locs = np.linspace(0, 1, 400)
    outputs = [SampledFunction(locs, 3.0 * rng.standard_normal(400))
               for _ in range(20)]
    sample = PartialSample([rng.standard_normal(2) for _ in range(20)],
                           outputs)
    sigma = 0.5
    out = corrupt(sample, CorruptionSpec("local_noise", sigma=sigma, seed=5))
    for f, g in zip(sample.outputs, out.outputs):
        assert not np.array_equal(f.values, g.values)
    # the observed perturbation has the configured scale
    diffs = np.concatenate([g.values - f.values
                            for f, g in zip(sample.outputs, out.outputs)])
    assert diffs.std() == pytest.approx(sigma, rel=0.1)
    # snr is the mean absolute signal level over sigma; for centered
    # Gaussian values of scale 3 the level is 3 sqrt(2/pi)
    assert snr(sample, sigma) == pytest.approx(
        3.0 * np.sqrt(2.0 / np.pi) / sigma, rel=0.1)


def test_corruption_spec_validation():
    with pytest.raises(ValueError):
        CorruptionSpec("amplify", fraction=0.1)
    with pytest.raises(ValueError):
        CorruptionSpec("missing")
    with pytest.raises(ValueError):
        CorruptionSpec("missing", fraction=1.5)
    with pytest.raises(ValueError):
        CorruptionSpec("local_noise", sigma=-0.1)


def test_corruption_deterministic_in_seed():
    sample = base_sample()
    a = corrupt(sample, CorruptionSpec("local_outliers", fraction=0.2, seed=9))
    b = corrupt(sample, CorruptionSpec("local_outliers", fraction=0.2, seed=9))
    for fa, fb in zip(a.outputs, b.outputs):
        np.testing.assert_array_equal(fa.values, fb.values)


# ---------------------------------------------------------------------------
# preprocessing


def test_center_identical_outputs():
    locs = np.linspace(0, 1, 30)
    f = SampledFunction(locs, np.sin(2 * np.pi * locs) + 2.0)
    sample = PartialSample([np.zeros(2)] * 3, [f, f, f])
    centered, mean = center_outputs(sample)
    for g in centered.outputs:
        np.testing.assert_allclose(g.values, 0.0, atol=1e-12)
    np.testing.assert_allclose(mean.values, f.values, atol=1e-12)


def test_center_round_trip():
    sample = base_sample()
    centered, mean = center_outputs(sample)
    for f, g in zip(sample.outputs, centered.outputs):
        restored = g.values + np.interp(g.locations, mean.locations,
                                        mean.values)
        np.testing.assert_allclose(restored, f.values, atol=1e-12)


def test_center_nearly_idempotent():
    sample = base_sample()
    centered, _ = center_outputs(sample)
    again, mean2 = center_outputs(centered)
    np.testing.assert_allclose(mean2.values, 0.0, atol=1e-12)
    for f, g in zip(centered.outputs, again.outputs):
        np.testing.assert_allclose(f.values, g.values, atol=1e-12)


def test_center_applies_to_test_sample():
    train = base_sample(seed=1)
    test = base_sample(n=2, seed=2)
    _, mean = center_outputs(train)
    centered_test, mean_again = center_outputs(train, apply_to=test)
    np.testing.assert_array_equal(mean.values, mean_again.values)
    for f, g in zip(test.outputs, centered_test.outputs):
        np.testing.assert_allclose(
            g.values, f.values - np.interp(f.locations, mean.locations,
                                           mean.values), atol=1e-12)


def test_standardize_two_point_channel():
    inputs = [np.array([[1.0], [3.0]])]
    out, (avg, std) = standardize_channels(inputs)
    assert avg[0] == pytest.approx(2.0)
    assert std[0] == pytest.approx(np.sqrt(2.0))
    np.testing.assert_allclose(out[0][:, 0],
                               [-1.0 / np.sqrt(2), 1.0 / np.sqrt(2)])


def test_standardize_constant_channel_clamps():
    inputs = [np.full((4, 2), 7.0)]
    with pytest.warns(UserWarning):
        out, (avg, std) = standardize_channels(inputs)
    np.testing.assert_array_equal(out[0], 0.0)
    np.testing.assert_array_equal(std, 1.0)


def test_standardize_statistics_idempotent():
    rng = np.random.default_rng(6)
    inputs = [rng.standard_normal((20, 3)) for _ in range(5)]
    out, _ = standardize_channels(inputs)
    again, (avg, std) = standardize_channels(out)
    np.testing.assert_allclose(avg, 0.0, atol=1e-12)
    np.testing.assert_allclose(std, 1.0, atol=1e-12)
    for a, b in zip(out, again):
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_standardize_applies_training_statistics():
    rng = np.random.default_rng(7)
    train = [rng.standard_normal((10, 2)) + 5.0 for _ in range(3)]
    test = [rng.standard_normal((4, 2))]
    _, (avg, std) = standardize_channels(train)
    out, _ = standardize_channels(train, apply_to=test)
    np.testing.assert_allclose(out[0], (test[0] - avg) / std, atol=1e-12)


# ---------------------------------------------------------------------------
# splitting and cross-validation


def test_split_sizes_and_disjoint():
    sample = base_sample(n=10)
    train, test = train_test_split(sample, 7, seed=1)
    assert len(train) == 7 and len(test) == 3
    train_ids = {id(f) for f in train.outputs}
    test_ids = {id(f) for f in test.outputs}
    assert not train_ids & test_ids
    with pytest.raises(ValueError):
        train_test_split(sample, 10)
    with pytest.raises(ValueError):
        train_test_split(sample, 0)


class MeanModel:
    """Predicts the training mean value everywhere (CV test double)."""

    def __init__(self, sample, offset):
        vals = np.concatenate([f.values for f in sample.outputs])
        self.level = vals.mean() + offset

    def predict_many(self, inputs, targets_list):
        return [SampledFunction(t, np.full(np.asarray(t).size, self.level))
                for t in targets_list]


def test_kfold_single_config():
    sample = base_sample(n=9)
    best, scores = kfold_cv(sample, 3, [0.0],
                            lambda train, c: MeanModel(train, c))
    assert best == 0.0
    assert scores.shape == (1,)
    assert scores[0] > 0


def test_kfold_prefers_better_config():
    sample = base_sample(n=12, seed=3)
    best, scores = kfold_cv(sample, 4, [5.0, 0.0, -5.0],
                            lambda train, c: MeanModel(train, c))
    assert best == 0.0
    assert scores[1] < scores[0] and scores[1] < scores[2]


def test_kfold_tie_resolves_to_stronger():
    # duplicated configs score identically; the later (stronger
    # regularization by convention) entry wins
    sample = base_sample(n=8)
    best, scores = kfold_cv(sample, 2, ["weak", "strong"],
                            lambda train, c: MeanModel(train, 0.0))
    assert best == "strong"
    assert scores[0] == pytest.approx(scores[1])


def test_kfold_edge_warning():
    sample = base_sample(n=9, seed=4)
    with pytest.warns(UserWarning):
        kfold_cv(sample, 3, [0.0, 1.0, 2.0],
                 lambda train, c: MeanModel(train, c))


def test_kfold_validation():
    sample = base_sample(n=6)
    fitter = lambda train, c: MeanModel(train, c)
    with pytest.raises(ValueError):
        kfold_cv(sample, 1, [0.0], fitter)
    with pytest.raises(ValueError):
        kfold_cv(sample, 2, [], fitter)
    with pytest.raises(ValueError):
        kfold_cv(sample, 7, [0.0], fitter)
