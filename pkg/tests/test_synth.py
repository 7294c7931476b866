import numpy as np
import pytest

from prdim.estimator import estimate_dimensionality
from prdim.synth import (
    DEFAULT_GRID,
    PopulationSpec,
    generate,
    generate_trial_pair,
    signal,
    stream,
)


def test_linear_rank_one():
    phi = generate(PopulationSpec("linear", 1), 30, 20, seed=5)
    assert np.linalg.matrix_rank(phi) == 1
    minors = phi[:-1, :-1] * phi[1:, 1:] - phi[:-1, 1:] * phi[1:, :-1]
    assert np.abs(minors).max() <= 1e-9


def test_rff_range():
    for d in (1, 3, 7):
        phi = generate(PopulationSpec("rff", d, input_scale=2.5), 50, 40, seed=d)
        assert phi.min() >= -1 and phi.max() <= 1


def test_determinism():
    spec = PopulationSpec("rff", 3, noise_std=0.2)
    assert np.array_equal(generate(spec, 20, 10, 1), generate(spec, 20, 10, 1))
    assert not np.array_equal(generate(spec, 20, 10, 1), generate(spec, 20, 10, 2))


def test_prefix_stability():
    # counter-based streams: a bigger draw extends a smaller one
    spec = PopulationSpec("linear", 4)
    small = signal(spec, 10, 6, 9)
    big = signal(spec, 25, 6, 9)
    assert np.array_equal(big[:10], small)


def test_generate_is_trial1():
    spec = PopulationSpec("linear", 3, noise_std=0.5)
    assert np.array_equal(generate(spec, 12, 9, 4), generate_trial_pair(spec, 12, 9, 4).trial1)


def test_trial_pair_no_noise_identical():
    tp = generate_trial_pair(PopulationSpec("rff", 2), 15, 10, 0)
    assert np.array_equal(tp.trial1, tp.trial2)


def test_trial_difference_variance():
    sigma = 0.7
    tp = generate_trial_pair(PopulationSpec("linear", 3, noise_std=sigma), 400, 300, 0)
    diff = tp.trial1 - tp.trial2
    assert diff.var() == pytest.approx(2 * sigma**2, rel=0.05)


def test_multiplicative_noise():
    spec = PopulationSpec("linear", 2, noise_std=0.3, noise_mode="multiplicative")
    tp = generate_trial_pair(spec, 50, 40, 0)
    phi = signal(spec, 50, 40, 0)
    ratio = tp.trial1 / phi
    assert ratio.mean() == pytest.approx(1.0, abs=0.03)
    assert ratio.std() == pytest.approx(0.3, rel=0.1)


def test_sphere_latents():
    spec = PopulationSpec("linear", 6, latent_on_sphere=True)
    x = stream(1, 0).standard_normal((5, 6))
    x *= np.sqrt(6) / np.linalg.norm(x, axis=1, keepdims=True)
    w = stream(1, 1).standard_normal((4, 6))
    assert np.allclose(signal(spec, 5, 4, 1), x @ w.T)


def test_spec_validation():
    with pytest.raises(ValueError):
        PopulationSpec("linear", 0)
    with pytest.raises(ValueError):
        PopulationSpec("linear", 2, noise_std=-1)
    with pytest.raises(ValueError):
        PopulationSpec("rff", 2, input_scale=0)
    assert PopulationSpec("rff", 4).ground_truth_dim == 4.0


def test_default_grid_is_logarithmic():
    ratios = np.diff(np.log2(DEFAULT_GRID))
    assert np.allclose(ratios, 1)


def test_linear_noise_free_estimate_near_d():
    phi = generate(PopulationSpec("linear", 5), 1500, 1500, seed=0)
    assert estimate_dimensionality(phi).value == pytest.approx(5, rel=0.04)
