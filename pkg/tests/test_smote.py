"""SMOTE interpolation contract: provenance, counts, determinism."""
import numpy as np
import pytest

from contractlens.errors import TooFewSamples
from contractlens.smote import jitter_augment, smote_balance


def test_two_identical_vectors_synthetics_equal_them():
    v = np.array([1.0, 2.0, 3.0])
    result = smote_balance([v.copy(), v.copy()], target_count=6, k=1, seed=0)
    assert len(result.samples) == 6
    for s in result.samples:
        np.testing.assert_array_equal(s, v)


def test_synthetic_lies_on_segment():
    a = np.array([0.0, 0.0])
    b = np.array([1.0, 2.0])
    result = smote_balance([a, b], target_count=5, k=1, seed=3)
    for rec, synth in zip(result.records, result.samples[2:]):
        base = [a, b][rec.i]
        other = [a, b][rec.j]
        np.testing.assert_allclose(synth, base + rec.u * (other - base), atol=1e-15)
        assert 0.0 <= rec.u < 1.0


def test_recompute_from_logged_records():
    rng = np.random.default_rng(9)
    minority = [rng.normal(size=6) for _ in range(8)]
    result = smote_balance(minority, target_count=30, k=3, seed=17)
    assert len(result.samples) == 30
    assert len(result.records) == 22
    mat = np.stack(minority)
    for rec, synth in zip(result.records, result.samples[8:]):
        expected = mat[rec.i] + rec.u * (mat[rec.j] - mat[rec.i])
        np.testing.assert_allclose(synth, expected, atol=1e-15)
        assert rec.j != rec.i


def test_neighbors_are_actually_near():
    # clustered minority: neighbors must come from the same cluster when
    # k is smaller than the cluster size
    cluster_a = [np.array([0.0, 0.0]) + d for d in
                 (np.zeros(2), np.array([0.01, 0.0]), np.array([0.0, 0.01]))]
    cluster_b = [np.array([100.0, 100.0]) + d for d in
                 (np.zeros(2), np.array([0.01, 0.0]), np.array([0.0, 0.01]))]
    minority = cluster_a + cluster_b
    result = smote_balance(minority, target_count=40, k=2, seed=5)
    for rec in result.records:
        assert (rec.i < 3) == (rec.j < 3)  # same cluster


def test_exact_output_count():
    rng = np.random.default_rng(1)
    minority = [rng.normal(size=4) for _ in range(5)]
    for target in (5, 6, 11, 40):
        result = smote_balance(minority, target, k=2, seed=7)
        assert len(result.samples) == target


def test_seed_determinism():
    rng = np.random.default_rng(2)
    minority = [rng.normal(size=4) for _ in range(6)]
    a = smote_balance(minority, 20, k=2, seed=99)
    b = smote_balance(minority, 20, k=2, seed=99)
    assert a.records == b.records
    for x, y in zip(a.samples, b.samples):
        np.testing.assert_array_equal(x, y)
    c = smote_balance(minority, 20, k=2, seed=100)
    assert a.records != c.records


def test_too_few_samples():
    with pytest.raises(TooFewSamples):
        smote_balance([np.zeros(3)], 5, k=1, seed=0)
    with pytest.raises(TooFewSamples):
        smote_balance([np.zeros(3), np.ones(3)], 5, k=2, seed=0)


def test_target_below_size_rejected():
    with pytest.raises(ValueError):
        smote_balance([np.zeros(3), np.ones(3)], 1, k=1, seed=0)


def test_jitter_augment():
    rng = np.random.default_rng(0)
    samples = [np.zeros(5), np.ones(5)]
    out = jitter_augment(samples, 4, sigma=0.01, rng=rng)
    assert len(out) == 4
    np.testing.assert_allclose(out[0], samples[0], atol=0.1)
    assert not np.array_equal(out[0], samples[0])
    assert jitter_augment(samples, 0, 0.01, rng) == []
