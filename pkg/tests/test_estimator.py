import numpy as np
import pytest

from coset_spectrum.estimator import (
    CompressedSeries,
    SensorBlockSeries,
    compress,
    estimate_group,
    estimate_spectrum,
    sample_correlations,
    stack_group,
)
from coset_spectrum.ruler import CosetPattern, DomainError, RulerBank


def series(values, pattern, sensor=0):
    return CompressedSeries(0, sensor, pattern, np.asarray(values, dtype=complex))


def random_blocks(rng, l, n, sensor=0):
    return SensorBlockSeries(0, sensor, rng.standard_normal((l, n)) + 1j * rng.standard_normal((l, n)))


def test_compress_selects_cosets():
    blocks = SensorBlockSeries(0, 0, [[1, 2, 3], [4, 5, 6]])
    out = compress(blocks, CosetPattern(3, (0, 2)))
    np.testing.assert_array_equal(out.samples, [[1, 3], [4, 6]])
    full = compress(blocks, CosetPattern.full(3))
    np.testing.assert_array_equal(full.samples, blocks.samples)
    single = compress(SensorBlockSeries(0, 0, [[1, 2], [3, 4]]), CosetPattern(2, (1,)))
    np.testing.assert_array_equal(single.samples, [[2], [4]])


def test_compress_dimension_mismatch():
    with pytest.raises(DomainError):
        compress(SensorBlockSeries(0, 0, np.zeros((2, 4))), CosetPattern(3, (0,)))


def test_block_series_needs_two_blocks():
    with pytest.raises(DomainError):
        SensorBlockSeries(0, 0, np.zeros((1, 4)))


def test_sample_correlation_examples():
    p1 = CosetPattern(2, (0,))
    assert sample_correlations([series([[1], [1]], p1)], 0)[0, 0] == 1
    p2 = CosetPattern(2, (0, 1))
    # columns are y0 = [1, 0], y1 = [0, 1]; r[0,1] at lag 1 = y0[1] * conj(y1[0]) = 0
    r1 = sample_correlations([series([[1, 0], [0, 1]], p2)], 1)
    assert r1[0, 1] == 0
    assert r1[1, 0] == 1  # y1[1] * conj(y0[0])


def test_sample_correlations_direct_sum():
    rng = np.random.default_rng(3)
    pattern = CosetPattern(6, (0, 2, 5))
    data = [series(rng.standard_normal((7, 3)) + 1j * rng.standard_normal((7, 3)), pattern, s) for s in range(3)]
    for lag in (-1, 0, 1):
        got = sample_correlations(data, lag)
        big_l = 7
        for m in range(3):
            for mp in range(3):
                total = 0
                for s in data:
                    y = s.samples
                    for l in range(max(0, lag), big_l + min(0, lag)):
                        total += y[l, m] * np.conj(y[l - lag, mp])
                assert got[m, mp] == pytest.approx(total / (3 * (big_l - abs(lag))), abs=1e-12)


def test_sensor_averaging_is_idempotent():
    rng = np.random.default_rng(1)
    pattern = CosetPattern(4, (0, 3))
    y = rng.standard_normal((5, 2)) + 0j
    one = sample_correlations([series(y, pattern)], 1)
    two = sample_correlations([series(y, pattern, 0), series(y, pattern, 1)], 1)
    np.testing.assert_allclose(one, two)


def test_sample_correlation_errors():
    pattern = CosetPattern(2, (0,))
    with pytest.raises(DomainError):
        sample_correlations([], 0)
    with pytest.raises(DomainError):
        sample_correlations([series([[1]], pattern)], 1)
    with pytest.raises(DomainError):
        sample_correlations([series([[1], [2]], pattern), series([[1], [2], [3]], pattern)], 0)


def test_lag_zero_is_exactly_hermitian():
    rng = np.random.default_rng(9)
    pattern = CosetPattern(10, (0, 1, 4, 9))
    data = [compress(random_blocks(rng, 300, 10, s), pattern) for s in range(3)]
    r0 = sample_correlations(data, 0)
    assert np.array_equal(r0, r0.conj().T)
    assert np.all(r0.diagonal().real >= 0)
    r_neg = sample_correlations(data, -1)
    r_pos = sample_correlations(data, 1)
    assert np.array_equal(r_neg, r_pos.conj().T)


def test_compressed_estimate_equals_selected_full_estimate():
    rng = np.random.default_rng(4)
    n = 9
    pattern = CosetPattern(n, (1, 2, 6))
    blocks = [random_blocks(rng, 40, n, s) for s in range(2)]
    idx = list(pattern.marks)
    for lag in (0, 1):
        full = sample_correlations([compress(b, CosetPattern.full(n)) for b in blocks], lag)
        part = sample_correlations([compress(b, pattern) for b in blocks], lag)
        np.testing.assert_allclose(part, full[np.ix_(idx, idx)], rtol=0, atol=1e-12)


def test_stack_group_orders():
    lag0 = np.arange(4).reshape(2, 2) + 0j
    lag1 = 10 + np.arange(4).reshape(2, 2) + 0j
    g = stack_group(lag0, lag1)
    np.testing.assert_array_equal(g.r0_zero_lag, [0, 3])
    np.testing.assert_array_equal(g.plus_zero_lag, [lag0[1, 0]])
    np.testing.assert_array_equal(g.minus_lag_one, [lag1[0, 1]])
    m3 = np.array([[0, 0, 0], [10, 0, 0], [20, 21, 0]], dtype=complex)
    g3 = stack_group(m3, np.zeros((3, 3)))
    np.testing.assert_array_equal(g3.plus_zero_lag, [10, 20, 21])
    g1 = stack_group(np.ones((1, 1)), np.ones((1, 1)))
    assert g1.plus_zero_lag.size == 0 and g1.minus_lag_one.size == 0


def test_estimate_group_counts():
    rng = np.random.default_rng(0)
    pattern = CosetPattern(5, (0, 1))
    g = estimate_group([compress(random_blocks(rng, 8, 5, s), pattern) for s in range(3)])
    assert g.sample_counts == (3, 8)
    assert g.stacked().size == 2 + 1 + 1


def test_white_noise_long_run_is_flat():
    rng = np.random.default_rng(8)
    n = 5
    bank = RulerBank.of(n, [[0, 1], [0, 2]])
    sensors = [[SensorBlockSeries(z, 0, (rng.standard_normal((4000, n)) + 1j * rng.standard_normal((4000, n))) / np.sqrt(2))]
               for z in range(2)]
    spectrum, rx, _ = estimate_spectrum(bank, sensors)
    assert abs(rx.values[0] - 1) < 0.03
    assert np.max(np.abs(spectrum.values - 1)) < 0.2
