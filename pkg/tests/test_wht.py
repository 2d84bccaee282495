import numpy as np
import pytest

from stripcs.wht import fwht, fwht_axis, naive_wht


def test_delta_gives_all_ones():
    v = np.zeros(8)
    v[0] = 1.0
    assert np.allclose(fwht(v), np.ones(8))


def test_all_ones_concentrates():
    w = fwht(np.ones(8))
    expect = np.zeros(8)
    expect[0] = 8.0
    assert np.allclose(w, expect)


def test_matches_naive_oracle():
    rng = np.random.default_rng(3)
    v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    assert np.max(np.abs(fwht(v) - naive_wht(v))) < 1e-10


def test_involution_up_to_n():
    rng = np.random.default_rng(4)
    v = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    assert np.max(np.abs(fwht(fwht(v)) - 32 * v)) < 1e-9


def test_linearity():
    rng = np.random.default_rng(5)
    u = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    a, b = 1.3 - 0.2j, -0.4 + 2.1j
    assert np.max(np.abs(fwht(a * u + b * v) - (a * fwht(u) + b * fwht(v)))) < 1e-9


def test_parseval():
    rng = np.random.default_rng(6)
    v = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    w = fwht(v)
    lhs = np.sum(np.abs(w) ** 2)
    rhs = 64 * np.sum(np.abs(v) ** 2)
    assert abs(lhs - rhs) < 1e-9 * rhs


def test_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        fwht(np.ones(12))
    with pytest.raises(ValueError):
        naive_wht(np.ones(6))


def test_batched_axis_transform_matches_rows():
    rng = np.random.default_rng(7)
    block = rng.standard_normal((5, 16)) + 1j * rng.standard_normal((5, 16))
    out = fwht_axis(block.copy())
    for i in range(5):
        assert np.allclose(out[i], fwht(block[i]))
