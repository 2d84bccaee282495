import math

import numpy as np
import pytest

from stripcs.ensembles import build_chirp, build_delsarte_goethals
from stripcs.recon import (SparseSignal, crossterm_energy_check,
                           error_bound, measure, quadratic_reconstruct,
                           sample_signal, shift_multiply, synthesize,
                           synthesize_dense)
from stripcs.wht import fwht


# ---------------------------------------------------------------------------
# signals
# ---------------------------------------------------------------------------

def test_sparse_signal_validation():
    with pytest.raises(ValueError):
        SparseSignal(((2, 1.0), (2, 2.0)), 10)  # repeated index
    with pytest.raises(ValueError):
        SparseSignal(((3, 0.0),), 10)  # zero value
    sig = SparseSignal.from_pairs([(5, 1j), (2, 1.0)], 10)
    assert [i for i, _ in sig.entries] == [2, 5]
    assert sig.k == 2


def test_sample_signal_empty_and_deterministic():
    empty = sample_signal(64, 0, seed=1)
    assert empty.k == 0
    a = sample_signal(64, 3, "sphere", seed=9)
    b = sample_signal(64, 3, "sphere", seed=9)
    assert a == b
    with pytest.raises(ValueError):
        sample_signal(4, 5)


def test_sample_signal_support_uniformity():
    # aggregate chi-square over all index pairs at C=64, k=2
    counts = {}
    draws = 10000
    for t in range(draws):
        sig = sample_signal(64, 2, "unimodular", seed=t)
        key = tuple(i for i, _ in sig.entries)
        counts[key] = counts.get(key, 0) + 1
    cells = 64 * 63 // 2
    expect = draws / cells
    chi2 = sum((counts.get(k, 0) - expect) ** 2 / expect
               for k in [(i + 1, j + 1) for i in range(64) for j in range(i + 1, 64)])
    dof = cells - 1
    assert abs(chi2 - dof) < 4 * math.sqrt(2 * dof)


def test_value_models():
    for model in ("sphere", "gaussian", "unimodular"):
        sig = sample_signal(256, 8, model, seed=3)
        vals = sig.values()
        assert vals.shape == (8,)
        if model == "sphere":
            assert abs(np.linalg.norm(vals) - 1.0) < 1e-12
        if model == "unimodular":
            assert np.max(np.abs(np.abs(vals) - 1.0)) < 1e-12


# ---------------------------------------------------------------------------
# measurement
# ---------------------------------------------------------------------------

def test_measure_zero_signal():
    dg = build_delsarte_goethals(3, 0)
    f = measure(dg, SparseSignal((), dg.n_cols))
    assert np.allclose(f.values, 0.0)


def test_measure_single_column_unit_energy():
    dg = build_delsarte_goethals(5, 0)
    sig = SparseSignal.from_pairs([(17, 1.0)], dg.n_cols)
    f = measure(dg, sig)
    assert abs(np.sum(np.abs(f.values) ** 2) - 1.0) < 1e-12


def test_measure_signal_noise_covariance():
    # pushed-through noise: E[nu(x) conj(nu(x'))] = (2 sigma^2 C / N) delta
    dg = build_delsarte_goethals(5, 0)
    sigma = 0.05
    draws = 4000
    acc_diag = 0.0
    acc_off = 0.0
    for t in range(draws):
        f = measure(dg, SparseSignal((), dg.n_cols), noise="signal",
                    sigma=sigma, seed=t)
        acc_diag += np.abs(f.values[0]) ** 2
        acc_off += (f.values[0] * np.conj(f.values[1])).real
    target = 2 * sigma ** 2 * dg.n_cols / dg.n_rows
    assert abs(acc_diag / draws - target) < 5 * target / math.sqrt(draws)
    assert abs(acc_off / draws) < 5 * target / math.sqrt(draws)


def test_measure_dimension_mismatch():
    dg = build_delsarte_goethals(3, 0)
    with pytest.raises(ValueError):
        measure(dg, SparseSignal.from_pairs([(1, 1.0)], 100))


def test_synthesize_dense_matches_sparse_path():
    dg = build_delsarte_goethals(5, 0)
    sig = sample_signal(dg.n_cols, 6, "gaussian", seed=4)
    dense_alpha = sig.to_dense()
    f1 = synthesize(dg, sig)
    f2 = synthesize_dense(dg, dense_alpha)
    assert np.max(np.abs(f1 - f2)) < 1e-10


# ---------------------------------------------------------------------------
# shift multiply
# ---------------------------------------------------------------------------

def test_shift_multiply_zero_offset():
    rng = np.random.default_rng(0)
    v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    g = shift_multiply(v, 0)
    assert np.allclose(g, np.abs(v) ** 2)


def test_shift_multiply_sup_bound():
    rng = np.random.default_rng(1)
    v = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    g = shift_multiply(v, 5)
    assert np.max(np.abs(g)) <= np.max(np.abs(v)) ** 2 + 1e-12


def test_shift_multiply_single_component_peak():
    # one component: the Walsh spectrum has its only line at l = a P
    dg = build_delsarte_goethals(5, 0)
    for j, a in ((17, 3), (901, 7), (333, 31)):
        sig = SparseSignal.from_pairs([(j, 1.0)], dg.n_cols)
        f = synthesize(dg, sig)
        w = fwht(shift_multiply(f, a))
        rows = dg.matrix_rows((j - 1) >> 5)
        peak = 0
        for u in range(5):
            if (a >> u) & 1:
                peak ^= int(rows[u])
        mags = np.abs(w)
        assert abs(mags[peak] - 1.0) < 1e-10
        mags[peak] = 0.0
        assert mags.max() < 1e-10


# ---------------------------------------------------------------------------
# quadratic reconstruction
# ---------------------------------------------------------------------------

def test_reconstruct_k1_exhaustive_m3():
    dg = build_delsarte_goethals(3, 0)
    for j in range(1, dg.n_cols + 1):
        sig = SparseSignal.from_pairs([(j, 0.8 - 0.4j)], dg.n_cols)
        res = quadratic_reconstruct(dg, synthesize(dg, sig), k_max=1)
        assert res.matches(sig, rtol=1e-9)
        assert res.residual_norm < 1e-9


def test_reconstruct_k1_sampled_m5_both_methods():
    dg = build_delsarte_goethals(5, 0)
    rng = np.random.default_rng(2)
    for method in ("matched", "offset-rows"):
        for _ in range(10):
            j = int(rng.integers(1, dg.n_cols + 1))
            sig = SparseSignal.from_pairs([(j, 1.0 + 0.2j)], dg.n_cols)
            res = quadratic_reconstruct(dg, synthesize(dg, sig), k_max=1,
                                        method=method)
            assert res.matches(sig, rtol=1e-9), (method, j)


def test_reconstruct_zero_input():
    dg = build_delsarte_goethals(5, 0)
    res = quadratic_reconstruct(dg, np.zeros(32, dtype=complex), k_max=3)
    assert res.signal.k == 0
    assert res.detections == 0


def test_reconstruct_requires_dg_family():
    with pytest.raises(ValueError):
        quadratic_reconstruct(build_chirp(5), np.zeros(5, dtype=complex), 1)


def test_reconstruct_deterministic():
    dg = build_delsarte_goethals(5, 1)
    sig = sample_signal(dg.n_cols, 4, "unimodular", seed=6)
    f = measure(dg, sig)
    r1 = quadratic_reconstruct(dg, f, k_max=4)
    r2 = quadratic_reconstruct(dg, f, k_max=4)
    assert r1.signal == r2.signal
    assert r1.iterations == r2.iterations


def test_reconstruct_peeling_invariants():
    # strict residual decrease and projection energy conservation per step
    dg = build_delsarte_goethals(7, 0)
    sig = sample_signal(dg.n_cols, 5, "unimodular", seed=8)
    f = measure(dg, sig)
    res = quadratic_reconstruct(dg, f, k_max=5)
    assert res.matches(sig, rtol=1e-6)
    prev = float(np.linalg.norm(f.values))
    for it in res.iterations:
        pre = it["residual_before"]
        post = it["residual"]
        beta = it["beta"]
        assert post < pre
        assert abs(pre ** 2 - (abs(beta) ** 2 + post ** 2)) < 1e-9 * max(1.0, pre ** 2)


def test_reconstruct_m9_k40_single_trial():
    dg = build_delsarte_goethals(9, 0)
    sig = sample_signal(dg.n_cols, 40, "unimodular", seed=123)
    res = quadratic_reconstruct(dg, measure(dg, sig), k_max=40)
    assert res.matches(sig, rtol=1e-6)


def test_reconstruct_dg51_moderate():
    dg = build_delsarte_goethals(5, 1)
    wins = 0
    for s in range(10):
        sig = sample_signal(dg.n_cols, 3, "unimodular", seed=100 + s)
        res = quadratic_reconstruct(dg, measure(dg, sig), k_max=3)
        wins += res.matches(sig, rtol=1e-6)
    assert wins >= 9


# ---------------------------------------------------------------------------
# cross-term energy
# ---------------------------------------------------------------------------

def test_crossterm_targets():
    dg = build_delsarte_goethals(5, 0)
    sig1 = SparseSignal.from_pairs([(3, 1.0)], dg.n_cols)
    res = crossterm_energy_check(dg, sig1, a=1, trials=50, seed=0)
    assert res["target"] == 0.0
    emp = res["empirical"][res["counts"] > 0]
    assert np.max(emp) < 1e-20

    sig2 = SparseSignal.from_pairs([(3, 1.0), (77, 1.0)], dg.n_cols)
    res2 = crossterm_energy_check(dg, sig2, a=1, trials=50, seed=0)
    assert abs(res2["target"] - 2.0) < 1e-12


def test_crossterm_spectrum_flatness_m9():
    # non-peak magnitudes of the shifted-product spectrum stay within a
    # loose factor of their mean: the cross terms act as a flat background
    dg = build_delsarte_goethals(9, 0)
    for k in (2, 4, 8):
        for trial in range(3):
            sig = sample_signal(dg.n_cols, k, "unimodular", seed=10 * k + trial)
            f = synthesize(dg, sig)
            w = np.abs(fwht(shift_multiply(f, 1)))
            mask = np.ones(dg.n_rows, dtype=bool)
            for idx, _ in sig.entries:
                rows = dg.matrix_rows((idx - 1) >> 9)
                mask[int(rows[0])] = False  # peak for offset a = e_1
            ratio = w[mask].max() / w[mask].mean()
            assert ratio < 10.0, (k, trial, ratio)


def test_crossterm_flat_background_m7():
    dg = build_delsarte_goethals(7, 0)
    sig = sample_signal(dg.n_cols, 4, "unimodular", seed=5)
    res = crossterm_energy_check(dg, sig, a=1, trials=2000, seed=1)
    mask = res["counts"] > 1000
    emp = res["empirical"][mask]
    # finite-N check of the flat cross-energy limit, loose tolerance
    assert abs(np.mean(emp) - res["target"]) < 0.15 * res["target"]


# ---------------------------------------------------------------------------
# error bound
# ---------------------------------------------------------------------------

def test_error_bound_trivial_cases():
    a = np.array([1.0, 2.0, 0.0])
    assert error_bound(a, a, 0.0, 0.3) == 0.0
    assert error_bound(a, a, 1.5, 0.0) == 3.0  # 2/(1-0) * ||nu||
    with pytest.raises(ValueError):
        error_bound(a, a, 0.0, 1.0)


def test_error_bound_accepts_signals():
    sig = SparseSignal.from_pairs([(1, 2.0)], 4)
    trunc = SparseSignal.from_pairs([(1, 1.0)], 4)
    val = error_bound(sig, trunc, 0.0, 0.5)
    assert abs(val - (5.5 / 0.5) * 1.0) < 1e-12
