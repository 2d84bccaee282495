import math

import numpy as np
import pytest

from stripcs.ensembles import (SensingMatrix, build_chirp,
                               build_delsarte_goethals, build_gaussian)
from stripcs.recon import SparseSignal, sample_signal
from stripcs.stripcheck import (BoundVacuousError, bound_report, certify,
                                coherence_stats, condition_experiment,
                                expected_energy, strip_delta,
                                strip_delta_sharpened, strip_montecarlo,
                                uniqueness_bruteforce)


class _RepeatedColumnMatrix(SensingMatrix):
    """Tiny oracle with a duplicated column, for failure-path tests."""

    family = "test-dup"

    def __init__(self):
        super().__init__(4, 6, {})
        rng = np.random.default_rng(0)
        base = np.exp(2j * np.pi * rng.random((5, 4)))
        base[0] = 1.0
        self._cols = np.vstack([base, base[2:3]])  # column 6 repeats column 3

    def _columns0(self, j0s):
        return self._cols[j0s]


# ---------------------------------------------------------------------------
# certification
# ---------------------------------------------------------------------------

def test_certify_chirp_p5_exhaustive():
    cert = certify(build_chirp(5))
    assert cert.passed()
    assert abs(cert.st3_eta - 1.0) < 1e-9
    assert abs(cert.max_column_sum_sq - 5.0) < 1e-9


def test_certify_dg_m3_column_sums():
    cert = certify(build_delsarte_goethals(3, 0))
    assert cert.passed()
    assert abs(cert.max_column_sum_sq - 8.0) < 1e-9  # 2^{2m-m}


def test_certify_detects_repeated_column():
    cert = certify(_RepeatedColumnMatrix(), tol=1e-9)
    assert not cert.st2_pass
    assert cert.duplicate_columns == (3, 6)


def test_certify_exhaustive_size_guard():
    big = build_delsarte_goethals(9, 0)
    with pytest.raises(ValueError):
        certify(big, mode="exhaustive")


def test_certify_deterministic():
    a = certify(build_chirp(7), seed=3)
    b = certify(build_chirp(7), seed=3)
    assert a == b


# ---------------------------------------------------------------------------
# closed-form bounds
# ---------------------------------------------------------------------------

def test_strip_delta_vacuous_at_centering():
    c = 1 << 18
    eps = (10 - 1) / (c - 1)
    assert strip_delta(512, c, 10, eps, 1.0) == 2.0
    with pytest.raises(BoundVacuousError):
        strip_delta(512, c, 10, eps / 2, 1.0)


def test_strip_delta_frozen_value():
    # 2 exp(-(0.5 - 9/262143)^2 * 512 / 80), evaluated independently
    assert abs(strip_delta(512, 1 << 18, 10, 0.5, 1.0) - 0.403881767085) < 1e-9


def test_strip_delta_k1():
    assert abs(strip_delta(512, 1 << 18, 1, 0.5, 1.0) - 2 * math.exp(-16)) < 1e-18


def test_strip_delta_monotonicity():
    for k in (2, 4, 8):
        deltas = [strip_delta(n, 1 << 18, k, 0.5, 1.0) for n in (64, 128, 256, 512)]
        assert all(a > b for a, b in zip(deltas, deltas[1:]))
    for n in (128, 512):
        deltas = [strip_delta(n, 1 << 18, k, 0.5, 1.0) for k in (2, 4, 8, 16)]
        assert all(a < b for a, b in zip(deltas, deltas[1:]))


def test_sharpened_delta_relations():
    n, c, eta, eps = 512, 1 << 18, 1.0, 0.5
    # spikier signals (rho = 1) beat the worst case rho = sqrt(k)
    for k in (2, 4, 16):
        loose = strip_delta_sharpened(n, c, eta, eps, math.sqrt(k))
        spike = strip_delta_sharpened(n, c, eta, eps, 1.0)
        assert spike < loose
    # at k = 2 the worst case rho = sqrt(2) is exactly the generic bound
    # (the centerings (k-1)/(C-1) and 1/(C-1) coincide there)
    assert abs(strip_delta_sharpened(n, c, eta, eps, math.sqrt(2))
               - strip_delta(n, c, 2, eps, eta)) < 1e-15
    # frozen independent evaluation for rho = 2 (chi term active)
    assert abs(strip_delta_sharpened(n, c, eta, eps, 2.0) - 0.036637985728) < 1e-9
    with pytest.raises(ValueError):
        strip_delta_sharpened(n, c, eta, eps, 0.5)


def test_bound_report_handle():
    rep = bound_report(512, 1 << 18, 10, 0.5, 1.0)
    assert rep.delta == strip_delta(512, 1 << 18, 10, 0.5, 1.0)
    assert rep.sharpened_delta(2.0) == strip_delta_sharpened(512, 1 << 18, 1.0, 0.5, 2.0)
    assert rep.coherence_mean == (10 / 512) * ((1 << 18) - 512) / ((1 << 18) - 1)


# ---------------------------------------------------------------------------
# expected energy
# ---------------------------------------------------------------------------

def test_expected_energy_k1_exact():
    ch = build_chirp(5)
    val = expected_energy(ch, [1.7 - 0.3j], mode="exact")
    assert abs(val - abs(1.7 - 0.3j) ** 2) < 1e-12


def test_expected_energy_bracket_chirp():
    ch = build_chirp(5)
    rng = np.random.default_rng(2)
    for _ in range(5):
        v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        e = expected_energy(ch, v, mode="exact")
        nrm = float(np.sum(np.abs(v) ** 2))
        assert (1 - 1 / 24) * nrm - 1e-12 <= e <= (1 + 1 / 24) * nrm + 1e-12


def test_expected_energy_montecarlo_matches_exact():
    ch = build_chirp(5)
    v = np.array([1.0, 1.0])
    exact = expected_energy(ch, v, mode="exact")
    trials = 20000
    mc = expected_energy(ch, v, mode="montecarlo", trials=trials, seed=1)
    # distortion std per trial is O(1); 3 standard errors
    assert abs(mc - exact) < 3 * 1.0 / math.sqrt(trials) * 2
    with pytest.raises(ValueError):
        expected_energy(build_delsarte_goethals(5, 0), v, mode="exact")


# ---------------------------------------------------------------------------
# strip Monte-Carlo
# ---------------------------------------------------------------------------

def test_strip_montecarlo_zero_band_always_fails():
    # continuous entries: distortion is never exactly 1
    res = strip_montecarlo(build_gaussian(32, 256, seed=0), k=2, epsilon=0.0,
                           trials=100, seed=0)
    assert res["failure_rate"] == 1.0
    # structured family: only exactly-orthogonal supports escape a zero band
    res = strip_montecarlo(build_chirp(7), k=2, epsilon=0.0, trials=200, seed=0)
    assert res["failure_rate"] > 0.5


def test_strip_montecarlo_bound_respected_small():
    mat = build_delsarte_goethals(7, 0)
    k, eps = 4, 0.5
    res = strip_montecarlo(mat, k, eps, trials=2000, seed=5)
    delta = strip_delta(mat.n_rows, mat.n_cols, k, eps, 1.0)
    assert delta < 1
    fr = res["failure_rate"]
    sigma = math.sqrt(max(fr * (1 - fr), 1 / 2000) / 2000)
    assert fr <= delta + 3 * sigma


def test_strip_montecarlo_gaussian_baseline_runs():
    res = strip_montecarlo(build_gaussian(64, 512, seed=1), k=4, epsilon=0.5,
                           trials=500, seed=2)
    assert res["distortions"].shape == (500,)
    assert 0.5 < np.mean(res["distortions"]) < 1.5


# ---------------------------------------------------------------------------
# coherence
# ---------------------------------------------------------------------------

def test_coherence_exact_mean_chirp():
    cs = coherence_stats(build_chirp(5), 3, mode="exact")
    assert abs(cs["mean"] - 0.5) < 1e-12  # (3/5)(20/24)


def test_coherence_k0():
    cs = coherence_stats(build_chirp(5), 0)
    assert cs["mean"] == 0.0


def test_coherence_montecarlo_near_expected():
    mat = build_delsarte_goethals(7, 0)
    k, trials = 8, 3000
    cs = coherence_stats(mat, k, trials=trials, seed=3, eta=1.0, delta=0.5)
    se = np.std(cs["samples"]) / math.sqrt(trials)
    assert abs(cs["mean"] - cs["expected_mean"]) < 3 * se
    assert cs["tail_fraction"] <= 0.5


# ---------------------------------------------------------------------------
# condition numbers
# ---------------------------------------------------------------------------

def test_condition_k1_is_one():
    res = condition_experiment(build_chirp(7), 1, trials=10, seed=0)
    assert np.allclose(res["conds"], 1.0)


def test_condition_rejects_bad_k():
    with pytest.raises(ValueError):
        condition_experiment(build_chirp(5), 6)


def test_condition_dg_finite():
    res = condition_experiment(build_delsarte_goethals(5, 0), 8, trials=50, seed=1)
    assert res["n_singular"] == 0
    assert 1.0 <= res["mean"] < 20.0


# ---------------------------------------------------------------------------
# uniqueness brute force
# ---------------------------------------------------------------------------

def test_uniqueness_k1_always():
    ch = build_chirp(5)
    for j in (1, 7, 25):
        sig = SparseSignal.from_pairs([(j, 1.0 + 0.5j)], 25)
        assert uniqueness_bruteforce(ch, sig)


def test_uniqueness_detects_duplicate_column():
    mat = _RepeatedColumnMatrix()
    sig = SparseSignal.from_pairs([(3, 1.0)], 6)  # column 6 is identical
    assert not uniqueness_bruteforce(mat, sig)


def test_uniqueness_random_k2_chirp():
    ch = build_chirp(5)
    wins = 0
    for t in range(50):
        sig = sample_signal(25, 2, "sphere", seed=t)
        wins += uniqueness_bruteforce(ch, sig)
    assert wins == 50  # continuous values make collisions measure-zero


def test_uniqueness_size_guard():
    with pytest.raises(ValueError):
        uniqueness_bruteforce(build_delsarte_goethals(5, 0),
                              SparseSignal.from_pairs([(1, 1.0)], 1024))
