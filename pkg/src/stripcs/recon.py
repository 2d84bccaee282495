"""Quadratic reconstruction for Delsarte-Goethals measurements.

The decoder works entirely in the measurement domain.  Pointwise
multiplication of the measurement with a shifted copy of itself turns each
signal component with chirp label P into a pure Walsh tone at a*P, riding
on a flat background of cross terms; Walsh-Hadamard peak detection then
recovers P row by row (offsets e_1..e_m) or, when the matrix set is small
enough to enumerate, by a matched-filter scan over all offsets at once.
Detected components are peeled off strongest-first, with revisits allowed
so earlier estimates can be restored and corrected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensembles import MATCHED_TABLE_LIMIT, SensingMatrix, _QuadraticPhaseMatrix
from .util import sample_distinct, trial_rng
from .wht import fwht, fwht_axis

VALUE_MODELS = ("sphere", "gaussian", "unimodular")


@dataclass(frozen=True)
class SparseSignal:
    """k-sparse vector: sorted (1-based column index, nonzero value) pairs."""

    entries: tuple
    n_cols: int

    def __post_init__(self):
        last = 0
        for idx, val in self.entries:
            if not (1 <= idx <= self.n_cols):
                raise ValueError(f"index {idx} outside [1, {self.n_cols}]")
            if idx <= last:
                raise ValueError("indices must be strictly increasing")
            if val == 0:
                raise ValueError("stored values must be nonzero")
            last = idx
    @property
    def k(self) -> int:
        return len(self.entries)

    def indices(self) -> np.ndarray:
        return np.array([i for i, _ in self.entries], dtype=np.int64)

    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.entries], dtype=np.complex128)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values()))

    def to_dense(self) -> np.ndarray:
        if self.n_cols > (1 << 22):
            raise ValueError("ambient dimension too large to densify")
        out = np.zeros(self.n_cols, dtype=np.complex128)
        for i, v in self.entries:
            out[i - 1] = v
        return out

    @staticmethod
    def from_pairs(pairs, n_cols: int) -> "SparseSignal":
        ordered = tuple(sorted((int(i), complex(v)) for i, v in pairs))
        return SparseSignal(ordered, n_cols)


@dataclass
class Measurement:
    """Length-N measurement vector with its noise provenance."""

    values: np.ndarray
    noise: str = "none"
    sigma: float = 0.0

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def sample_values(rng: np.random.Generator, k: int, model: str) -> np.ndarray:
    """Nonzero coefficients under one of the supported value models.

    sphere      uniform on the complex unit sphere of the support
    gaussian    i.i.d. standard complex Gaussian (E|z|^2 = 1)
    unimodular  unit magnitude, independent uniform phases
    """
    if model == "sphere":
        z = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        return z / np.linalg.norm(z)
    if model == "gaussian":
        return (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / math.sqrt(2)
    if model == "unimodular":
        return np.exp(2j * np.pi * rng.random(k))
    raise ValueError(f"unknown value model {model!r}; choose from {VALUE_MODELS}")


def sample_signal(n_cols: int, k: int, value_model: str = "sphere",
                  seed: int = 0) -> SparseSignal:
    """Uniform random support of size k with values from the given model."""
    if k > n_cols:
        raise ValueError("k exceeds the ambient dimension")
    rng = trial_rng(seed, 0)
    support = np.sort(sample_distinct(rng, n_cols, k)) + 1
    values = sample_values(rng, k, value_model)
    return SparseSignal(tuple(zip(support.tolist(), map(complex, values))), n_cols)


def synthesize(matrix: SensingMatrix, alpha: SparseSignal) -> np.ndarray:
    """Noiseless measurement N^{-1/2} Phi alpha."""
    if alpha.n_cols != matrix.n_cols:
        raise ValueError("signal dimension does not match the matrix")
    if alpha.k == 0:
        return np.zeros(matrix.n_rows, dtype=np.complex128)
    cols = matrix.columns(alpha.indices())
    return (alpha.values()[:, None] * cols).sum(axis=0) / math.sqrt(matrix.n_rows)


def measure(matrix: SensingMatrix, alpha: SparseSignal, noise: str = "none",
            sigma: float = 0.0, seed: int = 0) -> Measurement:
    """Measure a sparse signal, optionally through one of two noise channels.

    measurement  f + nu with nu i.i.d. complex Gaussian, per-component
                 (re/im) variance sigma^2, total variance 2 sigma^2.
    signal       noise added in the data domain and pushed through the
                 matrix.  For the unimodular families Phi Phi^H = C I
                 exactly, so the pushed-through noise is drawn directly
                 from its exact law CN(0, 2 sigma^2 C / N) per entry; the
                 Gaussian baseline pushes a dense noise vector literally.
    """
    f = synthesize(matrix, alpha)
    n = matrix.n_rows
    if noise == "none" or sigma == 0.0:
        return Measurement(f, "none", 0.0)
    rng = trial_rng(seed, 0)
    if noise == "measurement":
        nu = sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    elif noise == "signal":
        if matrix.family == "gaussian":
            if matrix.n_cols > (1 << 16):
                raise ValueError("dense signal noise needs C <= 2^16 here")
            mu = sigma * (rng.standard_normal(matrix.n_cols)
                          + 1j * rng.standard_normal(matrix.n_cols))
            cols = matrix.columns(np.arange(1, matrix.n_cols + 1))
            nu = (mu[:, None] * cols).sum(axis=0) / math.sqrt(n)
        else:
            scale = sigma * math.sqrt(matrix.n_cols / n)
            nu = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    else:
        raise ValueError(f"unknown noise mode {noise!r}")
    return Measurement(f + nu, noise, sigma)


def shift_multiply(f, a: int) -> np.ndarray:
    """g_a(x) = f(x xor a) * conj(f(x)) on an index space of size 2^m."""
    v = np.asarray(getattr(f, "values", f), dtype=np.complex128)
    n = v.size
    if n & (n - 1):
        raise ValueError("length must be a power of two")
    x = np.arange(n)
    return v[x ^ int(a)] * np.conj(v)


@dataclass
class ReconResult:
    """Decoder output: the recovered signal plus a per-iteration trace."""

    signal: SparseSignal
    iterations: list
    residual_norm: float
    detections: int
    method: str
    success: bool | None = None

    def matches(self, alpha: SparseSignal, rtol: float = 1e-6) -> bool:
        """Support equality plus relative l2 value agreement."""
        if [i for i, _ in self.signal.entries] != [i for i, _ in alpha.entries]:
            return False
        err = np.linalg.norm(self.signal.values() - alpha.values())
        return bool(err <= rtol * max(alpha.norm(), 1e-300))


class _MatchedDetector:
    """Offset-subgroup matched filter over an enumerable chirp-matrix set.

    For every candidate matrix P_t, the Walsh spectra of the shift products
    g_a over a subgroup of offsets are sampled along the ridge l = a P_t and
    dechirped by the known quadratic phase i^{a P_t a^T}; summing the
    subgroup coherently turns a component with matrix P_t into a peak of
    height A |alpha|^2, far above the cross-term floor.  The linear label b
    then falls out of one dechirped transform against phi_{P_t, 0}.  With
    all N offsets this costs O(N^2 log N) per call, independent of the
    ambient dimension; fewer offsets suffice at low sparsity.
    """

    def __init__(self, matrix: _QuadraticPhaseMatrix, n_offsets: int):
        t_count = 1 << matrix.n_gen
        n = matrix.n_rows
        if t_count * n > MATCHED_TABLE_LIMIT:
            raise ValueError("matrix set too large for the matched-filter scan")
        if n_offsets & (n_offsets - 1) or not (2 <= n_offsets <= n):
            raise ValueError("n_offsets must be a power of two within [2, N]")
        self.matrix = matrix
        self.n = n
        self.n_offsets = n_offsets
        a = np.arange(n_offsets, dtype=np.int64)
        ts = np.arange(t_count, dtype=np.int64)
        rows_all = matrix._rows_batch(ts)  # (T, m)
        idx = np.zeros((t_count, n_offsets), dtype=np.int64)
        for u in range(matrix.m):
            idx ^= rows_all[:, u][:, None] * ((a >> u) & 1)[None, :]
        self.ridge_idx = idx
        quad = matrix._quad_form_many(rows_all, a) % 4  # (T, A): a P_t a^T
        from .ensembles import _I4
        self.dechirp = np.conj(_I4[quad]).astype(np.complex64)
        x = np.arange(n, dtype=np.int64)
        self.xor_grid = (a[:, None] ^ x[None, :]).astype(np.int32)
        self._arangeA = np.arange(n_offsets)

    def _mother(self, t_hat: int) -> np.ndarray:
        mothers = getattr(self.matrix, "_mother_cache", None)
        if mothers is not None:
            return mothers[t_hat]
        return self.matrix._columns0(
            np.array([t_hat << self.matrix.m], dtype=np.int64))[0]

    def detect(self, ft: np.ndarray) -> int:
        g = (ft[self.xor_grid] * np.conj(ft)[None, :]).astype(np.complex64)
        u = fwht_axis(g)                                   # u[a, l]
        ridge = u[self._arangeA[None, :], self.ridge_idx]  # (T, A)
        s = fwht_axis(ridge * self.dechirp)
        t_hat = int(np.argmax(np.abs(s))) // self.n_offsets
        spec_b = fwht(ft * np.conj(self._mother(t_hat)))
        b_hat = int(np.argmax(np.abs(spec_b)))
        return (t_hat << self.matrix.m) + b_hat


def _offsets_for(n: int, k_max: int) -> int:
    """Offset-subgroup size giving a comfortable detection margin at k_max.

    The coherent ridge sum grows like A while the cross-term floor grows
    like sqrt(A k^2 / N); A ~ 48 k^2 / N keeps the peak several floor
    deviations clear, with a floor of 64 offsets.
    """
    need = 48 * k_max * k_max / n
    a = 64
    while a < n and a < need:
        a *= 2
    return min(a, n)


class _OffsetRowsDetector:
    """Row-by-row detection with offsets e_1..e_m.

    The dominant Walsh peak of the shift product at offset e_u is the u-th
    row of the strongest component's matrix.  Candidate row combinations
    are tried strongest-first (single-row substitutions up to ``width``)
    until one is symmetric and inside the matrix set; the linear offset b
    then falls out of one dechirped transform.
    """

    def __init__(self, matrix: _QuadraticPhaseMatrix, width: int = 3, max_combos: int = 64):
        self.matrix = matrix
        self.width = width
        self.max_combos = max_combos

    def _candidate_rows(self, spectra_idx):
        m = self.matrix.m
        base = tuple(int(spectra_idx[u][0]) for u in range(m))
        yield base
        tried = 1
        # single-coordinate substitutions, then pairs, strongest first
        for depth in (1, 2):
            if depth == 1:
                combos = [(u, ru) for u in range(m) for ru in range(1, self.width)]
                for u, ru in combos:
                    rows = list(base)
                    rows[u] = int(spectra_idx[u][ru])
                    tried += 1
                    if tried > self.max_combos:
                        return
                    yield tuple(rows)
            else:
                for u in range(m):
                    for v in range(u + 1, m):
                        for ru in range(1, self.width):
                            for rv in range(1, self.width):
                                rows = list(base)
                                rows[u] = int(spectra_idx[u][ru])
                                rows[v] = int(spectra_idx[v][rv])
                                tried += 1
                                if tried > self.max_combos:
                                    return
                                yield tuple(rows)

    def detect(self, ft: np.ndarray):
        mat = self.matrix
        m = mat.m
        spectra_idx = []
        for u in range(m):
            w = fwht(shift_multiply(ft, 1 << u))
            order = np.argsort(np.abs(w))[::-1]
            spectra_idx.append(order[: self.width])
        for rows in self._candidate_rows(spectra_idx):
            ok = all(
                ((rows[u] >> v) & 1) == ((rows[v] >> u) & 1)
                for u in range(m) for v in range(u + 1, m)
            )
            if not ok:
                continue
            t = mat.rows_to_index(rows)
            if t < 0:
                continue
            mother = mat._columns0(np.array([t << m], dtype=np.int64))[0]
            spec = fwht(ft * np.conj(mother))
            b = int(np.argmax(np.abs(spec)))
            return (t << m) + b
        return None


def _matched_cached(matrix: _QuadraticPhaseMatrix, n_offsets: int) -> _MatchedDetector:
    cache = getattr(matrix, "_matched_cache", None)
    if cache is None:
        cache = {}
        matrix._matched_cache = cache
    if n_offsets not in cache:
        cache[n_offsets] = _MatchedDetector(matrix, n_offsets)
    return cache[n_offsets]


def _detector_for(matrix: _QuadraticPhaseMatrix, method: str, k_max: int):
    matched_ok = (1 << matrix.n_gen) * matrix.n_rows <= MATCHED_TABLE_LIMIT
    if method == "auto":
        method = "matched" if matched_ok else "offset-rows"
    if method == "matched":
        det = _matched_cached(matrix, _offsets_for(matrix.n_rows, k_max))
        return det.detect, "matched"
    if method == "offset-rows":
        det = _OffsetRowsDetector(matrix)
        return det.detect, "offset-rows"
    raise ValueError(f"unknown method {method!r}")


def quadratic_reconstruct(matrix: SensingMatrix, f, k_max: int,
                          stop_eps: float | None = None,
                          max_detect: int | None = None,
                          method: str = "auto") -> ReconResult:
    """Recover a sparse signal from f = N^{-1/2} Phi alpha (+ noise).

    Peels up to ``k_max`` components; revisited positions are restored and
    re-estimated, and after each detection the current support is polished
    by cyclic projection sweeps, so a noiseless exactly-sparse input is
    driven to the stopping residual.  Deterministic: no internal
    randomness.
    """
    if not isinstance(matrix, _QuadraticPhaseMatrix):
        raise ValueError("quadratic reconstruction requires a Delsarte-Goethals-type matrix")
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    f0 = np.asarray(getattr(f, "values", f), dtype=np.complex128)
    n = matrix.n_rows
    if f0.shape != (n,):
        raise ValueError("measurement length does not match the matrix")
    sqrtn = math.sqrt(n)
    norm0 = float(np.linalg.norm(f0))
    stop = stop_eps if stop_eps is not None else 1e-6 * norm0
    cap = max_detect if max_detect is not None else 2 * k_max

    detect, method_used = _detector_for(matrix, method, k_max)
    ft = f0.copy()
    order: list = []          # detected flat indices, insertion order
    cols: dict = {}
    found: dict = {}
    log = []
    detections = 0
    floor = max(1e-12 * norm0, 1e-300)

    def resolve() -> None:
        """Least-squares re-fit of all current components (restore path taken
        to convergence), pruning entries the fit sends to zero."""
        nonlocal ft
        if not order:
            return
        a = np.stack([cols[p] for p in order])
        gram = (a.conj() @ a.T) / n
        rhs = (a.conj() @ f0) / sqrtn
        try:
            coef = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError:
            coef = np.linalg.lstsq(a.T / sqrtn, f0, rcond=None)[0]
        ft = f0 - (coef @ a) / sqrtn
        for p, c in zip(list(order), coef):
            if abs(c) <= floor:
                order.remove(p)
                found.pop(p, None)
            else:
                found[p] = complex(c)

    while detections < cap and float(np.linalg.norm(ft)) > max(stop, 0.0):
        p0 = detect(ft)
        if p0 is None:
            break
        detections += 1
        if p0 not in cols:
            cols[p0] = matrix._columns0(np.array([p0], dtype=np.int64))[0]
        col = cols[p0]
        pre = float(np.linalg.norm(ft))
        if p0 in found:
            ft += (found[p0] / sqrtn) * col
            pre = float(np.linalg.norm(ft))
        else:
            order.append(p0)
        beta = np.vdot(col, ft) / sqrtn
        found[p0] = complex(beta)
        ft -= (beta / sqrtn) * col
        log.append({
            "iteration": detections,
            "index": p0 + 1,
            "beta": complex(beta),
            "residual_before": pre,
            "residual": float(np.linalg.norm(ft)),
        })
        resolve()

    pairs = [(p + 1, found[p]) for p in order if abs(found[p]) > floor]
    signal = SparseSignal.from_pairs(pairs, matrix.n_cols)
    return ReconResult(
        signal=signal,
        iterations=log,
        residual_norm=float(np.linalg.norm(ft)),
        detections=detections,
        method=method_used,
    )


def crossterm_energy_check(matrix: _QuadraticPhaseMatrix, alpha: SparseSignal,
                           a: int, trials: int, seed: int) -> dict:
    """Average cross-term Walsh energy against its flat-background target.

    Supports are resampled each trial with the values of ``alpha`` held fixed;
    the scaled spectral energy N^2 |Gamma_a^l|^2 is accumulated at every
    tone that is not a signal peak of that trial.  The large-N target is
    sum_{j != t} |alpha_j|^2 |alpha_t|^2.

    Peak tones per trial are the component lines a P_j and, for component
    pairs that happen to share the same chirp label P, the pure Walsh tone
    a P xor b_j xor b_t their cross term collapses onto (such pairs carry
    no flat background at all; their probability vanishes as N/C).
    """
    if a <= 0:
        raise ValueError("offset a must be a nonzero index word")
    n = matrix.n_rows
    values = alpha.values()
    k = values.size
    acc = np.zeros(n)
    cnt = np.zeros(n)
    abits = [(a >> u) & 1 for u in range(matrix.m)]
    for t in range(trials):
        rng = trial_rng(seed, t)
        supp0 = sample_distinct(rng, matrix.n_cols, k)
        cols = matrix._columns0(supp0)
        f = (values[:, None] * cols).sum(axis=0) / math.sqrt(n)
        w = fwht(shift_multiply(f, a))
        energy = n * np.abs(w) ** 2  # N^2 |Gamma|^2 with Gamma = W / sqrt(N^3) * N
        mask = np.ones(n, dtype=bool)
        by_label: dict = {}
        for j0 in supp0:
            t_lab = int(j0) >> matrix.m
            rows = matrix.matrix_rows(t_lab)
            peak = 0
            for u in range(matrix.m):
                if abits[u]:
                    peak ^= int(rows[u])
            mask[peak] = False
            by_label.setdefault(t_lab, []).append((int(j0) & (n - 1), peak))
        for entries in by_label.values():
            for i in range(len(entries)):
                for j in range(i + 1, len(entries)):
                    (b1, peak), (b2, _) = entries[i], entries[j]
                    mask[peak ^ b1 ^ b2] = False
        acc[mask] += energy[mask]
        cnt[mask] += 1
    target = float((np.sum(np.abs(values) ** 2)) ** 2 - np.sum(np.abs(values) ** 4))
    with np.errstate(invalid="ignore"):
        empirical = np.where(cnt > 0, acc / np.maximum(cnt, 1), np.nan)
    return {"empirical": empirical, "counts": cnt, "target": target}


def error_bound(alpha, alpha_k, nu_norm: float, epsilon: float) -> float:
    """l2/l2 recovery bound: (5+eps)/(1-eps) ||a - a_k|| + 2/(1-eps) ||nu||."""
    if not (0 <= epsilon < 1):
        raise ValueError("epsilon must lie in [0, 1)")
    if isinstance(alpha, SparseSignal):
        alpha = alpha.to_dense()
    if isinstance(alpha_k, SparseSignal):
        alpha_k = alpha_k.to_dense()
    tail = float(np.linalg.norm(np.asarray(alpha) - np.asarray(alpha_k)))
    return (5 + epsilon) / (1 - epsilon) * tail + 2 / (1 - epsilon) * float(nu_norm)


def synthesize_dense(matrix: _QuadraticPhaseMatrix, dense_alpha: np.ndarray) -> np.ndarray:
    """N^{-1/2} Phi alpha for a dense alpha over a chirp-phase family.

    Splits the column index as (t, b) and resolves each b-block with one
    Walsh transform, so the cost is (C/N) transforms instead of C column
    evaluations.
    """
    n = matrix.n_rows
    t_count = matrix.n_cols >> matrix.m
    if t_count * n > (1 << 28):
        raise ValueError("too large for the blockwise synthesis path")
    a = np.asarray(dense_alpha, dtype=np.complex128).reshape(t_count, n)
    par = np.zeros(n, dtype=np.int64)
    for u in range(matrix.m):
        par ^= (np.arange(n) >> u) & 1
    signs = (1 - 2 * par).astype(np.complex128)  # (-1)^{wt(b)}
    inner = fwht_axis(a * signs[None, :])
    mothers = getattr(matrix, "_mother_cache", None)
    if mothers is None:
        mothers = matrix._columns0((np.arange(t_count, dtype=np.int64) << matrix.m))
        matrix._mother_cache = mothers
    return (mothers * inner).sum(axis=0) / math.sqrt(n)
