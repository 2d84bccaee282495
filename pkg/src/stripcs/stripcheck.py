"""Certification of the three structural conditions, tail-bound evaluators,
and the Monte-Carlo / brute-force validation experiments.

The certificate checks, for an N x C column oracle:

  St1  rows orthogonal and all row sums zero,
  St2  columns closed under pointwise multiplication (a group with the
       all-ones column as identity),
  St3  every non-identity squared column-sum magnitude at most N^{2-eta}.

eta is always reported as the measured value 2 - log(max |S|^2) / log N,
so the strength of the family is read off the matrix rather than assumed.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from .ensembles import SensingMatrix
from .recon import sample_values, SparseSignal
from .util import sample_distinct, trial_rng
from .algebra import hermitian_eigenvalues

_BLOCK = 2048
_EXHAUSTIVE_LIMIT = 1 << 16
_ST3_LIMIT = 1 << 20


class BoundVacuousError(ValueError):
    """Raised when a tail bound is requested outside its hypotheses."""


# ---------------------------------------------------------------------------
# certification
# ---------------------------------------------------------------------------

@dataclass
class StripCertificate:
    matrix_spec: dict
    mode: str
    tol: float
    identity_column_ok: bool
    st1_row_orthogonality_pass: bool
    st1_max_offdiagonal: float
    st1_row_sum_pass: bool
    st1_max_row_sum: float
    st2_pass: bool
    st2_pairs_checked: int
    st2_mechanism: str
    st2_witness: tuple | None
    st3_pass: bool
    st3_eta: float
    max_column_sum_sq: float
    st3_columns_checked: int
    duplicate_columns: tuple | None

    def passed(self) -> bool:
        return bool(
            self.identity_column_ok
            and self.st1_row_orthogonality_pass
            and self.st1_row_sum_pass
            and self.st2_pass
            and self.st3_pass
        )

    def to_json(self) -> str:
        d = asdict(self)
        d["passed"] = self.passed()
        return json.dumps(d, indent=2, default=str)


def _digest(col: np.ndarray) -> bytes:
    # 1e-9 quantization grid removes float jitter; family oracles evaluate
    # entries from integer exponents, so equal columns hash identically.
    q = np.round(col.view(np.float64) * 1e9).astype(np.int64)
    return hashlib.blake2b(q.tobytes(), digest_size=16).digest()


def certify(matrix: SensingMatrix, mode: str = "exhaustive", tol: float = 1e-9,
            seed: int = 0, st2_pairs: int = 4096,
            sample_columns: int = 1 << 14) -> StripCertificate:
    """Verify St1/St2/St3 and measure eta.

    exhaustive  requires C <= 2^16; row Gram, row sums and column sums are
                accumulated over every column.
    sampled     statistics are taken over a seeded column sample (row-level
                checks use an 8-sigma sampling allowance); column sums are
                still exhaustive while C <= 2^20.

    St2 verifies pointwise products entrywise: against the hash table of
    all columns when C <= 2^16, otherwise against the family's predicted
    product index.  Every failure carries a concrete witness.
    """
    n, c = matrix.n_rows, matrix.n_cols
    if mode not in ("exhaustive", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exhaustive" and c > _EXHAUSTIVE_LIMIT:
        raise ValueError(f"exhaustive certification needs C <= {_EXHAUSTIVE_LIMIT}")
    rng = np.random.Generator(np.random.PCG64(seed))

    full_pass = mode == "exhaustive" or c <= sample_columns
    if full_pass:
        scan_idx = np.arange(c, dtype=np.int64)
    else:
        scan_idx = np.sort(rng.choice(c, size=sample_columns, replace=False))

    gram = np.zeros((n, n), dtype=np.complex128)
    row_sums = np.zeros(n, dtype=np.complex128)
    digests: dict = {}
    duplicate = None
    build_table = c <= _EXHAUSTIVE_LIMIT
    colsum_scan = scan_idx if (full_pass or c > _ST3_LIMIT) else np.arange(c, dtype=np.int64)
    col_sums = np.zeros(colsum_scan.size, dtype=np.complex128)
    pos = 0
    for lo in range(0, colsum_scan.size, _BLOCK):
        block = colsum_scan[lo:lo + _BLOCK]
        cols = matrix._columns0(block)
        col_sums[pos:pos + block.size] = cols.sum(axis=1)
        pos += block.size
        if full_pass:
            gram += cols.T @ cols.conj()
            row_sums += cols.sum(axis=0)
            if build_table:
                for i, j0 in enumerate(block):
                    d = _digest(cols[i])
                    other = digests.get(d)
                    if other is not None and duplicate is None:
                        duplicate = (other + 1, int(j0) + 1)
                    digests[d] = int(j0)
    if not full_pass:
        # accumulate row statistics over the sample only
        for lo in range(0, scan_idx.size, _BLOCK):
            cols = matrix._columns0(scan_idx[lo:lo + _BLOCK])
            gram += cols.T @ cols.conj()
            row_sums += cols.sum(axis=0)

    # -- St1 ----------------------------------------------------------------
    if full_pass:
        dev = np.abs(gram - c * np.eye(n))
        max_off = float(dev.max())
        st1a = max_off <= tol * c
        max_rs = float(np.max(np.abs(row_sums)))
        st1b = max_rs <= tol * c
    else:
        s = scan_idx.size
        dev = np.abs(gram - s * np.eye(n))
        max_off = float(dev.max())
        st1a = max_off <= 8.0 * math.sqrt(s) + tol * s
        max_rs = float(np.max(np.abs(row_sums)))
        st1b = max_rs <= 8.0 * math.sqrt(s) + tol * s

    # -- identity column -----------------------------------------------------
    identity_ok = bool(np.max(np.abs(matrix.column(1) - 1.0)) <= tol)

    # -- St2 ----------------------------------------------------------------
    st2_witness = None
    if duplicate is not None:
        st2_witness = duplicate
    n_pairs = min(st2_pairs, c * c)
    if c * c <= st2_pairs:
        pairs = [(j1, j2) for j1 in range(1, c + 1) for j2 in range(1, c + 1)]
    else:
        pairs = [(int(a) + 1, int(b) + 1)
                 for a, b in zip(rng.integers(0, c, n_pairs), rng.integers(0, c, n_pairs))]
    mechanism = "hash-table" if build_table else "predicted-index"
    checked = 0
    for j1, j2 in pairs:
        if st2_witness is not None:
            break
        prod = matrix.column(j1) * matrix.column(j2)
        if build_table:
            target = digests.get(_digest(prod))
            if target is None:
                st2_witness = (j1, j2)
                break
            ref = matrix.column(target + 1)
        else:
            pred = matrix.product_index(j1, j2)
            if pred is None:
                raise ValueError("St2 needs either C <= 2^16 or a product-index rule")
            ref = matrix.column(pred)
        if np.max(np.abs(prod - ref)) > tol:
            st2_witness = (j1, j2)
            break
        checked += 1
    st2_pass = st2_witness is None and identity_ok

    # -- St3 ----------------------------------------------------------------
    if colsum_scan[0] == 0:
        s2 = np.abs(col_sums[1:]) ** 2
    else:
        s2 = np.abs(col_sums) ** 2
    max_s2 = float(s2.max()) if s2.size else 0.0
    if max_s2 <= tol:
        eta = 2.0
    else:
        eta = 2.0 - math.log(max_s2) / math.log(n)
    st3_pass = eta > 0.0

    return StripCertificate(
        matrix_spec=matrix.spec(),
        mode=mode,
        tol=tol,
        identity_column_ok=identity_ok,
        st1_row_orthogonality_pass=bool(st1a),
        st1_max_offdiagonal=max_off,
        st1_row_sum_pass=bool(st1b),
        st1_max_row_sum=max_rs,
        st2_pass=bool(st2_pass),
        st2_pairs_checked=checked,
        st2_mechanism=mechanism,
        st2_witness=st2_witness,
        st3_pass=bool(st3_pass),
        st3_eta=float(eta),
        max_column_sum_sq=max_s2,
        st3_columns_checked=int(colsum_scan.size),
        duplicate_columns=duplicate,
    )


# ---------------------------------------------------------------------------
# closed-form tail bounds
# ---------------------------------------------------------------------------

def strip_delta(n_rows: int, n_cols: int, k: int, epsilon: float, eta: float) -> float:
    """Failure-probability bound 2 exp(-[eps-(k-1)/(C-1)]^2 N^eta / (8k)).

    Defined for eps >= (k-1)/(C-1); equality gives the vacuous value 2.
    Values >= 1 carry no information but are returned as-is.
    """
    if not (0 < eta <= 2):
        raise ValueError("eta must lie in (0, 2]")
    if k < 1 or n_cols < 2:
        raise ValueError("need k >= 1 and C >= 2")
    center = (k - 1) / (n_cols - 1)
    if epsilon < center:
        raise BoundVacuousError(
            f"bound vacuous: epsilon={epsilon} below (k-1)/(C-1)={center}")
    expo = (epsilon - center) ** 2 * n_rows ** eta / (8.0 * k)
    return 2.0 * math.exp(-expo)


def strip_delta_sharpened(n_rows: int, n_cols: int, eta: float,
                          epsilon: float, rho: float) -> float:
    """Tail bound refined by the l1/l2 ratio rho = ||a||_1 / ||a||_2.

    2 exp(-N^eta [ (eps - (C-1)^{-1})/rho - 1{rho>sqrt2} (rho^2-2)/(rho(C-1)) ]^2 / 8);
    rho = sqrt(k) recovers the generic bound up to its centering term, and
    spikier signals (smaller rho) get strictly smaller delta.
    """
    if rho < 1.0:
        raise ValueError("rho = l1/l2 ratio is at least 1")
    if not (0 < eta <= 2):
        raise ValueError("eta must lie in (0, 2]")
    inner = (epsilon - 1.0 / (n_cols - 1)) / rho
    if rho > math.sqrt(2.0):
        inner -= (rho * rho - 2.0) / (rho * (n_cols - 1))
    return 2.0 * math.exp(-(n_rows ** eta) * inner * inner / 8.0)


def coherence_mean(n_rows: int, n_cols: int, k: int) -> float:
    """Expected squared coherence (k/N) (C-N)/(C-1) of a random k-subset."""
    return (k / n_rows) * (n_cols - n_rows) / (n_cols - 1)


def coherence_threshold(n_rows: int, n_cols: int, k: int, eta: float,
                        delta: float) -> float:
    """Coherence level exceeded with probability at most delta (any column)."""
    if not (0 < delta):
        raise ValueError("delta must be positive")
    gamma = math.sqrt(2.0 * k * math.log(n_cols / delta)) / n_rows ** eta
    return coherence_mean(n_rows, n_cols, k) + gamma


@dataclass
class BoundReport:
    n_rows: int
    n_cols: int
    k: int
    epsilon: float
    eta: float
    delta: float
    coherence_mean: float
    coherence_tail: float

    def sharpened_delta(self, rho: float) -> float:
        return strip_delta_sharpened(self.n_rows, self.n_cols, self.eta,
                                     self.epsilon, rho)

    def to_dict(self) -> dict:
        return asdict(self)


def bound_report(n_rows: int, n_cols: int, k: int, epsilon: float,
                 eta: float) -> BoundReport:
    delta = strip_delta(n_rows, n_cols, k, epsilon, eta)
    return BoundReport(
        n_rows=n_rows, n_cols=n_cols, k=k, epsilon=epsilon, eta=eta,
        delta=delta,
        coherence_mean=coherence_mean(n_rows, n_cols, k),
        coherence_tail=coherence_threshold(n_rows, n_cols, k, eta,
                                           min(delta, 0.999999)),
    )


# ---------------------------------------------------------------------------
# expectation and tail experiments
# ---------------------------------------------------------------------------

def expected_energy(matrix: SensingMatrix, values, mode: str = "exact",
                    trials: int = 10000, seed: int = 0) -> float:
    """E over support placements of ||N^{-1/2} Phi alpha||^2, values fixed.

    exact mode enumerates every ordered placement of the k values over
    distinct columns (small instances only); montecarlo samples placements.
    """
    values = np.asarray(values, dtype=np.complex128)
    k = values.size
    n, c = matrix.n_rows, matrix.n_cols
    if mode == "exact":
        if c > 30 or k > 3:
            raise ValueError("exact enumeration is limited to C <= 30, k <= 3")
        dense = matrix.dense()
        total = 0.0
        count = 0
        for perm in itertools.permutations(range(c), k):
            f = (dense[:, perm] @ values) / math.sqrt(n)
            total += float(np.vdot(f, f).real)
            count += 1
        return total / count
    if mode == "montecarlo":
        total = 0.0
        for t in range(trials):
            rng = trial_rng(seed, t)
            supp = sample_distinct(rng, c, k)
            cols = matrix._columns0(supp)
            f = (values[:, None] * cols).sum(axis=0) / math.sqrt(n)
            total += float(np.vdot(f, f).real)
        return total / trials
    raise ValueError(f"unknown mode {mode!r}")


def strip_montecarlo(matrix: SensingMatrix, k: int, epsilon: float,
                     value_model: str = "sphere", trials: int = 1000,
                     seed: int = 0, chunk: int = 256) -> dict:
    """Sample random k-sparse signals and record the energy distortion.

    Per trial: uniform support, values from the model, distortion
    ||f||^2 / ||alpha||^2, violation when it leaves [1-eps, 1+eps].
    """
    if not (1 <= k < matrix.n_rows):
        raise ValueError("need 1 <= k < N")
    n, c = matrix.n_rows, matrix.n_cols
    distortions = np.empty(trials)
    for lo in range(0, trials, chunk):
        hi = min(lo + chunk, trials)
        cnt = hi - lo
        supports = np.empty((cnt, k), dtype=np.int64)
        vals = np.empty((cnt, k), dtype=np.complex128)
        for i in range(cnt):
            rng = trial_rng(seed, lo + i)
            supports[i] = sample_distinct(rng, c, k)
            vals[i] = sample_values(rng, k, value_model)
        cols = matrix._columns0(supports.reshape(-1)).reshape(cnt, k, n)
        f = np.einsum("tk,tkn->tn", vals, cols) / math.sqrt(n)
        e = np.sum(np.abs(f) ** 2, axis=1)
        distortions[lo:hi] = e / np.sum(np.abs(vals) ** 2, axis=1)
    violated = np.abs(distortions - 1.0) > epsilon
    return {
        "distortions": distortions,
        "violated": violated,
        "failure_rate": float(violated.mean()),
    }


def coherence_stats(matrix: SensingMatrix, k: int, trials: int = 1000,
                    seed: int = 0, w_policy: str = "fixed", w: int = 2,
                    eta: float = 1.0, delta: float | None = None,
                    mode: str = "montecarlo") -> dict:
    """Coherence ||N^{-1/2} Phi_kappa^H N^{-1/2} phi_w||^2 statistics.

    kappa is a uniform k-subset avoiding w.  With mode="exact" every
    k-subset is enumerated (tiny C only).  The tail fraction counts trials
    above the analytic threshold at the supplied (eta, delta); the
    threshold applies per fixed column, so the exceedance probability is
    bounded by delta (with C/delta slack to spare).
    """
    n, c = matrix.n_rows, matrix.n_cols
    if k == 0:
        return {"mean": 0.0, "max": 0.0, "tail_fraction": 0.0,
                "expected_mean": 0.0, "threshold": None, "samples": np.zeros(0)}
    if not (1 <= w <= c):
        raise ValueError("w outside [1, C]")
    expected = coherence_mean(n, c, k)
    threshold = None
    if delta is not None:
        threshold = coherence_threshold(n, c, k, eta, delta)

    if mode == "exact":
        if c > 40 or k > 3:
            raise ValueError("exact enumeration is limited to C <= 40, k <= 3")
        dense = matrix.dense()
        phiw = dense[:, w - 1]
        others = [j for j in range(c) if j != w - 1]
        inner = np.abs(dense[:, others].conj().T @ phiw) ** 2 / (n * n)
        samples = np.array([
            inner[list(sub)].sum()
            for sub in itertools.combinations(range(c - 1), k)
        ])
    else:
        samples = np.empty(trials)
        for t in range(trials):
            rng = trial_rng(seed, t)
            if w_policy == "all":
                wt = int(rng.integers(1, c + 1))
            elif w_policy == "fixed":
                wt = w
            else:
                raise ValueError(f"unknown w_policy {w_policy!r}")
            draw = sample_distinct(rng, c - 1, k)
            kappa = np.where(draw >= wt - 1, draw + 1, draw)  # skip w-1
            cols = matrix._columns0(kappa)
            phiw = matrix.column(wt)
            samples[t] = float(np.sum(np.abs(cols.conj() @ phiw) ** 2) / (n * n))
    out = {
        "samples": samples,
        "mean": float(samples.mean()),
        "max": float(samples.max()),
        "expected_mean": expected,
        "threshold": threshold,
        "tail_fraction": float((samples > threshold).mean()) if threshold else None,
    }
    return out


def condition_experiment(matrix: SensingMatrix, k: int, trials: int = 100,
                         seed: int = 0) -> dict:
    """Condition numbers sqrt(lmax/lmin) of random k-column Gram matrices.

    Singular draws (lmin <= 1e-14) are recorded as +inf, not errors.
    """
    if not (1 <= k <= matrix.n_rows):
        raise ValueError("need 1 <= k <= N")
    n, c = matrix.n_rows, matrix.n_cols
    conds = np.empty(trials)
    for t in range(trials):
        rng = trial_rng(seed, t)
        idx = sample_distinct(rng, c, k)
        cols = matrix._columns0(idx)
        gram = (cols.conj() @ cols.T) / n
        ev = hermitian_eigenvalues(gram)
        if ev[0] <= 1e-14:
            conds[t] = np.inf
        else:
            conds[t] = math.sqrt(ev[-1] / ev[0])
    finite = conds[np.isfinite(conds)]
    return {
        "conds": conds,
        "mean": float(finite.mean()) if finite.size else np.inf,
        "std": float(finite.std()) if finite.size else np.inf,
        "n_singular": int(np.sum(~np.isfinite(conds))),
    }


def uniqueness_bruteforce(matrix: SensingMatrix, alpha: SparseSignal,
                          tol: float = 1e-8) -> bool:
    """True iff no other k-sparse vector has the same image under Phi.

    Enumerates every candidate support of size k and solves the
    least-squares system; an (essentially) zero residual with a different
    coefficient vector is a counterexample.  Desk scale only.
    """
    n, c = matrix.n_rows, matrix.n_cols
    k = alpha.k
    if c > 64 or k > 3:
        raise ValueError("brute force is limited to C <= 64, k <= 3")
    dense = matrix.dense()
    avec = alpha.to_dense()
    y = dense @ avec
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0.0:
        return False
    if k == 2:
        return _uniqueness_k2(dense, avec, y, ynorm, n, c, tol)
    for sub in itertools.combinations(range(c), k):
        b = dense[:, sub]
        coef, *_ = np.linalg.lstsq(b, y, rcond=None)
        if np.linalg.norm(b @ coef - y) <= tol * ynorm:
            cand = np.zeros(c, dtype=np.complex128)
            cand[list(sub)] = coef
            if np.max(np.abs(cand - avec)) > 1e-6:
                return False
    return True


def _uniqueness_k2(dense, avec, y, ynorm, n, c, tol):
    # vectorized normal-equation solve over every column pair
    herm = dense.conj().T  # (C, N)
    b = herm @ y           # (C,)
    g = herm @ dense       # (C, C) inner products
    colsq = np.real(np.diag(g))
    i, j = np.triu_indices(c, k=1)
    gij = g[i, j]
    det = colsq[i] * colsq[j] - np.abs(gij) ** 2
    ok = det > 1e-12 * n * n
    # residual^2 = ||y||^2 - b^H G^{-1} b on each pair
    bi, bj = b[i], b[j]
    quad = np.empty(i.size)
    quad[ok] = np.real(
        colsq[j][ok] * np.abs(bi[ok]) ** 2
        + colsq[i][ok] * np.abs(bj[ok]) ** 2
        - 2.0 * np.real(np.conj(bi[ok]) * gij[ok] * bj[ok])
    ) / det[ok]
    quad[~ok] = np.inf  # dependent pair handled below
    resid2 = ynorm ** 2 - quad
    close = np.where(resid2 <= (tol * ynorm) ** 2)[0]
    for idx in close:
        sub = (int(i[idx]), int(j[idx]))
        bb = dense[:, sub]
        coef, *_ = np.linalg.lstsq(bb, y, rcond=None)
        if np.linalg.norm(bb @ coef - y) <= tol * ynorm:
            cand = np.zeros(c, dtype=np.complex128)
            cand[list(sub)] = coef
            if np.max(np.abs(cand - avec)) > 1e-6:
                return False
    # any exactly-dependent pair that can represent y is a failure
    for idx in np.where(~ok)[0]:
        sub = (int(i[idx]), int(j[idx]))
        bb = dense[:, sub]
        coef, *_ = np.linalg.lstsq(bb, y, rcond=None)
        if np.linalg.norm(bb @ coef - y) <= tol * ynorm:
            cand = np.zeros(c, dtype=np.complex128)
            cand[list(sub)] = coef
            if np.max(np.abs(cand - avec)) > 1e-6:
                return False
    return True
