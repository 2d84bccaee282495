"""Sensing-matrix families as O(1)-storage column oracles.

Every family evaluates columns on demand; nothing is materialized unless
the caller explicitly asks for a tiny dense copy.  Public column indices
are 1-based and column 1 of every deterministic family is the all-ones
column, the identity of the pointwise-multiplication group.

Families
--------
chirp(p)            N = p,    C = p^2       (p prime)
dg(m, r)            N = 2^m,  C = 2^{(r+2)m} (m odd; Delsarte-Goethals set)
dg_full(m)          N = 2^m,  C = 2^{m(m+1)/2 + m} (all binary symmetric P)
bch(m, t)           N = 2^m,  C = 2^{tm}    (dual extended-BCH exponentiation)
fourier(C, N, seed) random DFT rows, the all-ones row excluded
gaussian(N, C, seed) i.i.d. N(0,1) baseline (not unimodular, not a group)
"""

from __future__ import annotations

import json
import math
from functools import lru_cache

import numpy as np

from .algebra import GF2m, BinarySymmetricMatrix, gf2_rank_rows

_I4 = np.array([1.0, 1.0j, -1.0, -1.0j], dtype=np.complex128)

# A dense copy is allowed only below this entry count.
_DENSE_LIMIT = 1 << 22
# Matched-filter detection tables are built only below this size (see recon).
MATCHED_TABLE_LIMIT = 1 << 22

_COLUMN_BLOCK = 2048


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


@lru_cache(maxsize=None)
def _popcount_table(nbits: int) -> np.ndarray:
    idx = np.arange(1 << nbits, dtype=np.int64)
    pc = np.zeros(1 << nbits, dtype=np.int64)
    for b in range(nbits):
        pc += (idx >> b) & 1
    return pc


class SensingMatrix:
    """Base column oracle: N rows, C columns, pure and reentrant."""

    family = "base"

    def __init__(self, n_rows: int, n_cols: int, params: dict, seed=None):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.params = dict(params)
        self.seed = seed

    # -- column access ----------------------------------------------------
    def _columns0(self, j0s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def column(self, j: int) -> np.ndarray:
        """The j-th column, 1-based; column 1 is the group identity."""
        if not (1 <= j <= self.n_cols):
            raise IndexError(f"column index {j} outside [1, {self.n_cols}]")
        return self._columns0(np.array([j - 1], dtype=np.int64))[0]

    def columns(self, js) -> np.ndarray:
        """Batch column evaluation; ``js`` are 1-based indices."""
        j0s = np.asarray(js, dtype=np.int64) - 1
        if j0s.size and (j0s.min() < 0 or j0s.max() >= self.n_cols):
            raise IndexError("column index outside [1, C]")
        if j0s.size <= _COLUMN_BLOCK:
            return self._columns0(j0s)
        out = np.empty((j0s.size, self.n_rows), dtype=np.complex128)
        for lo in range(0, j0s.size, _COLUMN_BLOCK):
            hi = min(lo + _COLUMN_BLOCK, j0s.size)
            out[lo:hi] = self._columns0(j0s[lo:hi])
        return out

    # -- group structure (None where the family has none) ------------------
    def product_index(self, j: int, jp: int):
        """Index of the pointwise product column, or None if unknown."""
        return None

    def conjugate_index(self, j: int):
        """Index of the conjugate column, or None if unknown."""
        return None

    # -- serialization ------------------------------------------------------
    def spec(self) -> dict:
        out = {"family": self.family, "params": dict(self.params)}
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    def spec_json(self) -> str:
        return json.dumps(self.spec(), sort_keys=True)

    def dense(self) -> np.ndarray:
        """Materialize the full matrix (N, C); tiny instances only."""
        if self.n_rows * self.n_cols > _DENSE_LIMIT:
            raise ValueError("matrix too large to materialize")
        return self.columns(np.arange(1, self.n_cols + 1)).T.copy()

    def export_csv(self, path) -> None:
        """Row-major CSV with each entry written as a re,im field pair."""
        mat = self.dense()
        with open(path, "w") as fh:
            fh.write(f"# spec: {self.spec_json()}\n")
            for x in range(self.n_rows):
                cells = []
                for z in mat[x]:
                    cells.append(repr(float(z.real)))
                    cells.append(repr(float(z.imag)))
                fh.write(",".join(cells) + "\n")

    def __repr__(self):
        return f"<{type(self).__name__} {self.n_rows}x{self.n_cols} {self.params}>"


class ChirpMatrix(SensingMatrix):
    """Discrete chirps phi_{mp+r}(x) = w^r w^{mx + rx^2}, w = exp(2*pi*i/p).

    The leading w^r phase makes every row sum vanish.  Flat 0-based index
    m*p + r encodes base frequency m and chirp rate r.
    """

    family = "chirp"

    def __init__(self, p: int):
        if not (3 <= p <= 1024) or not _is_prime(p):
            raise ValueError(f"p must be a prime in [3, 1024], got {p}")
        super().__init__(p, p * p, {"p": p})
        self.p = p
        self._roots = np.exp(2j * np.pi * np.arange(p) / p)

    def _columns0(self, j0s):
        p = self.p
        mm = j0s // p
        rr = j0s % p
        x = np.arange(p, dtype=np.int64)
        e = (rr[:, None] * (1 + x * x)[None, :] + mm[:, None] * x[None, :]) % p
        return self._roots[e]

    def pair_index(self, m: int, r: int) -> int:
        """1-based column index of the (base frequency, chirp rate) pair."""
        return m * self.p + r + 1

    def product_index(self, j, jp):
        p = self.p
        m1, r1 = divmod(j - 1, p)
        m2, r2 = divmod(jp - 1, p)
        return ((m1 + m2) % p) * p + (r1 + r2) % p + 1

    def conjugate_index(self, j):
        p = self.p
        m1, r1 = divmod(j - 1, p)
        return ((-m1) % p) * p + (-r1) % p + 1


class _QuadraticPhaseMatrix(SensingMatrix):
    """Shared machinery for families with columns i^{wt(d_P)+2wt(b)} i^{xPx^T+2bx^T}.

    Subclasses provide the generator matrices of the (GF(2)-linear) set of
    binary symmetric matrices.  Flat 0-based index = t * 2^m + b where t
    selects the GF(2) combination of generators and b the linear offset.
    """

    def __init__(self, m: int, gen_rows, family: str, params: dict):
        self.m = m
        n = 1 << m
        self._gen_rows = np.asarray(gen_rows, dtype=np.int64)  # (G, m)
        self.n_gen = self._gen_rows.shape[0]
        super().__init__(n, 1 << (self.n_gen + m), params)
        self.family = family
        self._pc = _popcount_table(m)
        x = np.arange(n, dtype=np.int64)
        self._xbits = np.stack([(x >> u) & 1 for u in range(m)], axis=1)  # (N, m)
        self._check_generators()

    def _check_generators(self):
        m = self.m
        # Symmetry of every generator.
        for g in range(self.n_gen):
            rows = [int(r) for r in self._gen_rows[g]]
            BinarySymmetricMatrix(tuple(rows), m)
        # GF(2)-independence, so |set| = 2^G with no repeated columns.
        vecs = []
        for g in range(self.n_gen):
            v = 0
            pos = 0
            for u in range(m):
                for w in range(u, m):
                    v |= ((int(self._gen_rows[g, u]) >> w) & 1) << pos
                    pos += 1
            vecs.append(v)
        if gf2_rank_rows(vecs) != self.n_gen:
            raise ValueError("generator matrices are GF(2)-dependent")
        self._gen_vecs = vecs

    # -- index helpers -----------------------------------------------------
    def split_index(self, j: int):
        """1-based column index -> (t, b) labels."""
        j0 = j - 1
        return j0 >> self.m, j0 & (self.n_rows - 1)

    def flat_index(self, t: int, b: int) -> int:
        return (t << self.m) + b + 1

    def matrix_rows(self, t: int) -> np.ndarray:
        rows = np.zeros(self.m, dtype=np.int64)
        for g in range(self.n_gen):
            if (t >> g) & 1:
                rows ^= self._gen_rows[g]
        return rows

    def matrix_of(self, t: int) -> BinarySymmetricMatrix:
        return BinarySymmetricMatrix(tuple(int(r) for r in self.matrix_rows(t)), self.m)

    def rows_to_index(self, rows) -> int:
        """Solve for the generator combination giving these matrix rows.

        Returns the t label, or -1 when the matrix is outside the set.
        """
        m = self.m
        v = 0
        pos = 0
        for u in range(m):
            for w in range(u, m):
                v |= ((int(rows[u]) >> w) & 1) << pos
                pos += 1
        # Gaussian elimination over the generator vectors, tracking combos.
        if not hasattr(self, "_solve_basis"):
            basis = []  # (vec, combo)
            for g, vec in enumerate(self._gen_vecs):
                cur, combo = vec, 1 << g
                for bv, bc in basis:
                    if cur ^ bv < cur:
                        cur ^= bv
                        combo ^= bc
                basis.append((cur, combo))
            self._solve_basis = basis
        cur, combo = v, 0
        for bv, bc in self._solve_basis:
            if cur ^ bv < cur:
                cur ^= bv
                combo ^= bc
        return combo if cur == 0 else -1

    # -- evaluation ----------------------------------------------------------
    def _rows_batch(self, ts: np.ndarray) -> np.ndarray:
        rows = np.zeros((ts.size, self.m), dtype=np.int64)
        for g in range(self.n_gen):
            sel = (ts >> g) & 1
            rows ^= sel[:, None] * self._gen_rows[g][None, :]
        return rows

    def _quad_form_many(self, rows: np.ndarray, xs: np.ndarray) -> np.ndarray:
        """Integer values of x P x^T for each matrix (rows) and each x."""
        q = np.zeros((rows.shape[0], xs.size), dtype=np.int64)
        for u in range(self.m):
            xu = (xs >> u) & 1
            q += xu[None, :] * self._pc[rows[:, u][:, None] & xs[None, :]]
        return q

    def _columns0(self, j0s):
        m = self.m
        n = self.n_rows
        ts = j0s >> m
        bs = j0s & (n - 1)
        rows = self._rows_batch(ts)
        xs = np.arange(n, dtype=np.int64)
        q = self._quad_form_many(rows, xs)
        q += 2 * self._pc[bs[:, None] & xs[None, :]]
        diag = np.zeros(ts.size, dtype=np.int64)
        for u in range(m):
            diag |= ((rows[:, u] >> u) & 1) << u
        phase = self._pc[diag] + 2 * self._pc[bs]
        return _I4[(q + phase[:, None]) % 4]

    # -- group structure ------------------------------------------------------
    def product_index(self, j, jp):
        t1, b1 = self.split_index(j)
        t2, b2 = self.split_index(jp)
        d1 = int(self.matrix_of(t1).diagonal())
        d2 = int(self.matrix_of(t2).diagonal())
        return self.flat_index(t1 ^ t2, b1 ^ b2 ^ (d1 & d2))

    def conjugate_index(self, j):
        # Unimodular group: the conjugate is the inverse, phi * conj(phi) = 1.
        t, b = self.split_index(j)
        d = int(self.matrix_of(t).diagonal())
        return self.flat_index(t, b ^ d)


def _dg_generators(m: int, r: int, field: GF2m):
    """Generator matrices of the Delsarte-Goethals set DG(m, r).

    Level j = 0 contributes the Kerdock set: Gram matrices of the bilinear
    form (X, Y) -> tr(t X Y), full rank for every t != 0.  Level j >= 1
    contributes the zero-diagonal symmetric matrices of the polarized forms
    (X, Y) -> tr(t (X^{2^j} Y + X Y^{2^j})).  The GF(2) span has size
    2^{(r+1)m} and every nonzero member has rank >= m - 2r.
    """
    basis = [1 << u for u in range(m)]
    gens = []
    for j in range(r + 1):
        for g in range(m):
            t = basis[g]
            rows = []
            for u in range(m):
                row = 0
                for v in range(m):
                    if j == 0:
                        e = field.mul(basis[u], basis[v])
                        bit = field.trace(field.mul(t, e))
                    elif u == v:
                        bit = 0
                    else:
                        e = field.mul(field.pow(basis[u], (1 << j)), basis[v])
                        e ^= field.mul(basis[u], field.pow(basis[v], (1 << j)))
                        bit = field.trace(field.mul(t, e))
                    row |= bit << v
                rows.append(row)
            gens.append(rows)
    return gens


class DelsarteGoethalsMatrix(_QuadraticPhaseMatrix):
    """Delsarte-Goethals / Kerdock family: N = 2^m rows, C = 2^{(r+2)m} columns."""

    def __init__(self, m: int, r: int):
        if m % 2 == 0 or not (3 <= m <= 15):
            raise ValueError(f"m must be odd in [3, 15], got {m}")
        if not (0 <= r <= (m - 1) // 2):
            raise ValueError(f"r must be in [0, {(m - 1) // 2}], got {r}")
        self.r = r
        self.field = GF2m(m)
        gens = _dg_generators(m, r, self.field)
        super().__init__(m, gens, "dg", {"m": m, "r": r})


class FullSymmetricMatrix(_QuadraticPhaseMatrix):
    """Every binary symmetric matrix as a chirp label; any m >= 2.

    The top of the Delsarte-Goethals nesting for odd m, and the natural
    stand-in at even m where the trace construction does not apply.
    """

    def __init__(self, m: int):
        if not (2 <= m <= 9):
            raise ValueError(f"m must be in [2, 9], got {m}")
        gens = []
        for u in range(m):
            for v in range(u, m):
                rows = [0] * m
                rows[u] |= 1 << v
                rows[v] |= 1 << u
                gens.append(rows)
        super().__init__(m, gens, "dg_full", {"m": m})


class BCHMatrix(SensingMatrix):
    """Exponentiated dual extended-BCH codewords: N = 2^m, C = 2^{tm}.

    Codeword for coefficients (a_1, a_3, ..., a_{2t-1}) has bits
    c_x = tr(a_1 x + a_3 x^3 + ... + a_{2t-1} x^{2t-1}) over all x in
    GF(2^m); column entries are (-1)^{b c^T} (-1)^{c_x} with a fixed offset
    vector b chosen so that no row sum survives.
    """

    family = "bch"

    def __init__(self, m: int, t: int):
        if not (4 <= m <= 14):
            raise ValueError(f"m must be in [4, 14], got {m}")
        if t < 2 or (2 * t - 1) >= (1 << math.ceil(m / 2)):
            raise ValueError(f"need t >= 2 and 2t-1 < 2^ceil(m/2), got t={t}")
        self.m = m
        self.t = t
        self.field = GF2m(m)
        n = 1 << m
        self.exponents = [2 * i + 1 for i in range(t)]
        xs = np.arange(n, dtype=np.int64)
        self._pows = np.stack(
            [np.array([self.field.pow(int(x), e) for x in xs], dtype=np.int64)
             for e in self.exponents]
        )  # (t, N)
        # Generator codewords as N-bit ints: one per (exponent, basis bit).
        gens = []
        for ei in range(t):
            for g in range(m):
                bits = self.field.tr[self.field.mul_vec(1 << g, self._pows[ei])]
                word = 0
                for x in range(n):
                    word |= int(bits[x]) << x
                gens.append(word)
        if gf2_rank_rows(gens) != t * m:
            raise ValueError("degenerate dual code: generators are dependent")
        self._gens = gens
        super().__init__(n, 1 << (t * m), {"m": m, "t": t})
        self._offset = self._pick_offset()

    def _syndrome(self, word: int) -> int:
        s = 0
        for i, g in enumerate(self._gens):
            s |= ((word & g).bit_count() & 1) << i
        return s

    def _pick_offset(self) -> int:
        # Row x has zero sum iff b xor e_x is not orthogonal to the code;
        # equivalently syndrome(b) differs from every single-position
        # syndrome (and from 0, so b itself is not orthogonal either).
        n = self.n_rows
        forbidden = {0}
        for x in range(n):
            forbidden.add(self._syndrome(1 << x))
        b = 1
        while self._syndrome(b) in forbidden:
            b += 1
            if b >> n:
                raise RuntimeError("no valid offset vector found")
        return b

    def codeword_bits(self, j: int) -> int:
        """The codeword of column j (1-based) as an N-bit int."""
        j0 = j - 1
        word = 0
        for i in range(self.t * self.m):
            if (j0 >> i) & 1:
                word ^= self._gens[i]
        return word

    def _columns0(self, j0s):
        n = self.n_rows
        mask = (1 << self.m) - 1
        c = np.zeros((j0s.size, n), dtype=np.int64)
        for ei in range(self.t):
            coef = (j0s >> (ei * self.m)) & mask
            c ^= self.field.tr[self.field.mul_vec(coef[:, None], self._pows[ei][None, :])]
        # sign from the offset vector: parity of c restricted to b's support
        sign = np.zeros(j0s.size, dtype=np.int64)
        b = self._offset
        x = 0
        while b >> x:
            if (b >> x) & 1:
                sign ^= c[:, x]
            x += 1
        return ((1 - 2 * c) * (1 - 2 * sign)[:, None]).astype(np.complex128)

    def product_index(self, j, jp):
        # Coefficient tuples add over GF(2), so flat labels simply xor.
        return ((j - 1) ^ (jp - 1)) + 1

    def conjugate_index(self, j):
        return j  # real +-1 columns are self-conjugate


class PartialFourierMatrix(SensingMatrix):
    """N rows drawn without replacement from the C x C DFT, row 0 excluded.

    Keeping the all-ones DFT row would leave one row sum equal to C, so the
    draw is over rows 1..C-1.  Column j (0-based label j-1) has entries
    exp(2*pi*i * row * (j-1) / C); column 1 is all-ones.
    """

    family = "fourier"

    def __init__(self, n_cols: int, n_rows: int, seed: int):
        if not (n_rows < n_cols <= (1 << 20)):
            raise ValueError("need N < C <= 2^20")
        super().__init__(n_rows, n_cols, {"C": n_cols, "N": n_rows}, seed=seed)
        rng = np.random.Generator(np.random.PCG64(seed))
        rows = rng.choice(n_cols - 1, size=n_rows, replace=False) + 1
        self.rows = np.sort(rows).astype(np.int64)
        self._roots = np.exp(2j * np.pi * np.arange(n_cols) / n_cols)

    def _columns0(self, j0s):
        e = (j0s[:, None] * self.rows[None, :]) % self.n_cols
        return self._roots[e]

    def product_index(self, j, jp):
        return ((j - 1) + (jp - 1)) % self.n_cols + 1

    def conjugate_index(self, j):
        return (-(j - 1)) % self.n_cols + 1


class GaussianMatrix(SensingMatrix):
    """i.i.d. standard normal baseline; column j is its own seeded stream.

    Entries come from Box-Muller on a counter-based generator keyed by
    (seed, column), so any column can be regenerated independently and the
    whole matrix is bit-identical across runs.
    """

    family = "gaussian"

    def __init__(self, n_rows: int, n_cols: int, seed: int):
        if n_rows < 1 or n_cols < 1:
            raise ValueError("need positive dimensions")
        super().__init__(n_rows, n_cols, {"N": n_rows, "C": n_cols}, seed=seed)

    def _column_real(self, j0: int) -> np.ndarray:
        n = self.n_rows
        pairs = (n + 1) // 2
        key = np.array([self.seed, j0], dtype=np.uint64)
        rng = np.random.Generator(np.random.Philox(key=key))
        u = rng.random(2 * pairs)
        u1 = 1.0 - u[:pairs]  # (0, 1]: keeps the log finite
        u2 = u[pairs:]
        rad = np.sqrt(-2.0 * np.log(u1))
        z = np.empty(2 * pairs)
        z[0::2] = rad * np.cos(2 * np.pi * u2)
        z[1::2] = rad * np.sin(2 * np.pi * u2)
        return z[:n]

    def _columns0(self, j0s):
        out = np.empty((j0s.size, self.n_rows), dtype=np.complex128)
        for i, j0 in enumerate(j0s):
            out[i] = self._column_real(int(j0))
        return out


class SubsampledMatrix(SensingMatrix):
    """A seeded random column subset of a base matrix.

    Used when the sparsity regime needs C smaller than the structural
    column count.  Group closure generally does not survive subsampling.
    """

    family = "subsample"

    def __init__(self, base: SensingMatrix, n_cols: int, seed: int):
        if not (1 <= n_cols <= base.n_cols):
            raise ValueError("subsample size outside [1, C]")
        self.base = base
        rng = np.random.Generator(np.random.PCG64(seed))
        if base.n_cols <= (1 << 24):
            chosen = rng.choice(base.n_cols, size=n_cols, replace=False)
        else:
            # Sequential rejection keeps the draw deterministic without an
            # O(C) permutation buffer.
            seen: set = set()
            order = []
            while len(order) < n_cols:
                cand = int(rng.integers(0, base.n_cols))
                if cand not in seen:
                    seen.add(cand)
                    order.append(cand)
            chosen = np.array(order, dtype=np.int64)
        self.chosen = np.sort(chosen).astype(np.int64)
        super().__init__(
            base.n_rows, n_cols,
            {"base": base.spec(), "n_cols": n_cols}, seed=seed,
        )

    def _columns0(self, j0s):
        return self.base._columns0(self.chosen[j0s])


# -- builders ---------------------------------------------------------------

def build_chirp(p: int) -> ChirpMatrix:
    return ChirpMatrix(p)


def build_delsarte_goethals(m: int, r: int) -> DelsarteGoethalsMatrix:
    return DelsarteGoethalsMatrix(m, r)


def build_dg_full(m: int) -> FullSymmetricMatrix:
    return FullSymmetricMatrix(m)


def build_bch(m: int, t: int) -> BCHMatrix:
    return BCHMatrix(m, t)


def build_partial_fourier(n_cols: int, n_rows: int, seed: int) -> PartialFourierMatrix:
    return PartialFourierMatrix(n_cols, n_rows, seed)


def build_gaussian(n_rows: int, n_cols: int, seed: int) -> GaussianMatrix:
    return GaussianMatrix(n_rows, n_cols, seed)


def subsample_columns(base: SensingMatrix, n_cols: int, seed: int) -> SubsampledMatrix:
    return SubsampledMatrix(base, n_cols, seed)


def column(matrix: SensingMatrix, j: int) -> np.ndarray:
    """Functional form of matrix.column(j); j is 1-based."""
    return matrix.column(j)


def matrix_from_spec(spec: dict) -> SensingMatrix:
    """Rebuild a matrix from its {family, params, seed} description."""
    family = spec["family"]
    p = spec.get("params", {})
    if family == "chirp":
        return build_chirp(p["p"])
    if family == "dg":
        return build_delsarte_goethals(p["m"], p["r"])
    if family == "dg_full":
        return build_dg_full(p["m"])
    if family == "bch":
        return build_bch(p["m"], p["t"])
    if family == "fourier":
        return build_partial_fourier(p["C"], p["N"], spec["seed"])
    if family == "gaussian":
        return build_gaussian(p["N"], p["C"], spec["seed"])
    if family == "subsample":
        return subsample_columns(matrix_from_spec(p["base"]), p["n_cols"], spec["seed"])
    raise ValueError(f"unknown family {family!r}")
