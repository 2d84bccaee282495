import numpy as np
import pytest

from stripcs.algebra import (IRREDUCIBLE_POLY, BinarySymmetricMatrix,
                             BinaryVector, GF2m, GF2mElement, gf2_rank,
                             gf2m_mul, gf2m_trace, hermitian_eigenvalues,
                             z4_form_eval)
from stripcs.ensembles import build_delsarte_goethals


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def rank_oracle(mat01):
    """Row-reduction over GF(2) on an explicit 0/1 array."""
    a = np.array(mat01, dtype=np.int64) % 2
    rank = 0
    rows, cols = a.shape
    r = 0
    for c in range(cols):
        piv = None
        for i in range(r, rows):
            if a[i, c]:
                piv = i
                break
        if piv is None:
            continue
        a[[r, piv]] = a[[piv, r]]
        for i in range(rows):
            if i != r and a[i, c]:
                a[i] ^= a[r]
        r += 1
        rank += 1
    return rank


def charpoly_roots_oracle(a):
    """Eigenvalues via trace-based characteristic polynomial + companion
    matrix root finding; independent of the Jacobi iteration."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    powers = [np.eye(n, dtype=complex)]
    for _ in range(n):
        powers.append(powers[-1] @ a)
    p = [np.trace(powers[i]).real for i in range(1, n + 1)]
    e = [1.0]
    for k in range(1, n + 1):
        acc = 0.0
        for i in range(1, k + 1):
            acc += (-1) ** (i - 1) * e[k - i] * p[i - 1]
        e.append(acc / k)
    coeffs = [(-1) ** k * e[k] for k in range(n + 1)]
    return np.sort(np.roots(coeffs).real)


# ---------------------------------------------------------------------------
# binary vectors / matrices
# ---------------------------------------------------------------------------

def test_binary_vector_basics():
    v = BinaryVector(0b1011, 4)
    assert v.weight() == 3
    assert v.bit(0) == 1 and v.bit(2) == 0
    w = BinaryVector(0b0110, 4)
    assert (v ^ w).bits == 0b1101
    assert v.dot(w) == 1  # overlap at position 1 only
    with pytest.raises(ValueError):
        BinaryVector(0b10000, 4)


def test_symmetric_matrix_construction_rejects_asymmetry():
    with pytest.raises(ValueError):
        BinarySymmetricMatrix((0b10, 0b00), 2)  # (0,1) set but (1,0) clear
    m = BinarySymmetricMatrix.from_array([[1, 1], [1, 0]])
    assert m.diagonal() == 0b01
    assert (m ^ m).is_zero()


def test_gf2_rank_zero_and_identity():
    assert gf2_rank(BinarySymmetricMatrix.zero(3)) == 0
    assert gf2_rank(BinarySymmetricMatrix.identity(3)) == 3


def test_gf2_rank_against_row_reduction_oracle():
    rng = np.random.default_rng(4)
    for _ in range(50):
        m = 6
        a = rng.integers(0, 2, size=(m, m))
        a = (a + a.T) % 2
        np.fill_diagonal(a, rng.integers(0, 2, size=m))
        mat = BinarySymmetricMatrix.from_array(a)
        assert gf2_rank(mat) == rank_oracle(mat.to_array())


def test_kerdock_pairwise_sums_have_full_rank():
    dg = build_delsarte_goethals(5, 0)
    mats = [dg.matrix_of(t) for t in range(32)]
    for i in range(32):
        for j in range(i + 1, 32):
            assert gf2_rank(mats[i] ^ mats[j]) == 5


# ---------------------------------------------------------------------------
# mod-4 quadratic form
# ---------------------------------------------------------------------------

def test_z4_form_zero_cases():
    z = BinarySymmetricMatrix.zero(4)
    for x in range(16):
        assert z4_form_eval(z, 0, x) == 0
    one = BinarySymmetricMatrix.identity(1)
    assert z4_form_eval(one, 0, 1) == 1


def test_z4_form_hand_expansion():
    # P = I (m=2), b = (1,0), x = (1,1): 1 + 1 + 2*1 = 4 = 0 mod 4
    p = BinarySymmetricMatrix.identity(2)
    assert z4_form_eval(p, 0b01, 0b11) == 0


def test_z4_form_composition_identity():
    # adding two forms lands on the xor matrix with the diagonal-AND offset
    rng = np.random.default_rng(11)
    m = 3
    for _ in range(40):
        a = rng.integers(0, 2, size=(m, m))
        a = (a + a.T) % 2
        np.fill_diagonal(a, rng.integers(0, 2, size=m))
        b_ = rng.integers(0, 2, size=(m, m))
        b_ = (b_ + b_.T) % 2
        np.fill_diagonal(b_, rng.integers(0, 2, size=m))
        p1 = BinarySymmetricMatrix.from_array(a)
        p2 = BinarySymmetricMatrix.from_array(b_)
        bb1 = int(rng.integers(0, 8))
        bb2 = int(rng.integers(0, 8))
        b3 = bb1 ^ bb2 ^ (p1.diagonal() & p2.diagonal())
        for x in range(8):
            lhs = (z4_form_eval(p1, bb1, x) + z4_form_eval(p2, bb2, x)) % 4
            rhs = z4_form_eval(p1 ^ p2, b3, x)
            assert lhs == rhs


# ---------------------------------------------------------------------------
# GF(2^m)
# ---------------------------------------------------------------------------

def test_gf2m_identity_and_zero_trace():
    f = GF2m(5)
    for a in range(32):
        assert f.mul(a, 1) == a
    assert f.trace(0) == 0


def test_gf2m_trace_balanced_m3():
    f = GF2m(3)
    ones = sum(f.trace(a) for a in range(8))
    assert ones == 4


def test_gf2m_field_axioms_exhaustive_m4():
    f = GF2m(4)
    for a in range(16):
        for b in range(16):
            assert f.mul(a, b) == f.mul(b, a)
            for c in range(16):
                assert f.mul(a, b ^ c) == f.mul(a, b) ^ f.mul(a, c)
                assert f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c))


def test_gf2m_poly_table_all_primitive():
    for m in IRREDUCIBLE_POLY:
        GF2m(m)  # raises if the generator does not have full period


def test_gf2m_element_wrappers():
    f = GF2m(3)
    a = GF2mElement(5, f)
    one = GF2mElement(1, f)
    assert gf2m_mul(a, one).value == 5
    assert gf2m_trace(GF2mElement(0, f)) == 0
    g = GF2m(4)
    with pytest.raises(ValueError):
        gf2m_mul(a, GF2mElement(2, g))


def test_gf2m_mul_vec_matches_scalar():
    f = GF2m(6)
    rng = np.random.default_rng(5)
    a = rng.integers(0, 64, size=50)
    b = rng.integers(0, 64, size=50)
    vec = f.mul_vec(a, b)
    for i in range(50):
        assert vec[i] == f.mul(int(a[i]), int(b[i]))


# ---------------------------------------------------------------------------
# Hermitian eigensolver
# ---------------------------------------------------------------------------

def test_eigenvalues_identity_and_diag():
    assert np.allclose(hermitian_eigenvalues(np.eye(3)), [1, 1, 1])
    assert np.allclose(hermitian_eigenvalues(np.diag([2.0, 5.0])), [2, 5])


def test_eigenvalues_against_charpoly_oracle():
    rng = np.random.default_rng(7)
    for _ in range(20):
        b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        a = b @ b.conj().T
        mine = hermitian_eigenvalues(a)
        ref = charpoly_roots_oracle(a)
        assert np.max(np.abs(mine - ref)) < 1e-9 * max(1.0, np.max(np.abs(ref)))


def test_eigenvalues_preserve_trace_and_det():
    rng = np.random.default_rng(8)
    for n in (2, 3, 5, 8):
        b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a = b @ b.conj().T + np.eye(n)
        ev = hermitian_eigenvalues(a)
        assert abs(ev.sum() - np.trace(a).real) < 1e-9 * max(1, abs(np.trace(a)))
        det = np.linalg.det(a).real
        assert abs(np.prod(ev) - det) < 1e-9 * max(1.0, abs(det))


def test_eigenvalues_reject_non_hermitian():
    with pytest.raises(ValueError):
        hermitian_eigenvalues(np.array([[1.0, 2.0], [0.0, 1.0]]))
