import numpy as np
import pytest

from icoswitch.paulialg import (
    PauliContext,
    coeffs_to_matrix,
    pauli_coeffs,
    pauli_coeffs_batch,
    sparse_coeffs_to_matrix,
)

PAULIS = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


def dense_reference(ctx, s):
    out = np.array([[1]], dtype=complex)
    for d in ctx.digits[s]:
        out = np.kron(out, PAULIS[d])
    return out


def rand_herm(rng, d):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (m + m.conj().T) / 2


@pytest.mark.parametrize("q", [1, 2, 3])
def test_dense_matches_kron_reference(q):
    ctx = PauliContext(q)
    for s in range(ctx.npatterns):
        assert np.abs(ctx.dense(s) - dense_reference(ctx, s)).max() < 1e-14


@pytest.mark.parametrize("q", [1, 2, 3])
def test_coeff_roundtrip_and_orthogonality(q):
    ctx = PauliContext(q)
    rng = np.random.default_rng(q)
    m = rng.normal(size=(ctx.dim, ctx.dim)) + 1j * rng.normal(size=(ctx.dim, ctx.dim))
    c = pauli_coeffs(m, q)
    # coefficients agree with Tr[P_s M]/2^q
    for s in range(ctx.npatterns):
        assert abs(c[s] - np.trace(ctx.dense(s) @ m) / ctx.dim) < 1e-12
    assert np.abs(coeffs_to_matrix(c, q) - m).max() < 1e-12


def test_coeff_batch_matches_single():
    q = 3
    rng = np.random.default_rng(5)
    mats = rng.normal(size=(4, 8, 8)) + 1j * rng.normal(size=(4, 8, 8))
    batch = pauli_coeffs_batch(mats, q)
    for k in range(4):
        assert np.abs(batch[k] - pauli_coeffs(mats[k], q)).max() < 1e-12


@pytest.mark.parametrize("q", [1, 2])
def test_product_phase_exhaustive(q):
    ctx = PauliContext(q)
    for s in range(ctx.npatterns):
        ps = ctx.dense(s)
        for t in range(ctx.npatterns):
            prod = ps @ ctx.dense(t)
            u = int(ctx.xor(s, t))
            gamma = complex(ctx.product_phase(s, t))
            assert np.abs(prod - gamma * ctx.dense(u)).max() < 1e-12


def test_product_phase_random_large():
    ctx = PauliContext(7)
    rng = np.random.default_rng(11)
    for _ in range(24):
        s, t = rng.integers(0, ctx.npatterns, size=2)
        ps, pt = ctx.dense(int(s)), ctx.dense(int(t))
        u = int(ctx.xor(s, t))
        gamma = complex(ctx.product_phase(s, t))
        assert np.abs(ps @ pt - gamma * ctx.dense(u)).max() < 1e-12


@pytest.mark.parametrize("q", [2, 3])
def test_shift_rows_matches_dense_product(q):
    ctx = PauliContext(q)
    rng = np.random.default_rng(q + 7)
    v = rand_herm(rng, ctx.dim)
    vhat = pauli_coeffs(v, q)
    rows = rng.integers(0, ctx.npatterns, size=6)
    F = ctx.shift_rows(rows, vhat)
    for r, s in enumerate(rows):
        direct = pauli_coeffs(ctx.dense(int(s)) @ v, q)
        assert np.abs(F[r] - direct).max() < 1e-11


def test_gram_identity_tr_avbv():
    # Tr[A V B V] = 2^q * sum_u F_A(u) F_B(u) with F rows from shift_rows
    q = 3
    ctx = PauliContext(q)
    rng = np.random.default_rng(29)
    v = rand_herm(rng, ctx.dim)
    vhat = pauli_coeffs(v, q)
    a_pat = [3, 17, 40]
    b_pat = [5, 17, 63]
    ca = rng.normal(size=3)
    cb = rng.normal(size=3)
    A = sparse_coeffs_to_matrix(a_pat, ca, ctx)
    B = sparse_coeffs_to_matrix(b_pat, cb, ctx)
    FA = ca @ ctx.shift_rows(a_pat, vhat)
    FB = cb @ ctx.shift_rows(b_pat, vhat)
    lhs = np.trace(A @ v @ B @ v)
    rhs = ctx.dim * (FA * FB).sum()
    assert abs(lhs - rhs) < 1e-10


def test_sparse_synthesis_matches_dense():
    q = 3
    ctx = PauliContext(q)
    rng = np.random.default_rng(31)
    pats = [0, 9, 33, 51]
    vals = rng.normal(size=4) + 1j * rng.normal(size=4)
    direct = sum(v * ctx.dense(p) for p, v in zip(pats, vals))
    assert np.abs(sparse_coeffs_to_matrix(pats, vals, ctx) - direct).max() < 1e-13
