from fractions import Fraction

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from haldane_hqc.spinalg import (
    ChainSpec, LocalSpin, ProductOperator, dump_operator, embed, embed_pair, heisenberg_bond, heisenberg_pair,
    is_hermitian, kron_chain, load_operator, spin_along, spin_matrices, total_spin_squared,
)
from conftest import random_state

spins = st.sampled_from([Fraction(1, 2), Fraction(1)])


@given(spins)
def test_spin_algebra(s):
    sx, sy, sz = spin_matrices(s)
    assert np.allclose(sx @ sy - sy @ sx, 1j * sz)
    assert np.allclose(sy @ sz - sz @ sy, 1j * sx)
    d = sx.shape[0]
    assert np.allclose(sx @ sx + sy @ sy + sz @ sz, float(s * (s + 1)) * np.eye(d))
    # descending basis: S^z = diag(s, s-1, ..., -s)
    assert np.allclose(np.diag(sz), float(s) - np.arange(d))


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_spin_along_spectrum(a, b, c):
    v = np.array([a, b, c])
    if np.linalg.norm(v) < 1e-3:
        return
    w = np.linalg.eigvalsh(spin_along(v, 3))
    assert np.allclose(w, [-1, 0, 1])


def test_embed_matches_kron():
    sx, _, _ = spin_matrices(1)
    dims = (3, 3, 2)
    got = embed(sx, 1, dims).toarray()
    assert np.allclose(got, np.kron(np.kron(np.eye(3), sx), np.eye(2)))


def test_embed_pair_and_bond():
    dims = (3, 2, 3)
    direct = sum(np.kron(np.kron(a, np.eye(2)), b) for a, b in zip(spin_matrices(1), spin_matrices(1)))
    assert np.allclose(heisenberg_pair(0, 2, dims).toarray(), direct)
    s = spin_matrices(1)
    assert np.allclose(embed_pair(s[2], 0, s[2], 2, dims).toarray(), np.kron(np.kron(s[2], np.eye(2)), s[2]))


def test_bond_spectrum_two_spin_ones():
    # S.S on 1 (x) 1 has eigenvalues -2 (S=0), -1 (S=1, x3), 1 (S=2, x5)
    w = np.linalg.eigvalsh(heisenberg_bond(0, (3, 3)).toarray())
    assert np.allclose(w, [-2] + [-1] * 3 + [1] * 5)


def test_kron_chain_merges_identities():
    a = np.array([[0, 1], [1, 0]])
    ops = [np.eye(3), a, np.eye(2), np.eye(3)]
    full = np.kron(np.kron(np.kron(np.eye(3), a), np.eye(2)), np.eye(3))
    assert np.allclose(kron_chain(ops).toarray(), full)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_product_operator_apply_matches_sparse(seed):
    rng = np.random.default_rng(seed)
    dims = (3, 2, 3)
    factors = tuple(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for d in dims)
    op = ProductOperator(factors)
    v = random_state(rng, op.dim, 3)
    assert np.allclose(op.apply(v), op.to_sparse() @ v)
    assert np.allclose(op.dagger().to_sparse().toarray(), op.to_sparse().toarray().conj().T)


def test_chain_spec_validation():
    c = ChainSpec.terminated(3, 1.0)
    assert c.dims == (3, 3, 3, 2) and c.dim == 54 and c.n == 3 and c.is_terminated
    assert ChainSpec.open(4).dims == (3,) * 4
    with pytest.raises(ValueError):
        ChainSpec.open(3, J=-1.0)
    with pytest.raises(ValueError):
        ChainSpec((LocalSpin(Fraction(1, 2)), LocalSpin(Fraction(1))))
    with pytest.raises(ValueError):
        LocalSpin(Fraction(3, 2))


def test_total_spin_squared_of_two_halves():
    w = np.linalg.eigvalsh(total_spin_squared((2, 2)).toarray())
    assert np.allclose(w, [0, 2, 2, 2])


def test_hermitian_check():
    h = heisenberg_bond(0, (3, 3, 2))
    assert is_hermitian(h)
    assert not is_hermitian(sp.csr_matrix(np.array([[0, 1], [0, 0]])))


def test_operator_roundtrip(tmp_path):
    op = heisenberg_bond(1, (3, 3, 2))
    dump_operator(op, tmp_path / "op.npz")
    back = load_operator(tmp_path / "op.npz")
    assert (back != op).nnz == 0
