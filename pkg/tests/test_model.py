import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from haldane_hqc.model import (
    AKLT_BETA, CPHASE, PAULI_X, PAULI_Y, PAULI_Z, XX_CPHASE, SchedulePath, Segment, TwoChainSpec, bond_term,
    decoupling_path, field_term, open_chain, parse_axis, sigma, single_qubit_path, single_qubit_target,
    terminated_chain, two_chain_conserved, two_qubit_path, w_interaction, w_symmetries, xi_state,
)
from haldane_hqc.spinalg import ChainSpec, is_hermitian
from conftest import random_state


def dense(op):
    return op.toarray() if sp.issparse(op) else np.asarray(op)


def test_parse_axis():
    assert np.allclose(parse_axis("x"), [1, 0, 0])
    assert np.allclose(parse_axis("u"), np.array([1, 1, 0]) / np.sqrt(2))
    assert np.allclose(parse_axis("0,0,2"), [0, 0, 1])
    assert np.allclose(parse_axis([0, 3, 4]), [0, 0.6, 0.8])
    for bad in ("w", "0,0,0", "1,2"):
        with pytest.raises(ValueError):
            parse_axis(bad)


def test_aklt_bond_is_twice_spin2_projector():
    w = np.linalg.eigvalsh(bond_term(3, 3, AKLT_BETA))
    assert np.allclose(w, [0] * 4 + [2] * 5)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_chain_hamiltonians_hermitian(n):
    assert is_hermitian(open_chain(n))
    assert is_hermitian(terminated_chain(n, 1.0, 0.2))


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 1))
def test_path_hamiltonian_hermitian_and_matches_operator(frac):
    path = single_qubit_path(3, "z", "x", (4.0, 4.0, 4.0))
    t = frac * path.duration
    H = path.hamiltonian(t)
    assert is_hermitian(H)
    v = random_state(np.random.default_rng(0), path.dim)
    assert np.allclose(path.operator(t).matvec(v), H @ v)


def test_path_endpoints_are_the_coupled_chain():
    path = single_qubit_path(3, "z")
    H_end = dense(path.hamiltonian(path.duration))
    assert np.allclose(dense(path.hamiltonian(0.0)), dense(terminated_chain(3)))
    assert np.allclose(H_end, dense(terminated_chain(3)))


def test_reversed_path_weights():
    path = single_qubit_path(3, "z", "x", (2.0, 3.0, 4.0))
    back = path.reversed()
    assert back.duration == pytest.approx(path.duration)
    for t in np.linspace(0, path.duration, 11):
        assert np.allclose(dense(back.hamiltonian(path.duration - t)), dense(path.hamiltonian(t)))


def test_segment_continuity_is_enforced():
    dims = (3, 3, 2)
    static = terminated_chain(2)
    with pytest.raises(ValueError):
        SchedulePath(dims, static, static, [Segment(1.0, (1, 0, 0), (0, 1, 0), [0, 0, 1], [0, 0, 1]),
                                            Segment(1.0, (1, 0, 0), (0, 0, 0))], field_site=0)


@pytest.mark.parametrize("m, mperp", [("z", "x"), ("x", "y"), ("u", "v")])
def test_control_operators_trace_orthogonal(m, mperp):
    ops = [dense(bond_term(3, 3)), np.kron(field_term(m), np.eye(3)), np.kron(field_term(mperp), np.eye(3))]
    for i in range(3):
        for j in range(i + 1, 3):
            assert abs(np.trace(ops[i].conj().T @ ops[j])) < 1e-12


# -- Sigma operators ---------------------------------------------------------


@pytest.mark.parametrize("n", [1, 3])
def test_sigma_pauli_algebra_full_space(n):
    dims = ChainSpec.terminated(n).dims
    sx, sy, sz = (dense(sigma(a, dims).matrix()) for a in "xyz")
    eye = np.eye(sx.shape[0])
    for s in (sx, sy, sz):
        assert np.allclose(s @ s, eye)
        assert np.allclose(s, s.conj().T)
    assert np.allclose(sx @ sy, 1j * sz)
    assert np.allclose(sy @ sz, 1j * sx)
    assert np.allclose(sz @ sx, 1j * sy)


def test_sigma_commutes_with_terminated_chain():
    H = dense(terminated_chain(3, 1.0, 0.1))
    for a in "xyz":
        s = dense(sigma(a, ChainSpec.terminated(3).dims).matrix())
        assert np.max(np.abs(H @ s - s @ H)) < 1e-12


@pytest.mark.parametrize("axis", ["x", "z", "u"])
def test_decoupling_path_conserves_its_sigma(axis):
    path = decoupling_path(3, axis, 5.0)
    m = parse_axis(axis)
    s = dense(sigma(m, path.layout).matrix())
    for t in np.linspace(0, 5.0, 7):
        H = dense(path.hamiltonian(t))
        assert np.max(np.abs(H @ s - s @ H)) < 1e-12


def test_single_qubit_target():
    assert np.allclose(single_qubit_target("z"), np.eye(2))  # sigma^z sigma^z
    assert np.allclose(single_qubit_target("z", "x"), PAULI_X @ PAULI_Z)
    assert np.allclose(PAULI_X @ PAULI_Z, -1j * PAULI_Y)


# -- two-chain interaction -----------------------------------------------------


def test_xi_is_unique_w_ground_state():
    w, v = np.linalg.eigh(dense(w_interaction()))
    assert w[1] - w[0] > 0.1
    assert abs(abs(np.vdot(v[:, 0], xi_state())) - 1) < 1e-12


def test_w_symmetry_eigenvalues_on_xi():
    W = dense(w_interaction())
    xi = xi_state()
    expected = [-1, -1, 1, 1, -1j]
    for (name, U, ev, _), e in zip(w_symmetries(), expected):
        assert ev == e
        assert np.max(np.abs(U @ W - W @ U)) < 1e-12, name
        assert np.allclose(U @ xi, e * xi), name


def test_two_chain_conserved_commute_with_path():
    spec = TwoChainSpec(ChainSpec.terminated(2), ChainSpec.terminated(2))
    path = two_qubit_path(spec, (5.0,))
    rng = np.random.default_rng(1)
    v = random_state(rng, path.dim)
    for _, U, _ in two_chain_conserved(spec):
        for t in np.linspace(0, 5.0, 4):
            H = path.hamiltonian(t)
            assert np.linalg.norm(H @ U.apply(v) - U.apply(H @ v)) < 1e-10


def test_xx_cphase_matrix():
    anti = np.fliplr(np.diag([1, 1, 1, -1]))
    assert np.allclose(np.abs(XX_CPHASE), np.abs(anti))
    assert np.allclose(XX_CPHASE, np.kron(PAULI_X, PAULI_X) @ CPHASE)


def test_two_chain_spec_validation():
    with pytest.raises(ValueError):
        TwoChainSpec(ChainSpec.open(3), ChainSpec.terminated(3))
    with pytest.raises(ValueError):
        TwoChainSpec(ChainSpec.terminated(1), ChainSpec.terminated(3))
