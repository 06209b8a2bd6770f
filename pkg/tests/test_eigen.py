import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from haldane_hqc import eigen
from haldane_hqc.eigen import (
    cluster_spins, dense_oracle, fit_correlation_length, gap_along_path, ground_subspace, principal_angles,
    residuals, spin_from_s2, splitting_scan,
)
from haldane_hqc.errors import GapClosureError
from haldane_hqc.model import AKLT_BETA, decoupling_path, open_chain, terminated_chain
from haldane_hqc.spinalg import ChainSpec


def test_terminated_single_site_spectrum():
    sub = ground_subspace(terminated_chain(1), 2)
    assert np.allclose(sub.energies, [-1, -1], atol=1e-10)
    assert sub.gap == pytest.approx(1.5, abs=1e-10)
    assert cluster_spins((3, 2), ground_subspace(terminated_chain(1), 5)) == [0.5, 0.5, 1.5, 1.5, 1.5]


def test_two_site_ground_energy_and_spin():
    sub = ground_subspace(open_chain(2), 1)
    assert sub.energies[0] == pytest.approx(-2.0, abs=1e-10)
    assert cluster_spins((3, 3), sub) == [0.0]


def test_sparse_path_matches_dense_oracle(monkeypatch):
    H = terminated_chain(4, 1.0, 0.1)
    # k = 2 closes the ground doublet; k = 3 would cut through the triplet above it
    ref = dense_oracle(H, 2)
    monkeypatch.setattr(eigen, "DENSE_CUTOFF", 0)
    sub = ground_subspace(H, 2)
    assert np.allclose(sub.energies, ref.energies, atol=1e-9)
    assert sub.next_energy == pytest.approx(ref.next_energy, abs=1e-8)
    assert np.max(principal_angles(sub.vectors, ref.vectors)) < 1e-6
    assert np.max(residuals(H, sub)) < 1e-8


def test_sparse_solver_finds_exact_degeneracy(monkeypatch):
    # four exactly degenerate AKLT states: the deflation check must not miss copies
    monkeypatch.setattr(eigen, "DENSE_CUTOFF", 0)
    sub = ground_subspace(open_chain(7, 1.0, AKLT_BETA), 4)
    assert sub.splitting < 1e-10
    assert sub.gap > 0.1
    assert np.allclose(sub.vectors.conj().T @ sub.vectors, np.eye(4), atol=1e-10)


def test_matrix_free_operator_input():
    path = decoupling_path(4, "z", 5.0)
    a = ground_subspace(path.operator(2.0), 2, check_hermitian=False)
    b = ground_subspace(path.hamiltonian(2.0), 2)
    assert np.allclose(a.energies, b.energies, atol=1e-9)


def test_bad_k():
    with pytest.raises(ValueError):
        ground_subspace(open_chain(1), 3)


def test_non_hermitian_rejected():
    with pytest.raises(ValueError):
        ground_subspace(sp.csr_matrix(np.triu(np.ones((4, 4)))), 1)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_principal_angles_gauge_invariant(seed):
    rng = np.random.default_rng(seed)
    a, _ = np.linalg.qr(rng.normal(size=(20, 3)) + 1j * rng.normal(size=(20, 3)))
    u, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    assert np.max(principal_angles(a, a @ u)) < 1e-7


@pytest.mark.parametrize("s", [0, 0.5, 1, 1.5, 2])
def test_spin_from_s2(s):
    assert spin_from_s2(s * (s + 1) + 1e-9) == s


def test_splitting_alternation_small():
    rows = splitting_scan(4, 7)
    assert [r.spin for r in rows] == [0, 1, 0, 1]
    s = [r.splitting for r in rows]
    assert s[2] < s[0] and s[3] < s[1]  # decays within each parity class
    assert fit_correlation_length(rows) > 0


def test_aklt_open_chain_degeneracy():
    for n in (2, 4, 6):
        sub = ground_subspace(open_chain(n, 1.0, AKLT_BETA), 4)
        assert sub.splitting < 1e-12 and abs(sub.energies[0]) < 1e-12


def test_gap_along_path():
    rows = gap_along_path(decoupling_path(3, "z", 5.0), samples=5)
    assert len(rows) == 5 and min(r.gap for r in rows) > 0.2
    assert max(r.splitting for r in rows) < 1e-10


def test_gap_closure_detected():
    # with no field the detached spin-1 is free: sixfold degenerate at the end
    path = decoupling_path(2, None, 5.0)
    with pytest.raises(GapClosureError):
        gap_along_path(path, samples=3, k=2)
