import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from haldane_hqc.aklt import (
    aklt_ground_space, aklt_hamiltonian, bulk_rotation_leakage, leakage_scan, schwinger_vbs,
    terminated_vs_open_fidelity, vbs_family, vbs_state, write_leakage_csv,
)
from haldane_hqc.eigen import principal_angles
from haldane_hqc.errors import ConfigError
from haldane_hqc.model import PAULI_X, PAULI_Y, PAULI_Z, parse_axis
from haldane_hqc.output import read_csv


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("terminated", [True, False])
def test_mps_matches_schwinger_expansion(n, terminated):
    a = vbs_state(n, 0.6, 0.8j, terminated, (0.8, 0.6)).vector
    b = schwinger_vbs(n, 0.6, 0.8j, terminated, (0.8, 0.6))
    assert abs(abs(np.vdot(a, b)) - 1) < 1e-12


@pytest.mark.parametrize("n, terminated", [(3, True), (6, True), (3, False), (6, False)])
def test_vbs_states_have_zero_energy_and_span_ground_space(n, terminated):
    H = aklt_hamiltonian(n, terminated)
    v = vbs_state(n, 0.6, 0.8j, terminated).vector
    assert abs(np.vdot(v, H @ v)) < 1e-12
    assert np.linalg.norm(H @ v) < 1e-12
    ground = aklt_ground_space(n, terminated)
    assert ground.k == (2 if terminated else 4)
    assert np.max(np.abs(ground.energies)) < 1e-10
    assert np.max(principal_angles(vbs_family(n, terminated), ground.vectors)) < 1e-6


def test_aklt_hamiltonian_positive():
    w = np.linalg.eigvalsh(aklt_hamiltonian(4, True).toarray())
    assert w[0] > -1e-12


def test_unnormalized_edge_rejected():
    with pytest.raises(ConfigError):
        vbs_state(3, 1.0, 1.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, np.pi - 0.01), st.sampled_from(["x", "y", "z", "u"]), st.integers(1, 4))
def test_bulk_rotation_amplitude_is_cos_half_angle(theta, axis, site):
    r = bulk_rotation_leakage(vbs_state(6, 0.6, 0.8j), site, axis, theta)
    assert r.ground_amplitude == pytest.approx(np.cos(theta / 2), abs=1e-10)
    # the triplet-bond state overlaps the ground manifold by an amount falling as 3^-distance
    assert r.leaked_weight == pytest.approx(np.sin(theta / 2) ** 2, abs=2e-2)
    assert np.allclose(r.logical_action, np.eye(2), atol=1e-10)


@pytest.mark.parametrize("theta", [0.3, 1.2, 2.5])
def test_bulk_leakage_independent_of_encoded_state(theta):
    ws = [bulk_rotation_leakage(vbs_state(6, a, b), 3, "x", theta).leaked_weight
          for a, b in [(1, 0), (0, 1), (0.6, 0.8j), (np.sqrt(0.5), -np.sqrt(0.5))]]
    assert np.ptp(ws) < 1e-10


@pytest.mark.parametrize("axis", ["x", "y", "z", "0.3,0.4,0.5"])
def test_boundary_rotation_is_logical_rotation(axis):
    theta = 0.9
    m = parse_axis(axis)
    target = expm(-0.5j * theta * (m[0] * PAULI_X + m[1] * PAULI_Y + m[2] * PAULI_Z))
    r = bulk_rotation_leakage(vbs_state(5), 0, axis, theta)
    action = r.logical_action / np.linalg.norm(r.logical_action[:, 0])
    assert np.max(np.abs(action - target)) < 1e-8


def test_pi_rotation_has_no_ground_component():
    r = bulk_rotation_leakage(vbs_state(4), 2, "z", np.pi)
    assert r.ground_amplitude < 1e-12 and np.all(np.isnan(r.logical_action))


def test_site_range_checked():
    with pytest.raises(ConfigError):
        bulk_rotation_leakage(vbs_state(4, terminated=False), 3, "x", 0.5)
    with pytest.raises(ConfigError):
        bulk_rotation_leakage(vbs_state(4), 0, "x", 0.5, mode="other")


def test_site_mode_reports_physical_weight():
    r = bulk_rotation_leakage(vbs_state(4), 2, "x", 0.0, mode="site")
    assert r.physical_ground_weight == pytest.approx(1.0)


def test_leakage_scan_csv(tmp_path):
    rows = leakage_scan(4, [1, 2], ["x"], [0.0, 1.0])
    assert len(rows) == 4
    write_leakage_csv(tmp_path / "scan.csv", rows, ["n: 4"])
    header, data = read_csv(tmp_path / "scan.csv")
    assert header == ["n: 4"] and len(data) == 4


@pytest.mark.parametrize("n", [2, 4, 6])
def test_aklt_terminated_vs_open_fidelity_is_one(n):
    assert terminated_vs_open_fidelity(n, 1 / 3) == pytest.approx(1.0, abs=1e-10)


def test_heisenberg_terminated_vs_open_fidelity_below_one():
    f = terminated_vs_open_fidelity(4)
    assert 0.9 < f < 1.0
