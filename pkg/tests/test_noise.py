import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from haldane_hqc.errors import ConfigError, ConvergenceError, GapClosureError
from haldane_hqc.model import AKLT_BETA, sigma, single_qubit_path, single_qubit_target
from haldane_hqc.noise import (
    PerturbationSpec, fit_exponent, gate_error_scan, scan_summary, splitting_under_perturbation, write_scan_csv,
)
from haldane_hqc.output import read_csv
from haldane_hqc.spinalg import ChainSpec


def test_spec_validation():
    with pytest.raises(ConfigError):
        PerturbationSpec("random")
    with pytest.raises(ConfigError):
        PerturbationSpec("d2", "u")
    with pytest.raises(ConfigError):
        PerturbationSpec("boundary", strength=-1.0)
    with pytest.raises(ConfigError):
        PerturbationSpec("bulk", sites=(6,)).target_sites(ChainSpec.terminated(6))


def test_target_sites():
    chain = ChainSpec.terminated(6)
    assert PerturbationSpec("boundary").target_sites(chain) == (0,)
    assert PerturbationSpec("bulk").target_sites(chain) == (3,)
    assert PerturbationSpec("homogeneous").target_sites(chain) == tuple(range(6))
    assert PerturbationSpec("d2").target_sites(chain) == tuple(range(1, 6))


def test_d2_term_commutes_with_sigma():
    chain = ChainSpec.terminated(3)
    V = PerturbationSpec("d2", "x").operator(chain).toarray()
    for a in "xyz":
        s = sigma(a, chain.dims).matrix().toarray()
        assert np.max(np.abs(V @ s - s @ V)) < 1e-12


def test_boundary_field_splits_linearly():
    chain = ChainSpec.terminated(4, 1.0, AKLT_BETA)
    s = [splitting_under_perturbation(chain, PerturbationSpec("boundary", "z", h)).splitting for h in (1e-4, 1e-3)]
    assert s[1] / s[0] == pytest.approx(10, rel=1e-3)


def test_bulk_field_splitting_suppressed_with_distance():
    chain = ChainSpec.terminated(6, 1.0, AKLT_BETA)
    near = splitting_under_perturbation(chain, PerturbationSpec("bulk", "z", 0.05, sites=(1,))).splitting
    far = splitting_under_perturbation(chain, PerturbationSpec("bulk", "z", 0.05, sites=(4,))).splitting
    assert far < near / 10


def test_d2_perturbation_keeps_degeneracy():
    r = splitting_under_perturbation(ChainSpec.terminated(5), PerturbationSpec("d2", "z", 0.1))
    assert r.splitting < 1e-9


def test_gap_closure_guard():
    with pytest.raises(GapClosureError):
        splitting_under_perturbation(ChainSpec.terminated(3), PerturbationSpec("boundary", "z", 5.0))
    with pytest.raises(ConfigError):
        splitting_under_perturbation(ChainSpec.open(3), PerturbationSpec("boundary", "z", 0.1))


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(1e-3, 1e3))
def test_fit_exponent_recovers_power_law(p, c):
    h = np.logspace(-4, -2, 9)
    fit = fit_exponent(h, c * h ** p)
    assert fit.exponent == pytest.approx(p, abs=1e-8)
    assert fit.ci95[0] <= fit.exponent <= fit.ci95[1]


def test_fit_exponent_needs_points():
    with pytest.raises(ValueError):
        fit_exponent([1e-3, 1e-2], [1.0, 2.0])


@pytest.fixture(scope="module")
def small_scan():
    path = single_qubit_path(3, "z", "x", (10.0, 10.0, 10.0))
    return gate_error_scan(path, PerturbationSpec("boundary", "z"), [1e-4, 3e-4, 1e-3, 3e-3],
                           target=single_qubit_target("z", "x"), dt=0.1, baseline_min=0.99)


def test_gate_error_scan_rows(small_scan):
    assert [r.h for r in small_scan.rows] == [1e-4, 3e-4, 1e-3, 3e-3]
    p = [r.p_logical for r in small_scan.rows]
    assert all(b > a for a, b in zip(p, p[1:]))
    assert small_scan.fits["p_logical"].exponent == pytest.approx(1.0, abs=0.1)
    assert small_scan.fits["infidelity"].exponent == pytest.approx(2.0, abs=0.2)


def test_scan_outputs(small_scan, tmp_path):
    write_scan_csv(tmp_path / "s.csv", small_scan, ["kind: boundary"])
    header, rows = read_csv(tmp_path / "s.csv")
    assert list(rows[0]) == ["h", "p_L", "p_leak", "splitting", "infidelity"] and len(rows) == 4
    summary = scan_summary(small_scan)
    assert summary["perturbation_kind"] == "boundary" and "p_logical_exponent" in summary


def test_baseline_guard():
    path = single_qubit_path(3, "z", "x", (0.5, 0.5, 0.5))
    with pytest.raises(ConvergenceError):
        gate_error_scan(path, PerturbationSpec("bulk", "z"), [1e-3], target=single_qubit_target("z", "x"))


AKLT8 = ChainSpec.terminated(8, 1.0, AKLT_BETA)


def test_boundary_splitting_slope_at_aklt_point():
    hs = np.logspace(-3, -1, 5)
    s = [splitting_under_perturbation(AKLT8, PerturbationSpec("boundary", "z", h)).splitting for h in hs]
    assert fit_exponent(hs, s).exponent == pytest.approx(1.0, abs=0.1)


def test_d2_anisotropy_keeps_splitting_at_n8():
    chain = ChainSpec.terminated(8)
    bare = splitting_under_perturbation(chain, PerturbationSpec("d2", "z", 0.0)).splitting
    pert = splitting_under_perturbation(chain, PerturbationSpec("d2", "z", 0.1)).splitting
    assert pert <= 10 * max(bare, 1e-12)


def test_bulk_vs_boundary_contrast():
    # default bulk site is the middle of the chain; the contrast there is 3^4 = 81
    b = splitting_under_perturbation(AKLT8, PerturbationSpec("boundary", "z", 0.05)).splitting
    u = splitting_under_perturbation(AKLT8, PerturbationSpec("bulk", "z", 0.05)).splitting
    assert b / u >= 1e2
