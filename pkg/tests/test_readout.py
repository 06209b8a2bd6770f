import numpy as np
import pytest
from hypothesis import given, strategies as st

from haldane_hqc.errors import ConfigError, ConvergenceError
from haldane_hqc.readout import (
    attempt_statistics, chain_logical_frame, clebsch_gordan_probabilities, decouple_no_field, embed_boundary,
    initialize, logical_state, measure_boundary, readout_maps, recover_after_zero, sample_outcomes, z_corrected,
)

N = 4


@pytest.fixture(scope="module")
def maps():
    return readout_maps(N, 40.0, dt=0.25)


def test_measure_boundary_born_rule():
    chain = np.array([0.6, 0.8])
    state = (np.sqrt(0.5) * embed_boundary(1, chain) + np.sqrt(0.3) * embed_boundary(0, chain)
             + np.sqrt(0.2) * embed_boundary(-1, chain))
    outs = measure_boundary(state)
    assert [o.m for o in outs] == [1, 0, -1]
    assert np.allclose([o.probability for o in outs], [0.5, 0.3, 0.2])
    for o in outs:
        assert np.allclose(o.post_state, chain)


def test_zero_probability_outcome_has_no_post_state():
    outs = measure_boundary(embed_boundary(1, np.array([1.0, 0.0])))
    assert outs[1].post_state is None and outs[1].probability == 0


@given(st.complex_numbers(max_magnitude=10), st.complex_numbers(max_magnitude=10))
def test_cg_probabilities_normalized(a, b):
    if abs(a) + abs(b) < 1e-3:
        return
    p = clebsch_gordan_probabilities([a, b])
    assert sum(p.values()) == pytest.approx(1.0)
    assert p[0] == pytest.approx(1 / 3)


@pytest.mark.parametrize("label", ["0", "1", "+", "-i"])
def test_statistics_match_cg_oracle(maps, label):
    frame = maps.frame_n
    amps = frame.vectors.conj().T @ logical_state(frame, label)
    outs = measure_boundary(maps.decouple @ amps)
    oracle = clebsch_gordan_probabilities(amps)
    for o in outs:
        assert o.probability == pytest.approx(oracle[o.m], abs=1e-3)


def test_post_states_hold_complementary_edge(maps):
    amps = np.array([0.6, 0.8j])
    outs = {o.m: o for o in measure_boundary(maps.decouple @ amps)}
    short = maps.frame_short.vectors.conj().T
    assert abs(short @ outs[1].post_state)[1] == pytest.approx(1.0, abs=1e-3)
    assert abs(short @ outs[-1].post_state)[0] == pytest.approx(1.0, abs=1e-3)
    # m = 0 applies a logical Z to the short chain
    zero = short @ outs[0].post_state
    assert abs(np.vdot(z_corrected(amps), zero)) == pytest.approx(1.0, abs=1e-3)


def test_recover_after_zero_restores_input(maps):
    amps = np.array([0.6, 0.8j])
    zero = [o for o in measure_boundary(maps.decouple @ amps) if o.m == 0][0]
    assert abs(np.vdot(amps, recover_after_zero(maps, zero.post_state))) >= 0.99


def test_no_field_decoupling_conserves_total_spin():
    frame = chain_logical_frame(3)
    ds = decouple_no_field(frame.vectors[:, 0], 3, 20.0, dt=0.25, log_every=10)
    assert np.allclose(ds.spin_squared, 0.75, atol=1e-8)
    assert ds.norm_drift < 1e-8


def test_initialize_reproducible(maps):
    a = initialize(N, 7, maps=maps)
    b = initialize(N, 7, maps=maps)
    assert a.outcomes == b.outcomes and a.label == b.label
    assert np.allclose(a.state, b.state)
    assert a.outcomes[-1] in (1, -1) and all(m == 0 for m in a.outcomes[:-1])
    assert abs(a.sigma_z) == pytest.approx(1.0, abs=1e-3)
    assert a.sigma_z * (1 if a.label == "0" else -1) > 0


def test_initialize_gives_up(maps):
    results = []
    for seed in range(30):
        try:
            results.append(initialize(N, seed, max_attempts=1, maps=maps).attempts)
        except ConvergenceError:
            results.append(None)
    assert None in results and 1 in results


def test_attempt_statistics_mean(maps):
    attempts = attempt_statistics(N, 2000, 99, maps=maps)
    assert attempts.min() >= 1
    assert attempts.mean() == pytest.approx(1.5, abs=0.1)
    assert np.array_equal(attempts, attempt_statistics(N, 2000, 99, maps=maps))


def test_sample_outcomes(maps):
    outs = measure_boundary(maps.decouple @ np.array([1.0, 0.0]))
    freq = sample_outcomes(outs, 20000, 3)
    assert freq[1] == pytest.approx(2 / 3, abs=0.02) and freq[-1] == 0.0
    assert freq == sample_outcomes(outs, 20000, 3)


def test_bad_inputs():
    with pytest.raises(ConfigError):
        logical_state(chain_logical_frame(2), "2")
    with pytest.raises(ConfigError):
        readout_maps(1)
