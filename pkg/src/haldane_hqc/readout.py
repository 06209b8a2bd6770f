"""Boundary-spin readout and measurement-based initialization of a terminated chain.

Decoupling the boundary spin with no field conserves total spin, so the
spin-1/2 chain state splits into boundary Sz = m components by Clebsch-Gordan
recoupling of 1 (x) 1/2 -> 1/2. The readout rule is about the *input*: m = +1
means the input was projected onto |0>, m = -1 onto |1>, and m = 0 applies a
logical Z. The shortened chain left behind holds the complementary edge state:
after m = +1 it is |1> in its own Sigma frame, after m = -1 it is |0>.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .eigen import GroundSubspace, ground_subspace
from .errors import ConfigError, ConvergenceError, LeakageError
from .evolve import propagate
from .holonomy import LogicalFrame, chain_frame
from .model import PAULI_Z, decoupling_path, terminated_chain
from .output import write_csv
from .spinalg import ChainSpec, total_spin_squared

RNG_ALGORITHM = "numpy.random.Generator(PCG64)"
BOUNDARY_VALUES = (1, 0, -1)  # site-0 Sz in the descending basis order
INTERPRETATION = {1: "project |0>", -1: "project |1>", 0: "Z-rotation"}
LEAKAGE_LIMIT = 0.05
DEFAULT_T = 40.0


@dataclass(frozen=True)
class MeasurementOutcome:
    m: int
    probability: float
    post_state: Optional[np.ndarray]  # on the chain with site 0 removed; None when probability is 0
    interpretation: str


@dataclass
class DecoupledState:
    state: np.ndarray
    leakage: float
    norm_drift: float
    spin_squared: list[float] = field(default_factory=list)  # <S_tot^2> along the ramp


def _sites_ok(n: int) -> None:
    if n < 2:
        raise ConfigError("readout needs a terminated chain with n >= 2")


def decouple_no_field(state: np.ndarray, n: int, T_total: float = DEFAULT_T, *, J: float = 1.0,
                      beta_bq: float = 0.0, dt: Optional[float] = None, log_every: int = 0,
                      leakage_limit: float = LEAKAGE_LIMIT) -> DecoupledState:
    """Ramp the boundary bond to zero with no local field.

    The final manifold is (free spin-1) (x) (ground doublet of the n-1 chain).
    Raises LeakageError when the weight outside it exceeds ``leakage_limit``.
    """
    _sites_ok(n)
    path = decoupling_path(n, None, T_total, J, beta_bq)
    rest = _chain_ground(n - 1, J, beta_bq)
    final = GroundSubspace(np.kron(np.eye(3), rest.vectors), np.repeat(rest.energies, 3), rest.next_energy)
    observables = None
    if log_every:
        s2 = total_spin_squared(path.layout)
        observables = {"spin_squared": lambda v: s2 @ v}
    res = propagate(state, path, dt, final_subspace=final, observables=observables, log_every=log_every)
    if res.leakage > leakage_limit:
        raise LeakageError(f"decoupling leaked {res.leakage:.3g} (> {leakage_limit}); slow the ramp")
    trace = [float(row["spin_squared"].real) for row in res.trajectory] if log_every else []
    return DecoupledState(res.final, res.leakage, res.norm_drift, trace)


def measure_boundary(state: np.ndarray, tol: float = 1e-14) -> list[MeasurementOutcome]:
    """Born-rule projective measurement of site-0 Sz (site 0 is the leading spin-1 factor)."""
    psi = np.asarray(state, dtype=complex)
    if psi.size % 3:
        raise ValueError("state does not have a leading spin-1 factor")
    blocks = psi.reshape(3, -1)
    total = float(np.vdot(psi, psi).real)
    out = []
    for row, m in zip(blocks, BOUNDARY_VALUES):
        p = float(np.vdot(row, row).real) / total
        post = row / np.linalg.norm(row) if p > tol else None
        out.append(MeasurementOutcome(m, p, post, INTERPRETATION[m]))
    return out


def embed_boundary(m: int, chain_state: np.ndarray) -> np.ndarray:
    """|S_0^z = m> (x) chain_state on the full chain."""
    e = np.zeros(3, dtype=complex)
    e[BOUNDARY_VALUES.index(m)] = 1.0
    return np.kron(e, chain_state)


@lru_cache(maxsize=16)
def _chain_ground(n: int, J: float, beta_bq: float) -> GroundSubspace:
    return ground_subspace(terminated_chain(n, J, beta_bq), 2)


def chain_logical_frame(n: int, J: float = 1.0, beta_bq: float = 0.0) -> LogicalFrame:
    return chain_frame(_chain_ground(n, J, beta_bq), ChainSpec.terminated(n, J, beta_bq))


def logical_state(frame: LogicalFrame, label: str) -> np.ndarray:
    """Named logical states: 0, 1, +, -, +i, -i."""
    s = 1 / np.sqrt(2)
    amps = {"0": (1, 0), "1": (0, 1), "+": (s, s), "-": (s, -s), "+i": (s, 1j * s), "-i": (s, -1j * s)}
    if label not in amps:
        raise ConfigError(f"unknown logical state {label!r}")
    return frame.state(amps[label])


def clebsch_gordan_probabilities(amplitudes: Sequence[complex]) -> dict[int, float]:
    """Ideal edge-mode prediction: P(+1) = 2|a|^2/3, P(0) = 1/3, P(-1) = 2|b|^2/3."""
    a, b = np.asarray(amplitudes, dtype=complex) / np.linalg.norm(amplitudes)
    return {1: 2 * abs(a) ** 2 / 3, 0: 1 / 3, -1: 2 * abs(b) ** 2 / 3}


# ---------------------------------------------------------------------------
# Initialization by repeated measurement


@dataclass
class ReadoutMaps:
    """Cached linear maps for one chain length and ramp duration.

    ``decouple``: frame amplitudes on the n chain -> full state after the no-field ramp.
    ``recouple``: frame amplitudes of the n-1 chain (boundary at m = 0) -> frame
    amplitudes on the n chain after the reversed z-field ramp.
    """

    n: int
    T: float
    frame_n: LogicalFrame
    frame_short: LogicalFrame
    decouple: np.ndarray  # (dim_n, 2)
    recouple: np.ndarray  # (2, 2)
    decouple_leakage: float
    recouple_leakage: float


def readout_maps(n: int, T_total: float = DEFAULT_T, J: float = 1.0, beta_bq: float = 0.0,
                 dt: Optional[float] = None) -> ReadoutMaps:
    _sites_ok(n)
    frame_n = chain_logical_frame(n, J, beta_bq)
    frame_short = chain_logical_frame(n - 1, J, beta_bq)
    dec = decouple_no_field(frame_n.vectors, n, T_total, J=J, beta_bq=beta_bq, dt=dt)
    back = decoupling_path(n, "z", T_total, J, beta_bq).reversed()
    start = np.column_stack([embed_boundary(0, frame_short.vectors[:, j]) for j in range(2)])
    res = propagate(start, back, dt, final_subspace=_chain_ground(n, J, beta_bq))
    rec = frame_n.vectors.conj().T @ res.final
    return ReadoutMaps(n, float(T_total), frame_n, frame_short, dec.state, rec, dec.leakage, res.leakage)


def recover_after_zero(maps: ReadoutMaps, post_state: np.ndarray) -> np.ndarray:
    """Recouple the m = 0 post-state; returns (renormalised) frame amplitudes on the n chain."""
    amps = maps.recouple @ (maps.frame_short.vectors.conj().T @ post_state)
    return amps / np.linalg.norm(amps)


@dataclass
class InitResult:
    label: str  # logical state of the n-1 chain in its own frame
    state: np.ndarray  # on the n-1 chain
    amplitudes: np.ndarray  # in the n-1 frame
    attempts: int
    outcomes: list[int]
    sigma_z: float


def initialize(n: int, seed: int, max_attempts: int = 50, *, start: Optional[Sequence[complex]] = None,
               maps: Optional[ReadoutMaps] = None, T_total: float = DEFAULT_T, J: float = 1.0,
               beta_bq: float = 0.0) -> InitResult:
    """Measure the boundary until |m| = 1, recoupling after every m = 0 outcome.

    ``start`` gives the initial frame amplitudes (default a fixed generic state).
    Raises ConvergenceError after ``max_attempts`` failures.
    """
    maps = maps or readout_maps(n, T_total, J, beta_bq)
    rng = np.random.default_rng(seed)
    amps = np.asarray(start if start is not None else (0.6, 0.8j), dtype=complex)
    amps = amps / np.linalg.norm(amps)
    outcomes = []
    for attempt in range(1, max_attempts + 1):
        state = maps.decouple @ amps
        results = measure_boundary(state)
        probs = np.array([r.probability for r in results])
        pick = results[int(rng.choice(3, p=probs / probs.sum()))]
        outcomes.append(pick.m)
        if pick.m == 0:
            amps = recover_after_zero(maps, pick.post_state)
            continue
        short = maps.frame_short.vectors.conj().T @ pick.post_state
        short = short / np.linalg.norm(short)
        label = "1" if pick.m == 1 else "0"
        sz = float(abs(short[0]) ** 2 - abs(short[1]) ** 2)
        return InitResult(label, pick.post_state, short, attempts=attempt, outcomes=outcomes, sigma_z=sz)
    raise ConvergenceError(f"no |m| = 1 outcome within {max_attempts} attempts")


def attempt_statistics(n: int, trials: int, seed: int, maps: Optional[ReadoutMaps] = None,
                       **kw) -> np.ndarray:
    """Attempts needed by ``trials`` independent initializations seeded from ``seed``."""
    maps = maps or readout_maps(n, **kw)
    seeds = np.random.SeedSequence(seed).generate_state(trials)
    return np.array([initialize(n, int(s), maps=maps).attempts for s in seeds])


def sample_outcomes(outcomes: Sequence[MeasurementOutcome], shots: int, seed: int) -> dict[int, float]:
    rng = np.random.default_rng(seed)
    probs = np.array([o.probability for o in outcomes])
    draws = rng.choice(len(outcomes), size=shots, p=probs / probs.sum())
    counts = np.bincount(draws, minlength=len(outcomes))
    return {o.m: float(c) / shots for o, c in zip(outcomes, counts)}


def write_statistics_csv(path, rows: Sequence[tuple[str, int, float, float, int]], header: Sequence[str] = ()) -> None:
    """Rows of (input label, m, probability_analytic, probability_sampled, n_samples)."""
    write_csv(path, ["input", "m", "probability_analytic", "probability_sampled", "n_samples"], rows, header)


def z_corrected(amplitudes: Sequence[complex]) -> np.ndarray:
    return PAULI_Z @ np.asarray(amplitudes, dtype=complex)
