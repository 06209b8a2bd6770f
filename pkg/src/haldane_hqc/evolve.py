"""Real-time propagation along a schedule and discrete parallel transport of its ground space."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg as la

from .eigen import GroundSubspace, ground_subspace
from .errors import ConvergenceError, GapClosureError
from .model import SchedulePath, Segment

KRYLOV_DIM = 20
KRYLOV_MAX_DIM = 40
KRYLOV_TOL = 1e-12

# commutator-free fourth-order exponential integrator (two exponentials per step)
_C1 = 0.5 - np.sqrt(3) / 6
_C2 = 0.5 + np.sqrt(3) / 6
_A1 = (3 - 2 * np.sqrt(3)) / 12
_A2 = (3 + 2 * np.sqrt(3)) / 12


def krylov_expm(matvec: Callable[[np.ndarray], np.ndarray], v: np.ndarray, dt: float,
                m_max: int = KRYLOV_MAX_DIM, tol: float = KRYLOV_TOL) -> np.ndarray:
    """exp(-i dt A) v for Hermitian A given by ``matvec``, via Lanczos with full reorthogonalisation.

    Raises ConvergenceError when the a-posteriori error estimate is not met within
    ``m_max`` Krylov vectors; callers shrink the step and retry.
    """
    beta0 = np.linalg.norm(v)
    if beta0 == 0:
        return np.zeros_like(v, dtype=complex)
    basis = np.empty((m_max + 1, v.size), dtype=complex)
    basis[0] = v / beta0
    alpha: list[float] = []
    beta: list[float] = []
    for j in range(m_max):
        w = np.asarray(matvec(basis[j]), dtype=complex)
        a = float(np.vdot(basis[j], w).real)
        alpha.append(a)
        w = w - basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
        w = w - basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
        b = float(np.linalg.norm(w))
        evals, evecs = la.eigh_tridiagonal(np.array(alpha), np.array(beta)) if j else (np.array(alpha), np.ones((1, 1)))
        coeff = evecs @ (np.exp(-1j * dt * evals) * evecs[0].conj())
        err = b * abs(coeff[-1])
        if err < tol or b < 1e-14 * max(1.0, abs(a)):
            return beta0 * (basis[: j + 1].T @ coeff)
        beta.append(b)
        basis[j + 1] = w / b
    raise ConvergenceError(f"Krylov exponential not converged (estimate {err:.1e})")


class _Combo:
    """Matrix-free sum of H at several times with weights; static part applied once."""

    def __init__(self, path: SchedulePath, terms: Sequence[tuple[float, float]]):
        self.path = path
        self.ws = 0.0
        self.g = 0.0
        self.w = 0.0
        self.fields = []
        for c, t in terms:
            (g, f, w), axis = path.weights(t)
            self.ws += c
            self.g += c * g
            self.w += c * w
            if f and axis is not None:
                self.fields.append((c * f, path.field_operator(axis)))

    def matvec(self, v):
        p = self.path
        out = self.ws * (p.static @ v)
        if self.g:
            out += self.g * (p.coupling @ v)
        if self.w and p.interaction is not None:
            out += self.w * (p.interaction @ v)
        for c, op in self.fields:
            out += c * (op @ v)
        return out


@dataclass
class PropagationResult:
    initial: np.ndarray  # (dim, k)
    final: np.ndarray  # (dim, k) images of the initial columns
    leakage: float
    norm_drift: float
    steps: int
    wall_time: float
    final_subspace: Optional[GroundSubspace] = None
    trajectory: list[dict] = field(default_factory=list)


def default_dt(path: SchedulePath) -> float:
    """min(0.02/J, T_seg/200) over the segments."""
    return min([0.02 / path.J] + [s.duration / 200 for s in path.segments])


def _step_cf4(path: SchedulePath, psi: np.ndarray, t: float, dt: float) -> np.ndarray:
    t1, t2 = t + _C1 * dt, t + _C2 * dt
    first = _Combo(path, [(_A2, t1), (_A1, t2)])
    second = _Combo(path, [(_A1, t1), (_A2, t2)])
    return krylov_expm(second.matvec, krylov_expm(first.matvec, psi, dt), dt)


def _advance(path: SchedulePath, psi: np.ndarray, t: float, dt: float, depth: int = 0) -> np.ndarray:
    try:
        return _step_cf4(path, psi, t, dt)
    except ConvergenceError:
        if depth > 6:
            raise ConvergenceError("step-size rejection: Krylov exponential fails even for dt/64")
        half = dt / 2
        return _advance(path, _advance(path, psi, t, half, depth + 1), t + half, half, depth + 1)


def time_grid(path: SchedulePath, dt: float) -> np.ndarray:
    """Step endpoints aligned with segment boundaries."""
    edges = path.boundaries()
    pts = [0.0]
    for a, b in zip(edges[:-1], edges[1:]):
        steps = max(1, int(np.ceil((b - a) / dt - 1e-9)))
        pts.extend(np.linspace(a, b, steps + 1)[1:])
    return np.array(pts)


def propagate(initial: np.ndarray, path: SchedulePath, dt: Optional[float] = None, *,
              final_subspace: Optional[GroundSubspace] = None, k: Optional[int] = None,
              observables: Optional[dict[str, Callable[[np.ndarray], np.ndarray]]] = None,
              log_every: int = 0) -> PropagationResult:
    """Solve i d(psi)/dt = H(t) psi along ``path`` for each column of ``initial``.

    Leakage is 1 - (sum of squared singular values of the final ground-space
    projection)/k, with the final ground space of dimension ``k`` (default: the
    number of columns) computed at the end of the path unless supplied.
    """
    start = time.perf_counter()
    psi0 = np.asarray(initial, dtype=complex)
    single = psi0.ndim == 1
    psi0 = psi0.reshape(psi0.shape[0], -1)
    norms = np.linalg.norm(psi0, axis=0)
    if np.any(np.abs(norms - 1) > 1e-8):
        raise ValueError("initial states must be normalized")
    dt = default_dt(path) if dt is None else float(dt)
    if not dt > 0:
        raise ValueError("dt must be positive")
    grid = time_grid(path, dt)
    psi = psi0.copy()
    trajectory = []
    for i, (ta, tb) in enumerate(zip(grid[:-1], grid[1:])):
        if log_every and i % log_every == 0:
            trajectory.append(_log_row(path, ta, psi, observables))
        psi = np.column_stack([_advance(path, psi[:, j], ta, tb - ta) for j in range(psi.shape[1])])
    if log_every:
        trajectory.append(_log_row(path, grid[-1], psi, observables))
    drift = float(np.max(np.abs(np.linalg.norm(psi, axis=0) - 1)))
    k = psi.shape[1] if k is None else k
    if final_subspace is None:
        final_subspace = ground_subspace(path.hamiltonian(path.duration), k, check_hermitian=False)
    overlap = final_subspace.vectors.conj().T @ psi
    sv = np.linalg.svd(overlap, compute_uv=False)
    leakage = float(np.clip(1 - np.sum(sv ** 2) / psi.shape[1], 0.0, 1.0))
    return PropagationResult(psi0[:, 0] if single else psi0, psi[:, 0] if single else psi, leakage, drift,
                             len(grid) - 1, time.perf_counter() - start, final_subspace, trajectory)


def _log_row(path: SchedulePath, t: float, psi: np.ndarray, observables) -> dict:
    H = path.operator(t)
    row = {"t": float(t)}
    v = psi[:, 0]
    row["energy"] = float(np.vdot(v, H.matvec(v)).real)
    for name, fn in (observables or {}).items():
        row[name] = complex(np.vdot(v, fn(v)))
    return row


def rescaled(path: SchedulePath, T_total: float) -> SchedulePath:
    """Same path with every segment stretched so the total duration is ``T_total``."""
    scale = float(T_total) / path.duration
    segs = [Segment(s.duration * scale, s.start, s.end, s.axis_start, s.axis_end, s.ramp) for s in path.segments]
    return SchedulePath(path.layout, path.static, path.coupling, segs, path.interaction, path.field_site, path.J,
                        dict(path.meta))


# ---------------------------------------------------------------------------
# Parallel transport


MIN_OVERLAP_SV = 0.5


@dataclass
class TransportResult:
    holonomy: np.ndarray  # k x k, from initial-basis coordinates to final-basis coordinates
    initial: np.ndarray  # (dim, k)
    final: np.ndarray  # (dim, k)
    min_singular_value: float
    steps: int
    raw_deviation: float  # distance of the raw overlap product from unitarity
    min_gap: float
    max_splitting: float

    @property
    def outputs(self) -> np.ndarray:
        """Images of the initial basis vectors under the adiabatic map."""
        return self.final @ self.holonomy


def _polar_unitary(m: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def _hamiltonian_at(path: SchedulePath, t: float):
    return path.hamiltonian(t) if path.dim <= 200_000 else path.operator(t)


def transport_once(path: SchedulePath, steps_per_segment: int, k: int, tol: float = 1e-10,
                   tiebreak=None) -> TransportResult:
    edges = path.boundaries()
    times = [0.0]
    for a, b in zip(edges[:-1], edges[1:]):
        times.extend(np.linspace(a, b, steps_per_segment + 1)[1:])
    large = path.dim > 200_000
    H0 = _hamiltonian_at(path, 0.0)
    prev = ground_subspace(H0, k, tol, tiebreak=tiebreak,
                           check_hermitian=False)
    first = prev.vectors
    product = np.eye(k, dtype=complex)
    min_sv = 1.0
    min_gap = prev.gap
    max_split = prev.splitting
    for t in times[1:]:
        H = _hamiltonian_at(path, t)
        v0 = prev.vectors @ np.ones(k)
        # large warm-started solves skip the deflation check; a missed copy shows up in the overlap
        cur = ground_subspace(H, k, tol, v0=v0, check_hermitian=False, verify=not large)
        overlap = cur.vectors.conj().T @ prev.vectors
        sv = np.linalg.svd(overlap, compute_uv=False)
        if large and sv.min() < MIN_OVERLAP_SV:
            cur = ground_subspace(H, k, tol, v0=v0, check_hermitian=False)
            overlap = cur.vectors.conj().T @ prev.vectors
            sv = np.linalg.svd(overlap, compute_uv=False)
        if cur.gap <= max(1e-6, 10 * cur.splitting):
            raise GapClosureError(f"ground degeneracy not isolated at t={t:.4g} (gap {cur.gap:.2e})")
        min_sv = min(min_sv, float(sv.min()))
        if sv.min() < MIN_OVERLAP_SV:
            raise GapClosureError(f"step overlap singular value {sv.min():.3f} < {MIN_OVERLAP_SV} at t={t:.4g}")
        product = overlap @ product
        min_gap = min(min_gap, cur.gap)
        max_split = max(max_split, cur.splitting)
        prev = cur
    sv = np.linalg.svd(product, compute_uv=False)
    return TransportResult(_polar_unitary(product), first, prev.vectors, min_sv, len(times) - 1,
                           float(np.max(np.abs(1 - sv))), min_gap, max_split)


def parallel_transport(path: SchedulePath, steps: int = 64, k: int = 2, *, converge: bool = False,
                       change_tol: float = 1e-6, max_doublings: int = 4, tol: float = 1e-10) -> TransportResult:
    """Discrete Wilson line of the k-dimensional ground space along ``path``.

    With ``converge`` the number of steps per segment is doubled until the map
    (compared on the fixed initial and final frames) changes by less than ``change_tol``.
    """
    result = transport_once(path, steps, k, tol)
    if not converge:
        return result
    for _ in range(max_doublings):
        steps *= 2
        finer = transport_once(path, steps, k, tol)
        # express the finer map in the coarse run's endpoint bases before comparing
        a = result.final.conj().T @ finer.final @ finer.holonomy @ finer.initial.conj().T @ result.initial
        change = float(np.max(np.abs(a - result.holonomy)))
        result = finer
        if change < change_tol:
            return result
    return result
