"""Valence-bond solid states of the AKLT chain and the leakage caused by local rotations.

Each spin-1 site is the symmetric part of two virtual spin-1/2's. Neighbouring
virtual spins pair into singlets, the leftmost virtual spin carries the edge
mode (alpha, beta) and, on a terminated chain, the rightmost one pairs with
the physical spin-1/2 terminator.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .eigen import GroundSubspace, ground_subspace
from .errors import ConfigError
from .model import AKLT_BETA, open_chain, parse_axis, terminated_chain
from .output import write_csv
from .spinalg import ChainSpec, SparseOperator, embed, spin_along

# symmetric embedding of spin-1 (Sz = +1, 0, -1) in two virtual spin-1/2's (up, down)
SYM = np.zeros((3, 2, 2))
SYM[0, 0, 0] = 1.0
SYM[1, 0, 1] = SYM[1, 1, 0] = 1 / np.sqrt(2)
SYM[2, 1, 1] = 1.0
SINGLET = np.array([[0.0, 1.0], [-1.0, 0.0]]) / np.sqrt(2)
PAULI = (np.array([[0, 1], [1, 0]], dtype=complex), np.array([[0, -1j], [1j, 0]]), np.diag([1.0 + 0j, -1.0]))


def _edge(alpha: complex, beta: complex) -> np.ndarray:
    e = np.array([alpha, beta], dtype=complex)
    if abs(np.vdot(e, e).real - 1) > 1e-10:
        raise ConfigError("edge coefficients must satisfy |alpha|^2 + |beta|^2 = 1")
    return e


def _contract(n: int, edge: np.ndarray, right: Optional[np.ndarray], inserts: dict[int, np.ndarray],
              edge_op: Optional[np.ndarray] = None) -> np.ndarray:
    """Bond-dimension-2 contraction; ``inserts[j]`` acts on the right virtual spin of site j."""
    psi = (edge if edge_op is None else edge_op @ edge).reshape(1, 2)
    for j in range(n):
        right_op = inserts.get(j)
        m = SYM if right_op is None else np.einsum("slr,rq->slq", SYM, right_op)
        tensor = np.einsum("slr,rk->slk", m, SINGLET)
        psi = np.einsum("av,svk->ask", psi, tensor).reshape(-1, 2)
    if right is None:
        # the last singlet partner is the physical terminator
        return psi.reshape(-1)
    # open chain: undo the final singlet so the last virtual spin is the right edge
    return psi @ (la.inv(SINGLET) @ right)


@dataclass(frozen=True)
class VbsState:
    n: int
    alpha: complex
    beta: complex
    terminated: bool
    right: Optional[tuple[complex, complex]]
    vector: np.ndarray  # normalised

    @property
    def edge(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)

    @property
    def layout(self) -> ChainSpec:
        return ChainSpec.terminated(self.n) if self.terminated else ChainSpec.open(self.n)


def vbs_state(n: int, alpha: complex = 1.0, beta: complex = 0.0, terminated: bool = True,
              right: Sequence[complex] = (1.0, 0.0)) -> VbsState:
    """VBS with left edge mode (alpha, beta); the open chain also needs a right edge state."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    e = _edge(alpha, beta)
    r = None if terminated else _edge(*right)
    v = _contract(n, e, r, {})
    v = v / np.linalg.norm(v)
    return VbsState(n, complex(e[0]), complex(e[1]), terminated, None if r is None else tuple(r), v)


def vbs_family(n: int, terminated: bool = True) -> np.ndarray:
    """Orthonormal basis of the span of all VBS states (2 columns terminated, 4 open)."""
    basis = np.eye(2, dtype=complex)
    if terminated:
        cols = [_contract(n, basis[a], None, {}) for a in range(2)]
    else:
        cols = [_contract(n, basis[a], basis[b], {}) for a in range(2) for b in range(2)]
    q, _ = np.linalg.qr(np.column_stack(cols))
    return q


def schwinger_vbs(n: int, alpha: complex, beta: complex, terminated: bool = True,
                  right: Sequence[complex] = (1.0, 0.0)) -> np.ndarray:
    """Direct expansion: edge (x) singlets in the full virtual space, then symmetrise each site.

    Exponential in n; meant as an independent check of the contraction for n <= 4.
    """
    if n > 6:
        raise ConfigError("direct expansion is limited to n <= 6")
    vec = _edge(alpha, beta)
    for _ in range(n - 1):
        vec = np.kron(vec, SINGLET.reshape(-1))
    vec = np.kron(vec, SINGLET.reshape(-1) if terminated else _edge(*right))
    # virtual order: L0 R0 L1 R1 ... [terminator]; project each (L_j, R_j) pair
    proj = SYM.reshape(3, 4)
    tail = 2 if terminated else 1
    t = vec.reshape((4,) * n + (tail,) if terminated else (4,) * n)
    for j in range(n):
        t = np.moveaxis(np.tensordot(proj, t, axes=([1], [j])), 0, j)
    out = t.reshape(-1)
    return out / np.linalg.norm(out)


# ---------------------------------------------------------------------------


def aklt_hamiltonian(n: int, terminated: bool = False, J: float = 1.0) -> SparseOperator:
    """Sum of 2 J P_2 over spin-1 bonds; the terminator bond is J (S.s + 1) = (3J/2) P_{3/2}.

    Identical to the bilinear-biquadratic chain at beta = 1/3 with the fixed
    shift, plus a constant on the terminator bond, so the ground energy is 0.
    """
    if n < (1 if terminated else 2):
        raise ConfigError("the AKLT Hamiltonian needs at least one bond")
    if terminated:
        h = terminated_chain(n, J, AKLT_BETA)
        return (h + J * sp.identity(h.shape[0], format="csr")).tocsr()
    return open_chain(n, J, AKLT_BETA)


@lru_cache(maxsize=32)
def aklt_ground_space(n: int, terminated: bool) -> GroundSubspace:
    return ground_subspace(aklt_hamiltonian(n, terminated), 2 if terminated else 4)


@dataclass(frozen=True)
class RotationLeakage:
    ground_amplitude: float
    leaked_weight: float
    logical_action: np.ndarray  # 2x2 map on (alpha, beta), unit determinant modulus
    physical_ground_weight: float  # weight inside the exact AKLT ground manifold


def _rotation_2(axis: np.ndarray, angle: float) -> np.ndarray:
    gen = sum(a * p for a, p in zip(axis, PAULI))
    return la.expm(-0.5j * angle * gen)


def bulk_rotation_leakage(vbs: VbsState, site: int, axis, angle: float, mode: str = "bond") -> RotationLeakage:
    """Rotate site ``site`` by ``angle`` about ``axis`` and split the result into ground and excited parts.

    ``mode="bond"`` rotates the site's share of its valence bond to the right
    (and, on the boundary site, the edge mode it carries): the rotated bond is
    cos(angle/2) singlet - i sin(angle/2) triplet, so the state splits exactly
    into a VBS part and a triplet-bond part. ``mode="site"`` applies the full
    spin-1 rotation and reports only the projection onto the exact ground manifold.
    """
    n = vbs.n
    last = n - 1 if vbs.terminated else n - 2
    if not 0 <= site <= last:
        raise ConfigError(f"site must lie in [0, {last}] so that it has a bond to its right")
    m = parse_axis(axis)
    u = _rotation_2(m, angle)
    ground = aklt_ground_space(n, vbs.terminated)
    r = None if vbs.right is None else np.array(vbs.right, dtype=complex)
    norm = np.linalg.norm(_contract(n, vbs.edge, r, {}))
    if mode == "site":
        rot = embed(la.expm(-1j * angle * spin_along(m, 3)), site, vbs.layout)
        rotated = rot @ vbs.vector
        w = float(np.linalg.norm(ground.vectors.conj().T @ rotated) ** 2)
        return RotationLeakage(float(abs(np.vdot(vbs.vector, rotated))), 1 - w, np.full((2, 2), np.nan), w)
    if mode != "bond":
        raise ConfigError("mode must be 'bond' or 'site'")
    edge_op = u if site == 0 else None
    rotated = _contract(n, vbs.edge, r, {site: u}, edge_op) / norm
    # exact decomposition on {VBS(e_k)} + {triplet-bond states T_m(e_k)}
    gen = sum(a * p for a, p in zip(m, PAULI))
    basis = np.eye(2, dtype=complex)
    cols = [_contract(n, basis[k], r, {}) for k in range(2)]
    cols += [_contract(n, basis[k], r, {site: gen}) for k in range(2)]
    coef, *_ = np.linalg.lstsq(np.column_stack(cols) / norm, rotated, rcond=None)
    g = coef[:2]
    amp = float(np.linalg.norm(g))
    # logical map: the ground part is amp * L @ (alpha, beta) for every edge state
    images = []
    for k in range(2):
        rk = _contract(n, basis[k], r, {site: u}, edge_op) / norm
        ck, *_ = np.linalg.lstsq(np.column_stack(cols) / norm, rk, rcond=None)
        images.append(ck[:2])
    action = np.column_stack(images)
    det = np.linalg.det(action)
    # no ground component left (angle = pi): the logical action is undefined
    action = action / np.sqrt(abs(det)) if abs(det) > 1e-16 else np.full((2, 2), np.nan + 0j)
    w = float(np.linalg.norm(ground.vectors.conj().T @ rotated) ** 2)
    return RotationLeakage(amp, float(max(0.0, 1 - w)), action, w)


def leakage_scan(n: int, sites: Sequence[int], axes: Sequence, angles: Sequence[float],
                 edge: Sequence[complex] = (1.0, 0.0), terminated: bool = True) -> list[tuple]:
    """Rows (site, axis, angle, ground_amplitude, leaked_weight)."""
    vbs = vbs_state(n, *edge, terminated=terminated)
    rows = []
    for j in sites:
        for ax in axes:
            for th in angles:
                res = bulk_rotation_leakage(vbs, j, ax, th)
                rows.append((j, ax, float(th), res.ground_amplitude, res.leaked_weight))
    return rows


def write_leakage_csv(path, rows: Sequence[tuple], header: Sequence[str] = ()) -> None:
    write_csv(path, ["j", "axis", "theta", "ground_amplitude", "leaked_weight"], rows, header)


# ---------------------------------------------------------------------------


def terminated_vs_open_fidelity(n: int, beta_bq: float = 0.0, J: float = 1.0, tol: float = 1e-10) -> float:
    """Measure the terminator of a terminated-chain ground state and overlap with the open-chain ground space.

    Returns the smaller of the two outcomes' fidelities (squared overlap with
    the four-dimensional low-energy manifold of the open chain).
    """
    if n < 2:
        raise ConfigError("n must be >= 2")
    term = ground_subspace(terminated_chain(n, J, beta_bq), 2, tol)
    opened = ground_subspace(open_chain(n, J, beta_bq), 4, tol)
    psi = term.vectors[:, 0].reshape(-1, 2)
    fids = []
    for s in range(2):
        post = psi[:, s]
        p = np.linalg.norm(post)
        if p < 1e-8:
            continue
        post = post / p
        fids.append(float(np.linalg.norm(opened.vectors.conj().T @ post) ** 2))
    return min(fids)
