"""Logical frames from the Sigma operators and extraction of logical gates."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import LeakageError
from .model import PAULI_X, PAULI_Y, PAULI_Z, SymmetryOp, sigma
from .spinalg import Layout, _dims

SIGMA_TOL = 1e-6
UNITARY_TOL = 1e-6


@dataclass(frozen=True)
class LogicalFrame:
    """Ordered logical basis |b_1 ... b_q> (first qubit most significant) spanning a ground space.

    ``z_ops``/``x_ops`` are the Sigma operators that define the frame:
    |0...0> is their joint +1 eigenvector and every other basis state is obtained
    by applying the matching Sigma^x operators to it.
    """

    vectors: np.ndarray  # (dim, 2**q)
    z_ops: tuple[SymmetryOp, ...]
    x_ops: tuple[SymmetryOp, ...]
    convention: str = "|1> = Sigma^x |0>; |0> is the Sigma^z = +1 state"

    @property
    def qubits(self) -> int:
        return len(self.z_ops)

    def project(self, op) -> np.ndarray:
        """Matrix of an operator (anything with ``apply`` or ``@``) in this frame."""
        applied = op.apply(self.vectors) if hasattr(op, "apply") else op @ self.vectors
        return self.vectors.conj().T @ applied

    def state(self, amplitudes: Sequence[complex]) -> np.ndarray:
        return self.vectors @ np.asarray(amplitudes, dtype=complex)


def chain_sigmas(layout: Layout, sites: Optional[Sequence[int]] = None) -> tuple[SymmetryOp, SymmetryOp]:
    return sigma("z", layout, sites), sigma("x", layout, sites)


def logical_frame(subspace, z_ops: Sequence[SymmetryOp], x_ops: Sequence[SymmetryOp]) -> LogicalFrame:
    """Build the logical frame inside ``subspace`` (a GroundSubspace or a (dim, 2**q) array)."""
    basis = getattr(subspace, "vectors", subspace)
    q = len(z_ops)
    if basis.shape[1] != 2 ** q or len(x_ops) != q:
        raise ValueError(f"a {q}-qubit frame needs a {2 ** q}-dimensional subspace")
    # projected Sigma^z must be an involution on the subspace
    zs = []
    for op in z_ops:
        p = basis.conj().T @ op.apply(basis)
        if np.max(np.abs(p @ p - np.eye(len(p)))) > SIGMA_TOL or np.max(np.abs(p - p.conj().T)) > SIGMA_TOL:
            raise LeakageError("Sigma^z is not an involution on the subspace (leakage-contaminated input)")
        zs.append((p + p.conj().T) / 2)
    # joint +1 eigenvector: top eigenvector of a generic positive combination
    combo = sum((1.0 + 0.37 * i) * z for i, z in enumerate(zs))
    w, u = np.linalg.eigh(combo)
    if abs(w[-1] - sum(1.0 + 0.37 * i for i in range(q))) > 1e-5:
        raise LeakageError("no joint Sigma^z = +1 state in the subspace")
    zero = basis @ u[:, -1]
    mags = np.abs(zero)
    i = int(np.flatnonzero(mags > mags.max() * (1 - 1e-9))[0])
    zero = zero * (abs(zero[i]) / zero[i])
    cols = []
    for bits in range(2 ** q):
        v = zero
        for j in range(q):
            if bits >> (q - 1 - j) & 1:
                v = x_ops[j].apply(v)
        cols.append(v)
    vecs = np.column_stack(cols)
    gram = vecs.conj().T @ vecs
    if np.max(np.abs(gram - np.eye(2 ** q))) > SIGMA_TOL:
        raise LeakageError("Sigma^x does not preserve the subspace")
    return LogicalFrame(vecs, tuple(z_ops), tuple(x_ops))


def chain_frame(subspace, layout: Layout, sites: Optional[Sequence[int]] = None) -> LogicalFrame:
    """Single-chain frame with Sigma acting on ``sites`` (default: the whole layout)."""
    z, x = chain_sigmas(layout, sites)
    return logical_frame(subspace, [z], [x])


def endpoint_frames(path, start, end) -> tuple[LogicalFrame, LogicalFrame]:
    """Frames at both ends of a single-chain path.

    A path that ends with the boundary detached (a decoupling stage) reads its
    output in the frame of the shortened chain.
    """
    sites = list(range(len(path.layout)))
    out_sites = sites[1:] if path.meta.get("kind") == "decouple" else sites
    return chain_frame(start, path.layout, sites), chain_frame(end, path.layout, out_sites)


def two_chain_frame(subspace, layout: Layout, sites_a: Sequence[int], sites_b: Sequence[int]) -> LogicalFrame:
    za, xa = chain_sigmas(layout, sites_a)
    zb, xb = chain_sigmas(layout, sites_b)
    return logical_frame(subspace, [za, zb], [xa, xb])


# ---------------------------------------------------------------------------


@dataclass
class LogicalGateReport:
    unitary: np.ndarray
    raw: np.ndarray  # frame-projected map before unitarisation
    leakage: float
    fidelity: Optional[float] = None
    target_name: str = ""
    target: Optional[np.ndarray] = None
    phase_removed: bool = True
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def entries(m):
            return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]

        out = {
            "unitary": entries(self.unitary),
            "fidelity": None if self.fidelity is None else float(self.fidelity),
            "leakage": float(self.leakage),
            "target_name": self.target_name,
            "global_phase_removed": bool(self.phase_removed),
        }
        if self.target is not None:
            out["target"] = entries(strip_global_phase(self.target))
        out.update(self.params)
        return out


def strip_global_phase(u: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the largest-magnitude entry (first in row-major order on ties) is real positive."""
    flat = np.asarray(u, dtype=complex).ravel()
    mags = np.abs(flat)
    i = int(np.flatnonzero(mags > mags.max() * (1 - 1e-9))[0])
    out = np.asarray(u, dtype=complex) * (mags[i] / flat[i])
    out.real[np.abs(out.real) < 1e-15] = 0.0
    out.imag[np.abs(out.imag) < 1e-15] = 0.0
    return out


def nearest_unitary(m: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def extract_gate(frame_in: LogicalFrame, frame_out: LogicalFrame, smap, *, target: Optional[np.ndarray] = None,
                 target_name: str = "", params: Optional[dict] = None) -> LogicalGateReport:
    """U = F_out^dagger (map) F_in for a map given by ``initial``/``final`` (or ``outputs``) columns.

    ``smap`` can be a PropagationResult (columns of ``final`` are the images of
    ``initial``) or a TransportResult (images are ``outputs``).
    """
    inputs = smap.initial
    outputs = smap.outputs if hasattr(smap, "outputs") else smap.final
    inputs = inputs.reshape(inputs.shape[0], -1)
    outputs = outputs.reshape(outputs.shape[0], -1)
    d = frame_in.vectors.shape[1]
    if frame_out.vectors.shape[1] != d or frame_in.vectors.shape[0] != inputs.shape[0] \
            or frame_out.vectors.shape[0] != outputs.shape[0]:
        raise ValueError("frame and map dimensions disagree")
    # coordinates of the frame vectors in the map's input basis
    coords = inputs.conj().T @ frame_in.vectors
    if np.max(np.abs(coords.conj().T @ coords - np.eye(d))) > 1e-6:
        raise ValueError("input frame does not lie in the span of the map's inputs")
    raw = frame_out.vectors.conj().T @ (outputs @ coords)
    sv = np.linalg.svd(raw, compute_uv=False)
    leakage = float(np.clip(1 - np.sum(sv ** 2) / d, 0.0, 1.0))
    if leakage > 0.5:
        raise LeakageError(f"map leakage {leakage:.3f} too large to interpret as a logical gate")
    u = strip_global_phase(nearest_unitary(raw))
    fid = gate_fidelity(u, target) if target is not None else None
    return LogicalGateReport(u, raw, leakage, fid, target_name, target, True, dict(params or {}))


def gate_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """|Tr(U^dagger V)| / d, insensitive to global phase."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape or u.shape[0] != u.shape[1]:
        raise ValueError("fidelity needs two square matrices of equal size")
    d = u.shape[0]
    for m in (u, v):
        if np.max(np.abs(m.conj().T @ m - np.eye(d))) > UNITARY_TOL:
            raise ValueError("fidelity inputs must be unitary")
    return float(min(1.0, abs(np.trace(u.conj().T @ v)) / d))


def phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """min over phi of max|U - e^{i phi} V| (entrywise)."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    ov = np.trace(v.conj().T @ u)
    phase = ov / abs(ov) if abs(ov) > 1e-15 else 1.0
    return float(np.max(np.abs(u - phase * v)))


def rotation_angle_axis(u: np.ndarray, prefer: Optional[np.ndarray] = None) -> tuple[float, np.ndarray]:
    """Angle in [0, 2pi) and unit axis of a 2x2 unitary viewed as exp(-i angle/2 n.sigma) up to phase.

    The (angle, axis) and (2pi - angle, -axis) descriptions are equivalent; with
    ``prefer`` the axis closer to it is returned.
    """
    u = np.asarray(u, dtype=complex)
    su = u / np.sqrt(np.linalg.det(u))
    c = np.trace(su).real / 2
    vec = np.array([np.trace(su @ p).imag / -2 for p in (PAULI_X, PAULI_Y, PAULI_Z)])
    s = np.linalg.norm(vec)
    angle = 2 * np.arctan2(s, c)
    axis = vec / s if s > 1e-12 else np.array([0.0, 0.0, 1.0])
    angle = angle % (2 * np.pi)
    if prefer is not None and axis @ prefer < 0:
        axis, angle = -axis, (2 * np.pi - angle) % (2 * np.pi)
    return float(angle), axis


@dataclass(frozen=True)
class ConstraintReport:
    alpha: complex
    beta: complex
    gamma: complex
    delta: complex
    off_antidiagonal: float
    unit_magnitude: float
    delta_plus_alpha: float
    gamma_minus_beta: float
    alpha_plus_beta: float

    def violations(self, tol: float = 1e-3) -> list[str]:
        checks = {
            "anti-diagonal form": self.off_antidiagonal,
            "unit magnitude": self.unit_magnitude,
            "delta = -alpha": self.delta_plus_alpha,
            "gamma = beta": self.gamma_minus_beta,
            "alpha = -beta": self.alpha_plus_beta,
        }
        return [k for k, v in checks.items() if v > tol]


def derive_two_qubit_constraints(u: np.ndarray, tol: Optional[float] = 1e-3) -> ConstraintReport:
    """Check the structure forced by the conserved quantities of the two-chain gate.

    Anti-diagonal with unit-modulus entries (alpha, beta, gamma, delta) from the
    two Sigma^z charges, delta = -alpha and gamma = beta from the u/v rotations,
    alpha = -beta from the sqrt(R^z) (x) R^x symmetry.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4):
        raise ValueError("two-qubit constraints need a 4x4 matrix")
    anti = np.fliplr(np.eye(4, dtype=bool))
    alpha, beta, gamma, delta = u[0, 3], u[1, 2], u[2, 1], u[3, 0]
    rep = ConstraintReport(
        alpha, beta, gamma, delta,
        float(np.max(np.abs(u[~anti]))),
        float(np.max(np.abs(np.abs([alpha, beta, gamma, delta]) - 1))),
        float(abs(delta + alpha)),
        float(abs(gamma - beta)),
        float(abs(alpha + beta)),
    )
    if tol is not None and rep.violations(tol):
        raise ValueError(f"two-qubit constraints violated: {', '.join(rep.violations(tol))}")
    return rep
