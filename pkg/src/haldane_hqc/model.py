"""Hamiltonians, symmetry operators and adiabatic schedules for spin-1 chain qubits."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm

from .spinalg import (
    ChainSpec,
    Layout,
    ProductOperator,
    SparseOperator,
    _dims,
    bond_matrix,
    embed,
    embed_block,
    embed_pair,
    spin_along,
    spin_vector,
    unit,
)

X_AXIS = np.array([1.0, 0.0, 0.0])
Y_AXIS = np.array([0.0, 1.0, 0.0])
Z_AXIS = np.array([0.0, 0.0, 1.0])
U_AXIS = np.array([1.0, 1.0, 0.0]) / np.sqrt(2)
V_AXIS = np.array([1.0, -1.0, 0.0]) / np.sqrt(2)

NAMED_AXES = {"x": X_AXIS, "y": Y_AXIS, "z": Z_AXIS, "u": U_AXIS, "v": V_AXIS}

AKLT_BETA = 1.0 / 3.0
# bond = S.S + beta*((S.S)^2 + BQ_SHIFT); at beta=1/3 this is twice the spin-2 projector
BQ_SHIFT = 2.0

DEGENERACY_EPS = 1e-8


def parse_axis(axis) -> np.ndarray:
    """Accept a named axis (x, y, z, u, v, optionally signed) or a 3-vector; return a unit vector."""
    if isinstance(axis, str):
        text = axis.strip().lower()
        sign = -1.0 if text.startswith("-") else 1.0
        text = text.lstrip("+-")
        if text in NAMED_AXES:
            return sign * NAMED_AXES[text]
        return unit([float(c) for c in text.split(",")])
    return unit(axis)


# ---------------------------------------------------------------------------
# Hamiltonians


def bond_term(dim_a: int, dim_b: int, beta_bq: float = 0.0) -> np.ndarray:
    ss = bond_matrix(dim_a, dim_b)
    if beta_bq == 0.0 or dim_a != 3 or dim_b != 3:
        return ss
    return ss + beta_bq * (ss @ ss + BQ_SHIFT * np.eye(ss.shape[0]))


def chain_terms(layout: Layout, sites: Sequence[int], J: float = 1.0, beta_bq: float = 0.0) -> SparseOperator:
    """J * sum of bond terms along consecutive entries of ``sites`` (which must be adjacent in the layout)."""
    dims = _dims(layout)
    total = sp.csr_matrix((int(np.prod(dims)),) * 2, dtype=complex)
    for a, b in zip(sites[:-1], sites[1:]):
        if b != a + 1:
            raise ValueError("chain sites must be contiguous in the layout")
        total = total + J * embed_block(bond_term(dims[a], dims[b], beta_bq), a, dims)
    return total.tocsr()


def chain_hamiltonian(chain: ChainSpec) -> SparseOperator:
    return chain_terms(chain, range(len(chain.sites)), chain.J, chain.beta_bq)


def open_chain(n: int, J: float = 1.0, beta_bq: float = 0.0) -> SparseOperator:
    if n < 2:
        raise ValueError("an open chain needs n >= 2")
    return chain_hamiltonian(ChainSpec.open(n, J, beta_bq))


def terminated_chain(n: int, J: float = 1.0, beta_bq: float = 0.0) -> SparseOperator:
    if n < 1:
        raise ValueError("a terminated chain needs n >= 1")
    return chain_hamiltonian(ChainSpec.terminated(n, J, beta_bq))


# ---------------------------------------------------------------------------
# Rotations and logical Pauli operators


def _clean(m: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    m = m.copy()
    m.real[np.abs(m.real) < tol] = 0.0
    m.imag[np.abs(m.imag) < tol] = 0.0
    return m


def local_rotation(axis, angle: float, dim: int) -> np.ndarray:
    """exp(-i angle S.m) on one site."""
    return _clean(expm(-1j * angle * spin_along(parse_axis(axis), dim)))


def rotation(kind: str, axis, layout: Layout, sites: Optional[Sequence[int]] = None) -> ProductOperator:
    """Product of single-site rotations R = exp(-i pi S^m) or sqrt(R) = exp(-i pi/2 S^m).

    ``sites`` defaults to every site of the layout; the rest carry the identity.
    """
    angles = {"R": np.pi, "sqrtR": np.pi / 2, "√R": np.pi / 2}
    if kind not in angles:
        raise ValueError(f"unknown rotation kind {kind!r}")
    dims = _dims(layout)
    chosen = set(range(len(dims)) if sites is None else sites)
    factors = [local_rotation(axis, angles[kind], d) if i in chosen else np.eye(d) for i, d in enumerate(dims)]
    return ProductOperator(tuple(factors))


@dataclass(frozen=True)
class SymmetryOp:
    kind: str
    axis: np.ndarray
    operator: ProductOperator

    def matrix(self) -> SparseOperator:
        return self.operator.to_sparse()

    def apply(self, vecs: np.ndarray) -> np.ndarray:
        return self.operator.apply(vecs)


def sigma(axis, layout: Layout, sites: Optional[Sequence[int]] = None) -> SymmetryOp:
    """Logical Pauli Sigma^m = (prod_j exp(i pi S^m_j)) (x) sigma^m on the terminator.

    ``sites`` selects the chain the operator belongs to (its last entry must be the
    spin-1/2 terminator); other sites of the layout carry the identity.
    """
    m = parse_axis(axis)
    dims = _dims(layout)
    sites = list(range(len(dims)) if sites is None else sites)
    if dims[sites[-1]] != 2:
        raise ValueError("Sigma needs a spin-1/2 terminator as the last chain site")
    factors = [np.eye(d, dtype=complex) for d in dims]
    for s in sites[:-1]:
        if dims[s] != 3:
            raise ValueError("Sigma bulk sites must be spin-1")
        factors[s] = _clean(expm(1j * np.pi * spin_along(m, 3)))
    factors[sites[-1]] = 2 * spin_along(m, 2)
    return SymmetryOp("Sigma", m, ProductOperator(tuple(factors)))


def global_rotation(axis, angle: float, layout: Layout, sites: Optional[Sequence[int]] = None) -> ProductOperator:
    """exp(-i angle S^m_total) restricted to ``sites``."""
    dims = _dims(layout)
    chosen = set(range(len(dims)) if sites is None else sites)
    return ProductOperator(
        tuple(local_rotation(axis, angle, d) if i in chosen else np.eye(d) for i, d in enumerate(dims))
    )


# ---------------------------------------------------------------------------
# Two-chain interaction


def cartesian_state(label: str) -> np.ndarray:
    """|S^j = 0> for j in {x, y, z}; phases fixed so that the W ground state reads as |xi>."""
    r = 1 / np.sqrt(2)
    states = {
        "x": np.array([-r, 0, r], dtype=complex),
        "y": np.array([r, 0, r], dtype=complex),
        "z": np.array([0, 1, 0], dtype=complex),
    }
    return states[label]


def w_interaction() -> SparseOperator:
    """W = Q (x) S^z + S^z (x) Q with Q = (S^x)^2 - (S^y)^2, on two spin-1 sites."""
    sx, sy, sz = spin_vector(3)
    q = sx @ sx - sy @ sy
    return sp.csr_matrix(np.kron(q, sz) + np.kron(sz, q))


def xi_state() -> np.ndarray:
    x, y = cartesian_state("x"), cartesian_state("y")
    return 0.5 * (-np.kron(x, x) + np.kron(x, y) + np.kron(y, x) + np.kron(y, y))


def w_symmetries() -> list[tuple[str, np.ndarray, complex, tuple[tuple[str, float], tuple[str, float]]]]:
    """Symmetries of W on the boundary pair: (name, 9x9 operator, eigenvalue on |xi>, (axis, angle) per chain).

    The last field describes the chain-wide rotation that turns the boundary
    symmetry into a conserved quantity of the full two-chain dynamics.
    """
    rows = [
        ("Rz(x)1", ("z", np.pi), None, -1),
        ("1(x)Rz", None, ("z", np.pi), -1),
        ("Ru(x)Ru", ("u", np.pi), ("u", np.pi), 1),
        ("Rv(x)Rv", ("v", np.pi), ("v", np.pi), 1),
        ("sqrtRz(x)Rx", ("z", np.pi / 2), ("x", np.pi), -1j),
    ]
    out = []
    for name, ra, rb, ev in rows:
        ma = local_rotation(ra[0], ra[1], 3) if ra else np.eye(3)
        mb = local_rotation(rb[0], rb[1], 3) if rb else np.eye(3)
        out.append((name, np.kron(ma, mb), ev, (ra, rb)))
    return out


# ---------------------------------------------------------------------------
# Schedules


def _ramp_sin2(tau):
    return np.sin(np.pi * tau / 2) ** 2


def _ramp_linear(tau):
    return tau


def _ramp_cubic(tau):
    return tau * tau * (3 - 2 * tau)


RAMPS: dict[str, Callable[[float], float]] = {"sin2": _ramp_sin2, "linear": _ramp_linear, "cubic": _ramp_cubic}


def slerp(a: np.ndarray, b: np.ndarray, s: float) -> np.ndarray:
    """Great-circle interpolation between unit vectors (antipodal pairs are not allowed)."""
    cos_t = float(np.clip(a @ b, -1.0, 1.0))
    theta = np.arccos(cos_t)
    if theta < 1e-12:
        return a.copy()
    if np.pi - theta < 1e-9:
        raise ValueError("great circle between antipodal axes is undefined")
    return (np.sin((1 - s) * theta) * a + np.sin(s * theta) * b) / np.sin(theta)


@dataclass(frozen=True)
class Segment:
    """One ramp. Weights are (coupling g, field f, interaction w) at the start and end."""

    duration: float
    start: tuple[float, float, float]
    end: tuple[float, float, float]
    axis_start: Optional[np.ndarray] = None
    axis_end: Optional[np.ndarray] = None
    ramp: str = "sin2"

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise ValueError("segment durations must be positive")
        if self.ramp not in RAMPS:
            raise ValueError(f"unknown ramp shape {self.ramp!r}")
        for w in (*self.start, *self.end):
            if not -1e-15 <= w <= 1 + 1e-15:
                raise ValueError("weights must lie in [0, 1]")

    def at(self, t: float) -> tuple[np.ndarray, Optional[np.ndarray]]:
        tau = min(max(t / self.duration, 0.0), 1.0)
        s = RAMPS[self.ramp](tau)
        w = np.asarray(self.start) + (np.asarray(self.end) - np.asarray(self.start)) * s
        axis = None
        if self.axis_start is not None:
            end = self.axis_end if self.axis_end is not None else self.axis_start
            axis = slerp(self.axis_start, end, s)
        return w, axis

    def reversed(self) -> "Segment":
        return Segment(self.duration, self.end, self.start, self.axis_end if self.axis_end is not None else self.axis_start,
                       self.axis_start, self.ramp)


class PathOperator:
    """Matrix-free H(t) = static + g C + w W + f (S_b.m)^2 evaluated term by term."""

    def __init__(self, path: "SchedulePath", weights: np.ndarray, axis: Optional[np.ndarray]):
        self.path = path
        self.weights = weights
        self.axis = axis
        self.shape = path.static.shape
        self.dtype = path.dtype
        if weights[1] and axis is not None:
            self.dtype = np.result_type(self.dtype, path.field_operator(axis).dtype)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        p = self.path
        g, f, w = self.weights
        out = p.static @ v
        if g:
            out = out + g * (p.coupling @ v)
        if w and p.interaction is not None:
            out = out + w * (p.interaction @ v)
        if f and self.axis is not None:
            out = out + f * (p.field_operator(self.axis) @ v)
        return out

    __matmul__ = matvec

    def dot(self, v):
        return self.matvec(v)


@dataclass
class SchedulePath:
    """Piecewise H(t) = static + g(t) J coupling + w(t) J interaction + f(t) J (S_b . m(t))^2.

    ``field_site`` is the boundary site carrying the quadratic field. Operators are
    stored pre-multiplied by J.
    """

    layout: tuple[int, ...]
    static: SparseOperator
    coupling: SparseOperator
    segments: list[Segment]
    interaction: Optional[SparseOperator] = None
    field_site: Optional[int] = None
    J: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._field_parts: dict[tuple[int, int], SparseOperator] = {}
        self._field_cache: dict[tuple, SparseOperator] = {}
        for a, b in zip(self.segments[:-1], self.segments[1:]):
            if not np.allclose(a.end, b.start, atol=1e-12):
                raise ValueError("segment weights must be continuous")
        parts = [self.static, self.coupling] + ([self.interaction] if self.interaction is not None else [])
        self.dtype = np.result_type(*[p.dtype for p in parts])

    @property
    def duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    @property
    def dim(self) -> int:
        return self.static.shape[0]

    def boundaries(self) -> list[float]:
        edges = [0.0]
        for s in self.segments:
            edges.append(edges[-1] + s.duration)
        return edges

    def locate(self, t: float) -> tuple[int, float]:
        edges = self.boundaries()
        for i, seg in enumerate(self.segments):
            if t <= edges[i + 1] or i == len(self.segments) - 1:
                return i, t - edges[i]
        raise AssertionError

    def weights(self, t: float) -> tuple[np.ndarray, Optional[np.ndarray]]:
        i, local = self.locate(t)
        return self.segments[i].at(local)

    def field_operator(self, axis: np.ndarray) -> SparseOperator:
        key = tuple(np.round(axis, 15))
        if key not in self._field_cache:
            if not self._field_parts:
                comps = spin_vector(3)
                for a in range(3):
                    for b in range(a, 3):
                        local = comps[a] @ comps[b]
                        if a != b:
                            local = local + comps[b] @ comps[a]
                        self._field_parts[(a, b)] = self.J * embed(local, self.field_site, self.layout)
            op = sum(
                (axis[a] * axis[b] * part for (a, b), part in self._field_parts.items() if axis[a] * axis[b] != 0),
                start=sp.csr_matrix(self.static.shape, dtype=complex),
            )
            if len(self._field_cache) > 64:
                self._field_cache.clear()
            self._field_cache[key] = _compact(op.tocsr())
        return self._field_cache[key]

    def operator(self, t: float) -> PathOperator:
        w, axis = self.weights(t)
        return PathOperator(self, w, axis)

    def hamiltonian(self, t: float) -> SparseOperator:
        (g, f, w), axis = self.weights(t)
        h = self.static + g * self.coupling
        if self.interaction is not None and w:
            h = h + w * self.interaction
        if self.field_site is not None and axis is not None and f:
            h = h + f * self.field_operator(axis)
        return _compact(h.tocsr())

    def reversed(self) -> "SchedulePath":
        return SchedulePath(
            self.layout, self.static, self.coupling, [s.reversed() for s in reversed(self.segments)],
            self.interaction, self.field_site, self.J, dict(self.meta, reversed=not self.meta.get("reversed", False)),
        )

    def subpath(self, indices: Sequence[int]) -> "SchedulePath":
        return SchedulePath(self.layout, self.static, self.coupling, [self.segments[i] for i in indices],
                            self.interaction, self.field_site, self.J, dict(self.meta))


def _compact(op: SparseOperator) -> SparseOperator:
    """Drop an identically-zero imaginary part so real-symmetric problems run in real arithmetic."""
    op.sum_duplicates()
    op.eliminate_zeros()
    if np.iscomplexobj(op.data) and not np.any(op.data.imag):
        op = op.real.tocsr()
    return op


@dataclass(frozen=True)
class TwoChainSpec:
    chain_a: ChainSpec
    chain_b: ChainSpec

    def __post_init__(self) -> None:
        for c in (self.chain_a, self.chain_b):
            if not c.is_terminated:
                raise ValueError("both chains must be terminated at their far ends")
            if c.n < 2:
                raise ValueError("two-qubit gates need chains of length >= 2")

    @property
    def dims(self) -> tuple[int, ...]:
        return self.chain_a.dims + self.chain_b.dims

    @property
    def sites_a(self) -> list[int]:
        return list(range(len(self.chain_a.sites)))

    @property
    def sites_b(self) -> list[int]:
        off = len(self.chain_a.sites)
        return list(range(off, off + len(self.chain_b.sites)))


def _durations(durations, count: int) -> list[float]:
    if np.isscalar(durations):
        durations = [float(durations)] * count
    durations = [float(d) for d in durations]
    if len(durations) != count:
        raise ValueError(f"expected {count} durations, got {len(durations)}")
    if any(not d > 0 for d in durations):
        raise ValueError("durations must be positive")
    return durations


def _single_chain_pieces(n: int, J: float, beta_bq: float):
    chain = ChainSpec.terminated(n, J, beta_bq)
    dims = chain.dims
    static = chain_terms(dims, range(1, len(dims)), J, beta_bq)
    coupling = J * embed_block(bond_term(3, 3, beta_bq), 0, dims)
    return dims, _compact(static), _compact(coupling.tocsr())


def decoupling_path(n: int, axis=None, duration: float = 20.0, J: float = 1.0, beta_bq: float = 0.0,
                    ramp: str = "sin2") -> SchedulePath:
    """Single ramp g: 1 -> 0 while f: 0 -> 1 with the field along ``axis`` (``None`` keeps f = 0)."""
    if n < 2:
        raise ValueError("decoupling needs a chain with n >= 2")
    dims, static, coupling = _single_chain_pieces(n, J, beta_bq)
    if axis is None:
        seg = Segment(float(duration), (1.0, 0.0, 0.0), (0.0, 0.0, 0.0), ramp=ramp)
        return SchedulePath(dims, static, coupling, [seg], J=J, meta={"n": n, "kind": "decouple", "axis": None})
    m = parse_axis(axis)
    seg = Segment(float(duration), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), m, m, ramp)
    return SchedulePath(dims, static, coupling, [seg], field_site=0, J=J,
                        meta={"n": n, "kind": "decouple", "axis": m.tolist()})


def single_qubit_path(n: int, axis, axis2=None, durations=(20.0, 20.0, 20.0), J: float = 1.0,
                      beta_bq: float = 0.0, ramp: str = "sin2") -> SchedulePath:
    """Decouple with field along ``axis``, swing the field to ``axis2``, recouple.

    When the two axes coincide (or are antipodal, which gives the same field) the
    middle segment is dropped and its duration ignored.
    """
    if n < 2:
        raise ValueError("single-qubit paths need n >= 2")
    m = parse_axis(axis)
    m2 = m if axis2 is None else parse_axis(axis2)
    t1, t2, t3 = _durations(durations, 3)
    dims, static, coupling = _single_chain_pieces(n, J, beta_bq)
    same = abs(abs(float(m @ m2)) - 1.0) < 1e-12
    if same:
        m2 = m
    segs = [Segment(t1, (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), m, m, ramp)]
    if not same:
        segs.append(Segment(t2, (0.0, 1.0, 0.0), (0.0, 1.0, 0.0), m, m2, ramp))
    segs.append(Segment(t3, (0.0, 1.0, 0.0), (1.0, 0.0, 0.0), m2, m2, ramp))
    return SchedulePath(dims, static, coupling, segs, field_site=0, J=J,
                        meta={"n": n, "kind": "gate-1q", "axis": m.tolist(), "axis2": m2.tolist()})


def single_qubit_target(axis, axis2=None) -> np.ndarray:
    """Ideal logical action of :func:`single_qubit_path`: sigma^{m'} sigma^{m}."""
    m = parse_axis(axis)
    m2 = m if axis2 is None else parse_axis(axis2)
    return pauli_along(m2) @ pauli_along(m)


def decoupling_target(axis) -> np.ndarray:
    """Logical action of :func:`decoupling_path` with a field: sigma^m, from the n-chain to the (n-1)-chain frame."""
    return pauli_along(parse_axis(axis))


def pauli_along(m: np.ndarray) -> np.ndarray:
    return m[0] * PAULI_X + m[1] * PAULI_Y + m[2] * PAULI_Z


PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
CPHASE = np.diag([1, 1, 1, -1]).astype(complex)
XX_CPHASE = np.kron(PAULI_X, PAULI_X) @ CPHASE


def two_qubit_path(spec: TwoChainSpec, durations=(20.0,), recouple: bool = False, ramp: str = "sin2") -> SchedulePath:
    """Couple the boundary spins of two chains through W while detaching them from their chains.

    The forward stage carries the logical gate from the length-n frames to the
    length-(n-1) frames. ``recouple`` appends the time-reversed stage.
    """
    a, b = spec.chain_a, spec.chain_b
    if a.J != b.J:
        raise ValueError("both chains must share J")
    J = a.J
    count = 2 if recouple else 1
    ts = _durations(durations, count)
    dims = spec.dims
    sa, sb = spec.sites_a, spec.sites_b
    static = chain_terms(dims, sa[1:], J, a.beta_bq) + chain_terms(dims, sb[1:], J, b.beta_bq)
    coupling = J * (embed_block(bond_term(3, 3, a.beta_bq), sa[0], dims)
                    + embed_block(bond_term(3, 3, b.beta_bq), sb[0], dims))
    sx, sy, sz = spin_vector(3)
    q = sx @ sx - sy @ sy
    interaction = J * (embed_pair(q, sa[0], sz, sb[0], dims) + embed_pair(sz, sa[0], q, sb[0], dims))
    segs = [Segment(ts[0], (1.0, 0.0, 0.0), (0.0, 0.0, 1.0), ramp=ramp)]
    if recouple:
        segs.append(Segment(ts[1], (0.0, 0.0, 1.0), (1.0, 0.0, 0.0), ramp=ramp))
    return SchedulePath(dims, _compact(static.tocsr()), _compact(coupling.tocsr()), segs,
                        interaction=_compact(interaction.tocsr()), J=J,
                        meta={"n_a": a.n, "n_b": b.n, "kind": "gate-2q", "recouple": recouple})


def two_chain_conserved(spec: TwoChainSpec) -> list[tuple[str, ProductOperator, complex]]:
    """Chain-wide rotations built from the W symmetries, with the |xi> eigenvalue of each."""
    out = []
    for name, _, ev, (ra, rb) in w_symmetries():
        factors = [np.eye(d, dtype=complex) for d in spec.dims]
        for rot, sites in ((ra, spec.sites_a), (rb, spec.sites_b)):
            if rot is None:
                continue
            for s in sites:
                factors[s] = local_rotation(rot[0], rot[1], spec.dims[s])
        out.append((name, ProductOperator(tuple(factors)), ev))
    return out


def field_term(axis) -> np.ndarray:
    """O^m = (S^m)^2 - 1/3 on a spin-1 site."""
    s = spin_along(parse_axis(axis), 3)
    return s @ s - np.eye(3) / 3
