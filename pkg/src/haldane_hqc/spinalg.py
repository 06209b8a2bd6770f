"""Spin operators and sparse tensor-product construction for mixed spin-1 / spin-1/2 chains.

Basis conventions: site 0 is the leftmost (slowest-varying) tensor factor and local
states are ordered by descending S^z, i.e. (|+1>, |0>, |-1>) for spin-1 and
(|up>, |down>) for spin-1/2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
import scipy.sparse as sp

SparseOperator = sp.csr_matrix

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class LocalSpin:
    s: Fraction

    def __post_init__(self) -> None:
        s = Fraction(self.s).limit_denominator(2)
        if s not in (Fraction(1, 2), Fraction(1)):
            raise ValueError(f"unsupported spin value {self.s}; only 1/2 and 1 are modelled")
        object.__setattr__(self, "s", s)

    @property
    def dim(self) -> int:
        return int(2 * self.s + 1)


SPIN_HALF = LocalSpin(Fraction(1, 2))
SPIN_ONE = LocalSpin(Fraction(1))


@dataclass(frozen=True)
class ChainSpec:
    """A chain of spin-1 sites, optionally closed on the right by a spin-1/2 terminator.

    ``beta_bq`` is the biquadratic weight: each bond carries
    ``S.S + beta_bq * ((S.S)**2 - c)`` with the shift ``c`` fixed in :mod:`model`.
    """

    sites: tuple[LocalSpin, ...]
    J: float = 1.0
    beta_bq: float = 0.0

    def __post_init__(self) -> None:
        sites = tuple(self.sites)
        object.__setattr__(self, "sites", sites)
        if not sites:
            raise ValueError("a chain needs at least one site")
        if self.J <= 0:
            raise ValueError("coupling J must be positive")
        halves = [i for i, site in enumerate(sites) if site.dim == 2]
        if len(halves) > 1:
            raise ValueError("at most one spin-1/2 terminator is allowed")
        if halves and halves[0] != len(sites) - 1:
            raise ValueError("the spin-1/2 terminator must be the last site")

    @classmethod
    def open(cls, n: int, J: float = 1.0, beta_bq: float = 0.0) -> "ChainSpec":
        return cls((SPIN_ONE,) * n, J, beta_bq)

    @classmethod
    def terminated(cls, n: int, J: float = 1.0, beta_bq: float = 0.0) -> "ChainSpec":
        return cls((SPIN_ONE,) * n + (SPIN_HALF,), J, beta_bq)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(site.dim for site in self.sites)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n(self) -> int:
        """Number of spin-1 sites."""
        return sum(1 for site in self.sites if site.dim == 3)

    @property
    def is_terminated(self) -> bool:
        return self.sites[-1].dim == 2


Layout = Union[ChainSpec, Sequence[int]]


def _dims(layout: Layout) -> tuple[int, ...]:
    return layout.dims if isinstance(layout, ChainSpec) else tuple(int(d) for d in layout)


def spin_matrices(s) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return dense (Sx, Sy, Sz) for spin ``s`` in the descending-S^z basis."""
    spin = LocalSpin(Fraction(s).limit_denominator(2))
    s = float(spin.s)
    m = s - np.arange(spin.dim)
    # <m+1|S+|m> = sqrt(s(s+1) - m(m+1))
    sp_diag = np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1))
    splus = np.diag(sp_diag, k=1).astype(complex)
    sminus = splus.conj().T
    sx = (splus + sminus) / 2
    sy = (splus - sminus) / 2j
    sz = np.diag(m).astype(complex)
    return sx, sy, sz


_SPIN_CACHE: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def spin_vector(dim: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cached spin matrices keyed by local dimension."""
    if dim not in _SPIN_CACHE:
        _SPIN_CACHE[dim] = spin_matrices(Fraction(dim - 1, 2))
    return _SPIN_CACHE[dim]


def spin_along(axis: Sequence[float], dim: int) -> np.ndarray:
    """S . m for a unit vector m."""
    axis = unit(axis)
    sx, sy, sz = spin_vector(dim)
    return axis[0] * sx + axis[1] * sy + axis[2] * sz


def unit(axis: Sequence[float]) -> np.ndarray:
    v = np.asarray(axis, dtype=float).reshape(3)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("axis must be a non-zero 3-vector")
    return v / norm


def _identity(d: int) -> sp.csr_matrix:
    return sp.identity(d, dtype=complex, format="csr")


def embed_block(op, first_site: int, layout: Layout) -> SparseOperator:
    """Embed an operator acting on consecutive sites starting at ``first_site``."""
    dims = _dims(layout)
    op = sp.csr_matrix(op, dtype=complex)
    width = 0
    block = 1
    while block < op.shape[0] and first_site + width < len(dims):
        block *= dims[first_site + width]
        width += 1
    if first_site < 0 or first_site >= len(dims):
        raise IndexError(f"site {first_site} out of range for {len(dims)} sites")
    if block != op.shape[0] or op.shape[0] != op.shape[1]:
        raise ValueError(
            f"operator of shape {op.shape} does not match local dimensions starting at site {first_site}"
        )
    left = int(np.prod(dims[:first_site]))
    right = int(np.prod(dims[first_site + width:]))
    out = sp.kron(sp.kron(_identity(left), op), _identity(right), format="csr")
    out.sort_indices()
    return out


def embed(op, site_index: int, layout: Layout) -> SparseOperator:
    """Embed a single-site operator; identity on all other sites."""
    dims = _dims(layout)
    if not 0 <= site_index < len(dims):
        raise IndexError(f"site {site_index} out of range for {len(dims)} sites")
    op = np.asarray(op) if not sp.issparse(op) else op
    if op.shape != (dims[site_index], dims[site_index]):
        raise ValueError(
            f"operator of shape {op.shape} does not match local dimension {dims[site_index]}"
        )
    return embed_block(op, site_index, dims)


def embed_pair(op_a, site_a: int, op_b, site_b: int, layout: Layout) -> SparseOperator:
    """Embed ``op_a (x) op_b`` acting on two (not necessarily adjacent) sites."""
    dims = _dims(layout)
    if site_a == site_b:
        raise ValueError("pair embedding needs two distinct sites")
    for s in (site_a, site_b):
        if not 0 <= s < len(dims):
            raise IndexError(f"site {s} out of range for {len(dims)} sites")
    factors = [None] * len(dims)
    factors[site_a] = sp.csr_matrix(op_a, dtype=complex)
    factors[site_b] = sp.csr_matrix(op_b, dtype=complex)
    return kron_chain([f if f is not None else _identity(d) for f, d in zip(factors, dims)])


def _is_identity(f: sp.csr_matrix) -> bool:
    f.sort_indices()
    n = f.shape[0]
    return f.nnz == n and np.array_equal(f.indices, np.arange(n)) and np.all(f.data == 1)


def kron_chain(factors: Iterable) -> SparseOperator:
    """Kronecker product of a list of local operators, merging identity runs."""
    out = None
    pending_identity = 1
    for f in factors:
        f = sp.csr_matrix(f, dtype=complex)
        if _is_identity(f):
            pending_identity *= f.shape[0]
            continue
        if pending_identity > 1:
            out = _identity(pending_identity) if out is None else sp.kron(out, _identity(pending_identity), format="csr")
            pending_identity = 1
        out = f if out is None else sp.kron(out, f, format="csr")
    if pending_identity > 1 or out is None:
        out = _identity(pending_identity) if out is None else sp.kron(out, _identity(pending_identity), format="csr")
    out = sp.csr_matrix(out)
    out.sort_indices()
    return out


def bond_matrix(dim_a: int, dim_b: int) -> np.ndarray:
    """Dense S_a . S_b on the two-site space."""
    return sum(np.kron(a, b) for a, b in zip(spin_vector(dim_a), spin_vector(dim_b)))


def heisenberg_bond(j: int, layout: Layout) -> SparseOperator:
    """S_j . S_{j+1} on the full chain (0-based ``j``)."""
    dims = _dims(layout)
    if not 0 <= j < len(dims) - 1:
        raise IndexError(f"bond ({j}, {j + 1}) out of range for {len(dims)} sites")
    return embed_block(bond_matrix(dims[j], dims[j + 1]), j, dims)


def heisenberg_pair(a: int, b: int, layout: Layout) -> SparseOperator:
    """S_a . S_b for arbitrary sites."""
    dims = _dims(layout)
    if abs(a - b) == 1:
        return heisenberg_bond(min(a, b), dims)
    return sum(
        (embed_pair(x, a, y, b, dims) for x, y in zip(spin_vector(dims[a]), spin_vector(dims[b]))),
        start=sp.csr_matrix((int(np.prod(dims)),) * 2, dtype=complex),
    ).tocsr()


def total_spin(layout: Layout) -> tuple[SparseOperator, SparseOperator, SparseOperator]:
    dims = _dims(layout)
    comps = []
    for c in range(3):
        comps.append(sum(embed(spin_vector(d)[c], i, dims) for i, d in enumerate(dims)).tocsr())
    return tuple(comps)


def total_spin_squared(layout: Layout) -> SparseOperator:
    sx, sy, sz = total_spin(layout)
    return (sx @ sx + sy @ sy + sz @ sz).tocsr()


def is_hermitian(op, tol: float = HERMITIAN_TOL) -> bool:
    diff = (op - op.conj().T)
    diff = diff.tocoo() if sp.issparse(diff) else sp.coo_matrix(diff)
    return diff.nnz == 0 or float(np.max(np.abs(diff.data))) < tol


def max_abs(op) -> float:
    if sp.issparse(op):
        op = op.tocoo()
        return float(np.max(np.abs(op.data))) if op.nnz else 0.0
    return float(np.max(np.abs(op))) if np.size(op) else 0.0


@dataclass(frozen=True)
class ProductOperator:
    """Site-wise product ``(x)_j U_j`` kept in factored form.

    Applying it to a vector costs one small contraction per site, which keeps
    non-monomial rotations usable on chains whose full matrix would be dense.
    """

    factors: tuple[np.ndarray, ...]
    scale: complex = 1.0
    _dims: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        factors = tuple(np.asarray(f, dtype=complex) for f in self.factors)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "_dims", tuple(f.shape[0] for f in factors))

    @property
    def dim(self) -> int:
        return int(np.prod(self._dims))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.dim, self.dim)

    def apply(self, vecs: np.ndarray) -> np.ndarray:
        vecs = np.asarray(vecs)
        single = vecs.ndim == 1
        block = vecs.reshape(self.dim, -1)
        k = block.shape[1]
        t = block.reshape(*self._dims, k).astype(complex, copy=True)
        for i, f in enumerate(self.factors):
            if np.array_equal(f, np.eye(f.shape[0])):
                continue
            t = np.moveaxis(np.tensordot(f, t, axes=([1], [i])), 0, i)
        out = self.scale * t.reshape(self.dim, k)
        return out[:, 0] if single else out

    def __matmul__(self, other):
        if isinstance(other, ProductOperator):
            if self._dims != other._dims:
                raise ValueError("product operators act on different layouts")
            return ProductOperator(tuple(a @ b for a, b in zip(self.factors, other.factors)), self.scale * other.scale)
        return self.apply(other)

    def dagger(self) -> "ProductOperator":
        return ProductOperator(tuple(f.conj().T for f in self.factors), np.conj(self.scale))

    def to_sparse(self) -> SparseOperator:
        return (self.scale * kron_chain(self.factors)).tocsr()


def dump_operator(op, path: Union[str, Path]) -> None:
    """Write ``row col re im`` lines sorted by (row, col)."""
    coo = sp.coo_matrix(op)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# dim {coo.shape[0]}\n")
        for idx in order:
            v = complex(coo.data[idx])
            fh.write(f"{coo.row[idx]} {coo.col[idx]} {v.real:.17g} {v.imag:.17g}\n")


def load_operator(path: Union[str, Path]) -> SparseOperator:
    rows, cols, vals = [], [], []
    dim = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                parts = line[1:].split()
                if parts[:1] == ["dim"]:
                    dim = int(parts[1])
                continue
            r, c, re_, im_ = line.split()
            rows.append(int(r))
            cols.append(int(c))
            vals.append(complex(float(re_), float(im_)))
    if dim is None:
        dim = max(max(rows), max(cols)) + 1
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)
