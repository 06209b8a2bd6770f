"""Ground subspaces, gaps and splitting scans.

Small problems go to dense ``eigh``. Larger ones use ARPACK's implicitly restarted
Lanczos; because a single Krylov sequence can miss copies of an exactly degenerate
level, every sparse solve is followed by a deflated re-solve that must not find
anything below the returned levels.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, GapClosureError
from .model import DEGENERACY_EPS, SchedulePath, open_chain
from .spinalg import ChainSpec, is_hermitian, total_spin

DENSE_CUTOFF = 1200
DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class GroundSubspace:
    vectors: np.ndarray  # (dim, k), orthonormal columns
    energies: np.ndarray  # k ascending
    next_energy: float

    @property
    def k(self) -> int:
        return self.vectors.shape[1]

    @property
    def splitting(self) -> float:
        return float(self.energies[-1] - self.energies[0])

    @property
    def gap(self) -> float:
        return float(self.next_energy - self.energies[-1])


def seed_vector(dim: int) -> np.ndarray:
    """Fixed pseudo-random start vector so repeated solves are reproducible."""
    return np.random.default_rng(20120101).standard_normal(dim)


def _as_operator(H):
    if sp.issparse(H) or isinstance(H, np.ndarray):
        return H
    return spla.LinearOperator(H.shape, matvec=H.matvec, dtype=H.dtype)


def _lowest_sparse(H, nev: int, tol: float, v0: Optional[np.ndarray], maxiter: int):
    dim = H.shape[0]
    ncv = min(dim - 1, max(2 * nev + 1, 24))
    try:
        vals, vecs = spla.eigsh(_as_operator(H), k=nev, which="SA", tol=tol, v0=v0, ncv=ncv, maxiter=maxiter)
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError(f"Lanczos did not converge for {nev} eigenpairs (dim {dim})") from exc
    # complex Hermitian input runs through the non-symmetric ARPACK driver, whose
    # vectors need not be orthogonal inside a degenerate level: Rayleigh-Ritz on an orthonormal basis
    q, _ = np.linalg.qr(vecs)
    hq = H @ q if not isinstance(H, spla.LinearOperator) else H.matmat(q)
    small = q.conj().T @ hq
    vals, u = la.eigh((small + small.conj().T) / 2)
    return vals, q @ u


def _deflated_lowest(H, basis: np.ndarray, shift: float, tol: float, maxiter: int, v0=None) -> float:
    dtype = np.result_type(H.dtype, basis.dtype)

    def mv(x):
        x = np.asarray(x).ravel()
        return H @ x + shift * (basis @ (basis.conj().T @ x))

    op = spla.LinearOperator(H.shape, matvec=mv, dtype=dtype)
    if v0 is not None:
        v0 = v0 - basis @ (basis.conj().T @ v0)
    vals, _ = _lowest_sparse(op, 1, tol, v0, maxiter)
    return float(vals[0])


def _apply_tiebreak(vals: np.ndarray, vecs: np.ndarray, tiebreak: Callable, eps: float) -> np.ndarray:
    """Within each degenerate cluster rotate onto eigenvectors of the tiebreak operator (descending)."""
    out = vecs.copy()
    start = 0
    while start < len(vals):
        stop = start + 1
        while stop < len(vals) and vals[stop] - vals[start] < eps:
            stop += 1
        if stop - start > 1:
            block = vecs[:, start:stop]
            proj = block.conj().T @ tiebreak(block)
            proj = (proj + proj.conj().T) / 2
            w, u = la.eigh(proj)
            out[:, start:stop] = block @ u[:, ::-1]
        start = stop
    return out


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    out = vecs.copy()
    for j in range(out.shape[1]):
        mags = np.abs(out[:, j])
        # first entry within rounding of the maximum, so the choice is stable across runs
        i = int(np.flatnonzero(mags > mags.max() * (1 - 1e-9))[0])
        phase = out[i, j] / abs(out[i, j])
        out[:, j] = out[:, j] / phase
    return out


def ground_subspace(
    H,
    k: int = 1,
    tol: float = DEFAULT_TOL,
    *,
    v0: Optional[np.ndarray] = None,
    tiebreak: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    degeneracy_eps: float = DEGENERACY_EPS,
    verify: bool = True,
    check_hermitian: bool = True,
    maxiter: int = 10_000,
) -> GroundSubspace:
    """Lowest ``k`` eigenpairs of ``H`` and the (k+1)-th energy.

    ``H`` may be a sparse matrix, dense array, or any object with ``shape``,
    ``dtype`` and ``matvec``. ``tiebreak`` (a function applying an operator to a
    block of vectors, e.g. Sigma^z) fixes the basis inside degenerate levels.
    """
    dim = H.shape[0]
    if k < 1 or k + 1 > dim:
        raise ValueError(f"need 1 <= k < dim, got k={k}, dim={dim}")
    if check_hermitian and (sp.issparse(H) or isinstance(H, np.ndarray)) and not is_hermitian(H, 1e-10):
        raise ValueError("Hamiltonian is not Hermitian")

    if dim <= DENSE_CUTOFF:
        dense = H.toarray() if sp.issparse(H) else (H if isinstance(H, np.ndarray) else H.matvec(np.eye(dim)))
        vals, vecs = la.eigh(dense)
        vals, vecs = vals[: k + 1], vecs[:, : k + 1]
    else:
        nev = min(k + 3, dim - 2)
        solver_tol = min(tol, 1e-12)
        if v0 is None:
            v0 = seed_vector(dim)
        else:
            v0 = np.asarray(v0).astype(np.result_type(H.dtype, v0.dtype), copy=False)
            if not np.iscomplexobj(H.dtype.type(0)) and np.iscomplexobj(v0):
                v0 = v0.real + v0.imag
        vals, vecs = _lowest_sparse(H, nev, solver_tol, v0, maxiter)
        if verify:
            for _ in range(4):
                span = float(vals[-1] - vals[0])
                shift = max(10.0, 4 * span + 10.0)
                lowest = _deflated_lowest(H, vecs[:, : k + 1], shift, solver_tol, maxiter)
                if lowest >= vals[k] - max(degeneracy_eps, 1e-9):
                    break
                # a missed copy: re-solve with more vectors requested
                nev = min(nev + 2, dim - 2)
                vals, vecs = _lowest_sparse(H, nev, solver_tol, vecs[:, 0] + vecs[:, -1], maxiter)
            else:
                raise ConvergenceError("could not resolve the degenerate ground multiplet")
        vals, vecs = vals[: k + 1], vecs[:, : k + 1]

    vecs_k, vals_k = vecs[:, :k], vals[:k]
    if tiebreak is not None:
        vecs_k = _apply_tiebreak(vals_k, vecs_k, tiebreak, degeneracy_eps)
    vecs_k = _fix_phases(vecs_k)
    resid = _residuals(H, vecs_k, vals_k)
    bound = max(tol, 1e-13 * max(1.0, float(np.max(np.abs(vals)))))
    if np.max(resid) > bound:
        raise ConvergenceError(f"eigen-residual {np.max(resid):.2e} exceeds tolerance {bound:.2e}")
    return GroundSubspace(vecs_k, np.asarray(vals_k, dtype=float), float(vals[k]))


def _residuals(H, vecs: np.ndarray, vals: np.ndarray) -> np.ndarray:
    if sp.issparse(H) or isinstance(H, np.ndarray):
        Hv = H @ vecs
    else:
        Hv = np.column_stack([H.matvec(vecs[:, j]) for j in range(vecs.shape[1])])
    return np.linalg.norm(Hv - vecs * vals[None, :], axis=0)


def residuals(H, sub: GroundSubspace) -> np.ndarray:
    return _residuals(H, sub.vectors, sub.energies)


def dense_oracle(H, k: int) -> GroundSubspace:
    dense = H.toarray() if sp.issparse(H) else np.asarray(H)
    vals, vecs = la.eigh(dense)
    return GroundSubspace(vecs[:, :k], vals[:k], float(vals[k]))


def principal_angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return la.subspace_angles(a, b)


# ---------------------------------------------------------------------------
# Total spin


_TOTAL_SPIN_CACHE: dict[tuple[int, ...], tuple] = {}


def _total_spin_ops(dims: tuple[int, ...]):
    if dims not in _TOTAL_SPIN_CACHE:
        if len(_TOTAL_SPIN_CACHE) > 4:
            _TOTAL_SPIN_CACHE.clear()
        _TOTAL_SPIN_CACHE[dims] = total_spin(dims)
    return _TOTAL_SPIN_CACHE[dims]


def spin_squared_matrix(dims: Sequence[int], vecs: np.ndarray) -> np.ndarray:
    """<v_i| S_total^2 |v_j> for the columns of ``vecs``."""
    ops = _total_spin_ops(tuple(dims))
    out = np.zeros((vecs.shape[1],) * 2, dtype=complex)
    for op in ops:
        sv = op @ vecs
        out += sv.conj().T @ sv
    return out


def cluster_spins(dims: Sequence[int], sub: GroundSubspace, eps: float = 1e-8) -> list[float]:
    """Total spin of each returned level, resolving S^2 inside degenerate energy clusters.

    A multiplet cut off by the requested number of levels still gets a value,
    but it may be wrong; ask for more levels to complete it.
    """
    e = sub.energies
    s2 = spin_squared_matrix(dims, sub.vectors)
    out: list[float] = []
    i = 0
    while i < len(e):
        j = i + 1
        while j < len(e) and e[j] - e[i] < eps * max(1.0, abs(e[i])):
            j += 1
        block = s2[i:j, i:j]
        out.extend(spin_from_s2(v) for v in np.linalg.eigvalsh((block + block.conj().T) / 2))
        i = j
    return out


def spin_from_s2(s2: float) -> float:
    """Invert S(S+1) = s2 and round to the nearest half integer."""
    s = (-1 + np.sqrt(1 + 4 * max(s2, 0.0))) / 2
    return round(2 * s) / 2


# ---------------------------------------------------------------------------
# Scans


@dataclass(frozen=True)
class SplittingRow:
    n: int
    splitting: float
    spin: float
    energies: tuple[float, ...]


def splitting_scan(n_min: int, n_max: int, J: float = 1.0, beta_bq: float = 0.0,
                   tol: float = DEFAULT_TOL) -> list[SplittingRow]:
    """Singlet/triplet splitting of the open chain for each n in [n_min, n_max].

    ``spin`` is the total spin of the lowest state, taken from S^2 diagonalised
    inside the four-state ground manifold.
    """
    if not 2 <= n_min < n_max:
        raise ValueError("need 2 <= n_min < n_max")
    rows = []
    for n in range(n_min, n_max + 1):
        H = open_chain(n, J, beta_bq)
        sub = ground_subspace(H, 4, tol)
        dims = ChainSpec.open(n).dims
        s2 = spin_squared_matrix(dims, sub.vectors)
        # S^2 and H commute: resolve the lowest level's spin inside its cluster
        e = sub.energies
        lowest = [i for i in range(4) if e[i] - e[0] < max(1e-9, 1e-6 * abs(sub.splitting))] or [0]
        block = s2[np.ix_(lowest, lowest)]
        s2_low = float(np.min(np.linalg.eigvalsh((block + block.conj().T) / 2)))
        rows.append(SplittingRow(n, float(sub.splitting), spin_from_s2(s2_low), tuple(map(float, e))))
    return rows


def fit_correlation_length(rows: Sequence[SplittingRow]) -> float:
    """Fit ln(splitting * sqrt(n)) = c - n / xi; return xi."""
    ns = np.array([r.n for r in rows], dtype=float)
    y = np.log(np.array([r.splitting for r in rows]) * np.sqrt(ns))
    slope, _ = np.polyfit(ns, y, 1)
    if slope >= 0:
        raise ValueError("splitting does not decay with n; no correlation length")
    return float(-1.0 / slope)


@dataclass(frozen=True)
class GapRow:
    t: float
    energies: tuple[float, ...]  # k lowest
    next_energy: float

    @property
    def gap(self) -> float:
        return self.next_energy - self.energies[-1]

    @property
    def splitting(self) -> float:
        return self.energies[-1] - self.energies[0]


def gap_along_path(path: SchedulePath, samples: int = 33, k: Optional[int] = None,
                   tol: float = 1e-9) -> list[GapRow]:
    """Lowest k+1 energies at evenly spaced times; k defaults to 2 (one chain) or 4 (two chains)."""
    if samples < 2:
        raise ValueError("need at least two samples")
    if k is None:
        k = 4 if path.interaction is not None else 2
    rows = []
    v0 = None
    for t in np.linspace(0.0, path.duration, samples):
        H = path.hamiltonian(t) if path.dim <= 200_000 else path.operator(t)
        sub = ground_subspace(H, k, tol, v0=v0, check_hermitian=False)
        v0 = sub.vectors.sum(axis=1)
        rows.append(GapRow(float(t), tuple(map(float, sub.energies)), sub.next_energy))
    if min(r.gap for r in rows) <= 0:
        raise GapClosureError("gap closes along the path")
    return rows
