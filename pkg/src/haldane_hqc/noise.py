"""Static perturbations: ground-space splitting and the errors they cause during gates.

Perturbations are quenched: a fixed h V is added to the static part of the
Hamiltonian for the whole run. Leakage is the weight a state prepared in the
unperturbed code space sends outside it. The logical error is read in the
perturbed ground spaces, with the unperturbed frame carried over by the minimal
rotation. Both are measured relative to the unperturbed run on the same path,
so the residual non-adiabatic error of the ramp cancels and the h dependence
can be fitted on a log-log grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy import stats

from .eigen import ground_subspace
from .errors import ConfigError, ConvergenceError, GapClosureError
from .evolve import propagate, rescaled
from .holonomy import chain_frame, extract_gate, gate_fidelity
from .model import SchedulePath, chain_hamiltonian, parse_axis
from .output import write_csv
from .spinalg import ChainSpec, LocalSpin, SparseOperator, embed, spin_along

KINDS = ("boundary", "bulk", "homogeneous", "d2")
COORDINATE_AXES = {"x", "y", "z"}


@dataclass(frozen=True)
class PerturbationSpec:
    """h V with V one of

    * ``boundary``: S^m on the boundary spin-1 sites (default site 0);
    * ``bulk``: S^m on one bulk site (default the middle of the chain);
    * ``homogeneous``: S^m summed over every spin-1 site;
    * ``d2``: sum of (S^m)^2 over the bulk sites, m a coordinate axis, so V
      commutes with every Sigma operator.
    """

    kind: str
    axis: str = "z"
    strength: float = 0.0
    sites: Optional[tuple[int, ...]] = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"perturbation kind must be one of {KINDS}")
        if not self.strength >= 0:
            raise ConfigError("perturbation strength must be >= 0")
        if self.kind == "d2" and self.axis not in COORDINATE_AXES:
            raise ConfigError("a D2-invariant term needs a coordinate axis (x, y or z)")
        parse_axis(self.axis)

    def with_strength(self, h: float) -> "PerturbationSpec":
        return PerturbationSpec(self.kind, self.axis, float(h), self.sites)

    def target_sites(self, chain: ChainSpec) -> tuple[int, ...]:
        spins = [i for i, d in enumerate(chain.dims) if d == 3]
        if self.sites is not None:
            bad = [s for s in self.sites if s not in spins]
            if bad:
                raise ConfigError(f"sites {bad} are not spin-1 sites of the chain")
            return tuple(self.sites)
        if self.kind == "boundary":
            return (0,)
        if self.kind == "bulk":
            return (spins[len(spins) // 2],)
        if self.kind == "homogeneous":
            return tuple(spins)
        return tuple(spins[1:])

    def operator(self, chain: ChainSpec) -> SparseOperator:
        """V (unit strength) on the chain layout."""
        s = spin_along(parse_axis(self.axis), 3)
        local = s @ s if self.kind == "d2" else s
        dims = chain.dims
        out = sp.csr_matrix((chain.dim, chain.dim), dtype=complex)
        for j in self.target_sites(chain):
            out = out + embed(local, j, dims)
        out = out.tocsr()
        if not np.any(out.data.imag):
            out = out.real.tocsr()
        return out


@dataclass
class SplittingResult:
    h: float
    splitting: float
    gap: float
    energies: list[float]


def splitting_under_perturbation(chain: ChainSpec, pert: PerturbationSpec, tol: float = 1e-10) -> SplittingResult:
    """E1 - E0 of the would-be ground doublet of H + h V on a terminated chain."""
    if not chain.is_terminated:
        raise ConfigError("splitting studies need a terminated chain")
    h0 = chain_hamiltonian(chain)
    bare = ground_subspace(h0, 2, tol)
    if pert.strength >= bare.gap / 2:
        raise GapClosureError(f"h = {pert.strength} is not below half the gap ({bare.gap:.4g})")
    H = h0 + pert.strength * pert.operator(chain) if pert.strength else h0
    sub = ground_subspace(H, 2, tol, check_hermitian=False)
    if sub.gap <= sub.splitting:
        raise GapClosureError("the perturbed doublet is no longer separated from the excitations")
    return SplittingResult(pert.strength, sub.splitting, sub.gap, [float(e) for e in sub.energies])


# ---------------------------------------------------------------------------


@dataclass
class ErrorScanRow:
    h: float
    p_leak: float  # weight pushed out of the code space by the perturbation
    p_logical: float  # logical error amplitude: min over phase of ||U_h - e^{i phi} U_0||
    infidelity: float  # 1 - |Tr(U_0^dagger U_h)|/2
    splitting: float  # ground doublet splitting of the perturbed recoupled chain


@dataclass
class ExponentFit:
    quantity: str
    exponent: float
    stderr: float
    ci95: tuple[float, float]
    points: int


@dataclass
class ErrorScan:
    rows: list[ErrorScanRow]
    fits: dict[str, ExponentFit]
    baseline_fidelity: float
    perturbation: PerturbationSpec
    T_total: float
    meta: dict = field(default_factory=dict)


def perturbed_path(path: SchedulePath, V: SparseOperator, h: float) -> SchedulePath:
    static = (path.static + h * V).tocsr() if h else path.static
    return SchedulePath(path.layout, static, path.coupling, path.segments, path.interaction, path.field_site,
                        path.J, dict(path.meta))


def fit_exponent(h: Sequence[float], y: Sequence[float], quantity: str = "") -> ExponentFit:
    """Least-squares slope of log y against log h (positive points only)."""
    h = np.asarray(h, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (h > 0) & (y > 0)
    if keep.sum() < 3:
        raise ValueError("an exponent fit needs at least three positive points")
    res = stats.linregress(np.log(h[keep]), np.log(y[keep]))
    t = stats.t.ppf(0.975, keep.sum() - 2)
    return ExponentFit(quantity, float(res.slope), float(res.stderr),
                       (float(res.slope - t * res.stderr), float(res.slope + t * res.stderr)), int(keep.sum()))


def gate_error_scan(path: SchedulePath, pert: PerturbationSpec, h_grid: Sequence[float],
                    T_total: Optional[float] = None, *, target: Optional[np.ndarray] = None,
                    dt: Optional[float] = None, baseline_min: float = 0.999) -> ErrorScan:
    """Run a single-qubit gate path with h V switched on for every h in ``h_grid``.

    ``p_leak`` is the perturbation-induced weight that the unperturbed logical
    basis states send outside the unperturbed code space. ``p_logical`` is the
    distance between the perturbed and unperturbed logical unitaries, each taken
    between its own start and end ground spaces. Raises ConvergenceError when the unperturbed gate misses
    ``target`` (if given) by more than ``1 - baseline_min``.
    """
    chain = ChainSpec(tuple(_spin_of(d) for d in path.layout))
    if path.interaction is not None:
        raise ConfigError("error scans are defined for single-chain gate paths")
    if T_total is not None:
        path = rescaled(path, T_total)
    V = pert.operator(chain)
    ground = ground_subspace(path.hamiltonian(0.0), 2)
    frame = chain_frame(ground, chain)
    P = ground.vectors

    def run(h: float):
        res = propagate(frame.vectors, perturbed_path(path, V, h), dt, final_subspace=ground)
        return res, extract_gate(frame, frame, res)

    def logical_gate(h: float):
        hp = perturbed_path(path, V, h)
        start = ground_subspace(hp.hamiltonian(0.0), 2)
        end = ground_subspace(hp.hamiltonian(hp.duration), 2)
        f_in, f_out = _dressed(frame, start), _dressed(frame, end)
        return extract_gate(f_in, f_out, propagate(f_in.vectors, hp, dt, final_subspace=end))

    base_res, base_gate = run(0.0)
    base_fid = gate_fidelity(base_gate.unitary, target) if target is not None else 1.0
    if base_fid < baseline_min:
        raise ConvergenceError(f"unperturbed gate fidelity {base_fid:.6f} < {baseline_min}; slow the ramp")
    out0 = base_res.final - P @ (P.conj().T @ base_res.final)
    rows = []
    for h in h_grid:
        res, _ = run(float(h))
        outside = res.final - P @ (P.conj().T @ res.final)
        leak = float(np.sum(np.abs(outside - out0) ** 2) / outside.shape[1])
        u0, u = base_gate.unitary, logical_gate(float(h)).unitary
        infid = 1 - abs(np.trace(u0.conj().T @ u)) / 2
        split = splitting_under_perturbation(chain, pert.with_strength(float(h))).splitting if h else 0.0
        rows.append(ErrorScanRow(float(h), min(1.0, leak), min(1.0, _norm_distance(u, u0)),
                                 float(max(0.0, infid)), split))
    fits = {}
    for name in ("p_leak", "p_logical", "infidelity"):
        try:
            fits[name] = fit_exponent([r.h for r in rows], [getattr(r, name) for r in rows], name)
        except ValueError:
            pass
    meta = {"path": dict(path.meta), "T_total": path.duration}
    return ErrorScan(rows, fits, base_fid, pert, path.duration, meta)


def _dressed(frame, subspace):
    """``frame`` carried into ``subspace`` by the rotation closest to the identity."""
    u, _, vh = np.linalg.svd(subspace.vectors.conj().T @ frame.vectors)
    return replace(frame, vectors=subspace.vectors @ (u @ vh))


def _spin_of(d: int) -> LocalSpin:
    return LocalSpin(Fraction(d - 1, 2))


def _norm_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Spectral-norm distance after aligning the global phase."""
    ov = np.trace(v.conj().T @ u)
    phase = ov / abs(ov) if abs(ov) > 1e-15 else 1.0
    return float(np.linalg.norm(u - phase * v, 2))


def unitary_change(scan: ErrorScan) -> float:
    """Largest logical-unitary distance over the grid (spectral norm, phase aligned)."""
    return max((r.p_logical for r in scan.rows), default=0.0)


def write_scan_csv(path, scan: ErrorScan, header: Sequence[str] = ()) -> None:
    rows = [(r.h, r.p_logical, r.p_leak, r.splitting, r.infidelity) for r in scan.rows]
    write_csv(path, ["h", "p_L", "p_leak", "splitting", "infidelity"], rows, header)


def scan_summary(scan: ErrorScan, extra: Optional[dict] = None) -> dict:
    out = {
        "perturbation_kind": scan.perturbation.kind,
        "perturbation_axis": scan.perturbation.axis,
        "t_total": scan.T_total,
        "baseline_fidelity": scan.baseline_fidelity,
        "max_unitary_change": unitary_change(scan),
    }
    for name, fit in scan.fits.items():
        out[f"{name}_exponent"] = fit.exponent
        out[f"{name}_exponent_stderr"] = fit.stderr
        out[f"{name}_exponent_ci95_low"] = fit.ci95[0]
        out[f"{name}_exponent_ci95_high"] = fit.ci95[1]
        out[f"{name}_fit_points"] = fit.points
    out.update(extra or {})
    return out
