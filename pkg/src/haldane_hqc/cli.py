"""Command-line runs that write CSV/JSON data for each experiment.

Every subcommand validates its configuration first, echoes the full
configuration into each output file and writes nothing that depends on the
clock, so identical configurations give byte-identical files.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError, ConvergenceError, GapClosureError, LeakageError
from .output import header_lines, write_csv, write_json

log = logging.getLogger("haldane_hqc")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_GAP = 4

SUBCOMMANDS = ("spectrum", "splitting-scan", "gap-path", "gate-1q", "gate-2q", "measure", "init", "vbs-leakage",
               "noise-scan", "fidelity-term")


@dataclass
class RunConfig:
    subcommand: str = ""
    n: int = 6
    n2: Optional[int] = None  # second chain of a two-qubit gate (defaults to n)
    n_min: int = 4
    n_max: int = 10
    j: float = 1.0
    beta_bq: float = 0.0
    terminated: bool = True
    k: int = 6
    axis: str = "z"
    axis2: Optional[str] = None
    ramp: str = "sin2"
    T: float = 60.0
    dt: Optional[float] = None
    steps: int = 64
    samples: int = 33
    method: str = "both"
    gate: str = "1q"
    tol: float = 1e-10
    seed: int = 12345
    shots: int = 100000
    trials: int = 10000
    input: str = "0"
    kind: str = "boundary"
    h_min: float = 1e-4
    h_max: float = 1e-2
    per_decade: int = 5
    angles: int = 13
    out: str = "out"
    dry_run: bool = False
    extra: dict = field(default_factory=dict)

    def provenance(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("extra", "dry_run")}
        d["package_version"] = __version__
        return d


def _positive(name: str, value, strict: bool = True) -> None:
    if value is None:
        return
    if (strict and not value > 0) or (not strict and not value >= 0):
        raise ConfigError(f"--{name.replace('_', '-')} must be {'positive' if strict else 'non-negative'}")


def validate(cfg: RunConfig) -> RunConfig:
    from .model import RAMPS, parse_axis

    if cfg.subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {cfg.subcommand!r}")
    for name in ("j", "T", "dt", "tol", "steps", "samples", "shots", "trials", "per_decade", "angles", "k"):
        _positive(name, getattr(cfg, name))
    if cfg.n < 1 or (cfg.n2 is not None and cfg.n2 < 2):
        raise ConfigError("chain lengths must be >= 1 (>= 2 for two-qubit gates)")
    if cfg.subcommand in ("gate-1q", "gate-2q", "measure", "init", "noise-scan", "gap-path") and cfg.n < 2:
        raise ConfigError(f"{cfg.subcommand} needs --n >= 2")
    if cfg.subcommand in ("splitting-scan", "fidelity-term") and not 2 <= cfg.n_min < cfg.n_max:
        raise ConfigError("need 2 <= --n-min < --n-max")
    if cfg.ramp not in RAMPS:
        raise ConfigError(f"--ramp must be one of {sorted(RAMPS)}")
    if cfg.method not in ("propagate", "transport", "both"):
        raise ConfigError("--method must be propagate, transport or both")
    if cfg.gate not in ("1q", "2q"):
        raise ConfigError("--gate must be 1q or 2q")
    if not 0 < cfg.h_min < cfg.h_max:
        raise ConfigError("need 0 < --h-min < --h-max")
    try:
        parse_axis(cfg.axis)
        if cfg.axis2 is not None:
            parse_axis(cfg.axis2)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad axis: {exc}") from exc
    return cfg


# ---------------------------------------------------------------------------
# Planned sizes for --dry-run


def planned_dimension(cfg: RunConfig) -> tuple[int, int]:
    """(Hilbert dimension, number of state vectors held at once) of the largest problem."""
    sub = cfg.subcommand
    if sub in ("splitting-scan", "fidelity-term"):
        n = cfg.n_max
        dim = 3 ** n * (2 if sub == "fidelity-term" else 1)
        return dim, 24
    if sub == "spectrum":
        return 3 ** cfg.n * (2 if cfg.terminated else 1), max(2 * cfg.k + 1, 24)
    if sub == "gate-2q" or (sub == "gap-path" and cfg.gate == "2q"):
        n2 = cfg.n2 or cfg.n
        return 3 ** cfg.n * 2 * 3 ** n2 * 2, 24 + 8
    if sub == "vbs-leakage":
        return 3 ** cfg.n * 2, 8
    return 3 ** cfg.n * 2, 24 + 44  # eigensolver block plus Krylov basis


def memory_estimate(cfg: RunConfig) -> int:
    dim, vectors = planned_dimension(cfg)
    bonds = max(1, cfg.n) + (cfg.n2 or 0)
    sparse = dim * (1 + 5 * bonds) * 12 * 2  # values + indices, a few operator copies
    return int(dim * 16 * vectors + sparse)


# ---------------------------------------------------------------------------
# Subcommands


def _stem(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out / cfg.subcommand.replace("-", "_")


def _header(cfg: RunConfig, extra: Optional[dict] = None) -> list[str]:
    d = cfg.provenance()
    d.update(extra or {})
    return header_lines(d)


def _report(cfg: RunConfig, body: dict, extra: Optional[dict] = None) -> dict:
    doc = {f"config_{k}": v for k, v in cfg.provenance().items()}
    doc.update(extra or {})
    doc.update(body)
    return doc


def cmd_spectrum(cfg: RunConfig) -> list[Path]:
    from .eigen import DENSE_CUTOFF, GroundSubspace, cluster_spins, ground_subspace
    from .model import open_chain, terminated_chain
    from .spinalg import ChainSpec

    chain = ChainSpec.terminated(cfg.n, cfg.j, cfg.beta_bq) if cfg.terminated else ChainSpec.open(cfg.n, cfg.j,
                                                                                                   cfg.beta_bq)
    H = (terminated_chain if cfg.terminated else open_chain)(cfg.n, cfg.j, cfg.beta_bq)
    dim = H.shape[0]
    if dim <= DENSE_CUTOFF:
        # small problems: every level is available
        vals, vecs = np.linalg.eigh(H.toarray())
        k = min(cfg.k, dim)
        sub = GroundSubspace(vecs[:, :k], vals[:k], float(vals[k]) if k < dim else float("nan"))
    else:
        k = cfg.k
        sub = ground_subspace(H, k, cfg.tol)
    spins = cluster_spins(chain.dims, sub)
    stem = _stem(cfg)
    rows = [(i, e, spins[i]) for i, e in enumerate(sub.energies)]
    write_csv(stem.with_suffix(".csv"), ["index", "energy", "spin"], rows, _header(cfg))
    nxt = None if np.isnan(sub.next_energy) else sub.next_energy
    doc = {"dimension": chain.dim, "energies": sub.energies, "spins": spins, "next_energy": nxt}
    if cfg.terminated and k >= 2:
        doc.update(doublet_splitting=float(sub.energies[1] - sub.energies[0]),
                   gap=float(sub.energies[2] - sub.energies[1]) if k > 2 else None)
    write_json(stem.with_suffix(".json"), _report(cfg, doc))
    return [stem.with_suffix(".csv"), stem.with_suffix(".json")]


def cmd_splitting_scan(cfg: RunConfig) -> list[Path]:
    from .eigen import fit_correlation_length, splitting_scan

    rows = splitting_scan(cfg.n_min, cfg.n_max, cfg.j, cfg.beta_bq, cfg.tol)
    stem = _stem(cfg)
    write_csv(stem.with_suffix(".csv"), ["n", "splitting", "ground_spin", "e0", "e1", "e2", "e3"],
              [(r.n, r.splitting, r.spin, *r.energies) for r in rows], _header(cfg))
    try:
        xi = fit_correlation_length(rows)
    except ValueError:
        xi = None
    write_json(stem.with_suffix(".json"), _report(cfg, {"correlation_length": xi, "points": len(rows)}))
    return [stem.with_suffix(".csv"), stem.with_suffix(".json")]


def _two_chain_spec(cfg: RunConfig):
    from .model import TwoChainSpec
    from .spinalg import ChainSpec

    return TwoChainSpec(ChainSpec.terminated(cfg.n, cfg.j, cfg.beta_bq),
                        ChainSpec.terminated(cfg.n2 or cfg.n, cfg.j, cfg.beta_bq))


def _single_path(cfg: RunConfig):
    """Gate path and ideal action: the decoupling stage alone without --axis2, the full loop with it."""
    from .model import decoupling_path, decoupling_target, single_qubit_path, single_qubit_target

    if cfg.axis2 is None:
        return (decoupling_path(cfg.n, cfg.axis, cfg.T, cfg.j, cfg.beta_bq, cfg.ramp),
                decoupling_target(cfg.axis))
    return (single_qubit_path(cfg.n, cfg.axis, cfg.axis2, cfg.T / 3, cfg.j, cfg.beta_bq, cfg.ramp),
            single_qubit_target(cfg.axis, cfg.axis2))


def _loop_path(cfg: RunConfig):
    """Closed decouple-recouple loop (noise scans need the gate to return to the coupled chain)."""
    from .model import single_qubit_path, single_qubit_target

    segs = 3 if cfg.axis2 is not None else 2
    return (single_qubit_path(cfg.n, cfg.axis, cfg.axis2, cfg.T / segs, cfg.j, cfg.beta_bq, cfg.ramp),
            single_qubit_target(cfg.axis, cfg.axis2))


def cmd_gap_path(cfg: RunConfig) -> list[Path]:
    from .eigen import gap_along_path
    from .model import two_qubit_path

    path = _single_path(cfg)[0] if cfg.gate == "1q" else two_qubit_path(_two_chain_spec(cfg), (cfg.T,), ramp=cfg.ramp)
    rows = gap_along_path(path, cfg.samples, tol=max(cfg.tol, 1e-9))
    k = len(rows[0].energies)
    stem = _stem(cfg)
    write_csv(stem.with_suffix(".csv"), ["t"] + [f"e{i}" for i in range(k)] + ["e_next", "gap", "splitting"],
              [(r.t, *r.energies, r.next_energy, r.gap, r.splitting) for r in rows], _header(cfg))
    gaps = [r.gap for r in rows]
    write_json(stem.with_suffix(".json"), _report(cfg, {
        "min_gap": min(gaps), "min_gap_time": rows[int(np.argmin(gaps))].t,
        "max_splitting": max(r.splitting for r in rows), "samples": len(rows)}))
    return [stem.with_suffix(".csv"), stem.with_suffix(".json")]


def cmd_gate_1q(cfg: RunConfig) -> list[Path]:
    from .eigen import ground_subspace
    from .evolve import parallel_transport, propagate
    from .holonomy import endpoint_frames, extract_gate, gate_fidelity, rotation_angle_axis

    path, target = _single_path(cfg)
    stage = "decouple" if cfg.axis2 is None else "loop"
    ground = ground_subspace(path.hamiltonian(0.0), 2, cfg.tol)
    ground_end = ground_subspace(path.hamiltonian(path.duration), 2, cfg.tol)
    frame, frame_end = endpoint_frames(path, ground, ground_end)
    doc: dict[str, Any] = {"target": target, "stage": stage}
    reports = {}
    if cfg.method in ("propagate", "both"):
        res = propagate(frame.vectors, path, cfg.dt, final_subspace=ground_end)
        rep = extract_gate(frame, frame_end, res, target=target)
        reports["propagate"] = rep
        doc.update(propagated_unitary=rep.unitary, propagated_fidelity=rep.fidelity,
                   propagated_fidelity_with_leakage=rep.fidelity * (1 - rep.leakage),
                   leakage=rep.leakage, norm_drift=res.norm_drift, time_steps=res.steps)
    if cfg.method in ("transport", "both"):
        tr = parallel_transport(path, cfg.steps, 2, tol=cfg.tol)
        fin, fout = endpoint_frames(path, tr.initial, tr.final)
        rep = extract_gate(fin, fout, tr, target=target)
        reports["transport"] = rep
        doc.update(transport_unitary=rep.unitary, transport_fidelity=rep.fidelity,
                   transport_min_gap=tr.min_gap, transport_min_overlap_singular_value=tr.min_singular_value)
    if len(reports) == 2:
        doc["method_agreement"] = 1 - gate_fidelity(reports["propagate"].unitary, reports["transport"].unitary)
    main = reports.get("propagate") or reports["transport"]
    angle, axis = rotation_angle_axis(main.unitary)
    doc.update(unitary=main.unitary, fidelity=main.fidelity, rotation_angle=angle, rotation_axis=axis,
               global_phase_removed=True)
    stem = _stem(cfg)
    write_json(stem.with_suffix(".json"), _report(cfg, doc))
    return [stem.with_suffix(".json")]


def cmd_gate_2q(cfg: RunConfig) -> list[Path]:
    from .evolve import parallel_transport
    from .holonomy import derive_two_qubit_constraints, extract_gate, two_chain_frame
    from .model import XX_CPHASE, two_qubit_path

    spec = _two_chain_spec(cfg)
    path = two_qubit_path(spec, (cfg.T,), ramp=cfg.ramp)
    tr = parallel_transport(path, cfg.steps, 4, tol=max(cfg.tol, 1e-9))
    sa, sb = spec.sites_a, spec.sites_b
    fin = two_chain_frame(tr.initial, path.layout, sa, sb)
    fout = two_chain_frame(tr.final, path.layout, sa[1:], sb[1:])
    rep = extract_gate(fin, fout, tr, target=XX_CPHASE, target_name="XX.CPHASE")
    con = derive_two_qubit_constraints(rep.unitary, tol=None)
    doc = {
        "dimension": path.dim, "unitary": rep.unitary, "target": XX_CPHASE, "target_name": "XX.CPHASE",
        "fidelity": rep.fidelity, "leakage": rep.leakage, "global_phase_removed": True,
        "min_gap": tr.min_gap, "max_splitting": tr.max_splitting,
        "min_overlap_singular_value": tr.min_singular_value,
        "alpha": con.alpha, "beta": con.beta, "gamma": con.gamma, "delta": con.delta,
        "off_antidiagonal": con.off_antidiagonal, "unit_magnitude": con.unit_magnitude,
        "delta_plus_alpha": con.delta_plus_alpha, "gamma_minus_beta": con.gamma_minus_beta,
        "alpha_plus_beta": con.alpha_plus_beta, "constraint_violations": con.violations(1e-3),
    }
    stem = _stem(cfg)
    write_json(stem.with_suffix(".json"), _report(cfg, doc))
    return [stem.with_suffix(".json")]


def cmd_measure(cfg: RunConfig) -> list[Path]:
    from .readout import (RNG_ALGORITHM, chain_logical_frame, clebsch_gordan_probabilities, decouple_no_field,
                          measure_boundary, write_statistics_csv)

    frame = chain_logical_frame(cfg.n, cfg.j, cfg.beta_bq)
    labels = [s.strip() for s in cfg.input.split(",")]
    amps = {"0": (1, 0), "1": (0, 1), "+": (1, 1), "-": (1, -1), "+i": (1, 1j), "-i": (1, -1j)}
    rows, doc = [], {"rng_algorithm": RNG_ALGORITHM}
    rng = np.random.default_rng(cfg.seed)
    for label in labels:
        if label not in amps:
            raise ConfigError(f"unknown input state {label!r}")
        a = np.asarray(amps[label], dtype=complex) / np.linalg.norm(amps[label])
        dec = decouple_no_field(frame.state(a), cfg.n, cfg.T, J=cfg.j, beta_bq=cfg.beta_bq, dt=cfg.dt)
        outs = measure_boundary(dec.state)
        probs = np.array([o.probability for o in outs])
        counts = rng.multinomial(cfg.shots, probs / probs.sum())
        oracle = clebsch_gordan_probabilities(a)
        key = _label_key(label)
        for o, c in zip(outs, counts):
            rows.append((label, o.m, o.probability, c / cfg.shots, cfg.shots))
            doc[f"p_{key}_m{_m_key(o.m)}"] = o.probability
            doc[f"p_{key}_m{_m_key(o.m)}_clebsch_gordan"] = oracle[o.m]
        doc[f"leakage_{key}"] = dec.leakage
    stem = _stem(cfg)
    write_statistics_csv(stem.with_suffix(".csv"), rows, _header(cfg, {"rng_algorithm": RNG_ALGORITHM}))
    write_json(stem.with_suffix(".json"), _report(cfg, doc))
    return [stem.with_suffix(".csv"), stem.with_suffix(".json")]


def _label_key(label: str) -> str:
    return {"+": "plus", "-": "minus", "+i": "plus_i", "-i": "minus_i"}.get(label, label)


def _m_key(m: int) -> str:
    return {1: "plus1", 0: "0", -1: "minus1"}[m]


def cmd_init(cfg: RunConfig) -> list[Path]:
    from .readout import RNG_ALGORITHM, initialize, readout_maps

    maps = readout_maps(cfg.n, cfg.T, cfg.j, cfg.beta_bq, cfg.dt)
    seeds = np.random.SeedSequence(cfg.seed).generate_state(cfg.trials)
    results = [initialize(cfg.n, int(s), maps=maps) for s in seeds]
    attempts = np.array([r.attempts for r in results])
    hist = np.bincount(attempts)
    stem = _stem(cfg)
    write_csv(stem.with_suffix(".csv"), ["attempts", "count"],
              [(i, int(c)) for i, c in enumerate(hist) if i > 0], _header(cfg, {"rng_algorithm": RNG_ALGORITHM}))
    doc = {
        "rng_algorithm": RNG_ALGORITHM, "mean_attempts": float(attempts.mean()),
        "mean_attempts_stderr": float(attempts.std(ddof=1) / np.sqrt(len(attempts))) if len(attempts) > 1 else None,
        "fraction_label_0": float(np.mean([r.label == "0" for r in results])),
        "min_abs_sigma_z": float(min(abs(r.sigma_z) for r in results)),
        "decouple_leakage": maps.decouple_leakage, "recouple_leakage": maps.recouple_leakage,
    }
    write_json(stem.with_suffix(".json"), _report(cfg, doc))
    return [stem.with_suffix(".csv"), stem.with_suffix(".json")]


def cmd_vbs_leakage(cfg: RunConfig) -> list[Path]:
    from .aklt import leakage_scan, write_leakage_csv

    if cfg.n < 3:
        raise ConfigError("vbs-leakage needs --n >= 3 so that a bulk site exists")
    angles = np.linspace(0.0, np.pi, cfg.angles)
    axes = [cfg.axis] + ([cfg.axis2] if cfg.axis2 else [])
    rows = leakage_scan(cfg.n, range(cfg.n), axes, angles)
    stem = _stem(cfg)
    write_leakage_csv(stem.with_suffix(".csv"), rows, _header(cfg))
    dev = max(abs(r[3] - np.cos(r[2] / 2)) for r in rows)
    write_json(stem.with_suffix(".json"), _report(cfg, {"max_amplitude_deviation_from_cos_half_angle": dev,
                                                        "rows": len(rows)}))
    return [stem.with_suffix(".csv"), stem.with_suffix(".json")]


def cmd_noise_scan(cfg: RunConfig) -> list[Path]:
    from .noise import PerturbationSpec, gate_error_scan, scan_summary, write_scan_csv

    decades = np.log10(cfg.h_max / cfg.h_min)
    points = max(3, int(round(decades * cfg.per_decade)) + 1)
    grid = np.logspace(np.log10(cfg.h_min), np.log10(cfg.h_max), points)
    pert_axis = cfg.extra.get("pert_axis", "z")
    pert = PerturbationSpec(cfg.kind, pert_axis)
    path, target = _loop_path(cfg)
    scan = gate_error_scan(path, pert, grid, target=target, dt=cfg.dt)
    stem = _stem(cfg)
    write_scan_csv(stem.with_suffix(".csv"), scan, _header(cfg, {"pert_axis": pert_axis}))
    write_json(stem.with_suffix(".json"), _report(cfg, scan_summary(scan), {"config_pert_axis": pert_axis}))
    return [stem.with_suffix(".csv"), stem.with_suffix(".json")]


def cmd_fidelity_term(cfg: RunConfig) -> list[Path]:
    from .aklt import terminated_vs_open_fidelity

    ns = list(range(max(2, cfg.n_min), cfg.n_max + 1))
    fids = [terminated_vs_open_fidelity(n, cfg.beta_bq, cfg.j, cfg.tol) for n in ns]
    slope = float(np.polyfit(ns, fids, 1)[0]) if len(ns) > 1 else None
    stem = _stem(cfg)
    write_csv(stem.with_suffix(".csv"), ["n", "fidelity"], list(zip(ns, fids)), _header(cfg))
    write_json(stem.with_suffix(".json"), _report(cfg, {"fitted_slope": slope, "min_fidelity": min(fids)}))
    return [stem.with_suffix(".csv"), stem.with_suffix(".json")]


COMMANDS: dict[str, Callable[[RunConfig], list[Path]]] = {
    "spectrum": cmd_spectrum, "splitting-scan": cmd_splitting_scan, "gap-path": cmd_gap_path,
    "gate-1q": cmd_gate_1q, "gate-2q": cmd_gate_2q, "measure": cmd_measure, "init": cmd_init,
    "vbs-leakage": cmd_vbs_leakage, "noise-scan": cmd_noise_scan, "fidelity-term": cmd_fidelity_term,
}


# ---------------------------------------------------------------------------
# Argument handling


def _add_common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--n", type=int, default=S, help="number of spin-1 sites (first chain)")
    p.add_argument("--n2", type=int, default=S, help="second chain length for two-chain runs")
    p.add_argument("--n-min", type=int, default=S)
    p.add_argument("--n-max", type=int, default=S)
    p.add_argument("--j", type=float, default=S, help="exchange coupling J > 0")
    p.add_argument("--beta-bq", type=float, default=S, help="biquadratic coupling (1/3 is the AKLT point)")
    p.add_argument("--axis", default=S, help="x, y, z, u, v or comma-separated components")
    p.add_argument("--axis2", default=S)
    p.add_argument("--ramp", default=S)
    p.add_argument("--T", type=float, default=S, help="total ramp duration in units of 1/J")
    p.add_argument("--dt", type=float, default=S, help="time step (default min(0.02/J, T_seg/200))")
    p.add_argument("--steps", type=int, default=S, help="transport steps per segment")
    p.add_argument("--samples", type=int, default=S)
    p.add_argument("--tol", type=float, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--out", default=S, help="output directory")
    p.add_argument("--config", default=S, help="JSON file of option values (flags override it)")
    p.add_argument("--dry-run", action="store_true", default=S)
    p.add_argument("-v", "--verbose", action="store_true", default=False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="haldane-hqc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="subcommand", required=True)
    S = argparse.SUPPRESS
    for name in SUBCOMMANDS:
        p = subs.add_parser(name)
        _add_common(p)
        if name == "spectrum":
            g = p.add_mutually_exclusive_group()
            g.add_argument("--terminated", dest="terminated", action="store_true", default=S)
            g.add_argument("--open", dest="terminated", action="store_false", default=S)
            p.add_argument("--k", type=int, default=S, help="number of levels")
        if name == "gap-path":
            p.add_argument("--gate", choices=("1q", "2q"), default=S)
        if name == "gate-1q":
            p.add_argument("--method", choices=("propagate", "transport", "both"), default=S)
        if name in ("measure",):
            p.add_argument("--input", default=S, help="comma-separated logical inputs: 0,1,+,-,+i,-i")
            p.add_argument("--shots", type=int, default=S)
        if name == "init":
            p.add_argument("--trials", type=int, default=S)
        if name == "vbs-leakage":
            p.add_argument("--angles", type=int, default=S)
        if name == "noise-scan":
            p.add_argument("--kind", choices=("boundary", "bulk", "homogeneous", "d2"), default=S)
            p.add_argument("--pert-axis", default=S)
            p.add_argument("--h-min", type=float, default=S)
            p.add_argument("--h-max", type=float, default=S)
            p.add_argument("--per-decade", type=int, default=S)
    return parser


_FIELDS = {f.name for f in fields(RunConfig)}


def load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def make_config(args: argparse.Namespace) -> RunConfig:
    given = {k: v for k, v in vars(args).items() if k not in ("verbose",)}
    merged: dict[str, Any] = {}
    if "config" in given:
        merged.update(load_config_file(given.pop("config")))
    merged.update(given)
    extra = {k: merged.pop(k) for k in list(merged) if k not in _FIELDS}
    merged.setdefault("T", RunConfig.T)
    cfg = RunConfig(**merged, extra=extra)
    unknown = set(extra) - {"pert_axis"}
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    return validate(cfg)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    try:
        try:
            cfg = make_config(args)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc
        if cfg.dry_run:
            dim, vecs = planned_dimension(cfg)
            mem = memory_estimate(cfg)
            print(f"{cfg.subcommand}: hilbert dimension {dim}, about {vecs} vectors, "
                  f"estimated peak memory {mem / 2 ** 20:.1f} MiB")
            return EXIT_OK
        paths = COMMANDS[cfg.subcommand](cfg)
        for p in paths:
            log.info("wrote %s", p)
        return EXIT_OK
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GapClosureError as exc:
        print(f"gap closure: {exc}", file=sys.stderr)
        return EXIT_GAP
    except (ConvergenceError, LeakageError) as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
