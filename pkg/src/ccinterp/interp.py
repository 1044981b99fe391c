"""Chebyshev/barycentric interpolation of CCSD amplitudes along a trajectory.

Offline: at every Chebyshev node run integrals -> SCF -> CCSD and keep a
Snapshot.  Online: at a new parameter value mu, run integrals -> SCF only,
carry every stored amplitude tensor into the MO frame at mu with the
cross-geometry transform, and combine with Lagrange weights.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSet, basis_from_descriptor
from .ccsd import AmplitudeSet, CcConfig, antisymmetrize, cc_energy, solve_ccsd
from .errors import CcInterpError, InconsistentSet, NodeFailure, NonpositiveError, ShapeMismatch, ZeroReference
from .exctensor import TransformPair, cross_transform_amplitudes, mo_to_ao, ExcTensor
from .geometry import Trajectory
from .integrals import IntegralBundle, compute_integrals
from .scf import MoIntegrals, ScfConfig, ScfSolution, mo_transform, scf_iterate
from .snapshot import (
    SnapshotManifest,
    Snapshot,
    check_consistent,
    load_manifest_snapshots,
    write_manifest,
    write_snapshot,
)


@dataclass(frozen=True)
class NodeSet:
    nodes: np.ndarray
    bary_weights: np.ndarray

    @property
    def d(self) -> int:
        return len(self.nodes)


def chebyshev_nodes(d: int) -> NodeSet:
    """First-kind Chebyshev nodes mapped to [0, 1], ascending, with barycentric weights."""
    if d < 1:
        raise ValueError("need at least one node")
    k = np.arange(d)
    theta = (2 * k + 1) * np.pi / (2 * d)
    nodes = (1 + np.cos(theta)) / 2
    w = (-1.0) ** k * np.sin(theta)
    order = np.argsort(nodes)
    w = w[order]
    return NodeSet(nodes[order], w / np.abs(w).max())


def lagrange_basis(ns: NodeSet, mu: float) -> np.ndarray:
    """Second-form barycentric evaluation of all Lagrange polynomials at mu."""
    diff = mu - ns.nodes
    hit = np.flatnonzero(diff == 0.0)
    if hit.size:
        out = np.zeros(ns.d)
        out[hit[0]] = 1.0
        return out
    q = ns.bary_weights / diff
    return q / q.sum()


def grid_points(n: int = 50) -> np.ndarray:
    """n equidistant points of [0, 1], endpoints included."""
    return np.linspace(0.0, 1.0, n)


# --- per-geometry state ------------------------------------------------------

@dataclass(frozen=True)
class GeometryState:
    """Integrals + SCF at one parameter value (the cheap part of a point)."""

    mu: float
    bundle: IntegralBundle = field(repr=False)
    scf: ScfSolution = field(repr=False)
    mo: MoIntegrals = field(repr=False)

    @property
    def tp(self) -> TransformPair:
        return TransformPair.from_scf(self.scf)


def geometry_state(traj: Trajectory, basis: BasisSet, mu: float, n_electrons: int,
                   scf_config: ScfConfig = ScfConfig()) -> GeometryState:
    geom = traj(mu)
    bundle = compute_integrals(geom, basis)
    scf = scf_iterate(bundle, n_electrons, scf_config)
    return GeometryState(mu, bundle, scf, mo_transform(bundle, scf))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CCINTERP_THREADS", "1")))
    except ValueError:
        return 1


def run_node(traj: Trajectory, basis: BasisSet, mu: float, n_electrons: int,
             scf_config: ScfConfig = ScfConfig(), cc_config: CcConfig = CcConfig()) -> Snapshot:
    st = geometry_state(traj, basis, mu, n_electrons, scf_config)
    sol = solve_ccsd(st.mo, None, cc_config)
    return snapshot_from_state(st, sol, traj, basis, scf_config, cc_config)


def snapshot_from_state(st: GeometryState, sol, traj, basis, scf_config, cc_config) -> Snapshot:
    return Snapshot(
        mu=float(st.mu),
        geometry=traj(st.mu),
        basis_descriptor=basis.descriptor(),
        n_electrons=2 * st.scf.n_occ,
        S=st.scf.S,
        C=st.scf.C,
        lambdas=st.scf.lambdas,
        E_hf=st.scf.E_hf,
        gap=st.scf.gap,
        T1=sol.amplitudes.t1,
        T2=sol.amplitudes.t2,
        e_corr=sol.e_corr,
        scf_iterations=st.scf.iterations,
        cc_iterations=sol.iterations,
        config={"scf": vars_of(scf_config), "cc": vars_of(cc_config)},
        trajectory_checksum=traj.checksum(),
    )


def vars_of(cfg) -> dict:
    return {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}


@dataclass(frozen=True)
class Interpolant:
    node_set: NodeSet
    snapshots: tuple[Snapshot, ...]
    trajectory: Trajectory
    basis: BasisSet
    n_electrons: int
    scf_config: ScfConfig = ScfConfig()

    def __post_init__(self):
        if len(self.snapshots) != self.node_set.d:
            raise ShapeMismatch("snapshot count differs from node count")
        check_consistent(list(self.snapshots))
        for s, mu in zip(self.snapshots, self.node_set.nodes):
            if s.mu != mu:
                raise ShapeMismatch(f"snapshot mu {s.mu!r} differs from node {mu!r}")

    @property
    def source_pairs(self) -> list[TransformPair]:
        return [TransformPair.from_spatial(s.C, s.S, s.n_occ) for s in self.snapshots]

    def target(self, mu: float) -> GeometryState:
        return geometry_state(self.trajectory, self.basis, mu, self.n_electrons, self.scf_config)


def offline_build(traj: Trajectory, basis: BasisSet, d: int, n_electrons: int | None = None,
                  scf_config: ScfConfig = ScfConfig(), cc_config: CcConfig = CcConfig(),
                  nodes: NodeSet | None = None) -> Interpolant:
    ns = chebyshev_nodes(d) if nodes is None else nodes
    n_el = traj.gamma0.n_electrons_neutral if n_electrons is None else n_electrons

    def work(k):
        mu = float(ns.nodes[k])
        try:
            return run_node(traj, basis, mu, n_el, scf_config, cc_config)
        except CcInterpError as exc:
            raise NodeFailure(k, mu, exc) from exc

    nthreads = min(_threads(), ns.d)
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as pool:
            snaps = list(pool.map(work, range(ns.d)))
    else:
        snaps = [work(k) for k in range(ns.d)]
    return Interpolant(ns, tuple(snaps), traj, basis, n_el, scf_config)


def interpolant_from_snapshots(snaps, traj: Trajectory, scf_config: ScfConfig = ScfConfig(),
                               basis: BasisSet | None = None) -> Interpolant:
    """Wrap externally produced (or reloaded) snapshots; nodes are taken from the snapshots."""
    snaps = sorted(snaps, key=lambda s: s.mu)
    mus = np.array([s.mu for s in snaps])
    cheb = chebyshev_nodes(len(mus))
    if np.array_equal(mus, cheb.nodes):
        ns = cheb   # same bits as a fresh build
    else:
        # barycentric weights for arbitrary nodes: w_j = 1 / prod_{k != j}(mu_j - mu_k)
        w = np.array([1.0 / np.prod([mj - mk for k, mk in enumerate(mus) if k != j]) for j, mj in enumerate(mus)])
        ns = NodeSet(mus, w / np.abs(w).max())
    basis = basis or basis_from_descriptor(snaps[0].basis_descriptor)
    return Interpolant(ns, tuple(snaps), traj, basis, snaps[0].n_electrons, scf_config)


MANIFEST = "manifest.txt"


def save_interpolant(itp: Interpolant, directory) -> str:
    """Write one snapshot file per node plus a manifest; returns the manifest path."""
    os.makedirs(directory, exist_ok=True)
    files = []
    for k, s in enumerate(itp.snapshots):
        name = f"node_{k:03d}.snap"
        write_snapshot(s, os.path.join(directory, name))
        files.append(name)
    m = SnapshotManifest(
        nodes=tuple(float(x) for x in itp.node_set.nodes),
        files=tuple(files),
        trajectory_descriptor=itp.trajectory.descriptor(),
        trajectory_checksum=itp.trajectory.checksum(),
        basis_checksum=itp.snapshots[0].basis_checksum,
        n_electrons=itp.n_electrons,
    )
    path = os.path.join(directory, MANIFEST)
    write_manifest(m, path)
    return path


def load_interpolant(manifest_path, traj: Trajectory, scf_config: ScfConfig = ScfConfig(),
                     basis: BasisSet | None = None) -> Interpolant:
    m, snaps = load_manifest_snapshots(manifest_path)
    if m.trajectory_checksum and m.trajectory_checksum != traj.checksum():
        raise InconsistentSet(f"{manifest_path} was produced for a different trajectory")
    return interpolant_from_snapshots(snaps, traj, scf_config, basis)


def online_eval(itp: Interpolant, mu: float, target: GeometryState | None = None) -> AmplitudeSet:
    target = itp.target(mu) if target is None else target
    L = lagrange_basis(itp.node_set, mu)
    tp = target.tp
    t1 = t2 = None
    for s, tp_j, w in zip(itp.snapshots, itp.source_pairs, L):
        if w == 0.0:
            continue
        a = cross_transform_amplitudes(AmplitudeSet(s.T1, s.T2), tp, tp_j)
        t1 = w * a.t1 if t1 is None else t1 + w * a.t1
        t2 = w * a.t2 if t2 is None else t2 + w * a.t2
    return AmplitudeSet(t1, antisymmetrize(t2))


def online_eval_raw(itp: Interpolant, mu: float) -> AmplitudeSet:
    """Control: interpolate the raw MO amplitude entries without any transform."""
    L = lagrange_basis(itp.node_set, mu)
    t1 = sum(w * s.T1 for s, w in zip(itp.snapshots, L))
    t2 = sum(w * s.T2 for s, w in zip(itp.snapshots, L))
    return AmplitudeSet(t1, t2)


@dataclass(frozen=True)
class BoundReport:
    mu: float
    lhs: tuple[float, float]   # ||T~_k - T_k||_F for k = 1, 2
    rhs: tuple[float, float]   # ||S(mu)||_2^k e_k
    interp_error: tuple[float, float]  # e_k, AO-basis interpolation error
    ok: bool
    slack: float = 1e-10


def error_bound_check(itp: Interpolant, mu: float, t_exact: AmplitudeSet,
                      target: GeometryState | None = None, slack: float = 1e-10) -> BoundReport:
    target = itp.target(mu) if target is None else target
    approx = online_eval(itp, mu, target)
    L = lagrange_basis(itp.node_set, mu)
    tp = target.tp
    s_norm = np.linalg.norm(target.scf.S, 2)
    lhs, rhs, errs = [], [], []
    for k, name, exact in ((1, "t1", t_exact.t1), (2, "t2", t_exact.t2)):
        ao_interp = None
        for s, tp_j, w in zip(itp.snapshots, itp.source_pairs, L):
            src = s.T1 if k == 1 else s.T2
            term = w * mo_to_ao(ExcTensor(src, k), tp_j).data
            ao_interp = term if ao_interp is None else ao_interp + term
        ao_exact = mo_to_ao(ExcTensor(exact, k), tp).data
        e_k = float(np.linalg.norm(ao_interp - ao_exact))
        lhs.append(float(np.linalg.norm(getattr(approx, name) - exact)))
        rhs.append(float(s_norm ** k * e_k))
        errs.append(e_k)
    ok = all(l <= r + slack for l, r in zip(lhs, rhs))
    return BoundReport(mu, tuple(lhs), tuple(rhs), tuple(errs), ok, slack)


def amplitude_error(approx: AmplitudeSet, exact: AmplitudeSet) -> float:
    a, e = approx.vector(), exact.vector()
    if a.shape != e.shape:
        raise ShapeMismatch("amplitude vectors differ in length")
    ref = np.linalg.norm(e)
    if ref < 1e-14:
        raise ZeroReference(f"reference amplitude norm {ref:.3e} too small")
    return float(np.linalg.norm(a - e) / ref)


def mle(errors) -> float:
    """Mean base-10 logarithm of relative errors."""
    errs = np.asarray(list(errors), dtype=float)
    if errs.size == 0 or np.any(~(errs > 0)):
        raise NonpositiveError("mean log error needs strictly positive errors")
    return float(np.mean(np.log10(errs)))


def interpolated_energy(itp: Interpolant, mu: float, target: GeometryState | None = None) -> float:
    target = itp.target(mu) if target is None else target
    return cc_energy(online_eval(itp, mu, target), target.mo)
