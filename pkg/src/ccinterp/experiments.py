"""Experiment drivers: decay of the interpolation error, warm starts, energy
reconstruction and the orbital-crossing control.

Every study works on a ``GridReference`` (SCF + exact CCSD at each grid point),
computed once and shared across node counts.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .basis import BasisSet
from .ccsd import CcConfig, CcSolution, cc_energy, solve_ccsd
from .errors import CcNotConverged, NoCrossingDetected
from .geometry import Trajectory
from .interp import (
    GeometryState,
    Interpolant,
    _threads,
    amplitude_error,
    error_bound_check,
    geometry_state,
    grid_points,
    mle,
    online_eval,
    online_eval_raw,
)
from .scf import ScfConfig

NO_DIIS_MAX_ITER = 500
JUMP_FACTOR = 10.0
JUMP_WINDOW = 5


def _pmap(fn, items):
    items = list(items)
    n = min(_threads(), len(items))
    if n > 1:
        with ThreadPoolExecutor(n) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


@dataclass(frozen=True)
class GridReference:
    mus: np.ndarray
    states: tuple[GeometryState, ...]
    exact: tuple[CcSolution, ...]


def reference_grid(traj: Trajectory, basis: BasisSet, n_electrons: int, n_grid: int = 50,
                   scf_config: ScfConfig = ScfConfig(), cc_config: CcConfig = CcConfig()) -> GridReference:
    mus = grid_points(n_grid)

    def work(mu):
        st = geometry_state(traj, basis, float(mu), n_electrons, scf_config)
        return st, solve_ccsd(st.mo, None, cc_config)

    res = _pmap(work, mus)
    return GridReference(mus, tuple(r[0] for r in res), tuple(r[1] for r in res))


# --- decay -------------------------------------------------------------------

def decay_study(ref: GridReference, itps: dict[int, Interpolant]):
    rows, points = [], []
    for d, itp in sorted(itps.items()):
        errs, raw = [], []
        violations = 0
        for mu, st, ex in zip(ref.mus, ref.states, ref.exact):
            e = amplitude_error(online_eval(itp, mu, st), ex.amplitudes)
            r = amplitude_error(online_eval_raw(itp, mu), ex.amplitudes)
            b = error_bound_check(itp, mu, ex.amplitudes, st)
            violations += not b.ok
            errs.append(e)
            raw.append(r)
            points.append({"d": d, "mu": mu, "E_mu": e, "E_mu_raw": r,
                           "bound_lhs_1": b.lhs[0], "bound_rhs_1": b.rhs[0],
                           "bound_lhs_2": b.lhs[1], "bound_rhs_2": b.rhs[1], "bound_ok": int(b.ok)})
        rows.append({"d": d, "E_MLE": mle(_floor(errs)), "min_E_mu": min(errs), "max_E_mu": max(errs),
                     "E_MLE_raw": mle(_floor(raw)), "bound_violations": violations})
    return rows, points


def _floor(errs, tiny=1e-300):
    # a grid point that coincides with a node can give an exactly zero error
    return [max(e, tiny) for e in errs]


def linear_fit(x, y):
    """Least-squares slope, intercept and R^2."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    ss_res = float(np.sum((y - (slope * x + icpt)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return float(slope), float(icpt), 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


# --- warm start --------------------------------------------------------------

def _iterations(mo, guess, cfg: CcConfig) -> float:
    try:
        return float(solve_ccsd(mo, guess, cfg).iterations)
    except CcNotConverged:
        return float("nan")


def warm_start_study(ref: GridReference, itps: dict[int, Interpolant], cc_config: CcConfig = CcConfig()):
    """Iteration counts from the MP2 guess and from the interpolated guess, with and without DIIS."""
    diis = replace(cc_config, use_diis=True)
    plain = replace(cc_config, use_diis=False, max_iter=max(cc_config.max_iter, NO_DIIS_MAX_ITER))
    mp2 = [float(ex.iterations) if cc_config.use_diis else _iterations(st.mo, None, diis)
           for st, ex in zip(ref.states, ref.exact)]
    mp2_plain = _pmap(lambda st: _iterations(st.mo, None, plain), ref.states)
    rows, points = [], []
    for d, itp in sorted(itps.items()):
        def work(k):
            mu, st = ref.mus[k], ref.states[k]
            guess = online_eval(itp, mu, st)
            return _iterations(st.mo, guess, diis), _iterations(st.mo, guess, plain)

        res = _pmap(work, range(len(ref.mus)))
        node_iters = []
        for s, mu in zip(itp.snapshots, itp.node_set.nodes):
            st = itp.target(float(mu))
            node_iters.append(_iterations(st.mo, online_eval(itp, float(mu), st), diis))
        for k, mu in enumerate(ref.mus):
            points.append({"d": d, "mu": mu, "iterations_warm": res[k][0], "iterations_mp2": mp2[k],
                           "iterations_warm_nodiis": res[k][1], "iterations_mp2_nodiis": mp2_plain[k]})
        rows.append({"d": d,
                     "mean_warm": float(np.mean([r[0] for r in res])),
                     "mean_mp2": float(np.mean(mp2)),
                     "mean_warm_nodiis": float(np.nanmean([r[1] for r in res])),
                     "mean_mp2_nodiis": float(np.nanmean(mp2_plain)),
                     "max_node_iterations": float(max(node_iters))})
    return rows, points


# --- energy curve ------------------------------------------------------------

def relative_energy_error(e_approx: float, e_exact: float) -> float:
    return abs(e_approx - e_exact) / abs(e_exact)


def resolvable_nodes(mus, nodes):
    """Nodes at least one grid step away from both ends of the grid.

    Chebyshev nodes crowd the interval ends; the outermost ones can fall inside
    the first grid cell, where the grid cannot resolve a dip.
    """
    h = mus[1] - mus[0]
    return [float(x) for x in nodes if mus[0] + h <= x <= mus[-1] - h]


def minima_near_nodes(mus, errs, nodes) -> list[bool]:
    """For each node: is there a local minimum of the error curve within one grid step?"""
    mus, errs = np.asarray(mus), np.asarray(errs)
    n = len(mus)
    is_min = np.zeros(n, bool)
    for i in range(n):
        left = errs[i - 1] if i > 0 else np.inf
        right = errs[i + 1] if i < n - 1 else np.inf
        is_min[i] = errs[i] <= left and errs[i] <= right
    h = mus[1] - mus[0]
    return [bool(np.any(is_min & (np.abs(mus - x) <= h + 1e-12))) for x in nodes]


def energy_curve_study(ref: GridReference, itps: dict[int, Interpolant]):
    rows, points = [], []
    for d, itp in sorted(itps.items()):
        errs = []
        for mu, st, ex in zip(ref.mus, ref.states, ref.exact):
            e = cc_energy(online_eval(itp, mu, st), st.mo)
            err = relative_energy_error(e, ex.e_corr)
            errs.append(err)
            points.append({"d": d, "mu": mu, "e_corr_exact": ex.e_corr, "e_corr_interp": e, "rel_error": err})
        node_errs = []
        for s, mu in zip(itp.snapshots, itp.node_set.nodes):
            st = itp.target(float(mu))
            node_errs.append(relative_energy_error(cc_energy(online_eval(itp, float(mu), st), st.mo), s.e_corr))
        checked = resolvable_nodes(ref.mus, itp.node_set.nodes)
        near = minima_near_nodes(ref.mus, errs, checked)
        rows.append({"d": d, "max_rel_error": max(errs), "max_node_rel_error": max(node_errs),
                     "nodes_checked": len(checked), "nodes_with_nearby_minimum": sum(near),
                     "n_nodes": itp.node_set.d})
    return rows, points


# --- crossing ----------------------------------------------------------------

@dataclass(frozen=True)
class Crossing:
    mu_left: float
    mu_right: float
    space: str        # "occ" or "virt"
    index: int        # spatial orbital index at mu_left
    new_index: int    # index carrying the same orbital at mu_right


def detect_crossings(states) -> list[Crossing]:
    """Track orbitals between neighbouring grid points by maximal overlap.

    Any orbital whose best match at the next point sits at a different index
    (Aufbau order changed) is reported.
    """
    out = []
    for a, b in zip(states, states[1:]):
        M = np.abs(b.scf.C.T @ b.scf.S @ a.scf.C)  # rows: orbitals at b, columns: at a
        match = np.argmax(M, axis=0)
        n_occ = a.scf.n_occ
        for p, q in enumerate(match):
            if p != q:
                out.append(Crossing(a.mu, b.mu, "occ" if p < n_occ else "virt", p, int(q)))
    return out


def jump_ratios(trace, window: int = JUMP_WINDOW) -> np.ndarray:
    """Each grid step divided by the median of the neighbouring steps (``window`` on each side)."""
    st = np.abs(np.diff(np.asarray(trace, float)))
    out = np.empty(len(st))
    for i in range(len(st)):
        nb = np.r_[st[max(0, i - window):i], st[i + 1:i + 1 + window]]
        med = float(np.median(nb)) if nb.size else 0.0
        out[i] = st[i] / med if med > 0 else (np.inf if st[i] > 0 else 0.0)
    return out


def raw_entry_traces(ref: GridReference, count: int = 4):
    """Raw doubles amplitudes along the grid; picks the entries with the largest jump ratio."""
    T = np.array([ex.amplitudes.t2.reshape(-1) for ex in ref.exact])
    big = np.abs(T).max(axis=0) > 1e-6
    idx = np.flatnonzero(big)
    scores = np.array([np.max(jump_ratios(T[:, k])) for k in idx])
    order = idx[np.argsort(-scores, kind="stable")][:count]
    shape = ref.exact[0].amplitudes.t2.shape
    return [(np.unravel_index(k, shape), T[:, k]) for k in order]


def crossing_study(ref: GridReference, itps: dict[int, Interpolant]):
    crossings = detect_crossings(ref.states)
    if not crossings:
        raise NoCrossingDetected("no orbital-order swap along the grid; the trajectory does not cross")
    rows, points = [], []
    for d, itp in sorted(itps.items()):
        et, er = [], []
        for mu, st, ex in zip(ref.mus, ref.states, ref.exact):
            et.append(amplitude_error(online_eval(itp, mu, st), ex.amplitudes))
            er.append(amplitude_error(online_eval_raw(itp, mu), ex.amplitudes))
            points.append({"d": d, "mu": mu, "E_mu_transformed": et[-1], "E_mu_raw": er[-1]})
        m_t, m_r = mle(_floor(et)), mle(_floor(er))
        rows.append({"d": d, "E_MLE_transformed": m_t, "E_MLE_raw": m_r, "gap": m_r - m_t,
                     "max_jump_ratio_transformed": float(jump_ratios(et).max()),
                     "max_jump_ratio_raw": float(jump_ratios(er).max())})
    return rows, points, crossings


# --- output ------------------------------------------------------------------

def write_csv(path, rows, checksum: str, columns=None) -> str:
    """CSV with a ``# config_sha256=...`` line followed by the column header."""
    columns = columns or (list(rows[0]) if rows else [])
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_sha256={checksum}\n")
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
    return path


def read_csv(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))
