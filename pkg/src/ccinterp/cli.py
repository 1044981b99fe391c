"""Command-line driver.

    ccinterp scf --geometry h2.xyz --basis sto-3g
    ccinterp ccsd --geometry h2.xyz --basis sto-3g
    ccinterp offline --trajectory h4.traj --nodes 4 8 --out run/
    ccinterp decay --trajectory h4.traj --nodes 2:12:2 --out run/

Exit codes: 0 success, 2 usage/config/input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from .basis import build_basis
from .ccsd import solve_ccsd
from .config import ExperimentConfig, load_config, with_overrides
from .errors import CcInterpError, InputError, NumericalFailure
from .experiments import (
    crossing_study,
    decay_study,
    energy_curve_study,
    linear_fit,
    raw_entry_traces,
    reference_grid,
    warm_start_study,
    write_csv,
)
from .geometry import load_geometry, load_trajectory
from .integrals import compute_integrals
from .interp import MANIFEST, load_interpolant, offline_build, save_interpolant
from .scf import mo_transform, scf_iterate
from .svgplot import line_plot

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3

BUILTIN_TRAJECTORIES = ("h2_stretch", "h4_breathing", "h2o_crossing", "h2o_stretch_bend")


def trajectory_path(name_or_path: str) -> str:
    if os.path.exists(name_or_path):
        return name_or_path
    from importlib import resources
    ref = resources.files("ccinterp") / "data" / "trajectories" / f"{name_or_path}.traj"
    if ref.is_file():
        return str(ref)
    raise InputError(f"trajectory {name_or_path!r} is neither a file nor a bundled fixture "
                     f"({', '.join(BUILTIN_TRAJECTORIES)})")


def parse_nodes(tokens) -> tuple[int, ...]:
    """Accept ``4 6 8`` and ``start:stop:step`` (stop inclusive)."""
    out = []
    for tok in tokens:
        try:
            if ":" in tok:
                parts = [int(p) for p in tok.split(":")]
                a, b = parts[0], parts[1]
                step = parts[2] if len(parts) > 2 else 1
                out.extend(range(a, b + 1, step))
            else:
                out.append(int(tok))
        except ValueError:
            raise InputError(f"bad node count {tok!r}") from None
    return tuple(out)


# --- single points -----------------------------------------------------------

def _single_point(args):
    geom = load_geometry(args.geometry)
    basis = build_basis(geom, args.basis)
    n_el = geom.n_electrons_neutral - args.charge
    bundle = compute_integrals(geom, basis)
    scf = scf_iterate(bundle, n_el)
    return geom, basis, bundle, scf


def cmd_scf(args) -> int:
    _, basis, _, scf = _single_point(args)
    print(f"basis functions   {basis.nbf}")
    print(f"E_hf              {scf.E_hf:.12f}")
    print(f"HOMO-LUMO gap     {scf.gap:.8f}")
    print(f"gradient norm     {scf.grad_norm:.3e}")
    print(f"SCF iterations    {scf.iterations}")
    return EXIT_OK


def cmd_ccsd(args) -> int:
    _, basis, bundle, scf = _single_point(args)
    sol = solve_ccsd(mo_transform(bundle, scf))
    print(f"basis functions   {basis.nbf}")
    print(f"E_hf              {scf.E_hf:.12f}")
    print(f"HOMO-LUMO gap     {scf.gap:.8f}")
    print(f"SCF iterations    {scf.iterations}")
    print(f"e_corr            {sol.e_corr:.12f}")
    print(f"E_ccsd            {scf.E_hf + sol.e_corr:.12f}")
    print(f"CCSD iterations   {sol.iterations}")
    return EXIT_OK


# --- trajectory experiments --------------------------------------------------

def _experiment_config(args, kind: str) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig(kind=kind)
    nodes = parse_nodes(args.nodes) if args.nodes else None
    traj = trajectory_path(args.trajectory) if args.trajectory else None
    cfg = with_overrides(cfg, kind=kind, trajectory=traj, basis=args.basis, nodes=nodes,
                         grid=args.grid, out=args.out)
    if not cfg.trajectory:
        raise InputError("no trajectory given (--trajectory or config 'trajectory')")
    return cfg


def _setup(cfg: ExperimentConfig):
    traj = load_trajectory(cfg.trajectory)
    basis = build_basis(traj.gamma0, cfg.basis)
    n_el = traj.gamma0.n_electrons_neutral - cfg.charge
    return traj, basis, n_el


def _interpolants(cfg, traj, basis, n_el, log):
    """Reuse stored snapshot sets from ``offline`` runs; build and store missing ones."""
    itps = {}
    for d in cfg.nodes:
        path = os.path.join(cfg.out, f"nodes_d{d}", MANIFEST)
        if os.path.exists(path):
            itps[d] = load_interpolant(path, traj, cfg.scf, basis)
            log(f"d={d}: loaded {path}")
        else:
            itps[d] = offline_build(traj, basis, d, n_el, cfg.scf, cfg.cc)
            save_interpolant(itps[d], os.path.dirname(path))
            log(f"d={d}: built and wrote {path}")
    return itps


def _logger(quiet):
    t0 = time.time()

    def log(msg):
        if not quiet:
            print(f"[{time.time() - t0:7.1f}s] {msg}", file=sys.stderr)
    return log


def cmd_offline(args) -> int:
    cfg = _experiment_config(args, "decay")
    traj, basis, n_el = _setup(cfg)
    for d in cfg.nodes:
        itp = offline_build(traj, basis, d, n_el, cfg.scf, cfg.cc)
        path = save_interpolant(itp, os.path.join(cfg.out, f"nodes_d{d}"))
        print(path)
    return EXIT_OK


def _prepare(args, kind):
    cfg = _experiment_config(args, kind)
    log = _logger(args.quiet)
    traj, basis, n_el = _setup(cfg)
    itps = _interpolants(cfg, traj, basis, n_el, log)
    log(f"exact CCSD on {cfg.grid} grid points")
    ref = reference_grid(traj, basis, n_el, cfg.grid, cfg.scf, cfg.cc)
    os.makedirs(cfg.out, exist_ok=True)
    return cfg, ref, itps, log


def cmd_decay(args) -> int:
    cfg, ref, itps, log = _prepare(args, "decay")
    rows, points = decay_study(ref, itps)
    sha = cfg.checksum()
    write_csv(os.path.join(cfg.out, "decay.csv"), rows, sha)
    write_csv(os.path.join(cfg.out, "decay_points.csv"), points, sha)
    line_plot(os.path.join(cfg.out, "decay.svg"),
              [("transformed", [r["d"] for r in rows], [10 ** r["E_MLE"] for r in rows]),
               ("raw MO", [r["d"] for r in rows], [10 ** r["E_MLE_raw"] for r in rows])],
              title="mean log error vs node count", xlabel="d", ylabel="10^E_MLE", logy=True)
    for r in rows:
        print(f"d={r['d']:3d}  E_MLE={r['E_MLE']:8.3f}  max E_mu={r['max_E_mu']:.3e}  "
              f"bound violations={r['bound_violations']}")
    if len(rows) >= 2:
        slope, _, r2 = linear_fit([r["d"] for r in rows], [r["E_MLE"] for r in rows])
        print(f"slope={slope:.3f} per node  R^2={r2:.4f}")
    return EXIT_OK


def cmd_warm_start(args) -> int:
    cfg, ref, itps, log = _prepare(args, "warm_start")
    rows, points = warm_start_study(ref, itps, cfg.cc)
    sha = cfg.checksum()
    write_csv(os.path.join(cfg.out, "warm_start.csv"), rows, sha)
    write_csv(os.path.join(cfg.out, "warm_start_points.csv"), points, sha)
    ds = [r["d"] for r in rows]
    line_plot(os.path.join(cfg.out, "warm_start.svg"),
              [("interpolated (DIIS)", ds, [r["mean_warm"] for r in rows]),
               ("MP2 (DIIS)", ds, [r["mean_mp2"] for r in rows]),
               ("interpolated (no DIIS)", ds, [r["mean_warm_nodiis"] for r in rows]),
               ("MP2 (no DIIS)", ds, [r["mean_mp2_nodiis"] for r in rows])],
              title="mean CCSD iterations", xlabel="d", ylabel="iterations")
    for r in rows:
        print(f"d={r['d']:3d}  warm={r['mean_warm']:6.2f}  mp2={r['mean_mp2']:6.2f}  "
              f"warm(no DIIS)={r['mean_warm_nodiis']:6.2f}  mp2(no DIIS)={r['mean_mp2_nodiis']:6.2f}  "
              f"max at nodes={r['max_node_iterations']:.0f}")
    return EXIT_OK


def cmd_energy_curve(args) -> int:
    cfg, ref, itps, log = _prepare(args, "energy_curve")
    rows, points = energy_curve_study(ref, itps)
    sha = cfg.checksum()
    write_csv(os.path.join(cfg.out, "energy_curve.csv"), rows, sha)
    write_csv(os.path.join(cfg.out, "energy_curve_points.csv"), points, sha)
    series = [(f"d={d}", [p["mu"] for p in points if p["d"] == d], [p["rel_error"] for p in points if p["d"] == d])
              for d in sorted(itps)]
    line_plot(os.path.join(cfg.out, "energy_curve.svg"), series,
              title="relative correlation-energy error", xlabel="mu", ylabel="relative error", logy=True)
    for r in rows:
        print(f"d={r['d']:3d}  max rel err={r['max_rel_error']:.3e}  at nodes={r['max_node_rel_error']:.1e}  "
              f"dips near nodes {r['nodes_with_nearby_minimum']}/{r['nodes_checked']}")
    return EXIT_OK


def cmd_crossing_demo(args) -> int:
    cfg, ref, itps, log = _prepare(args, "crossing_demo")
    rows, points, crossings = crossing_study(ref, itps)
    sha = cfg.checksum()
    write_csv(os.path.join(cfg.out, "crossing.csv"), rows, sha)
    write_csv(os.path.join(cfg.out, "crossing_points.csv"), points, sha)
    write_csv(os.path.join(cfg.out, "crossing_events.csv"),
              [{"mu_left": c.mu_left, "mu_right": c.mu_right, "space": c.space,
                "index": c.index, "new_index": c.new_index} for c in crossings], sha)
    traces = raw_entry_traces(ref)
    trace_rows = [{"mu": mu, **{"t2_" + "_".join(str(int(i)) for i in idx): tr[k] for idx, tr in traces}}
                  for k, mu in enumerate(ref.mus)]
    write_csv(os.path.join(cfg.out, "crossing_raw_entries.csv"), trace_rows, sha)
    line_plot(os.path.join(cfg.out, "crossing_entries.svg"),
              [("t2" + str(tuple(int(i) for i in idx)), ref.mus, tr) for idx, tr in traces],
              title="raw MO doubles amplitudes along the trajectory", xlabel="mu", ylabel="amplitude")
    dmax = max(itps)
    line_plot(os.path.join(cfg.out, "crossing.svg"),
              [("transformed", ref.mus, [p["E_mu_transformed"] for p in points if p["d"] == dmax]),
               ("raw MO", ref.mus, [p["E_mu_raw"] for p in points if p["d"] == dmax])],
              title=f"relative amplitude error, d={dmax}", xlabel="mu", ylabel="E_mu", logy=True)
    for c in crossings:
        print(f"crossing in ({c.mu_left:.4f}, {c.mu_right:.4f}): {c.space} orbital {c.index} -> {c.new_index}")
    for r in rows:
        print(f"d={r['d']:3d}  E_MLE transformed={r['E_MLE_transformed']:8.3f}  raw={r['E_MLE_raw']:8.3f}  "
              f"max jump ratio transformed={r['max_jump_ratio_transformed']:.2f}")
    return EXIT_OK


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ccinterp", description="CCSD amplitude interpolation along trajectories")
    sub = p.add_subparsers(dest="command", required=True)

    for name, fn, helptext in (("scf", cmd_scf, "restricted Hartree-Fock single point"),
                               ("ccsd", cmd_ccsd, "RHF + CCSD single point")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--geometry", required=True, help="geometry file (unit header + SYMBOL x y z)")
        sp.add_argument("--basis", default="sto-3g", help="bundled basis name or basis file path")
        sp.add_argument("--charge", type=int, default=0)
        sp.set_defaults(func=fn)

    for name, fn, helptext in (("offline", cmd_offline, "run the offline stage and store snapshots"),
                               ("decay", cmd_decay, "E_MLE(d) study"),
                               ("warm-start", cmd_warm_start, "CCSD iterations from interpolated guesses"),
                               ("energy-curve", cmd_energy_curve, "correlation energy from interpolated amplitudes"),
                               ("crossing-demo", cmd_crossing_demo, "raw vs transformed interpolation across a crossing")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--trajectory", help="trajectory file or bundled fixture name")
        sp.add_argument("--basis", default=None, help="bundled basis name or basis file (default sto-3g)")
        sp.add_argument("--nodes", nargs="+", help="node counts, e.g. '4 8 12' or '2:12:2'")
        sp.add_argument("--grid", type=int, default=None, help="test grid size (default 50)")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--config", default=None, help="JSON experiment config")
        sp.add_argument("--quiet", action="store_true")
        sp.set_defaults(func=fn)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CcInterpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
