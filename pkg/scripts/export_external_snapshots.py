#!/usr/bin/env python3
"""Produce snapshot files for the H4 breathing trajectory with PySCF and a
stand-alone writer (no ccinterp imports), to exercise ingestion of data made
by a different program.

    python3 scripts/export_external_snapshots.py [outdir] [d]
"""

import hashlib
import json
import os
import sys

import numpy as np
from pyscf import cc, gto, scf

HERE = os.path.dirname(os.path.abspath(__file__))
DEFAULT_OUT = os.path.join(HERE, "..", "tests", "fixtures", "external_h4")

# must agree with src/ccinterp/data/trajectories/h4_breathing.traj
Z0 = np.array([-2.55, -0.85, 0.85, 2.55])
ZETA = np.array([-1.5, -0.5, 0.5, 1.5])
C_MODE, OMEGA = 0.3, 0.5

STO3G_H = [(3.42525091, 0.15432897), (0.62391373, 0.53532814), (0.16885540, 0.44463454)]
LAYOUT = "T1[a,i], T2[a,b,i,j]; virtual-major, row-major; spin orbital 2p alpha, 2p+1 beta"


def nodes(d):
    k = np.arange(d)
    return np.sort((1 + np.cos((2 * k + 1) * np.pi / (2 * d))) / 2)


def positions(mu):
    return Z0 + C_MODE * np.sin(2 * np.pi * OMEGA * mu) * ZETA


def basis_descriptor():
    prims = " ".join(f"{a:.17g}:{c:.17g}" for a, c in STO3G_H)
    return "basis sto-3g\nnatoms 4\n" + "".join(f"shell {k} 0 {prims}\n" for k in range(4))


def spin_orbital(t1, t2):
    """Closed-shell spatial amplitudes (t1[i,a], t2[i,j,a,b]) to spin-orbital T1[a,i], T2[a,b,i,j]."""
    no, nv = t1.shape
    T1 = np.zeros((2 * nv, 2 * no))
    D = np.zeros((2 * nv, 2 * nv, 2 * no, 2 * no))
    for s in (0, 1):
        T1[s::2, s::2] = t1.T
        for t in (0, 1):
            D[s::2, t::2, s::2, t::2] = t2.transpose(2, 3, 0, 1)
    return T1, D - D.transpose(0, 1, 3, 2)


def write(path, fields, arrays):
    payload, specs, off = b"", {}, 0
    for name, a in arrays.items():
        raw = np.asarray(a, dtype="<f8").tobytes()
        specs[name] = {"shape": list(np.shape(a)), "offset": off}
        payload += raw
        off += len(raw)
    lines = ["CCINTERP-SNAPSHOT"]
    lines += [f"{k} = {json.dumps(v)}" for k, v in fields.items()]
    lines += [f"array.{k} = {json.dumps(v)}" for k, v in specs.items()]
    lines += [f"payload_bytes = {len(payload)}", f"payload_sha256 = {json.dumps(hashlib.sha256(payload).hexdigest())}",
              "END-HEADER"]
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode() + payload)


def main(out=DEFAULT_OUT, d=6):
    os.makedirs(out, exist_ok=True)
    desc = basis_descriptor()
    for k, mu in enumerate(nodes(d)):
        z = positions(mu)
        mol = gto.M(atom=[("H", (0.0, 0.0, zk)) for zk in z], unit="bohr", basis="sto-3g", cart=True, verbose=0)
        mf = scf.RHF(mol)
        mf.conv_tol = 1e-14
        mf.kernel()
        mc = cc.CCSD(mf)
        mc.conv_tol, mc.conv_tol_normt, mc.max_cycle = 1e-14, 1e-12, 200
        mc.kernel()
        T1, T2 = spin_orbital(mc.t1, mc.t2)
        no = mol.nelectron // 2
        fields = {
            "schema_version": 1,
            "producer": "pyscf-export",
            "mu": float(mu),
            "n_electrons": mol.nelectron,
            "geometry": "bohr\n" + "".join(f"H 0 0 {zk:.17g}\n" for zk in z),
            "basis_descriptor": desc,
            "E_hf": float(mf.e_tot),
            "gap": float(mf.mo_energy[no] - mf.mo_energy[no - 1]),
            "e_corr": float(mc.e_corr),
            "amplitude_layout": LAYOUT,
        }
        write(os.path.join(out, f"h4_{k:02d}.snap"), fields,
              {"S": mol.intor("int1e_ovlp"), "C": mf.mo_coeff, "lambdas": mf.mo_energy, "T1": T1, "T2": T2})
    print("wrote", d, "snapshots to", os.path.normpath(out))


if __name__ == "__main__":
    main(*(sys.argv[1:2] or [DEFAULT_OUT]), *(int(x) for x in sys.argv[2:3]))
