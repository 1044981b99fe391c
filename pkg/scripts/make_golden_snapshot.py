#!/usr/bin/env python3
"""Write the golden snapshot used by the container regression test.

    python3 scripts/make_golden_snapshot.py

The file holds the single d=1 node (mu = 0.5) of the bundled H2 stretch
trajectory in STO-3G.  Regenerate only on a deliberate format change.
"""

import os

from ccinterp.basis import build_basis
from ccinterp.geometry import load_trajectory
from ccinterp.interp import offline_build
from ccinterp.snapshot import write_snapshot

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "tests", "fixtures", "golden_h2.snap")
TRAJ = os.path.join(HERE, "..", "src", "ccinterp", "data", "trajectories", "h2_stretch.traj")


def main():
    traj = load_trajectory(TRAJ)
    itp = offline_build(traj, build_basis(traj.gamma0, "sto-3g"), 1)
    write_snapshot(itp.snapshots[0], OUT)
    print(f"wrote {os.path.normpath(OUT)}")


if __name__ == "__main__":
    main()
