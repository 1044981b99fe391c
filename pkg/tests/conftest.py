import json
import os
from dataclasses import dataclass

import numpy as np
import pytest

from ccinterp.basis import build_basis
from ccinterp.geometry import Geometry, load_trajectory
from ccinterp.integrals import compute_integrals
from ccinterp.interp import offline_build
from ccinterp.experiments import reference_grid
from ccinterp.scf import mo_transform, scf_iterate

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(HERE, "fixtures")
TRAJ_DIR = os.path.join(HERE, "..", "src", "ccinterp", "data", "trajectories")
SWEEP = (2, 4, 6, 8, 10, 12)

ACCEPTANCE_LINES = []


def traj_path(name):
    return os.path.join(TRAJ_DIR, f"{name}.traj")


@pytest.fixture(scope="session")
def reference():
    with open(os.path.join(FIXTURES, "reference.json")) as fh:
        return json.load(fh)


def geometry_from_atoms(atoms):
    from ccinterp.geometry import atomic_number
    return Geometry(tuple(atomic_number(s) for s, _ in atoms), np.array([x for _, x in atoms], float))


@dataclass
class Point:
    geom: object
    basis: object
    bundle: object
    scf: object
    mo: object


def single_point(atoms, basis="sto-3g", n_electrons=None):
    g = geometry_from_atoms(atoms)
    b = build_basis(g, basis)
    bundle = compute_integrals(g, b)
    n = g.n_electrons_neutral if n_electrons is None else n_electrons
    s = scf_iterate(bundle, n)
    return Point(g, b, bundle, s, mo_transform(bundle, s))


H2_ATOMS = [("H", (0.0, 0.0, -0.7)), ("H", (0.0, 0.0, 0.7))]


@pytest.fixture(scope="session")
def h2():
    return single_point(H2_ATOMS)


@pytest.fixture(scope="session")
def h2_631g():
    return single_point(H2_ATOMS, "6-31g")


@dataclass
class Study:
    traj: object
    basis: object
    ref: object
    itps: dict


def _study(name, n_electrons):
    traj = load_trajectory(traj_path(name))
    basis = build_basis(traj.gamma0, "sto-3g")
    ref = reference_grid(traj, basis, n_electrons, 50)
    itps = {d: offline_build(traj, basis, d, n_electrons) for d in SWEEP}
    return Study(traj, basis, ref, itps)


@pytest.fixture(scope="session")
def h4_study():
    return _study("h4_breathing", 4)


@pytest.fixture(scope="session")
def crossing():
    return _study("h2o_crossing", 10)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
