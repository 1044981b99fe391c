"""Molecular geometries and analytic nuclear trajectories.

Coordinates are stored in bohr.  A trajectory is a one-parameter path

    Gamma(mu) = Gamma0 + sum_s c_s sin(2 pi omega_s mu) zeta_s

through the 3M-dimensional nuclear coordinate space.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometry, InputError

ANGSTROM_TO_BOHR = 1.8897259886
COINCIDENCE_TOL = 1e-8

ELEMENTS = ["X", "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne"]
SYMBOL_TO_Z = {s.upper(): z for z, s in enumerate(ELEMENTS) if z > 0}


def atomic_number(symbol: str) -> int:
    try:
        return SYMBOL_TO_Z[symbol.upper()]
    except KeyError:
        raise InputError(f"unknown element symbol {symbol!r}") from None


@dataclass(frozen=True)
class Geometry:
    """Atoms as (Z, position) with positions in bohr."""

    numbers: tuple[int, ...]
    coords: np.ndarray  # (M, 3), bohr

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float).reshape(-1, 3)
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "numbers", tuple(int(z) for z in self.numbers))
        if len(self.numbers) != len(coords):
            raise InputError("atomic numbers and coordinates differ in length")
        if any(z <= 0 for z in self.numbers):
            raise InputError("atomic numbers must be positive")
        check_distinct(coords)

    @property
    def natoms(self) -> int:
        return len(self.numbers)

    @property
    def symbols(self) -> list[str]:
        return [ELEMENTS[z] for z in self.numbers]

    @property
    def n_electrons_neutral(self) -> int:
        return sum(self.numbers)

    def nuclear_repulsion(self) -> float:
        e = 0.0
        for i in range(self.natoms):
            for j in range(i):
                r = np.linalg.norm(self.coords[i] - self.coords[j])
                e += self.numbers[i] * self.numbers[j] / r
        return e

    def translated(self, shift) -> "Geometry":
        return Geometry(self.numbers, self.coords + np.asarray(shift, dtype=float))

    def flat(self) -> np.ndarray:
        return self.coords.reshape(-1).copy()

    def to_text(self) -> str:
        lines = ["bohr"]
        for sym, xyz in zip(self.symbols, self.coords):
            lines.append(f"{sym} {xyz[0]:.17g} {xyz[1]:.17g} {xyz[2]:.17g}")
        return "\n".join(lines) + "\n"


def check_distinct(coords: np.ndarray, tol: float = COINCIDENCE_TOL):
    n = len(coords)
    for i in range(n):
        for j in range(i):
            d = np.linalg.norm(coords[i] - coords[j])
            if d < tol:
                raise DegenerateGeometry(
                    f"nuclei {j} and {i} coincide (distance {d:.3e} bohr)"
                )


def parse_geometry(text: str) -> Geometry:
    """Parse the geometry text format.

    The first non-comment line is the unit (``bohr`` or ``angstrom``);
    each further line is ``SYMBOL x y z``.
    """
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise InputError("empty geometry")
    unit = lines[0].lower()
    if unit not in ("bohr", "angstrom"):
        raise InputError(f"geometry unit header must be 'bohr' or 'angstrom', got {lines[0]!r}")
    scale = 1.0 if unit == "bohr" else ANGSTROM_TO_BOHR
    numbers, coords = [], []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 4:
            raise InputError(f"bad geometry line {ln!r}")
        numbers.append(atomic_number(parts[0]))
        try:
            coords.append([float(x) * scale for x in parts[1:]])
        except ValueError:
            raise InputError(f"bad coordinate in {ln!r}") from None
    if not numbers:
        raise InputError("geometry has no atoms")
    return Geometry(tuple(numbers), np.array(coords))


def load_geometry(path) -> Geometry:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_geometry(text)


@dataclass(frozen=True)
class Mode:
    coefficient: float
    frequency: float
    displacement: np.ndarray  # (3M,), bohr


@dataclass(frozen=True)
class Trajectory:
    gamma0: Geometry
    modes: tuple[Mode, ...] = ()
    domain: tuple[float, float] = (0.0, 1.0)
    name: str = field(default="", compare=False)

    def __post_init__(self):
        n = 3 * self.gamma0.natoms
        modes = []
        for m in self.modes:
            z = np.array(m.displacement, dtype=float).reshape(-1)
            if z.size != n:
                raise InputError(f"mode displacement has {z.size} components, expected {n}")
            z.setflags(write=False)
            modes.append(Mode(float(m.coefficient), float(m.frequency), z))
        object.__setattr__(self, "modes", tuple(modes))
        a, b = self.domain
        if not a < b:
            raise InputError("trajectory domain must be a non-empty interval")

    def __call__(self, mu: float) -> Geometry:
        return trajectory_eval(self, mu)

    def descriptor(self) -> str:
        """Canonical text form; the checksum of this string identifies the path."""
        return trajectory_to_text(self, inline=True)

    def checksum(self) -> str:
        return hashlib.sha256(self.descriptor().encode()).hexdigest()


def trajectory_eval(traj: Trajectory, mu: float) -> Geometry:
    a, b = traj.domain
    # tolerate round-off in grid construction
    if not (a - 1e-12 <= mu <= b + 1e-12):
        raise InputError(f"mu={mu} outside trajectory domain [{a}, {b}]")
    x = traj.gamma0.flat()
    for m in traj.modes:
        x = x + m.coefficient * np.sin(2.0 * np.pi * m.frequency * mu) * m.displacement
    return Geometry(traj.gamma0.numbers, x.reshape(-1, 3))


def parse_trajectory(text: str, base_dir: str = ".") -> Trajectory:
    """Parse the trajectory text format.

    Recognised directives::

        geometry <path>            # reference geometry file, relative to the trajectory file
        atom SYMBOL x y z          # or inline reference atoms, in bohr
        domain <a> <b>             # optional, default 0 1
        mode <c> <omega> <zeta_1> ... <zeta_3M>
    """
    gamma0 = None
    inline = []
    modes = []
    domain = (0.0, 1.0)
    name = ""
    for raw in text.splitlines():
        ln = raw.split("#", 1)[0].strip()
        if not ln:
            continue
        key, *rest = ln.split()
        key = key.lower()
        try:
            if key == "geometry":
                gamma0 = load_geometry(os.path.join(base_dir, rest[0]))
            elif key == "atom":
                inline.append((atomic_number(rest[0]), [float(v) for v in rest[1:4]]))
            elif key == "domain":
                domain = (float(rest[0]), float(rest[1]))
            elif key == "name":
                name = " ".join(rest)
            elif key == "mode":
                vals = [float(v) for v in rest]
                modes.append((vals[0], vals[1], np.array(vals[2:])))
            else:
                raise InputError(f"unknown trajectory directive {key!r}")
        except (IndexError, ValueError):
            raise InputError(f"bad trajectory line {raw!r}") from None
    if inline:
        if gamma0 is not None:
            raise InputError("trajectory gives both a geometry file and inline atoms")
        gamma0 = Geometry(tuple(z for z, _ in inline), np.array([x for _, x in inline]))
    if gamma0 is None:
        raise InputError("trajectory has no reference geometry")
    return Trajectory(gamma0, tuple(Mode(c, w, z) for c, w, z in modes), domain, name)


def load_trajectory(path) -> Trajectory:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_trajectory(text, os.path.dirname(os.path.abspath(path)))


def trajectory_to_text(traj: Trajectory, inline: bool = True) -> str:
    lines = []
    if traj.name:
        lines.append(f"name {traj.name}")
    for sym, xyz in zip(traj.gamma0.symbols, traj.gamma0.coords):
        lines.append(f"atom {sym} {xyz[0]:.17g} {xyz[1]:.17g} {xyz[2]:.17g}")
    lines.append(f"domain {traj.domain[0]:.17g} {traj.domain[1]:.17g}")
    for m in traj.modes:
        comps = " ".join(f"{v:.17g}" for v in m.displacement)
        lines.append(f"mode {m.coefficient:.17g} {m.frequency:.17g} {comps}")
    return "\n".join(lines) + "\n"
