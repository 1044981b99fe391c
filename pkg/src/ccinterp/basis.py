"""Contracted Cartesian Gaussian basis sets.

Basis libraries are read from a plain-text layout mirroring the common
exchange format::

    BASIS
    H S
      3.42525091  0.15432897
      ...
    O SP
      5.0331513  -0.09996723  0.15591627
    END

``SP`` (also ``L``) blocks carry one exponent column and two coefficient
columns (s then p).  Lines starting with ``!`` or ``#`` are comments.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import BasisParseError, InputError
from .geometry import ELEMENTS, Geometry

SHELL_L = {"S": 0, "P": 1, "D": 2}
L_MAX = 2


def cartesian_components(l: int) -> list[tuple[int, int, int]]:
    """Cartesian exponent triples in canonical order (xx, xy, xz, yy, yz, zz for d)."""
    out = []
    for lx in range(l, -1, -1):
        for ly in range(l - lx, -1, -1):
            out.append((lx, ly, l - lx - ly))
    return out


def double_factorial(n: int) -> int:
    r = 1
    while n > 1:
        r *= n
        n -= 2
    return r


@dataclass(frozen=True)
class Shell:
    center: int
    l: int
    exponents: tuple[float, ...]
    coefficients: tuple[float, ...]  # raw contraction coefficients as published

    @property
    def ncart(self) -> int:
        return (self.l + 1) * (self.l + 2) // 2

    def normalized_coefficients(self) -> np.ndarray:
        """Contraction coefficients with radial primitive and contracted normalization.

        The per-component factor 1/sqrt((2lx-1)!!(2ly-1)!!(2lz-1)!!) is applied
        separately (see ``component_norms``), so that every Cartesian component
        of the contracted function has unit norm.
        """
        a = np.asarray(self.exponents)
        c = np.asarray(self.coefficients)
        L = self.l
        prim = (2 * a / np.pi) ** 0.75 * (4 * a) ** (L / 2)
        cn = c * prim
        # self overlap of x^L-type component with the double factorial stripped
        aa = a[:, None] + a[None, :]
        s = (np.pi / aa) ** 1.5 / (2 * aa) ** L
        norm = cn @ s @ cn
        return cn / np.sqrt(norm)

    def component_norms(self) -> np.ndarray:
        return np.array(
            [
                1.0 / np.sqrt(double_factorial(2 * i - 1) * double_factorial(2 * j - 1) * double_factorial(2 * k - 1))
                for i, j, k in cartesian_components(self.l)
            ]
        )


@dataclass(frozen=True)
class BasisSet:
    """Shells attached to atom indices of a geometry (positions supplied separately)."""

    shells: tuple[Shell, ...]
    name: str = ""
    natoms: int = 0

    def __post_init__(self):
        for sh in self.shells:
            if sh.l < 0 or sh.l > L_MAX:
                raise InputError(f"angular momentum {sh.l} not supported (max {L_MAX})")
            if self.natoms and not 0 <= sh.center < self.natoms:
                raise InputError(f"shell references missing atom {sh.center}")
            if any(a <= 0 for a in sh.exponents):
                raise InputError("basis exponents must be positive")
            if len(sh.exponents) != len(sh.coefficients) or not sh.exponents:
                raise InputError("shell needs matching, non-empty exponent/coefficient lists")

    @property
    def nbf(self) -> int:
        return sum(sh.ncart for sh in self.shells)

    def offsets(self) -> list[int]:
        out, k = [], 0
        for sh in self.shells:
            out.append(k)
            k += sh.ncart
        return out

    def descriptor(self) -> str:
        lines = [f"basis {self.name}", f"natoms {self.natoms}"]
        for sh in self.shells:
            prims = " ".join(f"{a:.17g}:{c:.17g}" for a, c in zip(sh.exponents, sh.coefficients))
            lines.append(f"shell {sh.center} {sh.l} {prims}")
        return "\n".join(lines) + "\n"

    def checksum(self) -> str:
        return hashlib.sha256(self.descriptor().encode()).hexdigest()

    def function_labels(self, geom: Geometry | None = None) -> list[str]:
        names = {0: ["s"], 1: ["px", "py", "pz"], 2: ["dxx", "dxy", "dxz", "dyy", "dyz", "dzz"]}
        out = []
        for sh in self.shells:
            atom = f"{geom.symbols[sh.center]}{sh.center}" if geom is not None else str(sh.center)
            out.extend(f"{atom}-{lbl}" for lbl in names[sh.l])
        return out


# library: element symbol -> list of (l, exponents, coefficients)
BasisLibrary = dict


def parse_basis_library(text: str) -> BasisLibrary:
    lib: dict[str, list] = {}
    current = None  # (element, letters, rows)

    def flush():
        if current is None:
            return
        elem, letters, rows = current
        if not rows:
            raise BasisParseError(f"shell {elem} {letters} has no primitives")
        exps = tuple(r[0] for r in rows)
        ncoef = len(letters) if letters not in ("L",) else 2
        if any(len(r) != 1 + ncoef for r in rows):
            raise BasisParseError(f"shell {elem} {letters}: expected {1 + ncoef} columns per row")
        shell_letters = "SP" if letters == "L" else letters
        for k, letter in enumerate(shell_letters):
            if letter not in SHELL_L:
                raise BasisParseError(f"unsupported shell type {letter!r} for {elem}")
            lib.setdefault(elem, []).append((SHELL_L[letter], exps, tuple(r[1 + k] for r in rows)))

    for lineno, raw in enumerate(text.splitlines(), 1):
        ln = raw.strip()
        if not ln or ln[0] in "!#":
            continue
        if ln.upper().startswith("BASIS") or ln.upper() == "END":
            continue
        parts = ln.split()
        if parts[0][0].isalpha():
            flush()
            if len(parts) != 2:
                raise BasisParseError(f"line {lineno}: expected 'ELEMENT SHELL', got {raw!r}")
            elem = parts[0].capitalize()
            if elem not in ELEMENTS:
                raise BasisParseError(f"line {lineno}: unknown element {parts[0]!r}")
            current = (elem, parts[1].upper(), [])
        else:
            if current is None:
                raise BasisParseError(f"line {lineno}: primitive row before any shell header")
            try:
                current[2].append(tuple(float(v.replace("D", "E")) for v in parts))
            except ValueError:
                raise BasisParseError(f"line {lineno}: non-numeric entry in {raw!r}") from None
    flush()
    if not lib:
        raise BasisParseError("basis file defines no shells")
    return lib


def builtin_basis_path(name: str) -> str | None:
    fname = name.lower().replace("*", "s") + ".nw"
    ref = resources.files("ccinterp") / "data" / "basis" / fname
    return str(ref) if ref.is_file() else None


def load_basis_library(name_or_path: str) -> BasisLibrary:
    """Read a basis file by path, or a bundled basis by name (``sto-3g``, ``6-31g``, ...)."""
    path = name_or_path if os.path.exists(name_or_path) else builtin_basis_path(name_or_path)
    if path is None:
        raise BasisParseError(f"basis {name_or_path!r} is neither a file nor a bundled basis")
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise BasisParseError(f"cannot read basis file {path}: {exc}") from None
    return parse_basis_library(text)


def build_basis(geom: Geometry, library: BasisLibrary | str, name: str = "") -> BasisSet:
    if isinstance(library, str):
        name = name or os.path.basename(library).rsplit(".", 1)[0]
        library = load_basis_library(library)
    shells = []
    for iatom, sym in enumerate(geom.symbols):
        if sym not in library:
            raise InputError(f"basis has no functions for element {sym}")
        # shells grouped by angular momentum within each atom (stable order)
        for l, exps, coefs in sorted(library[sym], key=lambda sh: sh[0]):
            shells.append(Shell(iatom, l, tuple(exps), tuple(coefs)))
    return BasisSet(tuple(shells), name=name, natoms=geom.natoms)


def basis_from_descriptor(text: str) -> BasisSet:
    """Inverse of ``BasisSet.descriptor``."""
    name, natoms, shells = "", 0, []
    for ln in text.splitlines():
        parts = ln.split()
        if not parts:
            continue
        if parts[0] == "basis":
            name = " ".join(parts[1:])
        elif parts[0] == "natoms":
            natoms = int(parts[1])
        elif parts[0] == "shell":
            prims = [tuple(float(x) for x in p.split(":")) for p in parts[3:]]
            shells.append(Shell(int(parts[1]), int(parts[2]),
                                tuple(a for a, _ in prims), tuple(c for _, c in prims)))
        else:
            raise BasisParseError(f"bad basis descriptor line {ln!r}")
    return BasisSet(tuple(shells), name=name, natoms=natoms)
