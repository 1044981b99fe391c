"""Full configuration interaction over bitstring determinants (test oracle).

Determinants are integers whose bit p marks spin orbital p as occupied;
creation operators are ordered by ascending orbital index.  Only the
M_s = 0 sector is built, which contains the ground state for even electron
counts.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .ccsd import AmplitudeSet
from .errors import InputError, TooLarge
from .scf import MoIntegrals

MAX_SPIN_ORBITALS = 16


def _popcount_below(bits: int, p: int) -> int:
    return bin(bits & ((1 << p) - 1)).count("1")


def apply_operators(bits: int, ops) -> tuple[int, int] | None:
    """Apply a product of second-quantised operators, rightmost first.

    ``ops`` is a sequence of (orbital, is_creation).  Returns ``(sign, bits)``
    or ``None`` if the result vanishes.
    """
    sign = 1
    for p, create in reversed(ops):
        occupied = bits >> p & 1
        if create == occupied:
            return None
        if _popcount_below(bits, p) % 2:
            sign = -sign
        bits ^= 1 << p
    return sign, bits


def determinants(n_so: int, n_elec: int) -> list[int]:
    alpha = list(range(0, n_so, 2))
    beta = list(range(1, n_so, 2))
    na = n_elec // 2
    out = []
    for occ_a in combinations(alpha, na):
        for occ_b in combinations(beta, n_elec - na):
            out.append(sum(1 << p for p in occ_a + occ_b))
    return sorted(out)


def _occupied(bits: int, n_so: int) -> list[int]:
    return [p for p in range(n_so) if bits >> p & 1]


def fci_hamiltonian(mo: MoIntegrals, n_elec: int):
    n_so = mo.n_so
    if n_so > MAX_SPIN_ORBITALS:
        raise TooLarge(f"FCI limited to {MAX_SPIN_ORBITALS} spin orbitals, got {n_so}")
    if mo.h is None:
        raise InputError("FCI needs the spin-orbital core Hamiltonian")
    h, g = mo.h, mo.eri_as
    dets = determinants(n_so, n_elec)
    index = {d: k for k, d in enumerate(dets)}
    H = np.zeros((len(dets), len(dets)))
    for k, d in enumerate(dets):
        occ = _occupied(d, n_so)
        virt = [p for p in range(n_so) if not d >> p & 1]
        e = sum(h[i, i] for i in occ)
        e += 0.5 * sum(g[i, j, i, j] for i in occ for j in occ)
        H[k, k] = e
        for i in occ:
            for a in virt:
                if (i - a) % 2:
                    continue
                res = apply_operators(d, [(a, True), (i, False)])
                sign, d2 = res
                val = h[a, i] + sum(g[a, j, i, j] for j in occ if j != i)
                H[index[d2], k] += sign * val
        for i, j in combinations(occ, 2):
            for a, b in combinations(virt, 2):
                if (i % 2) + (j % 2) != (a % 2) + (b % 2):
                    continue
                val = g[a, b, i, j]
                if val == 0.0:
                    continue
                sign, d2 = apply_operators(d, [(a, True), (b, True), (j, False), (i, False)])
                H[index[d2], k] += sign * val
    return dets, H


def fci_energy(mo: MoIntegrals, n_elec: int):
    """Lowest eigenvalue (total energy incl. nuclear repulsion) and eigenvector."""
    dets, H = fci_hamiltonian(mo, n_elec)
    w, U = np.linalg.eigh(H)
    vec = U[:, 0]
    ref = (1 << n_elec) - 1
    k0 = dets.index(ref)
    if vec[k0] < 0:
        vec = -vec
    return float(w[0] + mo.e_nuc), vec, dets


def amplitudes_from_fci(mo: MoIntegrals, vec, dets) -> AmplitudeSet:
    """Intermediate-normalised CI coefficients converted to cluster amplitudes.

    c_i^a = t_i^a,  c_ij^ab = t_ij^ab + t_i^a t_j^b - t_i^b t_j^a.  Exact CC
    amplitudes only when triples and higher vanish (two electrons).
    """
    no, nv = mo.n_occ_so, mo.n_virt_so
    index = {d: k for k, d in enumerate(dets)}
    ref = (1 << no) - 1
    c0 = vec[index[ref]]

    def coeff(ops):
        res = apply_operators(ref, ops)
        if res is None or res[1] not in index:
            return 0.0
        sign, d = res
        return sign * vec[index[d]] / c0

    t1 = np.zeros((nv, no))
    for i in range(no):
        for a in range(nv):
            t1[a, i] = coeff([(no + a, True), (i, False)])
    t2 = np.zeros((nv, nv, no, no))
    for i in range(no):
        for j in range(no):
            if i == j:
                continue
            for a in range(nv):
                for b in range(nv):
                    if a == b:
                        continue
                    c = coeff([(no + a, True), (no + b, True), (j, False), (i, False)])
                    t2[a, b, i, j] = c - t1[a, i] * t1[b, j] + t1[b, i] * t1[a, j]
    return AmplitudeSet(t1, t2)
