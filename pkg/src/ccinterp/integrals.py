"""One- and two-electron integrals over contracted Cartesian Gaussians.

McMurchie-Davidson scheme: products of Gaussians are expanded in Hermite
Gaussians (coefficients E^{ij}_t), and Coulomb-type integrals reduce to the
Hermite integrals R_{tuv} built from the Boys function.  All loops over
primitives are vectorised with numpy; shells are looped over in Python.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .basis import BasisSet, Shell, cartesian_components
from .boys import boys, boys_array
from .errors import LinearDependence
from .geometry import Geometry

S_EIG_MIN = 1e-10
PRIM_CUTOFF = 1e-14


@dataclass(frozen=True)
class IntegralBundle:
    S: np.ndarray
    h_core: np.ndarray
    eri: np.ndarray  # chemists' notation (ij|kl)
    e_nuc: float
    T: np.ndarray | None = None
    V: np.ndarray | None = None

    @property
    def nbf(self) -> int:
        return self.S.shape[0]


def gaussian_product(a, A, b, B):
    """Gaussian product rule: exp(-a|r-A|^2) exp(-b|r-B|^2) = K exp(-p|r-P|^2)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    p = a + b
    P = (a * A + b * B) / p
    K = np.exp(-a * b * np.dot(A - B, A - B) / p)
    return p, P, K


def coulomb_s_integral(a, A, b, B, C) -> float:
    """Closed form of int exp(-a|r-A|^2) exp(-b|r-B|^2) / |r - C| dr (unnormalised s)."""
    p, P, K = gaussian_product(a, A, b, B)
    PC = P - np.asarray(C, dtype=float)
    return 2 * np.pi * K / p * boys(0, p * np.dot(PC, PC))


# --- Hermite machinery -------------------------------------------------------

def hermite_E(imax, jmax, p, XPA, XPB):
    """E[i, j, t, n] Hermite expansion coefficients for one Cartesian direction.

    The Gaussian exponential prefactor exp(-q X_AB^2) is *not* included;
    callers multiply the full three-dimensional K_ab once.
    """
    n = p.size
    E = np.zeros((imax + 1, jmax + 1, imax + jmax + 1, n))
    E[0, 0, 0] = 1.0
    inv2p = 0.5 / p
    for i in range(imax + 1):
        for j in range(jmax + 1):
            if i == 0 and j == 0:
                continue
            if i > 0:
                prev, X, ii, jj = E[i - 1, j], XPA, i - 1, j
            else:
                prev, X, ii, jj = E[i, j - 1], XPB, i, j - 1
            for t in range(i + j + 1):
                v = X * prev[t] if t <= ii + jj else 0.0
                if t > 0:
                    v = v + inv2p * prev[t - 1]
                if t + 1 <= ii + jj:
                    v = v + (t + 1) * prev[t + 1]
                E[i, j, t] = v
    return E


def hermite_R(L, alpha, PC):
    """R[t, u, v, n] Hermite Coulomb integrals (order-0 auxiliary index) for t+u+v <= L."""
    n = alpha.size
    X, Y, Z = PC[:, 0], PC[:, 1], PC[:, 2]
    F = boys_array(L, alpha * np.einsum("ij,ij->i", PC, PC))
    R = np.zeros((L + 1, L + 1, L + 1, L + 1, n))  # [aux, t, u, v]
    m2a = -2.0 * alpha
    fac = np.ones(n)
    for m in range(L + 1):
        R[m, 0, 0, 0] = fac * F[m]
        fac = fac * m2a
    for t in range(1, L + 1):
        for m in range(L - t + 1):
            R[m, t, 0, 0] = X * R[m + 1, t - 1, 0, 0]
            if t > 1:
                R[m, t, 0, 0] += (t - 1) * R[m + 1, t - 2, 0, 0]
    for u in range(1, L + 1):
        for t in range(L - u + 1):
            for m in range(L - t - u + 1):
                R[m, t, u, 0] = Y * R[m + 1, t, u - 1, 0]
                if u > 1:
                    R[m, t, u, 0] += (u - 1) * R[m + 1, t, u - 2, 0]
    for v in range(1, L + 1):
        for t in range(L - v + 1):
            for u in range(L - t - v + 1):
                for m in range(L - t - u - v + 1):
                    R[m, t, u, v] = Z * R[m + 1, t, u, v - 1]
                    if v > 1:
                        R[m, t, u, v] += (v - 1) * R[m + 1, t, u, v - 2]
    return R[0]


def hermite_indices(L):
    return [(t, u, v) for t in range(L + 1) for u in range(L + 1 - t) for v in range(L + 1 - t - u)]


class _ShellPair:
    """Primitive-pair data for two shells, flattened over primitive pairs."""

    def __init__(self, sa: Shell, A, sb: Shell, B, extra_b=0):
        ea, eb = np.asarray(sa.exponents), np.asarray(sb.exponents)
        ca, cb = sa.normalized_coefficients(), sb.normalized_coefficients()
        a = np.repeat(ea, eb.size)
        b = np.tile(eb, ea.size)
        self.a, self.b = a, b
        self.p = a + b
        AB = A - B
        self.K = np.exp(-a * b / self.p * np.dot(AB, AB))
        self.coef = np.repeat(ca, eb.size) * np.tile(cb, ea.size)
        keep = np.abs(self.coef * self.K) > PRIM_CUTOFF
        if not keep.any():
            keep[np.argmax(np.abs(self.coef * self.K))] = True
        for name in ("a", "b", "p", "K", "coef"):
            setattr(self, name, getattr(self, name)[keep])
        self.P = (self.a[:, None] * A + self.b[:, None] * B) / self.p[:, None]
        self.la, self.lb = sa.l, sb.l
        self.comps_a = cartesian_components(sa.l)
        self.comps_b = cartesian_components(sb.l)
        self.norm_ab = np.outer(sa.component_norms(), sb.component_norms())
        self.E = [
            hermite_E(sa.l, sb.l + extra_b, self.p, self.P[:, d] - A[d], self.P[:, d] - B[d])
            for d in range(3)
        ]

    def hermite_product(self):
        """Array H[ca, cb, h, n] = E^x_t E^y_u E^z_v for Hermite index h=(t,u,v)."""
        L = self.la + self.lb
        idx = hermite_indices(L)
        H = np.zeros((len(self.comps_a), len(self.comps_b), len(idx), self.p.size))
        Ex, Ey, Ez = self.E
        for ia, (ax, ay, az) in enumerate(self.comps_a):
            for ib, (bx, by, bz) in enumerate(self.comps_b):
                for h, (t, u, v) in enumerate(idx):
                    if t > ax + bx or u > ay + by or v > az + bz:
                        continue
                    H[ia, ib, h] = Ex[ax, bx, t] * Ey[ay, by, u] * Ez[az, bz, v]
        return idx, H


def _one_electron_block(sp: _ShellPair, geom: Geometry):
    """Overlap, kinetic and nuclear attraction blocks for one shell pair."""
    p, b = sp.p, sp.b
    w = sp.coef * sp.K
    Ex, Ey, Ez = sp.E
    s1 = np.sqrt(np.pi / p)
    # 1-D overlaps S[i, j] for j up to lb + 2 (kinetic needs j + 2)
    Sx, Sy, Sz = Ex[:, :, 0] * s1, Ey[:, :, 0] * s1, Ez[:, :, 0] * s1

    def kin1d(S1, i, j):
        v = b * (2 * j + 1) * S1[i, j] - 2 * b * b * S1[i, j + 2]
        if j >= 2:
            v = v - 0.5 * j * (j - 1) * S1[i, j - 2]
        return v

    na, nb = len(sp.comps_a), len(sp.comps_b)
    S = np.zeros((na, nb))
    T = np.zeros((na, nb))
    for ia, (ax, ay, az) in enumerate(sp.comps_a):
        for ib, (bx, by, bz) in enumerate(sp.comps_b):
            ox, oy, oz = Sx[ax, bx], Sy[ay, by], Sz[az, bz]
            S[ia, ib] = np.sum(w * ox * oy * oz)
            tx, ty, tz = kin1d(Sx, ax, bx), kin1d(Sy, ay, by), kin1d(Sz, az, bz)
            T[ia, ib] = np.sum(w * (tx * oy * oz + ox * ty * oz + ox * oy * tz))

    L = sp.la + sp.lb
    idx, H = sp.hermite_product()
    V = np.zeros((na, nb))
    for Zc, C in zip(geom.numbers, geom.coords):
        R = hermite_R(L, p, sp.P - C)
        Rv = np.stack([R[t, u, v] for t, u, v in idx])  # (h, n)
        V -= Zc * np.einsum("abhn,hn,n->ab", H, Rv, w * 2 * np.pi / p)
    return S * sp.norm_ab, T * sp.norm_ab, V * sp.norm_ab


def _eri_block(pab: _ShellPair, pcd: _ShellPair):
    """(ab|cd) block for a shell quartet, shape (na, nb, nc, nd)."""
    Lab = pab.la + pab.lb
    Lcd = pcd.la + pcd.lb
    L = Lab + Lcd
    idx_ab, Hab = pab.hermite_product()
    idx_cd, Hcd = pcd.hermite_product()
    p = pab.p[:, None]
    q = pcd.p[None, :]
    alpha = (p * q / (p + q)).reshape(-1)
    PQ = (pab.P[:, None, :] - pcd.P[None, :, :]).reshape(-1, 3)
    R = hermite_R(L, alpha, PQ)
    npq = pab.p.size, pcd.p.size
    Rm = np.empty((len(idx_ab), len(idx_cd)) + npq)
    for h, (t, u, v) in enumerate(idx_ab):
        for g, (tt, uu, vv) in enumerate(idx_cd):
            Rm[h, g] = R[t + tt, u + uu, v + vv].reshape(npq)
    sign = np.array([(-1) ** (t + u + v) for t, u, v in idx_cd], dtype=float)
    pref = 2 * np.pi ** 2.5 / (p * q * np.sqrt(p + q))
    pref = pref * (pab.coef * pab.K)[:, None] * (pcd.coef * pcd.K)[None, :]
    out = np.einsum("abhm,cdgn,hgmn,g,mn->abcd", Hab, Hcd, Rm, sign, pref, optimize=True)
    return out * pab.norm_ab[:, :, None, None] * pcd.norm_ab[None, None, :, :]


def compute_integrals(geom: Geometry, basis: BasisSet, check: bool = True) -> IntegralBundle:
    if basis.natoms and basis.natoms != geom.natoms:
        raise ValueError("basis set built for a different number of atoms")
    shells = basis.shells
    nsh = len(shells)
    off = basis.offsets()
    n = basis.nbf
    centers = [geom.coords[sh.center] for sh in shells]
    S = np.zeros((n, n))
    T = np.zeros((n, n))
    V = np.zeros((n, n))
    pairs = {}
    for i in range(nsh):
        for j in range(i + 1):
            sp = _ShellPair(shells[i], centers[i], shells[j], centers[j], extra_b=2)
            s, t, v = _one_electron_block(sp, geom)
            si = slice(off[i], off[i] + shells[i].ncart)
            sj = slice(off[j], off[j] + shells[j].ncart)
            S[si, sj], T[si, sj], V[si, sj] = s, t, v
            S[sj, si], T[sj, si], V[sj, si] = s.T, t.T, v.T
            pairs[i, j] = _ShellPair(shells[i], centers[i], shells[j], centers[j])

    eri = np.zeros((n, n, n, n))
    pair_list = sorted(pairs)
    for ij_idx, (i, j) in enumerate(pair_list):
        for kl_idx in range(ij_idx + 1):
            k, l = pair_list[kl_idx]
            blk = _eri_block(pairs[i, j], pairs[k, l])
            si = slice(off[i], off[i] + shells[i].ncart)
            sj = slice(off[j], off[j] + shells[j].ncart)
            sk = slice(off[k], off[k] + shells[k].ncart)
            sl = slice(off[l], off[l] + shells[l].ncart)
            for (a, b, blk_ab) in ((si, sj, blk), (sj, si, blk.transpose(1, 0, 2, 3))):
                for (c, d, blk_abcd) in ((sk, sl, blk_ab), (sl, sk, blk_ab.transpose(0, 1, 3, 2))):
                    eri[a, b, c, d] = blk_abcd
                    eri[c, d, a, b] = blk_abcd.transpose(2, 3, 0, 1)

    if check:
        emin = np.linalg.eigvalsh(S)[0]
        if emin < S_EIG_MIN:
            raise LinearDependence(emin, S_EIG_MIN)
    h = T + V
    return IntegralBundle(S=S, h_core=h, eri=eri, e_nuc=geom.nuclear_repulsion(), T=T, V=V)


def overlap_matrix(geom: Geometry, basis: BasisSet) -> np.ndarray:
    """Overlap only (cheap path, used for orbital tracking)."""
    shells = basis.shells
    off = basis.offsets()
    n = basis.nbf
    S = np.zeros((n, n))
    for i, j in product(range(len(shells)), repeat=2):
        if j > i:
            continue
        A, B = geom.coords[shells[i].center], geom.coords[shells[j].center]
        sp = _ShellPair(shells[i], A, shells[j], B)
        s1 = np.sqrt(np.pi / sp.p)
        Ex, Ey, Ez = sp.E
        w = sp.coef * sp.K
        blk = np.zeros((shells[i].ncart, shells[j].ncart))
        for ia, (ax, ay, az) in enumerate(sp.comps_a):
            for ib, (bx, by, bz) in enumerate(sp.comps_b):
                blk[ia, ib] = np.sum(w * s1 ** 3 * Ex[ax, bx, 0] * Ey[ay, by, 0] * Ez[az, bz, 0])
        blk *= sp.norm_ab
        S[off[i]:off[i] + shells[i].ncart, off[j]:off[j] + shells[j].ncart] = blk
        S[off[j]:off[j] + shells[j].ncart, off[i]:off[i] + shells[i].ncart] = blk.T
    return S
