"""Closed-shell restricted Hartree-Fock.

Conventions: the density used in the Fock build is the closed-shell
``D = 2 C_occ C_occ^T`` and ``F = h + J(D) - K(D)/2``.  The idempotent,
orthonormal-basis density ``D~ = S^{1/2} C_occ C_occ^T S^{1/2}`` (rank
``n_occ``) is exposed as a diagnostic, and the SCF stationarity measure is
the Riemannian gradient ``[D~, [D~, F~]]`` with ``F~ = S^{-1/2} F S^{-1/2}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GapCollapse, InputError, LinearDependence, ScfNotConverged
from .integrals import IntegralBundle, S_EIG_MIN


@dataclass(frozen=True)
class ScfConfig:
    tol_grad: float = 1e-10
    tol_e: float = 1e-12
    max_iter: int = 200
    diis_dim: int = 8
    diis_start: int = 2
    gap_min: float = 1e-6
    damping: float = 0.5  # only used when the DIIS system is ill-conditioned


@dataclass(frozen=True)
class ScfSolution:
    C: np.ndarray
    lambdas: np.ndarray
    D: np.ndarray
    F: np.ndarray
    E_hf: float
    gap: float
    grad_norm: float
    iterations: int
    n_occ: int
    S: np.ndarray = field(repr=False)
    e_nuc: float = 0.0

    @property
    def C_occ(self):
        return self.C[:, : self.n_occ]

    @property
    def C_virt(self):
        return self.C[:, self.n_occ:]

    def idempotent_density(self) -> np.ndarray:
        S_half, _ = lowdin(self.S)
        Co = self.C_occ
        return S_half @ Co @ Co.T @ S_half


def lowdin(S: np.ndarray):
    """Symmetric square root of S and its inverse via eigendecomposition."""
    w, U = np.linalg.eigh(S)
    if w[0] < S_EIG_MIN:
        raise LinearDependence(w[0], S_EIG_MIN)
    r = np.sqrt(w)
    S_half = (U * r) @ U.T
    S_neg_half = (U / r) @ U.T
    return 0.5 * (S_half + S_half.T), 0.5 * (S_neg_half + S_neg_half.T)


def coulomb_exchange(eri, D):
    J = np.einsum("pqrs,rs->pq", eri, D, optimize=True)
    K = np.einsum("prqs,rs->pq", eri, D, optimize=True)
    return J, K


def fock_build(h_core, eri, D):
    J, K = coulomb_exchange(eri, D)
    return h_core + J - 0.5 * K


def fix_column_signs(C):
    """Make the largest-magnitude entry of every column positive."""
    idx = np.argmax(np.abs(C), axis=0)
    signs = np.sign(C[idx, np.arange(C.shape[1])])
    signs[signs == 0] = 1.0
    return C * signs


def solve_roothaan(F, S_neg_half):
    Fp = S_neg_half @ F @ S_neg_half
    eps, Cp = np.linalg.eigh(0.5 * (Fp + Fp.T))  # ascending: aufbau order
    C = fix_column_signs(S_neg_half @ Cp)
    return C, eps


def density(C, n_occ):
    Co = C[:, :n_occ]
    return 2.0 * Co @ Co.T


def hf_energy(h_core, F, D, e_nuc):
    return 0.5 * np.sum(D * (h_core + F)) + e_nuc


def riemannian_gradient(D, F, S_half, S_neg_half):
    """[D~, [D~, F~]] in the Loewdin-orthonormalised basis."""
    Dt = 0.5 * S_half @ D @ S_half
    Ft = S_neg_half @ F @ S_neg_half
    comm = Dt @ Ft - Ft @ Dt
    return Dt @ comm - comm @ Dt


class Diis:
    """Pulay extrapolation over a bounded history of (vector, error) pairs."""

    def __init__(self, dim: int = 8, max_cond: float = 1e12):
        self.dim = dim
        self.max_cond = max_cond
        self.vecs: list[np.ndarray] = []
        self.errs: list[np.ndarray] = []

    def push(self, vec, err):
        self.vecs.append(np.array(vec, copy=True))
        self.errs.append(np.array(err, copy=True).reshape(-1))
        if len(self.vecs) > self.dim:
            self.vecs.pop(0)
            self.errs.pop(0)

    def extrapolate(self):
        """Return the extrapolated vector, or None if the DIIS system is ill-conditioned."""
        n = len(self.vecs)
        if n < 2:
            return None
        E = np.array(self.errs)
        B = np.empty((n + 1, n + 1))
        B[:n, :n] = E @ E.T
        B[n, :n] = B[:n, n] = -1.0
        B[n, n] = 0.0
        rhs = np.zeros(n + 1)
        rhs[n] = -1.0
        # scale for conditioning; the constraint row is unaffected
        scale = np.max(np.abs(np.diag(B[:n, :n])))
        if scale > 0:
            B[:n, :n] /= scale
        if np.linalg.cond(B) > self.max_cond:
            return None
        c = np.linalg.solve(B, rhs)[:n]
        return sum(ci * v for ci, v in zip(c, self.vecs))


def core_guess(bundle: IntegralBundle, n_occ, S_neg_half):
    C, _ = solve_roothaan(bundle.h_core, S_neg_half)
    return density(C, n_occ)


def scf_iterate(bundle: IntegralBundle, n_electrons: int, config: ScfConfig = ScfConfig(),
                D0: np.ndarray | None = None) -> ScfSolution:
    nbf = bundle.nbf
    if n_electrons % 2:
        raise InputError("closed shell required: odd number of electrons")
    if n_electrons <= 0 or n_electrons > 2 * nbf:
        raise InputError(f"cannot place {n_electrons} electrons in {nbf} spatial orbitals")
    n_occ = n_electrons // 2
    S, h, eri = bundle.S, bundle.h_core, bundle.eri
    S_half, S_neg_half = lowdin(S)

    D = core_guess(bundle, n_occ, S_neg_half) if D0 is None else D0
    diis = Diis(config.diis_dim)
    E_old = np.inf
    F_prev = None
    grad_norm = np.inf
    for it in range(1, config.max_iter + 1):
        F = fock_build(h, eri, D)
        E = hf_energy(h, F, D, bundle.e_nuc)
        grad_norm = np.linalg.norm(riemannian_gradient(D, F, S_half, S_neg_half))
        if grad_norm < config.tol_grad and abs(E - E_old) < config.tol_e:
            break
        E_old = E
        F_use = F
        if config.diis_dim > 0:
            err = S_neg_half @ (F @ D @ S - S @ D @ F) @ S_neg_half
            diis.push(F, err)
            if it >= config.diis_start:
                F_ext = diis.extrapolate()
                if F_ext is not None:
                    F_use = F_ext
                elif F_prev is not None:
                    F_use = config.damping * F + (1 - config.damping) * F_prev
        F_prev = F
        C, _ = solve_roothaan(F_use, S_neg_half)
        D = density(C, n_occ)
    else:
        raise ScfNotConverged(config.max_iter, grad_norm)

    # canonical orbitals of the converged Fock matrix F(D)
    C, eps = solve_roothaan(F, S_neg_half)
    gap = float(eps[n_occ] - eps[n_occ - 1]) if n_occ < nbf else np.inf
    if gap < config.gap_min:
        raise GapCollapse(gap, config.gap_min)
    return ScfSolution(C=C, lambdas=eps, D=density(C, n_occ), F=F, E_hf=float(E), gap=gap,
                       grad_norm=float(grad_norm), iterations=it, n_occ=n_occ, S=S,
                       e_nuc=bundle.e_nuc)


@dataclass(frozen=True)
class MoIntegrals:
    """Spin-orbital integrals in the MO basis; spin orbital 2p (alpha), 2p+1 (beta)."""

    f: np.ndarray        # (n_so, n_so) Fock matrix
    eri_as: np.ndarray   # <pq||rs>
    n_occ_so: int
    n_virt_so: int
    e_hf: float
    eps: np.ndarray      # spin-orbital energies (diagonal of f in canonical orbitals)
    h: np.ndarray | None = None  # spin-orbital core Hamiltonian, needed by FCI
    e_nuc: float = 0.0

    @property
    def n_so(self):
        return self.n_occ_so + self.n_virt_so

    @property
    def o(self):
        return slice(0, self.n_occ_so)

    @property
    def v(self):
        return slice(self.n_occ_so, self.n_so)


def ao_to_mo_eri(eri, C):
    """(pq|rs) in MO basis by four quarter transforms."""
    t = np.einsum("pqrs,pi->iqrs", eri, C, optimize=True)
    t = np.einsum("iqrs,qj->ijrs", t, C, optimize=True)
    t = np.einsum("ijrs,rk->ijks", t, C, optimize=True)
    return np.einsum("ijks,sl->ijkl", t, C, optimize=True)


def spin_block(M):
    """Spatial one-index matrix -> spin-orbital block matrix (interleaved spins)."""
    return np.kron(M, np.eye(2))


def spin_orbital_eri(eri_mo):
    """Antisymmetrised <pq||rs> from spatial chemists' (pr|qs)."""
    n = eri_mo.shape[0]
    spin = np.arange(2 * n) % 2
    sp = np.arange(2 * n) // 2
    chem = eri_mo[np.ix_(sp, sp, sp, sp)]
    same = spin[:, None] == spin[None, :]
    # (pr|qs) nonzero only if spin(p)=spin(r), spin(q)=spin(s)
    chem = chem * same[:, :, None, None] * same[None, None, :, :]
    phys = chem.transpose(0, 2, 1, 3)  # <pq|rs> = (pr|qs)
    return phys - phys.transpose(0, 1, 3, 2)


def mo_transform(bundle: IntegralBundle, scf: ScfSolution) -> MoIntegrals:
    C = scf.C
    eri_mo = ao_to_mo_eri(bundle.eri, C)
    f = spin_block(C.T @ scf.F @ C)
    h = spin_block(C.T @ bundle.h_core @ C)
    return MoIntegrals(
        f=f,
        eri_as=spin_orbital_eri(eri_mo),
        n_occ_so=2 * scf.n_occ,
        n_virt_so=2 * (C.shape[1] - scf.n_occ),
        e_hf=scf.E_hf,
        eps=np.repeat(scf.lambdas, 2),
        h=h,
        e_nuc=bundle.e_nuc,
    )
