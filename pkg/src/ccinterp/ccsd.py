"""Spin-orbital CCSD.

Amplitudes are stored with virtual indices first: ``t1[a, i]`` and
``t2[a, b, i, j]``.  The residual is the projection
``Q_nu(t) = <Phi_nu| exp(-T) H exp(T) |Phi_0>`` over singles and doubles,
evaluated with the usual one- and two-body intermediates.  Internally the
contractions are written in occupied-first layout (``t1[i, a]``,
``t2[i, j, a, b]``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CcNotConverged, DegenerateDenominator
from .scf import Diis, MoIntegrals

ANTISYM_TOL = 1e-10


@dataclass(frozen=True)
class AmplitudeSet:
    t1: np.ndarray  # (nv, no)
    t2: np.ndarray  # (nv, nv, no, no)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.t1.ravel(), self.t2.ravel()])

    @classmethod
    def from_vector(cls, vec, nv, no):
        n1 = nv * no
        return cls(vec[:n1].reshape(nv, no).copy(), vec[n1:].reshape(nv, nv, no, no).copy())

    @classmethod
    def zeros(cls, nv, no):
        return cls(np.zeros((nv, no)), np.zeros((nv, nv, no, no)))

    def __add__(self, other):
        return AmplitudeSet(self.t1 + other.t1, self.t2 + other.t2)

    def __sub__(self, other):
        return AmplitudeSet(self.t1 - other.t1, self.t2 - other.t2)

    def scaled(self, c):
        return AmplitudeSet(c * self.t1, c * self.t2)

    def antisymmetry_error(self) -> float:
        t2 = self.t2
        if t2.size == 0:
            return 0.0
        return max(np.abs(t2 + t2.transpose(1, 0, 2, 3)).max(),
                   np.abs(t2 + t2.transpose(0, 1, 3, 2)).max())

    def antisymmetrized(self) -> "AmplitudeSet":
        return AmplitudeSet(self.t1.copy(), antisymmetrize(self.t2))


def antisymmetrize(t2):
    t = 0.5 * (t2 - t2.transpose(1, 0, 2, 3))
    return 0.5 * (t - t.transpose(0, 1, 3, 2))


@dataclass(frozen=True)
class CcConfig:
    tol_r: float = 1e-9
    tol_e: float = 1e-10
    max_iter: int = 100
    diis_dim: int = 8
    use_diis: bool = True


@dataclass(frozen=True)
class CcSolution:
    amplitudes: AmplitudeSet
    e_corr: float
    iterations: int
    final_residual_norm: float
    history: tuple = field(default=(), repr=False)


def _occ_first(amps: AmplitudeSet):
    return amps.t1.T, amps.t2.transpose(2, 3, 0, 1)


def _virt_first(t1, t2):
    return AmplitudeSet(np.ascontiguousarray(t1.T), np.ascontiguousarray(t2.transpose(2, 3, 0, 1)))


def denominators(mo: MoIntegrals):
    """Preconditioner diagonals lambda_a - lambda_i and lambda_a + lambda_b - lambda_i - lambda_j."""
    e = np.diag(mo.f)
    eo, ev = e[mo.o], e[mo.v]
    d1 = ev[:, None] - eo[None, :]
    d2 = ev[:, None, None, None] + ev[None, :, None, None] - eo[None, None, :, None] - eo[None, None, None, :]
    return d1, d2


def mp2_guess(mo: MoIntegrals) -> AmplitudeSet:
    nv, no = mo.n_virt_so, mo.n_occ_so
    _, d2 = denominators(mo)
    if d2.size and np.abs(d2).min() < 1e-8:
        raise DegenerateDenominator(f"MP2 denominator {np.abs(d2).min():.3e} below 1e-8")
    o, v = mo.o, mo.v
    oovv = mo.eri_as[o, o, v, v]  # <ij||ab>
    t2 = -oovv.transpose(2, 3, 0, 1) / d2
    return AmplitudeSet(np.zeros((nv, no)), t2)


def cc_energy(amps: AmplitudeSet, mo: MoIntegrals) -> float:
    o, v = mo.o, mo.v
    t1, t2 = _occ_first(amps)
    oovv = mo.eri_as[o, o, v, v]
    e = np.einsum("ia,ia->", mo.f[o, v], t1)
    e += 0.25 * np.einsum("ijab,ijab->", oovv, t2)
    e += 0.5 * np.einsum("ijab,ia,jb->", oovv, t1, t1)
    return float(np.real_if_close(e))


def cc_residual(amps: AmplitudeSet, mo: MoIntegrals) -> AmplitudeSet:
    """CCSD residual Q(t) in virtual-first layout (works for complex amplitudes too)."""
    o, v = mo.o, mo.v
    g = mo.eri_as
    f = mo.f
    t1, t2 = _occ_first(amps)
    no = t1.shape[0]
    nv = t1.shape[1]
    ein = lambda s, *ops: np.einsum(s, *ops, optimize=True)

    fov = f[o, v]
    foo_off = f[o, o] - np.diag(np.diag(f[o, o]))
    fvv_off = f[v, v] - np.diag(np.diag(f[v, v]))

    tau = t2 + ein("ia,jb->ijab", t1, t1) - ein("ib,ja->ijab", t1, t1)
    taut = t2 + 0.5 * (ein("ia,jb->ijab", t1, t1) - ein("ib,ja->ijab", t1, t1))

    oovv = g[o, o, v, v]
    Fae = (fvv_off - 0.5 * ein("me,ma->ae", fov, t1)
           + ein("mf,mafe->ae", t1, g[o, v, v, v])
           - 0.5 * ein("mnaf,mnef->ae", taut, oovv))
    Fmi = (foo_off + 0.5 * ein("ie,me->mi", t1, fov)
           + ein("ne,mnie->mi", t1, g[o, o, o, v])
           + 0.5 * ein("inef,mnef->mi", taut, oovv))
    Fme = fov + ein("nf,mnef->me", t1, oovv)

    Wmnij = (g[o, o, o, o]
             + ein("je,mnie->mnij", t1, g[o, o, o, v])
             - ein("ie,mnje->mnij", t1, g[o, o, o, v])
             + 0.25 * ein("ijef,mnef->mnij", tau, oovv))
    Wabef = (g[v, v, v, v]
             - ein("mb,amef->abef", t1, g[v, o, v, v])
             + ein("ma,bmef->abef", t1, g[v, o, v, v])
             + 0.25 * ein("mnab,mnef->abef", tau, oovv))
    Wmbej = (g[o, v, v, o]
             + ein("jf,mbef->mbej", t1, g[o, v, v, v])
             - ein("nb,mnej->mbej", t1, g[o, o, v, o])
             - ein("jnfb,mnef->mbej", 0.5 * t2 + ein("jf,nb->jnfb", t1, t1), oovv))

    # singles
    r1 = fov.copy().astype(np.result_type(fov, t1))
    r1 += ein("ie,ae->ia", t1, Fae)
    r1 -= ein("ma,mi->ia", t1, Fmi)
    r1 += ein("imae,me->ia", t2, Fme)
    r1 -= ein("nf,naif->ia", t1, g[o, v, o, v])
    r1 -= 0.5 * ein("imef,maef->ia", t2, g[o, v, v, v])
    r1 -= 0.5 * ein("mnae,nmei->ia", t2, g[o, o, v, o])

    # doubles
    r2 = oovv.astype(np.result_type(oovv, t2)).copy()
    Fbe = Fae - 0.5 * ein("mb,me->be", t1, Fme)
    tmp = ein("ijae,be->ijab", t2, Fbe)
    r2 += tmp - tmp.transpose(0, 1, 3, 2)
    Fmj = Fmi + 0.5 * ein("je,me->mj", t1, Fme)
    tmp = ein("imab,mj->ijab", t2, Fmj)
    r2 -= tmp - tmp.transpose(1, 0, 2, 3)
    r2 += 0.5 * ein("mnab,mnij->ijab", tau, Wmnij)
    r2 += 0.5 * ein("ijef,abef->ijab", tau, Wabef)
    tmp = ein("imae,mbej->ijab", t2, Wmbej) - ein("ie,ma,mbej->ijab", t1, t1, g[o, v, v, o])
    r2 += tmp - tmp.transpose(0, 1, 3, 2) - tmp.transpose(1, 0, 2, 3) + tmp.transpose(1, 0, 3, 2)
    tmp = ein("ie,abej->ijab", t1, g[v, v, v, o])
    r2 += tmp - tmp.transpose(1, 0, 2, 3)
    tmp = ein("ma,mbij->ijab", t1, g[o, v, o, o])
    r2 -= tmp - tmp.transpose(0, 1, 3, 2)

    # diagonal Fock contributions excluded from the intermediates above
    e = np.diag(f)
    eo, ev = e[o], e[v]
    r1 += (ev[None, :] - eo[:, None]) * t1
    r2 += (ev[None, None, :, None] + ev[None, None, None, :]
           - eo[:, None, None, None] - eo[None, :, None, None]) * t2
    assert r1.shape == (no, nv)
    return _virt_first(r1, r2)


def _prepare_guess(guess: AmplitudeSet, mo: MoIntegrals) -> AmplitudeSet:
    nv, no = mo.n_virt_so, mo.n_occ_so
    if guess.t1.shape != (nv, no) or guess.t2.shape != (nv, nv, no, no):
        raise ValueError("guess amplitudes have the wrong shape for these integrals")
    if guess.antisymmetry_error() > ANTISYM_TOL:
        return guess.antisymmetrized()
    return AmplitudeSet(guess.t1.copy(), guess.t2.copy())


def solve_ccsd(mo: MoIntegrals, guess: AmplitudeSet | None = None,
               config: CcConfig = CcConfig()) -> CcSolution:
    """Preconditioned fixed-point iteration t <- t - Q(t)/D with optional DIIS.

    ``iterations`` counts amplitude updates; the loop stops when the residual
    norm is below ``tol_r`` and the energy change since the previous update
    is below ``tol_e``.
    """
    nv, no = mo.n_virt_so, mo.n_occ_so
    t = mp2_guess(mo) if guess is None else _prepare_guess(guess, mo)
    d1, d2 = denominators(mo)
    diis = Diis(config.diis_dim) if config.use_diis and config.diis_dim > 0 else None
    e_prev = np.inf
    history = []
    updates = 0
    while True:
        r = cc_residual(t, mo)
        rnorm = float(np.linalg.norm(r.vector()))
        e = cc_energy(t, mo)
        history.append((e, rnorm))
        if rnorm < config.tol_r and abs(e - e_prev) < config.tol_e:
            break
        if updates >= config.max_iter:
            raise CcNotConverged(updates, rnorm)
        e_prev = e
        step = AmplitudeSet(r.t1 / d1, r.t2 / d2)
        t_new = t - step
        if diis is not None:
            diis.push(t_new.vector(), step.vector())
            ext = diis.extrapolate()
            if ext is not None:
                t_new = AmplitudeSet.from_vector(ext, nv, no)
        t = t_new
        updates += 1
    return CcSolution(amplitudes=t, e_corr=e, iterations=updates,
                      final_residual_norm=rnorm, history=tuple(history))


def jacobian_subspace_singular_values(amps: AmplitudeSet, mo: MoIntegrals, k: int = 20,
                                      h: float = 1e-5, seed: int = 0) -> np.ndarray:
    """Singular values of the Jacobian of Q applied to a random k-dim subspace.

    The subspace is drawn inside the antisymmetric amplitude space; columns are
    obtained by central finite differences.
    """
    rng = np.random.default_rng(seed)
    nv, no = mo.n_virt_so, mo.n_occ_so
    cols = []
    for _ in range(k):
        d = AmplitudeSet(rng.standard_normal((nv, no)), antisymmetrize(rng.standard_normal((nv, nv, no, no))))
        cols.append(d.vector())
    V, _ = np.linalg.qr(np.array(cols).T)
    JV = []
    for j in range(V.shape[1]):
        dv = AmplitudeSet.from_vector(V[:, j], nv, no)
        qp = cc_residual(amps + dv.scaled(h), mo).vector()
        qm = cc_residual(amps - dv.scaled(h), mo).vector()
        JV.append((qp - qm) / (2 * h))
    return np.linalg.svd(np.array(JV).T, compute_uv=False)
