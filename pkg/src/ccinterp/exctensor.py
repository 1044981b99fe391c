"""Excitation tensors and the MO <-> AO multilinear transforms.

A rank-k excitation tensor lives in V^k (x) O^k with the k virtual modes
first, e.g. ``t2[a, b, i, j]``.  The MO->AO map applies C_virt to every
virtual mode and C_occ to every occupied mode; its left inverse applies
C_virt^T S and C_occ^T S.  Between two geometries only the small matrices

    L_virt = C_virt(mu)^T S(mu) C_virt(mu_j),  L_occ = C_occ(mu)^T S(mu) C_occ(mu_j)

are needed, so the AO tensor is never built in the online stage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ccsd import AmplitudeSet
from .errors import ShapeMismatch
from .scf import ScfSolution, spin_block

MO, AO = "MO", "AO"


@dataclass(frozen=True)
class ExcTensor:
    data: np.ndarray
    rank: int
    basis_tag: str = MO

    def __post_init__(self):
        if self.rank not in (1, 2):
            raise ShapeMismatch(f"unsupported excitation rank {self.rank}")
        if self.data.ndim != 2 * self.rank:
            raise ShapeMismatch(f"rank-{self.rank} tensor needs {2 * self.rank} modes, got {self.data.ndim}")
        if self.basis_tag not in (MO, AO):
            raise ValueError(f"unknown basis tag {self.basis_tag!r}")
        shp = self.data.shape
        k = self.rank
        if len(set(shp[:k])) > 1 or len(set(shp[k:])) > 1:
            raise ShapeMismatch(f"inconsistent mode extents {shp}")
        if self.basis_tag == AO and shp[0] != shp[k]:
            raise ShapeMismatch(f"AO tensor modes must all have the same extent, got {shp}")


@dataclass(frozen=True)
class TransformPair:
    """Spin-blocked occupied/virtual coefficient blocks and overlap at one geometry."""

    C_occ: np.ndarray   # (n_b_so, n_occ_so)
    C_virt: np.ndarray  # (n_b_so, n_virt_so)
    S: np.ndarray       # (n_b_so, n_b_so)

    @classmethod
    def from_spatial(cls, C, S, n_occ) -> "TransformPair":
        Cs = spin_block(np.asarray(C))
        return cls(Cs[:, : 2 * n_occ].copy(), Cs[:, 2 * n_occ:].copy(), spin_block(np.asarray(S)))

    @classmethod
    def from_scf(cls, scf: ScfSolution) -> "TransformPair":
        return cls.from_spatial(scf.C, scf.S, scf.n_occ)

    def orthonormality_error(self) -> float:
        Co, Cv, S = self.C_occ, self.C_virt, self.S
        return max(
            np.abs(Co.T @ S @ Co - np.eye(Co.shape[1])).max(initial=0.0),
            np.abs(Cv.T @ S @ Cv - np.eye(Cv.shape[1])).max(initial=0.0),
            np.abs(Co.T @ S @ Cv).max(initial=0.0),
        )


def n_mode_product(T, M, mode: int):
    """Contract matrix M (rows s, columns a) against tensor mode ``mode``.

    Accepts an ExcTensor or a bare array; the result has the same type.
    """
    data = T.data if isinstance(T, ExcTensor) else np.asarray(T)
    M = np.asarray(M)
    if not 0 <= mode < data.ndim:
        raise ShapeMismatch(f"mode {mode} out of range for a {data.ndim}-mode tensor")
    if M.ndim != 2 or M.shape[1] != data.shape[mode]:
        raise ShapeMismatch(
            f"matrix with {M.shape[-1]} columns cannot act on mode {mode} of extent {data.shape[mode]}"
        )
    out = np.moveaxis(np.tensordot(M, data, axes=(1, mode)), 0, mode)
    if isinstance(T, ExcTensor):
        return ExcTensor(out, T.rank, T.basis_tag)
    return out


def _apply(T: ExcTensor, Mv, Mo, tag) -> ExcTensor:
    data = T.data
    k = T.rank
    for m in range(k):
        data = n_mode_product(data, Mv, m)
    for m in range(k, 2 * k):
        data = n_mode_product(data, Mo, m)
    return ExcTensor(data, k, tag)


def mo_to_ao(T: ExcTensor, tp: TransformPair) -> ExcTensor:
    if T.basis_tag != MO:
        raise ShapeMismatch("mo_to_ao expects an MO-basis tensor")
    return _apply(T, tp.C_virt, tp.C_occ, AO)


def ao_to_mo(T: ExcTensor, tp: TransformPair) -> ExcTensor:
    if T.basis_tag != AO:
        raise ShapeMismatch("ao_to_mo expects an AO-basis tensor")
    return _apply(T, tp.C_virt.T @ tp.S, tp.C_occ.T @ tp.S, MO)


def cross_matrices(tp_target: TransformPair, tp_source: TransformPair):
    if tp_target.S.shape != tp_source.S.shape:
        raise ShapeMismatch("transform pairs refer to different AO dimensions")
    L_virt = tp_target.C_virt.T @ tp_target.S @ tp_source.C_virt
    L_occ = tp_target.C_occ.T @ tp_target.S @ tp_source.C_occ
    return L_virt, L_occ


def cross_transform(T: ExcTensor, tp_target: TransformPair, tp_source: TransformPair) -> ExcTensor:
    """ao_to_mo(target) after mo_to_ao(source), without building the AO tensor."""
    if T.basis_tag != MO:
        raise ShapeMismatch("cross_transform expects an MO-basis tensor")
    L_virt, L_occ = cross_matrices(tp_target, tp_source)
    return _apply(T, L_virt, L_occ, MO)


def amplitude_tensors(amps: AmplitudeSet) -> tuple[ExcTensor, ExcTensor]:
    return ExcTensor(amps.t1, 1), ExcTensor(amps.t2, 2)


def cross_transform_amplitudes(amps: AmplitudeSet, tp_target, tp_source) -> AmplitudeSet:
    L_virt, L_occ = cross_matrices(tp_target, tp_source)
    t1 = _apply(ExcTensor(amps.t1, 1), L_virt, L_occ, MO).data
    t2 = _apply(ExcTensor(amps.t2, 2), L_virt, L_occ, MO).data
    return AmplitudeSet(t1, t2)


def amplitudes_to_ao(amps: AmplitudeSet, tp: TransformPair) -> tuple[np.ndarray, np.ndarray]:
    t1, t2 = amplitude_tensors(amps)
    return mo_to_ao(t1, tp).data, mo_to_ao(t2, tp).data
