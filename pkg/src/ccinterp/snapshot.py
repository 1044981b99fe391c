"""Snapshot container: a text header followed by raw little-endian binary64 arrays.

Layout (see docs/snapshot_format.md for the full description)::

    CCINTERP-SNAPSHOT
    schema_version = 1
    <key> = <JSON value>
    ...
    array.<name> = {"shape": [...], "offset": <bytes>}
    payload_bytes = <int>
    payload_sha256 = "<hex>"
    END-HEADER
    <payload>

Header lines are UTF-8, ``\\n`` terminated, written in a fixed key order.
Arrays are C-ordered float64 ('<f8'); offsets are relative to the first
payload byte.  Amplitudes are spin-orbital tensors ``T1[a, i]`` and
``T2[a, b, i, j]`` (virtual indices first), spin orbital 2p = alpha, 2p+1 = beta
of spatial orbital p.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CorruptContainer,
    InconsistentSet,
    InvariantViolation,
    IoFailure,
    VersionMismatch,
)
from .geometry import Geometry, parse_geometry

MAGIC = "CCINTERP-SNAPSHOT"
MANIFEST_MAGIC = "CCINTERP-MANIFEST"
END = "END-HEADER"
SCHEMA_VERSION = 1
LOAD_TOL = 1e-8
ARRAYS = ("S", "C", "lambdas", "T1", "T2")
SNAPSHOT_SUFFIX = ".snap"


@dataclass(frozen=True)
class Snapshot:
    mu: float
    geometry: Geometry
    basis_descriptor: str
    n_electrons: int
    S: np.ndarray
    C: np.ndarray
    lambdas: np.ndarray
    E_hf: float
    gap: float
    T1: np.ndarray
    T2: np.ndarray
    e_corr: float
    scf_iterations: int = 0
    cc_iterations: int = 0
    config: dict = field(default_factory=dict)
    trajectory_checksum: str = ""
    producer: str = "ccinterp"
    schema_version: int = SCHEMA_VERSION

    @property
    def basis_checksum(self) -> str:
        return hashlib.sha256(self.basis_descriptor.encode()).hexdigest()

    @property
    def n_occ(self) -> int:
        return self.n_electrons // 2


def _fmt(value) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


def snapshot_bytes(s: Snapshot) -> bytes:
    arrays = {name: np.ascontiguousarray(getattr(s, name), dtype="<f8") for name in ARRAYS}
    header = [
        MAGIC,
        f"schema_version = {_fmt(s.schema_version)}",
        f"producer = {_fmt(s.producer)}",
        f"mu = {_fmt(float(s.mu))}",
        f"n_electrons = {_fmt(int(s.n_electrons))}",
        f"geometry = {_fmt(s.geometry.to_text())}",
        f"basis_descriptor = {_fmt(s.basis_descriptor)}",
        f"basis_checksum = {_fmt(s.basis_checksum)}",
        f"trajectory_checksum = {_fmt(s.trajectory_checksum)}",
        f"E_hf = {_fmt(float(s.E_hf))}",
        f"gap = {_fmt(float(s.gap))}",
        f"e_corr = {_fmt(float(s.e_corr))}",
        f"scf_iterations = {_fmt(int(s.scf_iterations))}",
        f"cc_iterations = {_fmt(int(s.cc_iterations))}",
        f"config = {_fmt(s.config)}",
        f"amplitude_layout = {_fmt('T1[a,i], T2[a,b,i,j]; virtual-major, row-major; spin orbital 2p alpha, 2p+1 beta')}",
    ]
    offset = 0
    chunks = []
    for name in ARRAYS:
        a = arrays[name]
        header.append(f"array.{name} = {_fmt({'offset': offset, 'shape': list(a.shape)})}")
        b = a.tobytes(order="C")
        chunks.append(b)
        offset += len(b)
    payload = b"".join(chunks)
    header.append(f"payload_bytes = {_fmt(len(payload))}")
    header.append(f"payload_sha256 = {_fmt(hashlib.sha256(payload).hexdigest())}")
    header.append(END)
    return ("\n".join(header) + "\n").encode() + payload


def write_snapshot(s: Snapshot, path) -> None:
    data = snapshot_bytes(s)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise IoFailure(f"cannot write snapshot {path}: {exc}") from exc


def _parse_header(raw: bytes, magic: str):
    end_marker = ("\n" + END + "\n").encode()
    pos = raw.find(end_marker)
    if not raw.startswith((magic + "\n").encode()) or pos < 0:
        raise CorruptContainer(f"missing {magic} header or {END} marker")
    try:
        text = raw[:pos].decode()
    except UnicodeDecodeError:
        raise CorruptContainer("header is not valid UTF-8") from None
    fields = {}
    for ln in text.split("\n")[1:]:
        if " = " not in ln:
            raise CorruptContainer(f"bad header line {ln!r}")
        key, val = ln.split(" = ", 1)
        try:
            fields[key] = json.loads(val)
        except json.JSONDecodeError:
            raise CorruptContainer(f"header value for {key!r} is not valid JSON") from None
    return fields, raw[pos + len(end_marker):]


def _require(fields, key):
    if key not in fields:
        raise CorruptContainer(f"header lacks required key {key!r}")
    return fields[key]


def snapshot_from_bytes(raw: bytes, validate: bool = True) -> Snapshot:
    fields, payload = _parse_header(raw, MAGIC)
    version = _require(fields, "schema_version")
    if version != SCHEMA_VERSION:
        raise VersionMismatch(f"unknown snapshot schema_version {version!r}")
    nbytes = _require(fields, "payload_bytes")
    if len(payload) != nbytes:
        raise CorruptContainer(f"payload has {len(payload)} bytes, header declares {nbytes}")
    digest = fields.get("payload_sha256")
    if digest is not None and hashlib.sha256(payload).hexdigest() != digest:
        raise CorruptContainer("payload checksum mismatch")
    arrays = {}
    for name in ARRAYS:
        spec = _require(fields, f"array.{name}")
        shape = tuple(int(n) for n in spec["shape"])
        off = int(spec["offset"])
        count = int(np.prod(shape)) if shape else 1
        end = off + 8 * count
        if off < 0 or end > len(payload):
            raise CorruptContainer(f"array {name} exceeds payload")
        arrays[name] = np.frombuffer(payload[off:end], dtype="<f8").reshape(shape).astype(float)
    try:
        geom = parse_geometry(_require(fields, "geometry"))
    except Exception as exc:
        raise CorruptContainer(f"bad embedded geometry: {exc}") from None
    s = Snapshot(
        mu=float(_require(fields, "mu")),
        geometry=geom,
        basis_descriptor=_require(fields, "basis_descriptor"),
        n_electrons=int(_require(fields, "n_electrons")),
        E_hf=float(_require(fields, "E_hf")),
        gap=float(_require(fields, "gap")),
        e_corr=float(_require(fields, "e_corr")),
        scf_iterations=int(fields.get("scf_iterations", 0)),
        cc_iterations=int(fields.get("cc_iterations", 0)),
        config=fields.get("config", {}),
        trajectory_checksum=fields.get("trajectory_checksum", ""),
        producer=fields.get("producer", ""),
        **arrays,
    )
    declared = fields.get("basis_checksum")
    if declared is not None and declared != s.basis_checksum:
        raise CorruptContainer("basis_checksum does not match the embedded basis descriptor")
    if validate:
        validate_snapshot(s)
    return s


def read_snapshot(path, validate: bool = True) -> Snapshot:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read snapshot {path}: {exc}") from exc
    return snapshot_from_bytes(raw, validate=validate)


def validate_snapshot(s: Snapshot) -> None:
    """Re-check physical invariants; never trust the producer."""
    nb = s.S.shape[0]
    if s.S.shape != (nb, nb) or s.C.shape != (nb, nb) or s.lambdas.shape != (nb,):
        raise InvariantViolation("dimensions(S, C, lambdas)", float("nan"))
    no, nv = 2 * s.n_occ, 2 * (nb - s.n_occ)
    if s.n_electrons % 2 or not 0 < s.n_occ <= nb:
        raise InvariantViolation("closed-shell electron count", float(s.n_electrons))
    if s.T1.shape != (nv, no) or s.T2.shape != (nv, nv, no, no):
        raise InvariantViolation("amplitude dimensions", float("nan"))
    orth = np.abs(s.C.T @ s.S @ s.C - np.eye(nb)).max()
    if not orth <= LOAD_TOL:
        raise InvariantViolation("orthonormality C^T S C = I", float(orth))
    if s.T2.size:
        anti = max(np.abs(s.T2 + s.T2.transpose(1, 0, 2, 3)).max(),
                   np.abs(s.T2 + s.T2.transpose(0, 1, 3, 2)).max())
        if not anti <= LOAD_TOL:
            raise InvariantViolation("T2 antisymmetry", float(anti))
    if not s.gap > 0:
        raise InvariantViolation("positive HOMO-LUMO gap", float(s.gap))
    if not all(np.isfinite(getattr(s, n)).all() for n in ARRAYS):
        raise InvariantViolation("finite arrays", float("nan"))


# --- manifests ---------------------------------------------------------------

@dataclass(frozen=True)
class SnapshotManifest:
    nodes: tuple[float, ...]
    files: tuple[str, ...]
    trajectory_descriptor: str = ""
    trajectory_checksum: str = ""
    basis_checksum: str = ""
    n_electrons: int = 0
    schema_version: int = SCHEMA_VERSION


def manifest_text(m: SnapshotManifest) -> str:
    lines = [
        MANIFEST_MAGIC,
        f"schema_version = {_fmt(m.schema_version)}",
        f"trajectory_descriptor = {_fmt(m.trajectory_descriptor)}",
        f"trajectory_checksum = {_fmt(m.trajectory_checksum)}",
        f"basis_checksum = {_fmt(m.basis_checksum)}",
        f"n_electrons = {_fmt(m.n_electrons)}",
        f"nodes = {_fmt([float(x) for x in m.nodes])}",
        f"files = {_fmt(list(m.files))}",
        END,
    ]
    return "\n".join(lines) + "\n"


def write_manifest(m: SnapshotManifest, path) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(manifest_text(m))
    except OSError as exc:
        raise IoFailure(f"cannot write manifest {path}: {exc}") from exc


def read_manifest(path) -> SnapshotManifest:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read manifest {path}: {exc}") from exc
    fields, rest = _parse_header(raw, MANIFEST_MAGIC)
    if rest.strip():
        raise CorruptContainer("trailing data after manifest header")
    if _require(fields, "schema_version") != SCHEMA_VERSION:
        raise VersionMismatch(f"unknown manifest schema_version {fields['schema_version']!r}")
    return SnapshotManifest(
        nodes=tuple(float(x) for x in _require(fields, "nodes")),
        files=tuple(_require(fields, "files")),
        trajectory_descriptor=fields.get("trajectory_descriptor", ""),
        trajectory_checksum=fields.get("trajectory_checksum", ""),
        basis_checksum=fields.get("basis_checksum", ""),
        n_electrons=int(fields.get("n_electrons", 0)),
    )


def check_consistent(snaps) -> None:
    """Raise InconsistentSet unless snapshots share basis, electrons, trajectory; mu unique."""
    for a, b in zip(snaps, snaps[1:]):
        pair = (a.mu, b.mu)
        if a.basis_checksum != b.basis_checksum:
            raise InconsistentSet(f"basis checksum differs between mu={a.mu} and mu={b.mu}", pair)
        if a.n_electrons != b.n_electrons:
            raise InconsistentSet(f"electron count differs between mu={a.mu} and mu={b.mu}", pair)
        if a.trajectory_checksum and b.trajectory_checksum and a.trajectory_checksum != b.trajectory_checksum:
            raise InconsistentSet(f"trajectory differs between mu={a.mu} and mu={b.mu}", pair)
        if not a.mu < b.mu:
            raise InconsistentSet(f"mu values not strictly ascending/unique: {a.mu}, {b.mu}", pair)


def load_manifest_snapshots(path):
    """Read a manifest and its snapshots, checking manifest <-> file consistency."""
    m = read_manifest(path)
    base = os.path.dirname(os.path.abspath(path))
    snaps = [read_snapshot(os.path.join(base, f)) for f in m.files]
    if len(snaps) != len(m.nodes):
        raise InconsistentSet("manifest lists a different number of nodes and files")
    for s, mu in zip(snaps, m.nodes):
        if s.mu != mu:
            raise InconsistentSet(f"snapshot mu {s.mu!r} does not match manifest node {mu!r}", (s.mu, mu))
    check_consistent(snaps)
    return m, snaps


def ingest_external(directory, manifest_name: str = "manifest.txt",
                    trajectory=None, write: bool = True) -> SnapshotManifest:
    """Validate every ``*.snap`` file in a directory and emit a manifest for it."""
    try:
        names = sorted(f for f in os.listdir(directory) if f.endswith(SNAPSHOT_SUFFIX))
    except OSError as exc:
        raise IoFailure(f"cannot list {directory}: {exc}") from exc
    if not names:
        raise InconsistentSet(f"no {SNAPSHOT_SUFFIX} files in {directory}")
    loaded = [(read_snapshot(os.path.join(directory, n)), n) for n in names]
    # duplicate mu must be reported, so sort stably and let the check see neighbours
    loaded.sort(key=lambda sn: sn[0].mu)
    snaps = [s for s, _ in loaded]
    check_consistent(snaps)
    tdesc = trajectory.descriptor() if trajectory is not None else ""
    tsum = trajectory.checksum() if trajectory is not None else snaps[0].trajectory_checksum
    if trajectory is not None:
        for s in snaps:
            if s.trajectory_checksum and s.trajectory_checksum != tsum:
                raise InconsistentSet(f"snapshot mu={s.mu} was produced for another trajectory", (s.mu,))
    m = SnapshotManifest(
        nodes=tuple(s.mu for s in snaps),
        files=tuple(n for _, n in loaded),
        trajectory_descriptor=tdesc,
        trajectory_checksum=tsum,
        basis_checksum=snaps[0].basis_checksum,
        n_electrons=snaps[0].n_electrons,
    )
    if write:
        write_manifest(m, os.path.join(directory, manifest_name))
    return m


def file_sha256(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()
