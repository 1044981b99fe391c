"""Experiment configuration loaded from JSON and merged with command-line flags."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, replace

from .ccsd import CcConfig
from .errors import InputError
from .scf import ScfConfig

KINDS = ("decay", "warm_start", "energy_curve", "crossing_demo")


@dataclass(frozen=True)
class ExperimentConfig:
    trajectory: str = ""
    basis: str = "sto-3g"
    nodes: tuple[int, ...] = (2, 4, 6, 8, 10, 12)
    grid: int = 50
    out: str = "out"
    kind: str = "decay"
    charge: int = 0
    scf: ScfConfig = field(default_factory=ScfConfig)
    cc: CcConfig = field(default_factory=CcConfig)

    def __post_init__(self):
        nodes = tuple(int(d) for d in self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if not nodes or any(d < 1 for d in nodes):
            raise InputError("node counts must be positive")
        if any(b <= a for a, b in zip(nodes, nodes[1:])):
            raise InputError("node counts must be strictly ascending")
        if self.grid < 2:
            raise InputError("grid size must be at least 2")
        if self.kind not in KINDS:
            raise InputError(f"unknown experiment kind {self.kind!r}; expected one of {', '.join(KINDS)}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["nodes"] = list(self.nodes)
        return d

    def checksum(self) -> str:
        """sha256 over the canonical JSON form plus the trajectory file contents."""
        payload = json.dumps(self.to_dict(), sort_keys=True)
        h = hashlib.sha256(payload.encode())
        if self.trajectory and os.path.exists(self.trajectory):
            with open(self.trajectory, "rb") as fh:
                h.update(fh.read())
        return h.hexdigest()


def config_from_dict(raw: dict, base_dir: str = ".") -> ExperimentConfig:
    raw = dict(raw)
    unknown = set(raw) - set(ExperimentConfig.__dataclass_fields__)
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
    try:
        if "scf" in raw:
            raw["scf"] = ScfConfig(**raw["scf"])
        if "cc" in raw:
            raw["cc"] = CcConfig(**raw["cc"])
    except TypeError as exc:
        raise InputError(f"bad solver config: {exc}") from None
    for key in ("trajectory", "out"):
        if raw.get(key) and not os.path.isabs(raw[key]):
            raw[key] = os.path.join(base_dir, raw[key])
    if "basis" in raw and os.path.exists(os.path.join(base_dir, raw["basis"])):
        raw["basis"] = os.path.join(base_dir, raw["basis"])
    return ExperimentConfig(**raw)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise InputError("config must be a JSON object")
    return config_from_dict(raw, os.path.dirname(os.path.abspath(path)))


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
