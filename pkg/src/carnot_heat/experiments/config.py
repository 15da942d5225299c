"""Experiment configuration: TOML or JSON files, per-study overrides, hashing."""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..errors import DomainError
from ..group_core import get_group

SUITES = ("group", "fields", "seminorm", "energy", "holder", "counterexample")
PROFILES = ("full", "quick")


@dataclass
class ExperimentConfig:
    """Top-level run settings.

    ``group``, ``T``, ``lattice_sizes``, ``dt_ladder`` and ``nu`` are optional
    global overrides; each study falls back to its own defaults (which depend
    on ``profile``). Tables named after a study (``[energy]``, ``[holder]``,
    ...) override that study's parameters key by key.
    """

    experiment_id: str = "default"
    seed: int = 0
    profile: str = "full"
    suites: list = field(default_factory=lambda: ["all"])
    group: str | None = None
    T: float | None = None
    lattice_sizes: list | None = None
    dt_ladder: list | None = None
    nu: float | None = None
    out_dir: str = "carnot_heat_out"
    workers: int = 1
    studies: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise DomainError(f"profile must be one of {PROFILES}, got {self.profile!r}")
        if isinstance(self.suites, str):
            self.suites = [self.suites]
        self.suites = list(self.suites)
        for s in self.suites:
            if s != "all" and s not in SUITES:
                raise DomainError(f"unknown suite {s!r}; choose from {SUITES + ('all',)}")
        if self.group is not None:
            get_group(self.group)
        for name in ("lattice_sizes", "dt_ladder"):
            ladder = getattr(self, name)
            if ladder is not None and len(ladder) < 2:
                raise DomainError(f"{name} needs at least 2 rungs, got {ladder}")
        if self.nu is not None and not 0 < self.nu <= 1:
            raise DomainError(f"nu must lie in (0, 1], got {self.nu}")
        if self.workers < 1:
            raise DomainError(f"workers must be >= 1, got {self.workers}")

    @property
    def selected_suites(self) -> list:
        return list(SUITES) if "all" in self.suites else [s for s in SUITES if s in self.suites]

    def study(self, name: str) -> dict:
        return dict(self.studies.get(name, {}))

    def to_dict(self) -> dict:
        return asdict(self)

    def identity(self) -> dict:
        """Everything that can change results (the output location cannot)."""
        d = self.to_dict()
        d.pop("out_dir")
        d.pop("workers")
        return d

    def hash(self) -> str:
        blob = json.dumps(self.identity(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def config_from_dict(d: dict) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    top = {k: v for k, v in d.items() if k in known}
    studies = dict(top.pop("studies", {}))
    for k, v in d.items():
        if k in known:
            continue
        if isinstance(v, dict):
            studies[k] = v
        else:
            raise DomainError(f"unknown config key {k!r}")
    return ExperimentConfig(**top, studies=studies)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".toml":
        d = tomllib.loads(text)
    elif path.suffix == ".json":
        d = json.loads(text)
    else:
        raise DomainError(f"config must be .toml or .json, got {path.name}")
    return config_from_dict(d)
