import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from ..objective import CoverageConfig, RuleConstraints


@dataclass(frozen=True)
class SearchConfig:
    algo: str = "poet"
    population: int = 50
    generations: int = 1000
    tournament_size: int = 3
    elitism: int = 1
    # POET: per-event probability; GA: per-gene probability
    mutation_rate: float = 0.2
    mutation_sigma: float = 1.0
    crossover_rate: float = 0.5
    freeze_interval: int = 250
    events_per_epoch: int = 8
    grid_side: Optional[int] = None
    max_radius: int = 1
    jitter: float = 1.0
    base_sigma: float = 1.0
    init_inputs: float = 4.0
    layer_sizes: tuple = (4,)
    training: str = "joint"
    sds_mode: str = "mc"
    sds_sample_size: int = 10_000
    sds_resample: bool = True
    exact_cap: int = 10**7
    report_exact_cap: int = 2**20
    report_sample_size: int = 100_000
    seed: int = 0
    top_h: int = 10
    node_scope: Optional[tuple] = None
    min_qr: Optional[float] = None
    max_qs: Optional[float] = None
    min_hoc: Optional[float] = None
    workers: int = 1
    checkpoint_every: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))
        if self.node_scope is not None:
            object.__setattr__(self, "node_scope", tuple(int(s) for s in self.node_scope))
        self.validate()

    def validate(self):
        counts = {
            "population": self.population,
            "generations": self.generations,
            "tournament_size": self.tournament_size,
            "freeze_interval": self.freeze_interval,
            "events_per_epoch": self.events_per_epoch,
            "sds_sample_size": self.sds_sample_size,
            "report_sample_size": self.report_sample_size,
            "top_h": self.top_h,
            "workers": self.workers,
        }
        for name, v in counts.items():
            if int(v) < 1:
                raise ValueError(f"{name} must be >= 1, got {v}")
        for name in ("mutation_rate", "crossover_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not self.layer_sizes or any(s < 1 for s in self.layer_sizes):
            raise ValueError("layer_sizes needs at least one positive entry")
        if not 0 <= self.elitism <= self.population:
            raise ValueError("elitism must lie in [0, population]")
        if self.algo not in ("poet", "ga"):
            raise ValueError(f"unknown algo {self.algo!r}")
        if self.training not in ("joint", "greedy"):
            raise ValueError(f"unknown training mode {self.training!r}")
        if self.sds_mode not in ("mc", "exact"):
            raise ValueError(f"unknown sds_mode {self.sds_mode!r}")
        if self.grid_side is not None and self.grid_side < 1:
            raise ValueError("grid_side must be >= 1")
        if self.max_radius < 0 or self.checkpoint_every < 0:
            raise ValueError("max_radius and checkpoint_every must be >= 0")

    @property
    def coverage(self) -> CoverageConfig:
        return CoverageConfig(self.top_h, self.node_scope)

    @property
    def constraints(self) -> RuleConstraints:
        return RuleConstraints(self.min_qr, self.max_qs, self.min_hoc)

    def replace(self, **changes) -> "SearchConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["layer_sizes"] = list(self.layer_sizes)
        if self.node_scope is not None:
            d["node_scope"] = list(self.node_scope)
        return d

    @classmethod
    def flatten(cls, d) -> dict:
        """Flat field dict from a document that may nest ``coverage``/``constraints``/``sds`` sections."""
        flat = {}
        for key, value in dict(d).items():
            if key in ("coverage", "constraints", "sds") and isinstance(value, dict):
                for sub, v in value.items():
                    flat[_NESTED.get((key, sub), sub)] = v
            else:
                flat[key] = value
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(flat) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return flat

    @classmethod
    def from_dict(cls, d) -> "SearchConfig":
        return cls(**cls.flatten(d))

    @classmethod
    def read_flat(cls, path) -> dict:
        text = Path(path).read_text()
        doc = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
        if doc is not None and not isinstance(doc, dict):
            raise ValueError("config must be a mapping")
        return cls.flatten(doc or {})

    @classmethod
    def load(cls, path) -> "SearchConfig":
        return cls(**cls.read_flat(path))


_NESTED = {
    ("sds", "mode"): "sds_mode",
    ("sds", "sample_size"): "sds_sample_size",
    ("sds", "resample"): "sds_resample",
}
