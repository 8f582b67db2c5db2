"""Run configuration: stage toggles, hyperparameters, dataset profiles."""

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .gcn import GcnConfig

# Per-dataset hyperparameter presets (k, rho, community number, GCN
# depth/width); shared settings: dropout 0.6, lr 5e-3, 200 epochs, wd 3e-3.
PROFILES = {
    "adni": {"k": 2, "rho": 0.6, "communities": None, "gcn": {"layers": 4, "hidden": 128}},
    "ppmi": {"k": 1, "rho": 0.5, "communities": None, "gcn": {"layers": 2, "hidden": 32}},
    "abide": {"k": 1, "rho": 0.6, "communities": 7, "gcn": {"layers": 2, "hidden": 128}},
    "adhd200": {"k": 3, "rho": 0.6, "communities": 5, "gcn": {"layers": 2, "hidden": 64}},
}

_GCN_KEYS = {"layers", "hidden", "dropout", "learning_rate", "epochs", "weight_decay"}


@dataclass
class RunConfig:
    filter_enabled: bool = True
    distill_enabled: bool = True
    selection_scope: str = "train_only"
    distill_mode: str = "inductive"
    k: int = 1
    rho: float = 0.6
    p_t: float = 0.7
    svm_c: float = 1.0
    svm_gamma: object = "scale"
    retrain_per_subgraph: bool = True
    communities: object = None
    folds: int = 5
    seed: int = 0
    gcn: GcnConfig = field(default_factory=lambda: GcnConfig(dropout=0.6, epochs=200))

    def __post_init__(self):
        if self.selection_scope not in ("train_only", "full_cohort"):
            raise ConfigError(f"unknown selection_scope {self.selection_scope!r}")
        if self.distill_mode not in ("inductive", "transductive"):
            raise ConfigError(f"unknown distill_mode {self.distill_mode!r}")
        if not 0 < self.p_t < 1:
            raise ConfigError("p_t must lie in (0, 1)")
        if self.rho <= 0:
            raise ConfigError("rho must be positive")
        if self.k < 0:
            raise ConfigError("k must be nonnegative")
        if self.folds < 2:
            raise ConfigError("need at least 2 folds")

    def with_overrides(self, **kwargs):
        return replace(self, **kwargs)

    def to_json(self):
        d = asdict(self)
        return d

    @classmethod
    def from_dict(cls, raw, profile=None):
        raw = dict(raw)
        gcn_raw = raw.pop("gcn", {})
        known = {f for f in cls.__dataclass_fields__} - {"gcn"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        unknown_gcn = set(gcn_raw) - _GCN_KEYS
        if unknown_gcn:
            raise ConfigError(f"unknown gcn config keys: {sorted(unknown_gcn)}")

        merged = {}
        merged_gcn = {"dropout": 0.6, "epochs": 200}
        if profile is not None:
            if profile not in PROFILES:
                raise ConfigError(f"unknown profile {profile!r}")
            prof = PROFILES[profile]
            merged.update({k: v for k, v in prof.items() if k != "gcn"})
            merged_gcn.update(prof["gcn"])
        merged.update(raw)
        merged_gcn.update(gcn_raw)
        try:
            return cls(gcn=GcnConfig(**merged_gcn), **merged)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path, profile=None):
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config does not parse: {exc}") from exc
        return cls.from_dict(raw, profile=profile)
