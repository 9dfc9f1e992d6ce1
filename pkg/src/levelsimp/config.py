"""Experiment configuration: schema, validation, resolution, echoing.

Configs are YAML with nested sections (see README for the schema).  Every
effective hyperparameter is resolved to an explicit value before any work
starts, and the resolved config is echoed verbatim into the run directory,
so no default stays silent.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import yaml

__all__ = [
    "ClassifierSection",
    "GeneratorSection",
    "FineTuneSection",
    "DataSection",
    "ExperimentConfig",
    "ConfigError",
    "METHOD_BASES",
    "parse_method",
    "load_config",
    "resolve_config",
    "dump_config",
]

METHOD_BASES = ("baseline_unweighted", "lcwl", "sce", "lcwl_sce")

WEIGHTED_BASES = ("lcwl", "lcwl_sce")
SCE_BASES = ("sce", "lcwl_sce")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class DataSection:
    n_parallel: int = 600
    n_pairs: int = 2400
    noise_rate: float = 0.0
    split: tuple[float, float, float] = (0.7, 0.15, 0.15)
    bleu_filter: bool = False
    bleu_lo: float = 0.1
    bleu_hi: float = 0.9


@dataclass
class ClassifierSection:
    alpha: float = 0.1
    beta: float = 1.0
    log_floor: float = -4.0
    learning_rate: float = 0.5
    n_steps: int = 2000
    batch_size: int = 32


@dataclass
class GeneratorSection:
    d_model: int = 64
    learning_rate: float = 0.2
    n_steps: int = 700
    batch_size: int = 16
    max_len: int = 24
    min_freq: int = 1
    clip_norm: float = 5.0


@dataclass
class FineTuneSection:
    n_steps: int = 300
    learning_rate: float = 0.2


@dataclass
class ExperimentConfig:
    seed: int = 0
    num_levels: int = 4
    grammar: str | None = None
    methods: list[str] = field(default_factory=lambda: ["baseline_unweighted", "lcwl"])
    metrics: list[str] = field(
        default_factory=lambda: ["sari", "bleu", "fkgl", "delta_fkgl"]
    )
    data: DataSection = field(default_factory=DataSection)
    classifier: ClassifierSection = field(default_factory=ClassifierSection)
    generator: GeneratorSection = field(default_factory=GeneratorSection)
    fine_tune: FineTuneSection = field(default_factory=FineTuneSection)

    def to_dict(self) -> dict:
        raw = asdict(self)
        raw["data"]["split"] = list(self.data.split)
        return raw


def parse_method(method: str) -> tuple[str, bool]:
    """Split a method id like "lcwl+ft" into (base, fine_tune flag)."""
    base, _, suffix = method.partition("+")
    if suffix not in ("", "ft"):
        raise ConfigError(f"unknown method suffix {suffix!r} in {method!r}")
    if base not in METHOD_BASES:
        raise ConfigError(
            f"unknown method {base!r}; expected one of {METHOD_BASES}"
        )
    return base, suffix == "ft"


def _positive(value, name, kind=float):
    try:
        value = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a {kind.__name__}") from None
    if value <= 0:
        raise ConfigError(f"{name} must be positive, got {value}")
    return value


def _section(cls, raw: dict, name: str):
    known = {f for f in cls.__dataclass_fields__}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown keys in {name!r} section: {sorted(extra)}")
    return cls(**raw)


def resolve_config(raw: dict) -> ExperimentConfig:
    """Validate a raw mapping and fill every default explicitly."""
    raw = dict(raw or {})
    known = {
        "seed", "num_levels", "grammar", "methods", "metrics",
        "data", "classifier", "generator", "fine_tune",
    }
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")

    cfg = ExperimentConfig(
        seed=int(raw.get("seed", 0)),
        num_levels=int(raw.get("num_levels", 4)),
        grammar=raw.get("grammar"),
        methods=list(raw.get("methods", ["baseline_unweighted", "lcwl"])),
        metrics=list(raw.get("metrics", ["sari", "bleu", "fkgl", "delta_fkgl"])),
        data=_section(DataSection, dict(raw.get("data", {})), "data"),
        classifier=_section(
            ClassifierSection, dict(raw.get("classifier", {})), "classifier"
        ),
        generator=_section(
            GeneratorSection, dict(raw.get("generator", {})), "generator"
        ),
        fine_tune=_section(
            FineTuneSection, dict(raw.get("fine_tune", {})), "fine_tune"
        ),
    )
    if cfg.num_levels < 2:
        raise ConfigError("num_levels must be >= 2")
    if not cfg.methods:
        raise ConfigError("methods must not be empty")
    for method in cfg.methods:
        parse_method(method)
    if len(set(cfg.methods)) != len(cfg.methods):
        raise ConfigError("duplicate methods")
    allowed_metrics = {"sari", "bleu", "fkgl", "delta_fkgl"}
    bad = set(cfg.metrics) - allowed_metrics
    if bad:
        raise ConfigError(f"unknown metrics: {sorted(bad)}")
    if not cfg.metrics:
        raise ConfigError("metrics must not be empty")

    d = cfg.data
    d.n_parallel = int(_positive(d.n_parallel, "data.n_parallel", int))
    d.n_pairs = int(_positive(d.n_pairs, "data.n_pairs", int))
    if not 0.0 <= float(d.noise_rate) <= 1.0:
        raise ConfigError("data.noise_rate must be in [0,1]")
    d.noise_rate = float(d.noise_rate)
    d.split = tuple(float(r) for r in d.split)
    if len(d.split) != 3 or any(r <= 0 for r in d.split):
        raise ConfigError("data.split needs three positive ratios")
    if abs(sum(d.split) - 1.0) > 1e-9:
        raise ConfigError("data.split must sum to 1")
    if not d.bleu_lo < d.bleu_hi:
        raise ConfigError("data.bleu_lo must be < data.bleu_hi")

    c = cfg.classifier
    c.learning_rate = _positive(c.learning_rate, "classifier.learning_rate")
    c.n_steps = int(_positive(c.n_steps, "classifier.n_steps", int))
    c.batch_size = int(_positive(c.batch_size, "classifier.batch_size", int))
    if c.log_floor >= 0:
        raise ConfigError("classifier.log_floor must be negative")

    g = cfg.generator
    g.d_model = int(_positive(g.d_model, "generator.d_model", int))
    g.learning_rate = _positive(g.learning_rate, "generator.learning_rate")
    g.n_steps = int(_positive(g.n_steps, "generator.n_steps", int))
    g.batch_size = int(_positive(g.batch_size, "generator.batch_size", int))
    g.max_len = int(_positive(g.max_len, "generator.max_len", int))
    g.clip_norm = _positive(g.clip_norm, "generator.clip_norm")

    f = cfg.fine_tune
    f.n_steps = int(_positive(f.n_steps, "fine_tune.n_steps", int))
    f.learning_rate = _positive(f.learning_rate, "fine_tune.learning_rate")
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as handle:
        raw = yaml.safe_load(handle)
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    return resolve_config(raw)


def dump_config(cfg: ExperimentConfig, path) -> None:
    """Echo the fully resolved config (deterministic key order)."""
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(cfg.to_dict(), handle, sort_keys=True)
