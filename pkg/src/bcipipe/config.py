"""Pipeline configuration: defaults, validation, and the config file format.

The config file is a flat key-value text format with dotted section prefixes
(`clean.band_power_min = -5.0`). Values are strings, booleans, integers,
floats, or string arrays. Writing then reading a config reproduces it exactly
(floats are emitted in shortest round-trip form). The full key list is
documented in docs/formats.md.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .clean import CleanRules
from .core import Schema
from .errors import ConfigError

CV_MODES = ("loso", "kfold")


@dataclass(frozen=True)
class FeatureSettings:
    window_rows: int = 10
    window_overlap_rows: int = 0
    include_std: bool = False


@dataclass(frozen=True)
class TmvSettings:
    block_windows: int = 20


@dataclass(frozen=True)
class CvSettings:
    mode: str = "loso"
    k: int = 5


@dataclass(frozen=True)
class KnnParams:
    k: int = 5


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 0  # 0 = unbounded
    min_samples_split: int = 2


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_features: int = 0  # 0 = ceil(sqrt(D)), resolved at train time
    bootstrap: bool = True


@dataclass(frozen=True)
class LinearParams:
    learning_rate: float = 0.1
    epochs: int = 200
    l2: float = 1e-4


@dataclass(frozen=True)
class SvmParams:
    c: float = 1.0
    gamma: float = 0.0  # 0 = 1/D, resolved at train time
    tol: float = 1e-3
    max_passes: int = 5


@dataclass(frozen=True)
class PipelineConfig:
    master_seed: int = 42
    threads: int = 1
    schema: Schema = field(default_factory=Schema)
    features: FeatureSettings = field(default_factory=FeatureSettings)
    tmv: TmvSettings = field(default_factory=TmvSettings)
    clean: CleanRules = field(default_factory=CleanRules)
    cv: CvSettings = field(default_factory=CvSettings)
    knn: KnnParams = field(default_factory=KnnParams)
    tree: TreeParams = field(default_factory=TreeParams)
    forest: ForestParams = field(default_factory=ForestParams)
    linear: LinearParams = field(default_factory=LinearParams)
    svm: SvmParams = field(default_factory=SvmParams)


def config_violations(config: PipelineConfig) -> list[str]:
    """All invariant violations, each naming the offending field. Never stops early."""
    v: list[str] = []
    if config.threads < 1:
        v.append("threads: must be >= 1")
    if config.features.window_rows < 1:
        v.append("features.window_rows: must be >= 1")
    if config.features.window_overlap_rows < 0:
        v.append("features.window_overlap_rows: must be >= 0")
    elif config.features.window_overlap_rows >= config.features.window_rows:
        v.append("features.window_overlap_rows: must be < features.window_rows")
    if config.tmv.block_windows < 1:
        v.append("tmv.block_windows: must be >= 1")
    v.extend(config.clean.validate())
    if config.cv.mode not in CV_MODES:
        v.append(f"cv.mode: must be one of {CV_MODES}")
    if config.cv.mode == "kfold" and config.cv.k < 2:
        v.append("cv.k: must be >= 2")
    if config.knn.k < 1:
        v.append("models.knn.k: must be >= 1")
    if config.tree.max_depth < 0:
        v.append("models.tree.max_depth: must be >= 0 (0 = unbounded)")
    if config.tree.min_samples_split < 2:
        v.append("models.tree.min_samples_split: must be >= 2")
    if config.forest.n_trees < 1:
        v.append("models.forest.n_trees: must be >= 1")
    if config.forest.max_features < 0:
        v.append("models.forest.max_features: must be >= 0 (0 = auto)")
    if config.linear.learning_rate <= 0:
        v.append("models.linear.learning_rate: must be > 0")
    if config.linear.epochs < 1:
        v.append("models.linear.epochs: must be >= 1")
    if config.linear.l2 < 0:
        v.append("models.linear.l2: must be >= 0")
    if config.svm.c <= 0:
        v.append("models.svm.c: must be > 0")
    if config.svm.gamma < 0:
        v.append("models.svm.gamma: must be >= 0 (0 = auto)")
    if config.svm.tol <= 0:
        v.append("models.svm.tol: must be > 0")
    if config.svm.max_passes < 1:
        v.append("models.svm.max_passes: must be >= 1")
    try:
        Schema(
            electrodes=config.schema.electrodes,
            bands=config.schema.bands,
            sample_rate_hz=config.schema.sample_rate_hz,
            headband_on_column=config.schema.headband_on_column,
            hsi_columns=config.schema.hsi_columns,
        )
    except ValueError as e:
        v.append(f"schema: {e}")
    return v


def validate_config(config: PipelineConfig):
    """Return the config unchanged if every invariant holds, else the violation list."""
    violations = config_violations(config)
    return config if not violations else violations


# --- file form ---------------------------------------------------------------

_SECTIONS: tuple[tuple[str, str], ...] = (
    ("clean", "clean"),
    ("cv", "cv"),
    ("features", "features"),
    ("models.forest", "forest"),
    ("models.knn", "knn"),
    ("models.linear", "linear"),
    ("models.svm", "svm"),
    ("models.tree", "tree"),
    ("schema", "schema"),
    ("tmv", "tmv"),
)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(json.dumps(str(x)) for x in value) + "]"
    raise ConfigError(f"cannot serialize config value {value!r}")


def _parse_value(text: str, key: str):
    text = text.strip()
    if text == "true":
        return True
    if text == "false":
        return False
    if text.startswith('"'):
        try:
            return json.loads(text)
        except json.JSONDecodeError:
            raise ConfigError(f"{key}: bad string literal {text}")
    if text.startswith("["):
        try:
            parsed = json.loads(text)
        except json.JSONDecodeError:
            raise ConfigError(f"{key}: bad array literal {text}")
        if not all(isinstance(x, str) for x in parsed):
            raise ConfigError(f"{key}: arrays may only hold strings")
        return tuple(parsed)
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse value {text!r}")


def config_to_dict(config: PipelineConfig) -> dict[str, object]:
    """Flatten to the documented dotted key set. Schema quality columns are
    not part of the file form; they are inferred from recording headers."""
    out: dict[str, object] = {
        "master_seed": config.master_seed,
        "threads": config.threads,
    }
    section_objs = {
        "clean": config.clean,
        "cv": config.cv,
        "features": config.features,
        "forest": config.forest,
        "knn": config.knn,
        "linear": config.linear,
        "svm": config.svm,
        "tree": config.tree,
        "tmv": config.tmv,
    }
    for prefix, attr in _SECTIONS:
        if attr == "schema":
            out["schema.electrodes"] = config.schema.electrodes
            out["schema.bands"] = config.schema.bands
            out["schema.sample_rate_hz"] = config.schema.sample_rate_hz
            continue
        obj = section_objs[attr]
        for f in fields(obj):
            out[f"{prefix}.{f.name}"] = getattr(obj, f.name)
    return out


def config_to_text(config: PipelineConfig) -> str:
    lines = [f"{k} = {_format_value(v)}" for k, v in sorted(config_to_dict(config).items())]
    return "\n".join(lines) + "\n"


def config_from_dict(entries: dict[str, object], base: PipelineConfig | None = None) -> PipelineConfig:
    config = base if base is not None else PipelineConfig()
    known = config_to_dict(PipelineConfig())
    schema_kw: dict[str, object] = {}
    updates: dict[str, dict[str, object]] = {}
    top: dict[str, object] = {}
    for key, value in entries.items():
        if key not in known:
            raise ConfigError(f"unknown config key: {key}")
        expected = known[key]
        if isinstance(expected, bool) != isinstance(value, bool) or not isinstance(
            value, type(expected) if not isinstance(expected, float) else (int, float)
        ):
            raise ConfigError(
                f"{key}: expected {type(expected).__name__}, got {type(value).__name__}"
            )
        if isinstance(expected, float):
            value = float(value)
        if key in ("master_seed", "threads"):
            top[key] = value
        elif key.startswith("schema."):
            schema_kw[key.split(".", 1)[1]] = value
        else:
            prefix, name = key.rsplit(".", 1)
            attr = prefix.split(".")[-1]
            updates.setdefault(attr, {})[name] = value
    if schema_kw:
        updates_schema = replace(config.schema, **schema_kw)
    else:
        updates_schema = config.schema
    kwargs: dict[str, object] = dict(top)
    kwargs["schema"] = updates_schema
    for attr, kv in updates.items():
        kwargs[attr] = replace(getattr(config, attr), **kv)
    return replace(config, **kwargs)


def parse_config_text(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    entries: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value_text = line.split("=", 1)
        key = key.strip()
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key}")
        entries[key] = _parse_value(value_text, key)
    return config_from_dict(entries, base=base)


def load_config(path: str | Path, base: PipelineConfig | None = None) -> PipelineConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"), base=base)


def save_config(config: PipelineConfig, path: str | Path) -> None:
    Path(path).write_text(config_to_text(config), encoding="utf-8")
