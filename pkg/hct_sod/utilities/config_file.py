"""
Flat key=value config files and --set overrides
"""
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple

from pydantic import ValidationError

from hct_sod.errors import ConfigError
from hct_sod.models.config import ModelConfig, TrainConfig


def parse_config_text(text: str, source: str = "<text>") -> Dict[str, str]:
    """Parse `key = value` lines; '#' starts a comment, blank lines are skipped"""
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def parse_overrides(overrides: Iterable[str]) -> Dict[str, str]:
    """Parse repeated --set key=value arguments; later ones win"""
    values: Dict[str, str] = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = (part.strip() for part in item.split("=", 1))
        values[key] = value
    return values


def build_configs(
    values: Dict[str, str],
    model_base: Optional[ModelConfig] = None,
    train_base: Optional[TrainConfig] = None,
) -> Tuple[ModelConfig, TrainConfig]:
    """Route each key to ModelConfig or TrainConfig and validate; unknown keys are rejected"""
    model_base = model_base or ModelConfig.toy()
    train_base = train_base or TrainConfig.toy()

    model_fields = set(ModelConfig.model_fields)
    train_fields = set(TrainConfig.model_fields)
    unknown = sorted(k for k in values if k not in model_fields and k not in train_fields)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")

    model_values = model_base.model_dump()
    model_values.update({k: v for k, v in values.items() if k in model_fields})
    train_values = train_base.model_dump()
    train_values.update({k: v for k, v in values.items() if k in train_fields})

    try:
        return ModelConfig.model_validate(model_values), TrainConfig.model_validate(train_values)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ())) or "config"
        raise ConfigError(f"invalid config value for {where}: {first.get('msg')}") from e


def load_configs(path: Optional[Path] = None, overrides: Iterable[str] = ()) -> Tuple[ModelConfig, TrainConfig]:
    """Read an optional config file, apply overrides, return validated configs"""
    values: Dict[str, str] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from e
        values.update(parse_config_text(text, source=str(path)))
    values.update(parse_overrides(overrides))
    return build_configs(values)


def dump_config_text(model_cfg: ModelConfig, train_cfg: TrainConfig) -> str:
    """Inverse of load_configs for the given pair"""
    lines = []
    for cfg in (model_cfg, train_cfg):
        for key, value in cfg.model_dump(mode="json").items():
            if isinstance(value, bool):
                value = str(value).lower()
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
