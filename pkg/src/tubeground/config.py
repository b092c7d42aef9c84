"""Pipeline configuration: a small versioned TOML file with one section per
stage.  Unknown keys are rejected so typos fail loudly instead of silently
falling back to defaults."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError, ConfigVersionError, MalformedInputError
from .losses import LossWeights
from .postprocess import PostprocessConfig
from .scene_split import DEFAULT_MIN_CLIP_LEN, DEFAULT_THRESHOLD
from .tracker import TrackerConfig

CONFIG_VERSION = "1"


@dataclass(frozen=True)
class SceneSplitConfig:
    threshold: float = DEFAULT_THRESHOLD
    min_clip_len: int = DEFAULT_MIN_CLIP_LEN

    def __post_init__(self) -> None:
        if self.threshold <= 0:
            raise ConfigError(f"scene_split.threshold must be > 0, got {self.threshold}")
        if self.min_clip_len < 1:
            raise ConfigError(
                f"scene_split.min_clip_len must be >= 1, got {self.min_clip_len}"
            )


@dataclass(frozen=True)
class PipelineConfig:
    scene_split: SceneSplitConfig = field(default_factory=SceneSplitConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    postprocess: PostprocessConfig = field(default_factory=PostprocessConfig)
    loss: LossWeights = field(default_factory=LossWeights)


def _build_section(cls, section: str, data: dict, skip: tuple[str, ...] = ()):
    allowed = {f.name for f in fields(cls)} - set(skip)
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}"
        )
    for key, value in data.items():
        ftype = cls.__dataclass_fields__[key].type
        if ftype == "bool":
            if not isinstance(value, bool):
                raise ConfigError(f"[{section}] {key}: expected a boolean, got {value!r}")
        elif isinstance(value, bool):
            raise ConfigError(f"[{section}] {key}: expected a number, got a boolean")
        elif ftype == "int":
            if not isinstance(value, int):
                raise ConfigError(f"[{section}] {key}: expected an integer, got {value!r}")
        elif not isinstance(value, (int, float)):
            raise ConfigError(f"[{section}] {key}: expected a number, got {value!r}")
    try:
        return cls(**data)
    except (MalformedInputError, ConfigError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from exc


def config_from_dict(doc: dict, where: str = "config") -> PipelineConfig:
    known_sections = {"version", "scene_split", "tracker", "postprocess", "loss"}
    unknown = set(doc) - known_sections
    if unknown:
        raise ConfigError(f"{where}: unknown section(s): {', '.join(sorted(unknown))}")
    version = doc.get("version")
    if version != CONFIG_VERSION:
        raise ConfigVersionError(
            f"{where}: version is {version!r}, this tool supports {CONFIG_VERSION!r}"
        )
    for name in known_sections - {"version"}:
        if name in doc and not isinstance(doc[name], dict):
            raise ConfigError(f"{where}: [{name}] must be a table")
    return PipelineConfig(
        scene_split=_build_section(
            SceneSplitConfig, "scene_split", doc.get("scene_split", {})
        ),
        tracker=_build_section(
            TrackerConfig, "tracker", doc.get("tracker", {}), skip=("kalman",)
        ),
        postprocess=_build_section(
            PostprocessConfig, "postprocess", doc.get("postprocess", {})
        ),
        loss=_build_section(LossWeights, "loss", doc.get("loss", {})),
    )


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc})") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: not valid TOML ({exc})") from exc
    return config_from_dict(doc, where=str(path))


def load_weights(path: str | Path) -> LossWeights:
    """Standalone weights file: top-level lambda1..4, focal_gamma, focal_alpha."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read weights ({exc})") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: not valid TOML ({exc})") from exc
    return _build_section(LossWeights, "weights", doc)


def default_config_toml() -> str:
    """The default configuration, rendered as a commented TOML document."""
    cfg = PipelineConfig()
    lines = [f'version = "{CONFIG_VERSION}"', ""]
    for section, obj, skip in (
        ("scene_split", cfg.scene_split, ()),
        ("tracker", cfg.tracker, ("kalman",)),
        ("postprocess", cfg.postprocess, ()),
        ("loss", cfg.loss, ()),
    ):
        lines.append(f"[{section}]")
        for f in dataclasses.fields(obj):
            if f.name in skip:
                continue
            value = getattr(obj, f.name)
            rendered = "true" if value is True else "false" if value is False else value
            lines.append(f"{f.name} = {rendered}")
        lines.append("")
    return "\n".join(lines)
