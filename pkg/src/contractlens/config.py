"""Pipeline configuration: sectioned key = value text files.

Unknown sections or keys are rejected, and every referenced file must exist
at load time. The training config file uses the same reader.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .ast_features import DEFAULT_ROLE_PAIRS
from .errors import ConfigError
from .fusion import DEFAULT_CLONE_THRESHOLD, DEFAULT_GAMMA
from .trainer import TrainConfig

_KNOWN = {
    "embedding": {"dim", "comment_dim", "seed"},
    "similarity": {"gamma", "clone_threshold"},
    "verify": {"decision_threshold"},
    "ast": {"role_pairs"},
    "comments": {"stopwords"},
    "train": {"config"},
}


@dataclass
class PipelineConfig:
    embedding_dim: int = 128
    comment_dim: int = 128
    embedding_seed: int = 42
    gamma: float = DEFAULT_GAMMA
    clone_threshold: float = DEFAULT_CLONE_THRESHOLD
    decision_threshold: float = 0.95
    role_pairs: list[tuple[str, str]] = field(
        default_factory=lambda: list(DEFAULT_ROLE_PAIRS))
    stopwords_path: Path | None = None     # None -> packaged list
    train_config_path: Path | None = None


def _parse_role_pairs(text: str) -> list[tuple[str, str]]:
    pairs = []
    for chunk in text.replace("\n", ",").split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "->" not in chunk:
            raise ConfigError(f"role pair {chunk!r} must look like Parent->Child")
        parent, _, child = chunk.partition("->")
        pairs.append((parent.strip(), child.strip()))
    if not pairs:
        raise ConfigError("ast.role_pairs is empty")
    return pairs


def _read_sections(path: Path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}")
    return parser


def load_config(path: str | Path | None = None) -> PipelineConfig:
    """Defaults when no path is given; strict validation otherwise."""
    config = PipelineConfig()
    if path is None:
        return config
    path = Path(path)
    parser = _read_sections(path)

    for section in parser.sections():
        if section not in _KNOWN:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _KNOWN[section]:
                raise ConfigError(f"unknown config key {section}.{key}")

    def get(section, key, cast, default):
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            try:
                return cast(raw)
            except ValueError:
                raise ConfigError(f"{section}.{key}: cannot parse {raw!r}")
        return default

    config.embedding_dim = get("embedding", "dim", int, config.embedding_dim)
    config.comment_dim = get("embedding", "comment_dim", int, config.comment_dim)
    config.embedding_seed = get("embedding", "seed", int, config.embedding_seed)
    config.gamma = get("similarity", "gamma", float, config.gamma)
    config.clone_threshold = get("similarity", "clone_threshold", float,
                                 config.clone_threshold)
    config.decision_threshold = get("verify", "decision_threshold", float,
                                    config.decision_threshold)
    if parser.has_option("ast", "role_pairs"):
        config.role_pairs = _parse_role_pairs(parser.get("ast", "role_pairs"))

    base = path.parent
    if parser.has_option("comments", "stopwords"):
        sw = base / parser.get("comments", "stopwords")
        if not sw.exists():
            raise ConfigError(f"stopword file does not exist: {sw}")
        config.stopwords_path = sw
    if parser.has_option("train", "config"):
        tc = base / parser.get("train", "config")
        if not tc.exists():
            raise ConfigError(f"train config does not exist: {tc}")
        config.train_config_path = tc

    if config.gamma <= 0:
        raise ConfigError("similarity.gamma must be positive")
    if not 0 < config.clone_threshold <= 1:
        raise ConfigError("similarity.clone_threshold must be in (0, 1]")
    if config.embedding_dim < 16:
        raise ConfigError("embedding.dim must be >= 16")
    return config


_TRAIN_KEYS = {
    "lr": float, "epochs": int, "dropout_p": float, "split": float,
    "decision_threshold": float, "seed": int, "smote_k": int,
    "balance": lambda s: s.lower() in ("1", "true", "yes"),
    "augment": lambda s: s.lower() in ("1", "true", "yes"),
    "augment_sigma": float, "clf_hidden": int, "encoder_lr": float,
}


def load_train_config(path: str | Path | None = None, **overrides) -> TrainConfig:
    """Training hyperparameters from a [train] section; same file format."""
    kwargs = {}
    if path is not None:
        parser = _read_sections(Path(path))
        for section in parser.sections():
            if section != "train":
                raise ConfigError(f"unknown section [{section}] in train config")
            for key in parser[section]:
                if key not in _TRAIN_KEYS:
                    raise ConfigError(f"unknown train config key {key}")
                raw = parser.get(section, key)
                try:
                    kwargs[key] = _TRAIN_KEYS[key](raw)
                except ValueError:
                    raise ConfigError(f"train.{key}: cannot parse {raw!r}")
    kwargs.update(overrides)
    try:
        return TrainConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc))
