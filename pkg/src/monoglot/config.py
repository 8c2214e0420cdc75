"""Flat key=value run configuration shared by the CLI subcommands."""

from __future__ import annotations

import warnings

# key -> (type, default). Every module tunable reachable from the CLI.
KNOWN_KEYS = {
    "seed": (int, 1),
    "vocab_size": (int, 512),
    "layers": (int, 2),
    "heads": (int, 4),
    "model_dim": (int, 64),
    "ff_dim": (int, 128),
    "factor_dim": (int, 4),
    "max_positions": (int, 512),
    "dropout": (float, 0.1),
    "label_smoothing": (float, 0.1),
    "lr": (float, 2e-4),
    "lr_decay": (float, 0.7),
    "plateau_patience": (int, 8),
    "stop_patience": (int, 32),
    "checkpoint_interval": (int, 200),
    "word_budget": (int, 2048),
    "max_epochs": (int, 100),
    "grad_clip": (float, 1.0),
    "beam": (int, 5),
    "length_alpha": (float, 1.0),
    "max_len": (int, 100),
    "max_ratio": (float, 9.0),
    "balance_cap": (int, 3_000_000),
    "clf_embedding_dim": (int, 300),
    "clf_filters": (int, 256),
    "clf_dropout": (float, 0.5),
    "clf_lr": (float, 5e-4),
    "clf_max_epochs": (int, 20),
    "port": (int, 8000),
}

VALIDATORS = {
    "beam": lambda v: v >= 1,
    "lr": lambda v: v > 0,
    "word_budget": lambda v: v >= 1,
    "vocab_size": lambda v: v >= 1,
    "dropout": lambda v: 0 <= v < 1,
    "label_smoothing": lambda v: 0 <= v < 1,
}


class ConfigError(ValueError):
    pass


class RunConfig(dict):
    def __getattr__(self, key):
        try:
            return self[key]
        except KeyError:
            raise AttributeError(key)


def default_config():
    return RunConfig({k: d for k, (_t, d) in KNOWN_KEYS.items()})


def load_config(path):
    """Parse UTF-8 ``key = value`` lines; '#' starts a comment.

    Unknown keys and invalid values are errors naming key and line;
    duplicate keys warn and keep the last value.
    """
    cfg = default_config()
    seen = set()
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in KNOWN_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in seen:
                warnings.warn(f"{path}:{lineno}: duplicate key {key!r}, last value wins")
            seen.add(key)
            cfg[key] = parse_value(key, value, f"{path}:{lineno}")
    return cfg


def parse_value(key, value, where="<arg>"):
    typ, _default = KNOWN_KEYS[key]
    try:
        parsed = typ(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: bad value {value!r} for key {key!r} ({typ.__name__})")
    check = VALIDATORS.get(key)
    if check and not check(parsed):
        raise ConfigError(f"{where}: value {parsed!r} out of range for key {key!r}")
    return parsed
