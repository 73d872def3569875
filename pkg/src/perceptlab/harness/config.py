"""Flat ``key = value`` experiment configuration files.

Lines are ``key = value``; ``#`` starts a comment; keys use dotted section
prefixes such as ``sto.num_samples``. Values stay strings until a typed
accessor reads them, so unknown keys can be reported precisely.
"""

from __future__ import annotations

import builtins
import os
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError


def parse_config(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or any(c.isspace() for c in key):
            raise ConfigurationError(f"{source}:{lineno}: bad key {key!r}")
        if key in out:
            raise ConfigurationError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_config(path: str | os.PathLike) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from None
    return parse_config(text, str(path))


def dump_config(values: dict[str, str]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in values.items())


class ConfigReader:
    """Typed, prefix-aware view of a parsed config that remembers which keys were read."""

    def __init__(self, values: dict[str, str], base_dir: str | os.PathLike = "."):
        self.values = dict(values)
        self.base_dir = Path(base_dir)
        self.used: set[str] = set()

    def has(self, key: str) -> bool:
        return key in self.values

    def raw(self, key: str, default: str | None = None) -> str | None:
        self.used.add(key)
        return self.values.get(key, default)

    def _convert(self, key, fn, default, kind):
        text = self.raw(key)
        if text is None:
            return default
        try:
            return fn(text)
        except (TypeError, ValueError):
            raise ConfigurationError(f"{key}: expected {kind}, got {text!r}") from None

    def str(self, key: str, default: str | None = None) -> str | None:
        return self._convert(key, str, default, "text")

    def int(self, key: str, default: int | None = None) -> int | None:
        return self._convert(key, int, default, "an integer")

    def float(self, key: str, default: float | None = None) -> float | None:
        return self._convert(key, float, default, "a number")

    def bool(self, key: str, default: bool | None = None) -> bool | None:
        def conv(t):
            t = t.lower()
            if t in ("true", "yes", "1", "on"):
                return True
            if t in ("false", "no", "0", "off"):
                return False
            raise ValueError(t)

        return self._convert(key, conv, default, "true/false")

    def list(self, key: str, default: list | None = None, item=builtins.str) -> list | None:
        return self._convert(key, lambda t: [item(p.strip()) for p in t.split(",") if p.strip()], default,
                             "a comma-separated list")

    def path(self, key: str, default: str | None = None) -> Path | None:
        text = self.str(key, default)
        if text is None or text == "":
            return None
        p = Path(text)
        return p if p.is_absolute() else self.base_dir / p

    def section(self, prefix: str) -> dict[str, str]:
        p = prefix + "."
        keys = [k for k in self.values if k.startswith(p)]
        self.used.update(keys)
        return {k: self.values[k] for k in keys}

    def unused(self) -> list[str]:
        return sorted(set(self.values) - self.used)


def write_controls(path: str | os.PathLike, controls, meta: dict[str, str]) -> Path:
    """Save a control sequence in the config format (``u.<i> = q0,q1,...``)."""
    controls = np.asarray(controls, dtype=np.float64)
    lines = dict(meta)
    lines["steps"] = str(len(controls))
    lines["dof"] = str(controls.shape[1] if controls.ndim == 2 else 0)
    for i, u in enumerate(controls):
        lines[f"u.{i}"] = ",".join(repr(float(v)) for v in u)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_config(lines))
    return path


def read_controls(path: str | os.PathLike) -> tuple[np.ndarray, dict[str, str]]:
    values = load_config(path)
    try:
        steps = int(values.get("steps", "0"))
        dof = int(values.get("dof", "0"))
        rows = [[float(v) for v in values[f"u.{i}"].split(",")] for i in range(steps)]
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"{path}: malformed control sequence ({exc})") from None
    arr = np.array(rows, dtype=np.float64).reshape(steps, dof)
    meta = {k: v for k, v in values.items() if not k.startswith("u.") and k not in ("steps", "dof")}
    return arr, meta
