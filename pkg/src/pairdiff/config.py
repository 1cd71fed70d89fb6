"""Configuration files: flat ``key=value`` lines with dotted paths, or a JSON object."""

from __future__ import annotations

import json
import re
from typing import Any

from .errors import ConfigError

_INT = re.compile(r"^[+-]?\d+$")
_FLOAT = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def parse_scalar(text: str) -> Any:
    t = text.strip()
    low = t.lower()
    if low in ("true", "false"):
        return low == "true"
    if _INT.match(t):
        return int(t)
    if _FLOAT.match(t) or low in ("inf", "+inf", "-inf", "nan"):
        return float(t)
    if len(t) >= 2 and t[0] == t[-1] and t[0] in "'\"":
        return t[1:-1]
    return t


def parse_value(text: str) -> Any:
    """Scalars, comma lists (``1,2,3``) or inline JSON (``[...]`` / ``{...}``)."""
    t = text.strip()
    if t[:1] in "[{":
        return json.loads(t)
    if "," in t:
        return [parse_scalar(p) for p in t.split(",") if p.strip()]
    return parse_scalar(t)


def _assign(root: dict, dotted: str, value: Any, lineno: int) -> None:
    keys = dotted.split(".")
    node = root
    for k in keys[:-1]:
        nxt = node.setdefault(k, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"line {lineno}: {dotted!r} conflicts with an earlier scalar key")
        node = nxt
    if keys[-1] in node and isinstance(node[keys[-1]], dict):
        raise ConfigError(f"line {lineno}: {dotted!r} conflicts with an earlier section")
    node[keys[-1]] = value


def parse_config(text: str) -> dict:
    """Parse config text into a nested dict.  Errors carry 1-based line numbers."""
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(data, dict):
            raise ConfigError("line 1: JSON config must be an object")
        return data
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if not key or not re.match(r"^[A-Za-z_][\w.]*$", key) or ".." in key or key.endswith("."):
            raise ConfigError(f"line {lineno}: invalid key {key!r}")
        if not val.strip():
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        try:
            _assign(out, key, parse_value(val), lineno)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {lineno}: invalid inline JSON for {key!r}") from exc
    return out


def require(cfg: dict, *keys: str) -> list:
    """Fetch dotted keys, raising ConfigError that names the first missing one."""
    vals = []
    for key in keys:
        node: Any = cfg
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"missing required key {key!r}")
            node = node[part]
        vals.append(node)
    return vals


def get(cfg: dict, key: str, default: Any = None) -> Any:
    node: Any = cfg
    for part in key.split("."):
        if not isinstance(node, dict) or part not in node:
            return default
        node = node[part]
    return node
