"""INI config files: sections mirror module configs; CLI flags always win."""

from __future__ import annotations

import configparser
from pathlib import Path
from typing import Callable, TypeVar

from .errors import ConfigError

T = TypeVar("T")


def load_config(path: str | Path | None) -> dict[str, dict[str, str]]:
    if path is None:
        return {}
    parser = configparser.ConfigParser()
    read = parser.read(Path(path), encoding="utf-8")
    if not read:
        raise ConfigError(f"config file {path} not found or unreadable")
    return {section: dict(parser.items(section)) for section in parser.sections()}


def config_value(
    cfg: dict[str, dict[str, str]],
    section: str,
    key: str,
    fallback: T,
    cast: Callable[[str], T] | None = None,
) -> T:
    raw = cfg.get(section, {}).get(key)
    if raw is None:
        return fallback
    if cast is None:
        return raw  # type: ignore[return-value]
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value [{section}] {key} = {raw!r}: {exc}") from exc


def parse_int_pair(raw: str) -> tuple[int, int]:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"expected 'lo,hi', got {raw!r}")
    return int(parts[0]), int(parts[1])


def parse_fractions(raw: str) -> list[float]:
    try:
        return [float(p) for p in raw.split(",") if p.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad fractions list {raw!r}: {exc}") from exc
