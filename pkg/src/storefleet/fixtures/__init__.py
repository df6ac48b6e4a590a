"""Bundled example instances: ``fleet.json``, ``signal.csv`` and ``golden.json`` per directory."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

NAMES = ("example1", "example-cc", "example-cc2", "theorem5-fleet")


def fixture_dir(name: str) -> Path:
    if name not in NAMES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(NAMES)}")
    return Path(str(resources.files(__name__) / name))
