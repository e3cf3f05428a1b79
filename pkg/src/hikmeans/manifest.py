"""Run manifests: enough metadata next to every output to reproduce it."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .core import atomic_write_text, sha256_file


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None
    inputs: dict[str, str] = field(default_factory=dict)  # path -> sha256
    outputs: list[str] = field(default_factory=list)
    wall_time_s: float = 0.0
    version: str = __version__

    def add_input(self, path: str | Path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def write(self, output_path: str | Path) -> Path:
        """Write <output>.manifest.json atomically and return its path."""
        target = manifest_path_for(output_path)
        atomic_write_text(target, json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return target


def manifest_path_for(output_path: str | Path) -> Path:
    p = Path(output_path)
    return p.with_name(p.name + ".manifest.json")
