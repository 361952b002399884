"""Run manifests: everything needed to reproduce a result file bit for bit."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field

from . import __version__

__all__ = ["RunManifest"]


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Snapshot of one command invocation and of the files it produced.

    Re-running the recorded command with the recorded config snapshot and
    seed reproduces the outputs byte for byte (the checksums let you verify
    that claim).
    """

    command: str
    options: dict
    config_snapshot: dict
    seed: int
    version: str = __version__
    wall_clock_s: float = 0.0
    outputs: list = field(default_factory=list)

    def add_output(self, path) -> None:
        self.outputs.append({"path": str(path), "sha256": _sha256(path)})

    def write(self, path) -> None:
        doc = {
            "command": self.command,
            "options": self.options,
            "config": self.config_snapshot,
            "seed": self.seed,
            "version": self.version,
            "wall_clock_s": round(self.wall_clock_s, 3),
            "outputs": self.outputs,
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


class Stopwatch:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        return False
