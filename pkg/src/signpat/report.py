"""Plain-text reports and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    if isinstance(v, Fraction):
        return str(v)
    return str(v)


def format_record(rec: dict) -> str:
    """One ``key=value`` per line, in insertion order."""
    return "".join(f"{k}={_fmt(v)}\n" for k, v in rec.items())


def format_records(recs: list[dict]) -> str:
    return "\n".join(format_record(r) for r in recs)


def parse_record(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if line.strip():
            k, _, v = line.partition("=")
            out[k] = v
    return out


def append_csv(path: str | Path, recs: list[dict]) -> None:
    path = Path(path)
    fresh = not path.exists() or path.stat().st_size == 0
    keys = list(recs[0])
    with path.open("a", newline="") as fh:
        w = csv.writer(fh)
        if fresh:
            w.writerow(keys)
        for r in recs:
            w.writerow([_fmt(r.get(k, "")) for k in keys])


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    subcommand: str
    argv: list[str]
    seed: int | None
    version: str
    threads: int
    inputs: dict[str, str] = field(default_factory=dict)  # path -> sha256
    outputs: dict[str, str] = field(default_factory=dict)  # flag -> path
    output_digests: dict[str, str] = field(default_factory=dict)  # path -> sha256

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    def save(self, out_path: str | Path) -> Path:
        p = Path(str(out_path) + ".manifest")
        p.write_text(self.to_json())
        return p

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        return cls.from_json(Path(path).read_text())
