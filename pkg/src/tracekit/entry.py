"""
Benchmark entries: a workload card, its traces, the run scripts and (optionally)
the computed profile, tied together by a manifest of content hashes.

Scripts are hashed, never executed. Paths in the manifest are stored relative to
the manifest's directory so an entry can be moved as a whole.
"""

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from tracekit.errors import EntryError

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1
CHUNK_SIZE = 1 << 20


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(CHUNK_SIZE), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass(frozen=True)
class FileRecord:
    role: str
    path: str
    sha256: str


@dataclass(frozen=True)
class BenchmarkEntry:
    card: FileRecord
    traces: tuple[FileRecord, ...]
    scripts: tuple[FileRecord, ...]
    profile: FileRecord | None = None
    notes: dict = field(default_factory=dict)

    def records(self) -> list[FileRecord]:
        out = [self.card, *self.traces, *self.scripts]
        if self.profile is not None:
            out.append(self.profile)
        return out

    def to_dict(self) -> dict:
        def rec(r: FileRecord) -> dict:
            return {"path": r.path, "sha256": r.sha256}

        return {
            "version": MANIFEST_VERSION,
            "card": rec(self.card),
            "traces": [rec(r) for r in self.traces],
            "scripts": [rec(r) for r in self.scripts],
            "profile": None if self.profile is None else rec(self.profile),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "BenchmarkEntry":
        try:
            def rec(role: str, raw: dict) -> FileRecord:
                return FileRecord(role, raw["path"], raw["sha256"])

            return cls(
                card=rec("card", data["card"]),
                traces=tuple(rec("trace", r) for r in data["traces"]),
                scripts=tuple(rec("script", r) for r in data.get("scripts", [])),
                profile=None if data.get("profile") is None else rec("profile", data["profile"]),
            )
        except (KeyError, TypeError) as e:
            raise EntryError(f"malformed entry manifest: missing {e}") from e


def _record(role: str, path: str | Path, base: Path) -> FileRecord:
    path = Path(path)
    if not path.is_file():
        raise EntryError(f"{role} file {path} does not exist")
    rel = os.path.relpath(path.resolve(), base.resolve())
    return FileRecord(role, Path(rel).as_posix(), sha256_file(path))


def package_entry(
    card: str | Path,
    traces: list[str | Path],
    scripts: list[str | Path],
    profile: str | Path | None = None,
    manifest: str | Path = "entry.json",
) -> BenchmarkEntry:
    """
    Hash every referenced file and write the manifest.

    Raises:
        EntryError: A referenced file is missing, or no trace is given
    """
    if not traces:
        raise EntryError("a benchmark entry needs at least one trace")
    manifest = Path(manifest)
    base = manifest.parent
    entry = BenchmarkEntry(
        card=_record("card", card, base),
        traces=tuple(_record("trace", t, base) for t in traces),
        scripts=tuple(_record("script", s, base) for s in scripts),
        profile=None if profile is None else _record("profile", profile, base),
    )
    base.mkdir(parents=True, exist_ok=True)
    manifest.write_text(entry.to_json())
    logger.info("Packaged entry %s with %d trace(s), %d script(s)", manifest, len(entry.traces), len(entry.scripts))
    return entry


def verify_entry(manifest: str | Path) -> list[str]:
    """
    Re-check presence and hashes of everything a manifest references.

    Returns:
        Problems found, empty when the entry verifies

    Raises:
        EntryError: The manifest itself cannot be read
    """
    manifest = Path(manifest)
    try:
        data = json.loads(manifest.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise EntryError(f"cannot read manifest {manifest}: {e}") from e
    entry = BenchmarkEntry.from_dict(data)
    problems = []
    for record in entry.records():
        path = manifest.parent / record.path
        if not path.is_file():
            problems.append(f"{record.role} {record.path} is missing")
        elif sha256_file(path) != record.sha256:
            problems.append(f"{record.role} {record.path} changed since packaging")
    for problem in problems:
        logger.warning("Entry %s: %s", manifest, problem)
    return problems
