"""Durable on-disk state for the HTTP service.

Sessions are append-only: every edit writes a full snapshot named by its
revision, and a repair result is a sibling file named by the revision it was
computed at. Jobs live in their own directory keyed by job id. Writes go
through a temp file and os.replace, so readers never observe a partial
document and a crashed process leaves at worst an orphaned temp file.
"""

from __future__ import annotations

import os
import re
import uuid
from pathlib import Path
from typing import Any, Iterator, Optional

from . import wire

_REV_RE = re.compile(r"rev-(\d+)\.json\Z")


class Store:
    """Filesystem layout:

    root/sessions/{sid}/rev-{n}.json     session snapshot at revision n
    root/sessions/{sid}/repair-{n}.json  repair computed at revision n
    root/jobs/{jid}.json
    """

    def __init__(self, root: str | os.PathLike[str]):
        self.root = Path(root)
        (self.root / "sessions").mkdir(parents=True, exist_ok=True)
        (self.root / "jobs").mkdir(parents=True, exist_ok=True)

    def _write(self, path: Path, doc: dict[str, Any]) -> None:
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(wire.dumps(doc), encoding="utf-8")
        os.replace(tmp, path)

    def _read(self, path: Path) -> Optional[dict[str, Any]]:
        try:
            text = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            return None
        return wire.loads(text)

    # -- sessions --

    def new_session_id(self) -> str:
        return uuid.uuid4().hex[:12]

    def _session_dir(self, sid: str) -> Path:
        return self.root / "sessions" / sid

    def session_exists(self, sid: str) -> bool:
        return self._session_dir(sid).is_dir()

    def save_revision(self, doc: dict[str, Any]) -> None:
        d = self._session_dir(doc["id"])
        d.mkdir(parents=True, exist_ok=True)
        self._write(d / f"rev-{doc['revision']}.json", doc)

    def load_session(self, sid: str, revision: Optional[int] = None) -> Optional[dict[str, Any]]:
        """Latest snapshot, or the one at a specific revision."""
        d = self._session_dir(sid)
        if revision is not None:
            return self._read(d / f"rev-{revision}.json")
        best = -1
        if not d.is_dir():
            return None
        for name in os.listdir(d):
            m = _REV_RE.match(name)
            if m:
                best = max(best, int(m.group(1)))
        if best < 0:
            return None
        return self._read(d / f"rev-{best}.json")

    def save_repair(self, sid: str, revision: int, doc: dict[str, Any]) -> None:
        self._write(self._session_dir(sid) / f"repair-{revision}.json", doc)

    def load_repair(self, sid: str, revision: int) -> Optional[dict[str, Any]]:
        return self._read(self._session_dir(sid) / f"repair-{revision}.json")

    def delete_session(self, sid: str) -> None:
        d = self._session_dir(sid)
        if d.is_dir():
            for name in os.listdir(d):
                (d / name).unlink()
            d.rmdir()
        for doc in list(self.all_jobs()):
            if doc.get("session") == sid:
                (self.root / "jobs" / f"{doc['id']}.json").unlink(missing_ok=True)

    # -- jobs --

    def new_job_id(self) -> str:
        return uuid.uuid4().hex[:12]

    def save_job(self, doc: dict[str, Any]) -> None:
        self._write(self.root / "jobs" / f"{doc['id']}.json", doc)

    def load_job(self, jid: str) -> Optional[dict[str, Any]]:
        return self._read(self.root / "jobs" / f"{jid}.json")

    def all_jobs(self) -> Iterator[dict[str, Any]]:
        d = self.root / "jobs"
        for name in sorted(os.listdir(d)):
            if name.endswith(".json"):
                doc = self._read(d / name)
                if doc is not None:
                    yield doc
