"""Embedded document store: one JSON file per patient under a content root.

Stands in for a networked NoSQL store at desk scale.  Writes are atomic
(temp file + rename) and serialized per patient id; reads are lock-free so
any number of request-handling workers can share one handle.
"""

from __future__ import annotations

import errno
import json
import logging
import os
import tempfile
import threading
from collections import defaultdict
from pathlib import Path
from typing import Callable, Optional, Union

from sepserve.records.types import ClinicalDocument

logger = logging.getLogger(__name__)


class StoreError(Exception):
    pass


class NotFoundError(StoreError):
    def __init__(self, patient_id: str):
        self.patient_id = patient_id
        super().__init__(f"no document for patient {patient_id!r}")


class StorageFullError(StoreError):
    pass


class SerializationFailureError(StoreError):
    pass


class DocumentStore:
    """Filesystem-backed store with an in-memory index rebuilt on open."""

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._index: dict[str, Path] = {}
        self._locks: defaultdict[str, threading.Lock] = defaultdict(threading.Lock)
        self._locks_guard = threading.Lock()
        self._rebuild_index()

    def _rebuild_index(self) -> None:
        self._index = {p.stem: p for p in sorted(self.root.glob("*.json"))}

    def _lock_for(self, patient_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks[patient_id]

    def put(self, doc: ClinicalDocument) -> None:
        """Store or atomically replace the document for doc.patient_id."""
        try:
            payload = doc.to_json_bytes()
        except (TypeError, ValueError) as exc:
            raise SerializationFailureError(str(exc)) from exc

        target = self.root / f"{doc.patient_id}.json"
        with self._lock_for(doc.patient_id):
            try:
                fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
                try:
                    with os.fdopen(fd, "wb") as fh:
                        fh.write(payload)
                        fh.flush()
                        os.fsync(fh.fileno())
                    os.replace(tmp, target)
                finally:
                    if os.path.exists(tmp):
                        os.unlink(tmp)
            except OSError as exc:
                if exc.errno == errno.ENOSPC:
                    raise StorageFullError(str(exc)) from exc
                raise
            self._index[doc.patient_id] = target

    def get_raw(self, patient_id: str) -> bytes:
        path = self._index.get(patient_id)
        if path is None or not path.exists():
            raise NotFoundError(patient_id)
        return path.read_bytes()

    def get(self, patient_id: str) -> ClinicalDocument:
        return ClinicalDocument.from_json_bytes(self.get_raw(patient_id))

    def list_patients(
        self, predicate: Optional[Callable[[dict], bool]] = None
    ) -> list[str]:
        """Sorted patient ids, optionally filtered by a demographics predicate."""
        ids = sorted(self._index)
        if predicate is None:
            return ids
        matched = []
        for pid in ids:
            try:
                demo = json.loads(self.get_raw(pid))["demographics"]
            except (NotFoundError, KeyError, json.JSONDecodeError):
                continue
            if predicate(demo):
                matched.append(pid)
        return matched

    def __contains__(self, patient_id: str) -> bool:
        return patient_id in self._index

    def __len__(self) -> int:
        return len(self._index)

    def content_digest(self) -> str:
        """Order-independent digest of store contents (ids + bytes)."""
        import hashlib

        h = hashlib.sha256()
        for pid in sorted(self._index):
            h.update(pid.encode())
            h.update(self.get_raw(pid))
        return h.hexdigest()

    def close(self) -> None:
        """Documents are durable on put; nothing buffered to flush."""
