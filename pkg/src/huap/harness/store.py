"""Directory-backed object store for the cloud role.

Layout under the root directory::

    objects/<object_id>.json   one StoredObject, wire blobs in base64
    pending/<object_id>.json   message parts parked until a policy arrives
    owners/<owner_id>.json     public params + re-encryption key per owner

Every write goes to a temp file in the same directory and is moved into
place with ``os.replace``, so readers see either the old or the new file.
"""

from __future__ import annotations

import base64
import json
import os
import re
import tempfile
from pathlib import Path
from typing import Dict, List, Tuple, Union

from .. import wire
from ..lifecycle import LifecycleError, PendingPart, StoredObject, UnknownObject
from ..scheme import DataPublicParams, MessageCiphertext, ReencKey

_ID = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]{0,127}$")


def check_id(value: str) -> str:
    if not isinstance(value, str) or not _ID.match(value):
        raise ValueError(f"invalid identifier {value!r} (letters, digits, '.', '_', '-')")
    return value


def atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


class DirectoryStore:
    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        for sub in ("objects", "pending", "owners"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self._cache: Dict[str, StoredObject] = {}

    def _path(self, kind: str, ident: str) -> Path:
        return self.root / kind / f"{check_id(ident)}.json"

    def _write_json(self, path: Path, doc) -> None:
        atomic_write(path, json.dumps(doc, indent=1, sort_keys=True).encode("utf-8"))

    # objects

    def get(self, object_id: str) -> StoredObject:
        if object_id in self._cache:
            return self._cache[object_id]
        path = self._path("objects", object_id)
        try:
            doc = json.loads(path.read_text("utf-8"))
        except FileNotFoundError:
            raise UnknownObject(f"no object {object_id!r}") from None
        obj = StoredObject.from_dict(doc)
        self._cache[object_id] = obj
        return obj

    def put(self, obj: StoredObject) -> None:
        path = self._path("objects", obj.object_id)
        if path.exists():
            on_disk = json.loads(path.read_text("utf-8"))["current_epoch"]
            if obj.current_epoch < on_disk:
                raise LifecycleError(
                    f"refusing to move {obj.object_id!r} back from epoch {on_disk} to {obj.current_epoch}"
                )
        self._write_json(path, obj.to_dict())
        self._cache[obj.object_id] = obj

    def ids(self) -> List[str]:
        return sorted(p.stem for p in (self.root / "objects").glob("*.json"))

    # parked message parts

    def add_pending(self, object_id: str, part: PendingPart) -> None:
        path = self._path("pending", object_id)
        doc = json.loads(path.read_text("utf-8")) if path.exists() else []
        doc.append({"owner_id": part.owner_id, "message": _b64(wire.encode(part.message)),
                    "payload": _b64(part.payload)})
        self._write_json(path, doc)

    def take_pending(self, object_id: str) -> List[PendingPart]:
        path = self._path("pending", object_id)
        if not path.exists():
            return []
        doc = json.loads(path.read_text("utf-8"))
        path.unlink()
        return [
            PendingPart(d["owner_id"],
                        wire.decode(base64.b64decode(d["message"]), expect=MessageCiphertext, verify=False),
                        base64.b64decode(d["payload"]))
            for d in doc
        ]

    def pending_count(self, object_id: str) -> int:
        path = self._path("pending", object_id)
        return len(json.loads(path.read_text("utf-8"))) if path.exists() else 0

    # owners

    def save_owner(self, owner_id: str, pp: DataPublicParams, rk: ReencKey) -> None:
        self._write_json(self._path("owners", owner_id),
                         {"pp": _b64(wire.encode(pp)), "rk": _b64(wire.encode(rk))})

    def load_owners(self) -> Dict[str, Tuple[DataPublicParams, ReencKey]]:
        out = {}
        for path in sorted((self.root / "owners").glob("*.json")):
            doc = json.loads(path.read_text("utf-8"))
            out[path.stem] = (
                wire.decode(base64.b64decode(doc["pp"]), expect=DataPublicParams),
                wire.decode(base64.b64decode(doc["rk"]), expect=ReencKey),
            )
        return out
