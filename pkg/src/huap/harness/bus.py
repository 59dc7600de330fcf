"""In-process message bus. Delivery is synchronous and totally ordered;
every message and notable event lands in the transcript."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional

from .. import wire


@dataclass(frozen=True)
class Envelope:
    seq: int
    sender: str
    recipient: str
    kind: str
    body: Dict[str, Any]


def digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def summarize(value: Any) -> Any:
    """Transcript-friendly view of a message field: sizes and digests instead of blobs."""
    if isinstance(value, (bytes, bytearray)):
        return {"bytes": len(value), "sha256": digest(bytes(value))}
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, dict):
        return {str(k): summarize(v) for k, v in value.items()}
    if isinstance(value, list):
        return [summarize(v) for v in value]
    try:
        blob = wire.encode(value)
    except TypeError:
        return repr(value)
    return {"type": wire.peek_type(blob).__name__, "bytes": len(blob), "sha256": digest(blob)}


@dataclass
class Transcript:
    entries: List[dict] = field(default_factory=list)

    def __iter__(self) -> Iterator[dict]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def messages(self, sender: Optional[str] = None, kind: Optional[str] = None) -> List[dict]:
        return [e for e in self.entries if e["type"] == "msg"
                and (sender is None or e["from"] == sender) and (kind is None or e["kind"] == kind)]

    def events(self, kind: Optional[str] = None) -> List[dict]:
        return [e for e in self.entries if e["type"] == "event" and (kind is None or e["kind"] == kind)]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.entries)


class Bus:
    def __init__(self):
        self.actors: Dict[str, Any] = {}
        self.transcript = Transcript()

    def attach(self, actor) -> None:
        if actor.name in self.actors:
            raise ValueError(f"duplicate actor {actor.name!r}")
        self.actors[actor.name] = actor
        actor.bus = self

    def _next(self) -> int:
        return len(self.transcript.entries)

    def send(self, sender: str, recipient: str, kind: str, **body) -> None:
        if recipient not in self.actors:
            raise KeyError(f"no actor {recipient!r}")
        env = Envelope(self._next(), sender, recipient, kind, body)
        self.transcript.entries.append({
            "seq": env.seq, "type": "msg", "from": sender, "to": recipient, "kind": kind,
            "body": summarize(body),
        })
        self.actors[recipient].deliver(env)

    def event(self, actor: str, kind: str, **detail) -> None:
        self.transcript.entries.append({
            "seq": self._next(), "type": "event", "actor": actor, "kind": kind,
            "detail": summarize(detail),
        })
