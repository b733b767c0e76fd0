"""Append-only log of the public authenticated classical channel."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Literal

Sender = Literal["A", "B"]


@dataclass(frozen=True)
class Message:
    index: int
    sender: Sender
    kind: str
    payload_digest_hex: str
    bits_disclosed: int = 0


@dataclass
class Transcript:
    """Classical messages in protocol order.

    Only SHA-256 digests of payloads are kept.  ``tallies`` holds local
    counters that are reported with the transcript but never sent, such as
    the number of values clamped by the slice quantizer.
    """

    messages: list[Message] = field(default_factory=list)
    tallies: dict[str, int] = field(default_factory=dict)

    def send(self, sender: Sender, kind: str, payload: bytes, bits_disclosed: int = 0) -> Message:
        if sender not in ("A", "B"):
            raise ValueError(f"sender must be 'A' or 'B', got {sender!r}")
        if bits_disclosed < 0:
            raise ValueError("bits_disclosed must be >= 0")
        msg = Message(
            index=len(self.messages),
            sender=sender,
            kind=kind,
            payload_digest_hex=hashlib.sha256(payload).hexdigest(),
            bits_disclosed=int(bits_disclosed),
        )
        self.messages.append(msg)
        return msg

    def tally(self, key: str, count: int) -> None:
        self.tallies[key] = self.tallies.get(key, 0) + int(count)

    @property
    def bits_disclosed(self) -> int:
        return sum(m.bits_disclosed for m in self.messages)

    def bits_disclosed_by_kind(self, kind: str) -> int:
        return sum(m.bits_disclosed for m in self.messages if m.kind == kind)

    def kinds(self) -> list[str]:
        return [m.kind for m in self.messages]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(asdict(m), sort_keys=True) + "\n" for m in self.messages)

    @classmethod
    def from_jsonl(cls, text: str) -> "Transcript":
        messages = [Message(**json.loads(line)) for line in text.splitlines() if line.strip()]
        for i, m in enumerate(messages):
            if m.index != i:
                raise ValueError(f"transcript out of order at line {i}: index {m.index}")
        return cls(messages)


def json_payload(obj) -> bytes:
    """Canonical bytes for a JSON-able payload."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
