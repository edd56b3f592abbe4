"""Message log for the in-process protocol runs.

Payload bytes are retained in memory so tests can audit what a party saw;
the dump format deliberately carries only sizes, never contents.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(eq=False)
class Message:
    round: int
    sender: str
    receiver: str
    message_type: str
    byte_length: int
    payload: bytes | None = None


class Transcript:
    """Ordered record of every protocol message."""

    def __init__(self):
        self.messages: list[Message] = []
        self._round = 0

    def next_round(self) -> int:
        self._round += 1
        return self._round

    def log(self, sender: str, receiver: str, message_type: str, payload: bytes) -> None:
        self.messages.append(
            Message(self._round, sender, receiver, message_type, len(payload), payload)
        )

    def received_by(self, receiver: str) -> bytes:
        """Concatenated payloads delivered to one party (for audits)."""
        return b"".join(m.payload or b"" for m in self.messages if m.receiver == receiver)

    def dump(self, sink) -> None:
        """Write 'round,sender,receiver,message-type,byte-length' lines."""
        for m in self.messages:
            sink.write(f"{m.round},{m.sender},{m.receiver},{m.message_type},{m.byte_length}\n")

    def stats(self) -> dict:
        total = sum(m.byte_length for m in self.messages)
        return {"messages": len(self.messages), "bytes": total, "rounds": self._round}
