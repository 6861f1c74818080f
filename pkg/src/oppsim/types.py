"""Shared domain types: messages, decisions, accounting records, errors."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class OppSimError(Exception):
    """Base class for all simulator errors."""


class ScenarioError(OppSimError):
    """Invalid scenario input: contacts, workload or roster."""


class ConfigError(OppSimError):
    """Invalid configuration file or parameter value."""


class TraceFormatError(ScenarioError):
    """Malformed trace/workload/roster file; carries the offending line."""

    def __init__(self, path: str, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = path
        self.line_no = line_no
        self.reason = reason


@dataclass
class Message:
    """One buffered copy of a message.

    ``hop_count`` and ``tokens`` are per-copy: they diverge between copies
    as the message is relayed or its replication budget is split.
    Node ids are the engine's internal integer indices.
    """

    id: str
    src: int
    dst: int
    size: int
    created_at: int
    ttl: int
    hop_count: int = 0
    tokens: int = 1

    @property
    def deadline(self) -> int:
        return self.created_at + self.ttl

    def copy_for_relay(self, tokens: int) -> "Message":
        return Message(
            id=self.id,
            src=self.src,
            dst=self.dst,
            size=self.size,
            created_at=self.created_at,
            ttl=self.ttl,
            hop_count=self.hop_count + 1,
            tokens=tokens,
        )


class DecisionKind(Enum):
    SKIP = "skip"
    REPLICATE = "replicate"
    MOVE = "move"
    DELIVER = "deliver"


@dataclass(frozen=True)
class Decision:
    """A protocol's verdict for one (message, peer) pair.

    ``share`` is the planned token split for quota protocols; the engine
    clamps it against the live copy when the transfer actually completes.
    """

    kind: DecisionKind
    share: int | None = None


SKIP = Decision(DecisionKind.SKIP)
MOVE = Decision(DecisionKind.MOVE)
REPLICATE = Decision(DecisionKind.REPLICATE)


class RecordKind(Enum):
    CREATED = "created"
    RELAY = "relay"
    DELIVERED = "delivered"
    DROPPED = "dropped"
    EXPIRED = "expired"
    ABORTED = "aborted"


@dataclass(frozen=True)
class Record:
    """One accounting event; node ids here are public string ids.

    ``hops`` is set on DELIVERED records only (path length of the copy
    that reached the destination).
    """

    kind: RecordKind
    time: int
    msg: str
    frm: str | None = None
    to: str | None = None
    hops: int | None = None


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)
