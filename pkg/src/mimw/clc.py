"""Cluster launch control: a shared tile queue plus a per-CTA staged
request/response pipeline guarded by empty/full mbarriers.

Response records are 16 bytes: four little-endian int32 words, word 0 the
tile id (``-1`` once the queue is exhausted), words 1-3 zero.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .sync import MbarrierState

RESPONSE_BYTES = 16
_RECORD = struct.Struct("<iiii")


def encode_response(tile_id: int) -> bytes:
    return _RECORD.pack(tile_id, 0, 0, 0)


def decode_response(raw: bytes) -> int:
    return _RECORD.unpack(raw)[0]


@dataclass
class TileQueue:
    total_tiles: int
    next_tile: int = 0
    requests: int = 0

    def request(self) -> int:
        """Next tile id, then ``-1`` forever."""
        self.requests += 1
        if self.next_tile < self.total_tiles:
            self.next_tile += 1
            return self.next_tile - 1
        return -1


@dataclass
class ClcContext:
    stages: int
    num_consumers: int
    empty: list[MbarrierState] = field(default_factory=list)
    full: list[MbarrierState] = field(default_factory=list)
    slots: list[bytes] = field(default_factory=list)
    # per-stream request / consume counters
    produced: dict[str, int] = field(default_factory=dict)
    consumed: dict[str, int] = field(default_factory=dict)

    def producer_slot(self, stream: str) -> tuple[int, int]:
        """(stage, parity to wait on the empty barrier) for the stream's next request.

        Empty barriers start acquirable: the first round waits on parity 1
        against a fresh phase-0 barrier, which is satisfied immediately.
        """
        k = self.produced.get(stream, 0)
        return k % self.stages, ((k // self.stages) & 1) ^ 1

    def consumer_slot(self, stream: str) -> tuple[int, int]:
        k = self.consumed.get(stream, 0)
        return k % self.stages, (k // self.stages) & 1


def clc_create_context(stages: int, num_consumers: int) -> ClcContext:
    """Context with ``stages`` initialized empty/full barrier pairs.

    Each consumer arrives on the empty barrier once per response, so the
    empty barriers expect ``num_consumers`` arrivals; the full barrier takes
    the producer's arrival plus the 16 response bytes.
    """
    if stages < 1:
        raise ValueError("clc context needs stages >= 1")
    if num_consumers < 1:
        raise ValueError("clc context needs num_consumers >= 1")
    return ClcContext(
        stages=stages,
        num_consumers=num_consumers,
        empty=[MbarrierState.initialized(num_consumers) for _ in range(stages)],
        full=[MbarrierState.initialized(1) for _ in range(stages)],
        slots=[bytes(RESPONSE_BYTES) for _ in range(stages)],
    )
