"""Binary wire format for shipping cut tasks to workers.

Everything is little-endian.  A frame is a u32 payload length followed by
the payload; payloads larger than ``MAX_FRAME_BYTES`` are structural errors.

Request payload::

    magic    4s   = b"PMFX"
    version  u16  = 1
    flags    u16  = 0 (reserved)
    task_id  u64
    width    u32
    height   u32
    bitmap_len u32        followed by that many bitmap bytes; bit i (LSB
                          first) says segment i is embedded swapped; must be
                          exactly ceil(segment_count / 8) bytes, pad bits 0
    segment_count u32     followed by segment_count pairs of u32 (offset,
                          width) in column units, ascending, non-overlapping
    src, snk, left, right, up, down   six i32 arrays of width*height each

Response payload::

    task_id  u64
    status   u16
    flow     u64
    labels   ceil(n/8) bytes, LSB first, only when status == OK; n is the
             pixel count of the request, pad bits must be 0

Each malformed-input class has its own exception so the server can answer
with the matching status code.  Decoding consumes the payload exactly;
trailing bytes are an error.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .grid import CAP_MAX, MAX_PIXELS, GridGraph
from .supergraph import Segment, SupergraphLayout

MAGIC = b"PMFX"
VERSION = 1
MAX_FRAME_BYTES = 6 * 4 * MAX_PIXELS + (1 << 16)

_REQ_FIXED = struct.Struct("<4sHHQII")
_RESP_FIXED = struct.Struct("<QHQ")
_U32 = struct.Struct("<I")


class Status(IntEnum):
    OK = 0
    BAD_MAGIC = 1
    UNKNOWN_VERSION = 2
    FRAME_LENGTH = 3
    CAPACITY_RANGE = 4
    GRAPH_REJECTED = 5
    INTERNAL = 6


class WireError(ValueError):
    """Base class for malformed frames; carries the matching status code."""

    status = Status.INTERNAL


class BadMagicError(WireError):
    status = Status.BAD_MAGIC


class UnknownVersionError(WireError):
    status = Status.UNKNOWN_VERSION


class FrameLengthError(WireError):
    status = Status.FRAME_LENGTH


class CapacityRangeError(WireError):
    status = Status.CAPACITY_RANGE


def pack_bits(bits) -> bytes:
    """Bools to bytes, bit i of byte j holding entry 8*j+i (LSB first)."""
    arr = np.asarray(bits, dtype=bool).reshape(-1)
    return np.packbits(arr, bitorder="little").tobytes()


def unpack_bits(data: bytes, n: int) -> np.ndarray:
    """Inverse of pack_bits; rejects nonzero padding past the n-th bit."""
    if len(data) != (n + 7) // 8:
        raise FrameLengthError(f"bitmap holds {len(data)} bytes, {n} bits need {(n + 7) // 8}")
    full = np.unpackbits(np.frombuffer(data, np.uint8), bitorder="little")
    if full[n:].any():
        raise FrameLengthError("bitmap padding bits must be zero")
    return full[:n]


@dataclass(frozen=True)
class WireRequest:
    task_id: int
    graph: GridGraph
    layout: SupergraphLayout


@dataclass(frozen=True)
class WireResponse:
    task_id: int
    status: Status
    flow: int
    labels: np.ndarray | None  # (n,) uint8 when status == OK


def whole_graph_layout(g: GridGraph) -> SupergraphLayout:
    """One unswapped segment spanning the whole graph."""
    return SupergraphLayout((Segment(0, 0, g.width, False),), (), g.height)


def request_payload_size(n_pixels: int, n_segments: int) -> int:
    return (_REQ_FIXED.size + 4 + (n_segments + 7) // 8 + 4 + 8 * n_segments
            + 6 * 4 * n_pixels)


def response_payload_size(n_pixels: int, ok: bool = True) -> int:
    return _RESP_FIXED.size + ((n_pixels + 7) // 8 if ok else 0)


def _cap_bytes(arr: np.ndarray) -> bytes:
    if arr.size and (int(arr.min()) < 0 or int(arr.max()) > CAP_MAX):
        raise CapacityRangeError("capacity out of range for the wire")
    return np.ascontiguousarray(arr, dtype="<i4").tobytes()


def encode_request(req: WireRequest) -> bytes:
    g = req.graph
    layout = req.layout if req.layout is not None else whole_graph_layout(g)
    segs = layout.segments
    out = [_REQ_FIXED.pack(MAGIC, VERSION, 0, req.task_id, g.width, g.height)]
    bitmap = pack_bits([s.swapped for s in segs])
    out.append(_U32.pack(len(bitmap)))
    out.append(bitmap)
    out.append(_U32.pack(len(segs)))
    for s in segs:
        out.append(_U32.pack(s.offset))
        out.append(_U32.pack(s.width))
    out.append(_cap_bytes(g.src_cap))
    out.append(_cap_bytes(g.snk_cap))
    for d in range(4):
        out.append(_cap_bytes(g.nbr_cap[d]))
    return b"".join(out)


class _Cursor:
    """Sequential reader that turns under/overruns into FrameLengthError."""

    def __init__(self, payload: bytes):
        self.data = payload
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FrameLengthError(
                f"payload truncated: wanted {n} bytes at offset {self.pos}, "
                f"have {len(self.data) - self.pos}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def done(self) -> None:
        if self.pos != len(self.data):
            raise FrameLengthError(f"{len(self.data) - self.pos} trailing bytes after payload")


def _cap_array(cur: _Cursor, n: int, name: str) -> np.ndarray:
    raw = np.frombuffer(cur.take(4 * n), dtype="<i4")
    if raw.size and int(raw.min()) < 0:
        raise CapacityRangeError(f"{name}: negative capacity on the wire")
    if raw.size and int(raw.max()) > CAP_MAX:
        raise CapacityRangeError(f"{name}: capacity above CAP_MAX on the wire")
    return raw.astype(np.int64)


def decode_request(payload: bytes) -> WireRequest:
    cur = _Cursor(payload)
    magic, version, flags, task_id, width, height = _REQ_FIXED.unpack(
        cur.take(_REQ_FIXED.size))
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != VERSION:
        raise UnknownVersionError(f"unknown version {version}")
    if flags != 0:
        raise UnknownVersionError(f"reserved flags must be zero, got {flags:#x}")
    if width < 1 or height < 1:
        raise FrameLengthError(f"degenerate grid {width}x{height}")
    n = width * height
    if n > MAX_PIXELS:
        raise FrameLengthError(f"grid has {n} pixels, limit is {MAX_PIXELS}")
    bitmap = cur.take(cur.u32())
    seg_count = cur.u32()
    if seg_count < 1:
        raise FrameLengthError("segment table is empty")
    swapped = unpack_bits(bitmap, seg_count)
    segs = []
    prev_end = 0
    for i in range(seg_count):
        off = cur.u32()
        w = cur.u32()
        if w < 1 or off < prev_end or off + w > width:
            raise FrameLengthError(f"segment {i} spans [{off}, {off + w}) illegally")
        segs.append(Segment(i, off, w, bool(swapped[i])))
        prev_end = off + w
    bridges = []
    for a, b in zip(segs, segs[1:]):
        bridges.extend(range(a.offset + a.width, b.offset))
    src = _cap_array(cur, n, "src")
    snk = _cap_array(cur, n, "snk")
    nbr = np.stack([_cap_array(cur, n, name)
                    for name in ("left", "right", "up", "down")])
    cur.done()
    graph = GridGraph(width, height, src, snk, nbr)
    layout = SupergraphLayout(tuple(segs), tuple(bridges), height)
    return WireRequest(task_id, graph, layout)


def encode_response(resp: WireResponse) -> bytes:
    head = _RESP_FIXED.pack(resp.task_id, int(resp.status), resp.flow)
    if resp.status == Status.OK:
        if resp.labels is None:
            raise WireError("OK response needs labels")
        return head + pack_bits(resp.labels)
    return head


def decode_response(payload: bytes, n_pixels: int) -> WireResponse:
    cur = _Cursor(payload)
    task_id, status_raw, flow = _RESP_FIXED.unpack(cur.take(_RESP_FIXED.size))
    try:
        status = Status(status_raw)
    except ValueError:
        raise FrameLengthError(f"unknown status code {status_raw}") from None
    labels = None
    if status == Status.OK:
        labels = unpack_bits(cur.take((n_pixels + 7) // 8), n_pixels).astype(np.uint8)
    cur.done()
    return WireResponse(task_id, status, flow, labels)


def frame(payload: bytes) -> bytes:
    """Length-prefix a payload."""
    if len(payload) > MAX_FRAME_BYTES:
        raise FrameLengthError(f"payload of {len(payload)} bytes exceeds the frame limit")
    return _U32.pack(len(payload)) + payload


def read_frame(stream) -> bytes | None:
    """Read one length-prefixed payload from a file-like object.

    Returns None on a clean end of stream at a frame boundary; anything
    short of a whole frame elsewhere raises FrameLengthError.
    """
    head = stream.read(4)
    if head == b"" or head is None:
        return None
    if len(head) < 4:
        raise FrameLengthError("stream ended inside a frame header")
    (length,) = _U32.unpack(head)
    if length > MAX_FRAME_BYTES:
        raise FrameLengthError(f"declared frame of {length} bytes exceeds the limit")
    payload = stream.read(length)
    if payload is None or len(payload) < length:
        raise FrameLengthError("stream ended inside a frame payload")
    return payload


def status_for_exception(exc: Exception) -> Status:
    """Map a decode/admission failure onto the response status."""
    if isinstance(exc, WireError):
        return exc.status
    from .grid import GraphError

    if isinstance(exc, GraphError):
        return Status.GRAPH_REJECTED
    return Status.INTERNAL
