"""Problem batch files: length-prefixed records, binary arrays, JSON sidecar.

A ``.pmf`` file is a sequence of frames (u32 length + payload).  Each
payload starts with a 4-byte record magic:

* ``PMFH``: one JSON header record, always first
* ``PMFS``: one seed problem (little-endian scalars and i32 arrays)
* ``PMFG``: ground-truth bitmap for problem i (u32 index + packed bits)

A ``.json`` sidecar repeating the header is written next to the file so a
batch can be inspected without parsing frames.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..parametric import SeedProblem
from ..wire import frame, pack_bits, read_frame, unpack_bits

RECORD_HEADER = b"PMFH"
RECORD_PROBLEM = b"PMFS"
RECORD_TRUTH = b"PMFG"

_DIMS = struct.Struct("<II")
_U32 = struct.Struct("<I")


class ProblemFileError(ValueError):
    pass


def _i32_bytes(arr) -> bytes:
    return np.ascontiguousarray(arr, dtype="<i4").tobytes()


def _encode_problem(p: SeedProblem) -> bytes:
    out = [RECORD_PROBLEM, _DIMS.pack(p.width, p.height)]
    out.append(_i32_bytes(p.unary_base))
    out.append(_i32_bytes(p.unary_slope))
    out.append(_i32_bytes(p.sink_base))
    out.append(_i32_bytes(p.pairwise))
    for seeds in (p.fg_seeds, p.bg_seeds):
        idx = sorted(seeds)
        out.append(_U32.pack(len(idx)))
        out.append(np.asarray(idx, "<u4").tobytes())
    return b"".join(out)


def _decode_problem(body: bytes) -> SeedProblem:
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(body):
            raise ProblemFileError("problem record truncated")
        piece = body[pos:pos + n]
        pos += n
        return piece

    width, height = _DIMS.unpack(take(_DIMS.size))
    n = width * height

    def i32(count):
        return np.frombuffer(take(4 * count), "<i4").astype(np.int64)

    unary_base = i32(n)
    unary_slope = i32(n)
    sink_base = i32(n)
    pairwise = i32(4 * n).reshape(4, n)
    seeds = []
    for _ in range(2):
        (count,) = _U32.unpack(take(4))
        idx = np.frombuffer(take(4 * count), "<u4")
        seeds.append(frozenset(int(v) for v in idx))
    if pos != len(body):
        raise ProblemFileError("trailing bytes in problem record")
    return SeedProblem(width=width, height=height, unary_base=unary_base,
                       unary_slope=unary_slope, sink_base=sink_base,
                       pairwise=pairwise, fg_seeds=seeds[0], bg_seeds=seeds[1])


def write_problem_file(path, problems, truths=None, meta=None) -> Path:
    """Write problems (and optional parallel truth masks) plus the sidecar."""
    path = Path(path)
    problems = list(problems)
    truths = list(truths) if truths is not None else []
    if truths and len(truths) != len(problems):
        raise ProblemFileError("need one truth mask per problem")
    header = dict(meta or {})
    header.update({"format": "pmf", "version": 1, "problems": len(problems),
                   "truths": len(truths)})
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as f:
        f.write(frame(RECORD_HEADER + header_bytes))
        for p in problems:
            f.write(frame(_encode_problem(p)))
        for i, t in enumerate(truths):
            f.write(frame(RECORD_TRUTH + _U32.pack(i) + pack_bits(t)))
    sidecar = path.with_suffix(".json")
    with open(sidecar, "w", encoding="utf-8") as f:
        json.dump(header, f, sort_keys=True, indent=2)
        f.write("\n")
    return path


def read_problem_file(path):
    """Returns (meta, problems, truths); truths is empty when absent."""
    problems = []
    truths = {}
    meta = None
    with open(path, "rb") as f:
        while True:
            payload = read_frame(f)
            if payload is None:
                break
            magic, body = payload[:4], payload[4:]
            if meta is None:
                if magic != RECORD_HEADER:
                    raise ProblemFileError(f"first record is {magic!r}, not a header")
                meta = json.loads(body.decode())
                continue
            if magic == RECORD_PROBLEM:
                problems.append(_decode_problem(body))
            elif magic == RECORD_TRUTH:
                (idx,) = _U32.unpack(body[:4])
                truths[idx] = body[4:]
            elif magic == RECORD_HEADER:
                raise ProblemFileError("duplicate header record")
            else:
                raise ProblemFileError(f"unknown record magic {magic!r}")
    if meta is None:
        raise ProblemFileError("file has no header record")
    if len(problems) != meta.get("problems"):
        raise ProblemFileError(
            f"header promises {meta.get('problems')} problems, found {len(problems)}")
    out_truths = []
    for i in sorted(truths):
        n = problems[i].width * problems[i].height
        out_truths.append(unpack_bits(truths[i], n).astype(np.uint8))
    if out_truths and len(out_truths) != len(problems):
        raise ProblemFileError("truth records do not cover every problem")
    return meta, problems, out_truths
