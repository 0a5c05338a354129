"""Point-cloud file formats.

ASCII (``.xyz``/``.txt``): one ``x y z`` triple per line, ``#`` comments.
A ``# label: <int>`` comment carries the optional class id.

Binary (``.ripc``), little-endian::

    b"RIPC" | u8 version=1 | u8 flags | u64 count | count*3 f32 | [u16 label]

Bit 0 of ``flags`` marks the trailing label.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .cloud import PointCloud
from .errors import MagicMismatch, ParseError, TruncatedFile

MAGIC = b"RIPC"
VERSION = 1
FLAG_LABEL = 0x01
_HEADER = struct.Struct("<4sBBQ")
BINARY_SUFFIXES = {".ripc", ".bin"}


def encode_binary(pc: PointCloud) -> bytes:
    flags = FLAG_LABEL if pc.label is not None else 0
    body = np.ascontiguousarray(pc.points, dtype="<f4").tobytes()
    out = _HEADER.pack(MAGIC, VERSION, flags, len(pc)) + body
    if pc.label is not None:
        out += struct.pack("<H", int(pc.label))
    return out


def decode_binary(buf: bytes) -> PointCloud:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise MagicMismatch(f"expected magic {MAGIC!r}, got {bytes(buf[:4])!r}", offset=0)
    if len(buf) < _HEADER.size:
        raise TruncatedFile("header is truncated", offset=len(buf))
    _, version, flags, count = _HEADER.unpack_from(buf)
    if version != VERSION:
        raise ParseError(f"unsupported RIPC version {version}", offset=4)
    end = _HEADER.size + 12 * count
    if len(buf) < end:
        raise TruncatedFile(f"body needs {12 * count} bytes, found {len(buf) - _HEADER.size}", offset=len(buf))
    pts = np.frombuffer(buf, dtype="<f4", count=3 * count, offset=_HEADER.size).reshape(count, 3)
    label = None
    if flags & FLAG_LABEL:
        if len(buf) < end + 2:
            raise TruncatedFile("label flag set but label missing", offset=len(buf))
        (label,) = struct.unpack_from("<H", buf, end)
    return PointCloud(pts.astype(np.float64), label=label)


def encode_ascii(pc: PointCloud) -> str:
    lines = []
    if pc.label is not None:
        lines.append(f"# label: {int(pc.label)}")
    lines.extend(" ".join(repr(float(c)) for c in p) for p in pc.points)
    return "\n".join(lines) + "\n"


def decode_ascii(text: str) -> PointCloud:
    pts = []
    label = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            body = s[1:].strip()
            if body.startswith("label:"):
                try:
                    label = int(body.split(":", 1)[1])
                except ValueError:
                    raise ParseError("bad label comment", line=lineno) from None
            continue
        fields = s.split()
        if len(fields) != 3:
            raise ParseError(f"expected 3 values, got {len(fields)}", line=lineno)
        try:
            pts.append([float(f) for f in fields])
        except ValueError:
            col = line.find(next(f for f in fields if not _is_float(f)))
            raise ParseError("not a number", line=lineno, offset=col) from None
    if not pts:
        raise ParseError("no points found")
    return PointCloud(np.array(pts), label=label)


def _is_float(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def write_cloud(pc: PointCloud, path, fmt: str | None = None) -> None:
    path = Path(path)
    fmt = fmt or ("binary" if path.suffix in BINARY_SUFFIXES else "ascii")
    if fmt == "binary":
        path.write_bytes(encode_binary(pc))
    elif fmt == "ascii":
        path.write_text(encode_ascii(pc))
    else:
        raise ValueError(f"unknown format {fmt!r}")


def read_cloud(path) -> PointCloud:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] == MAGIC or path.suffix in BINARY_SUFFIXES:
        return decode_binary(raw)
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError as exc:
        raise ParseError("file is neither RIPC binary nor ASCII", offset=exc.start) from None
    return decode_ascii(text)


def write_manifest(entries, path) -> None:
    """Entries are dicts with ``path``, ``label`` and ``seed``."""
    with open(path, "w") as fh:
        for e in entries:
            fh.write(json.dumps({"path": str(e["path"]), "label": int(e["label"]), "seed": int(e["seed"])}) + "\n")


def read_manifest(path) -> list[dict]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append({"path": rec["path"], "label": int(rec["label"]), "seed": int(rec["seed"])})
            except (ValueError, KeyError) as exc:
                raise ParseError(f"bad manifest record: {exc}", line=lineno) from None
    return out
