"""Versioned binary parameter container.

Layout (little-endian)::

    b"TPANPRM\\0"          magic
    u32                    format version
    u32 + bytes            architecture descriptor, UTF-8 JSON
    u32                    tensor count
    per tensor:
      u32 + bytes          name, UTF-8
      u32                  ndim
      u32 * ndim           shape
      f32 * prod(shape)    values, C order
"""

from __future__ import annotations

import io
import json
import struct
from pathlib import Path

import numpy as np

from .network import Architecture, ModelParams

MAGIC = b"TPANPRM\0"
VERSION = 1


def _put_bytes(buf: io.BytesIO, data: bytes) -> None:
    buf.write(struct.pack("<I", len(data)))
    buf.write(data)


def dumps(params: ModelParams) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    _put_bytes(buf, json.dumps(params.arch.to_dict(), sort_keys=True).encode())
    buf.write(struct.pack("<I", len(params)))
    for name, t in params.items():
        _put_bytes(buf, name.encode())
        buf.write(struct.pack("<I", t.ndim))
        buf.write(struct.pack(f"<{t.ndim}I", *t.shape))
        buf.write(np.ascontiguousarray(t, dtype="<f4").tobytes())
    return buf.getvalue()


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ValueError("truncated parameter file")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self, count: int = 1):
        vals = struct.unpack(f"<{count}I", self.take(4 * count))
        return vals[0] if count == 1 else vals

    def blob(self) -> bytes:
        return self.take(self.u32())


def loads(data: bytes) -> ModelParams:
    r = _Reader(data)
    if r.take(len(MAGIC)) != MAGIC:
        raise ValueError("not a thermopan parameter file (bad magic)")
    version = r.u32()
    if version != VERSION:
        raise ValueError(f"unsupported parameter file version {version}")
    arch = Architecture(**json.loads(r.blob().decode()))
    params = ModelParams(arch)
    for _ in range(r.u32()):
        name = r.blob().decode()
        ndim = r.u32()
        shape = tuple(r.u32(ndim)) if ndim > 1 else ((r.u32(),) if ndim == 1 else ())
        count = int(np.prod(shape))
        params[name] = np.frombuffer(r.take(4 * count), dtype="<f4").reshape(shape).astype(np.float64)
    if r.pos != len(data):
        raise ValueError("trailing bytes in parameter file")
    return params


def save_params(params: ModelParams, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps(params))


def load_params(path) -> ModelParams:
    return loads(Path(path).read_bytes())
