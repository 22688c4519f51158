"""Binary and JSON containers for grids, masks, couples and maps.

Binary layout (little-endian IEEE doubles): a header ``[n, N_1..N_n, L_1..L_n]``
followed, for distributions, by interleaved ``re, im`` pairs in row-major
order, or, for masks, by the mask bits packed LSB-first.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import InvalidInput
from .grid import DomainMask, GridDistribution

_F64 = np.dtype("<f8")


def _header(shape, box_length):
    return np.array([len(shape), *shape, *box_length], dtype=_F64).tobytes()


def _parse_header(buf: bytes):
    if len(buf) < 8:
        raise InvalidInput("container too short for a header")
    n = np.frombuffer(buf[:8], dtype=_F64)[0]
    if n not in (1.0, 2.0, 3.0):
        raise InvalidInput(f"header dimension must be 1, 2 or 3, got {n!r}")
    n = int(n)
    end = 8 * (1 + 2 * n)
    if len(buf) < end:
        raise InvalidInput("truncated header")
    vals = np.frombuffer(buf[8:end], dtype=_F64)
    sizes, box = vals[:n], vals[n:]
    if np.any(sizes != np.round(sizes)) or np.any(sizes < 2) or np.any(sizes > 2 ** 24):
        raise InvalidInput("grid sizes in header are not valid integers")
    return tuple(int(s) for s in sizes), tuple(float(b) for b in box), end


def grid_to_bytes(u: GridDistribution) -> bytes:
    payload = np.empty(u.samples.size * 2, dtype=_F64)
    flat = u.samples.ravel()
    payload[0::2] = flat.real
    payload[1::2] = flat.imag
    return _header(u.shape, u.box_length) + payload.tobytes()


def grid_from_bytes(buf: bytes) -> GridDistribution:
    shape, box, off = _parse_header(buf)
    count = math.prod(shape)
    if len(buf) - off != 16 * count:
        raise InvalidInput(f"payload holds {len(buf) - off} bytes, expected {16 * count}")
    data = np.frombuffer(buf[off:], dtype=_F64)
    return GridDistribution((data[0::2] + 1j * data[1::2]).reshape(shape), box)


def mask_to_bytes(mask: DomainMask) -> bytes:
    bits = np.packbits(mask.mask.ravel(), bitorder="little")
    return _header(mask.shape, mask.box_length) + bits.tobytes()


def mask_from_bytes(buf: bytes) -> DomainMask:
    shape, box, off = _parse_header(buf)
    count = math.prod(shape)
    if len(buf) - off != (count + 7) // 8:
        raise InvalidInput("mask payload has the wrong length")
    bits = np.unpackbits(np.frombuffer(buf[off:], dtype=np.uint8), bitorder="little")
    return DomainMask(bits[:count].astype(bool).reshape(shape), box)


def grid_to_dict(u: GridDistribution) -> dict:
    flat = u.samples.ravel()
    return {"shape": list(u.shape), "box_length": list(u.box_length),
            "re": flat.real.tolist(), "im": flat.imag.tolist()}


def grid_from_dict(d) -> GridDistribution:
    try:
        re = np.asarray(d["re"], dtype=float)
        im = np.asarray(d.get("im", np.zeros_like(re)), dtype=float)
        return GridDistribution((re + 1j * im).reshape(d["shape"]), d["box_length"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed grid record: {exc}") from exc


def mask_to_dict(mask: DomainMask) -> dict:
    return {"shape": list(mask.shape), "box_length": list(mask.box_length),
            "mask": mask.mask.ravel().astype(int).tolist()}


def mask_from_dict(d) -> DomainMask:
    try:
        return DomainMask(np.asarray(d["mask"], dtype=bool).reshape(d["shape"]), d["box_length"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed mask record: {exc}") from exc


def _read(path):
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc


def _json(buf, path):
    try:
        return json.loads(buf.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"{path} is not valid JSON: {exc}") from exc


def load_grid(path) -> GridDistribution:
    """Read a distribution; ``.json`` files use the JSON record, anything else the binary container."""
    buf = _read(path)
    if str(path).endswith(".json"):
        return grid_from_dict(_json(buf, path))
    return grid_from_bytes(buf)


def load_mask(path) -> DomainMask:
    buf = _read(path)
    if str(path).endswith(".json"):
        return mask_from_dict(_json(buf, path))
    return mask_from_bytes(buf)


def save_grid(path, u: GridDistribution):
    if str(path).endswith(".json"):
        atomic_write(path, json.dumps(grid_to_dict(u), sort_keys=True))
    else:
        atomic_write(path, grid_to_bytes(u))


def save_mask(path, mask: DomainMask):
    if str(path).endswith(".json"):
        atomic_write(path, json.dumps(mask_to_dict(mask), sort_keys=True))
    else:
        atomic_write(path, mask_to_bytes(mask))


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to ``path`` through a temp file and rename."""
    path = Path(path)
    raw = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".",
                               prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
