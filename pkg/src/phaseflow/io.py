"""CSV tables and the raw binary phase-field format.

Binary layout (little-endian): 8-byte magic ``PHFLD\\0\\0\\1``, ``u32 D``,
``u32`` point counts for the ``2D`` axes (q axes then p axes), ``f64``
``(min, max)`` per axis, then ``(re, im)`` ``f64`` pairs in row-major order.
"""
from __future__ import annotations

import datetime as _dt
import struct
from pathlib import Path

import numpy as np

from .core.grids import PhaseField, PhaseGrid, PositionWavefunction
from .errors import InvalidFile

MAGIC = b"PHFLD\x00\x00\x01"
FLOAT_FMT = "%.16e"  # 17 significant digits


def format_row(values) -> str:
    out = []
    for v in values:
        if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
            out.append(str(int(v)))
        else:
            out.append(FLOAT_FMT % float(v))
    return ",".join(out)


def csv_text(header, rows, timestamp: bool = False) -> str:
    lines = []
    if timestamp:
        lines.append("# generated " + _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))
    lines.append(",".join(header))
    lines.extend(format_row(r) for r in rows)
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows, timestamp: bool = False) -> None:
    Path(path).write_text(csv_text(header, rows, timestamp))


def read_csv(path):
    """Return ``(header, data)``; comment lines starting with ``#`` are skipped."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidFile(f"{path}: {exc.strerror or exc}") from exc
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not lines:
        raise InvalidFile(f"{path}: empty table")
    header = lines[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(header))
    return header, data


def field_bytes(eta: PhaseField) -> bytes:
    g = eta.grid
    D = g.D
    head = MAGIC + struct.pack("<I", D) + struct.pack(f"<{2 * D}I", *g.shape)
    ext = [v for lo, hi in zip(g.lower, g.upper) for v in (lo, hi)]
    head += struct.pack(f"<{4 * D}d", *ext)
    body = np.ascontiguousarray(eta.values, dtype="<c16").tobytes(order="C")
    return head + body


def write_field(path, eta: PhaseField) -> None:
    Path(path).write_bytes(field_bytes(eta))


def field_from_bytes(buf: bytes, name: str = "<buffer>") -> PhaseField:
    if buf[:8] != MAGIC:
        raise InvalidFile(f"{name}: not a phase-field file (bad magic)")
    try:
        (D,) = struct.unpack_from("<I", buf, 8)
        if D not in (1, 2):
            raise InvalidFile(f"{name}: unsupported dimension {D}")
        counts = struct.unpack_from(f"<{2 * D}I", buf, 12)
        off = 12 + 8 * D
        ext = struct.unpack_from(f"<{4 * D}d", buf, off)
        off += 32 * D
    except struct.error as exc:
        raise InvalidFile(f"{name}: truncated header") from exc
    n = int(np.prod(counts))
    if len(buf) - off != 16 * n:
        raise InvalidFile(f"{name}: expected {16 * n} payload bytes, found {len(buf) - off}")
    vals = np.frombuffer(buf, dtype="<c16", count=n, offset=off).reshape(counts)
    lo, hi = ext[0::2], ext[1::2]
    grid = PhaseGrid(tuple(lo[:D]), tuple(hi[:D]), tuple(lo[D:]), tuple(hi[D:]), tuple(counts[:D]), tuple(counts[D:]))
    return PhaseField(grid, vals.astype(complex))


def read_field(path) -> PhaseField:
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise InvalidFile(f"{path}: {exc.strerror or exc}") from exc
    return field_from_bytes(buf, str(path))


def wavefunction_rows(psi: PositionWavefunction):
    x = psi.grid.axis(0)
    return [(xi, v.real, v.imag) for xi, v in zip(x, psi.values)]
