"""Binary and text file codecs.

All binary formats are little-endian.

``HSC1`` cube::

    b"HSC1" | u32 height | u32 width | u32 bands | float32[height*width*bands]

values pixel-major, band-contiguous per pixel.

``HSG1`` labels::

    b"HSG1" | u32 height | u32 width | u32 num_classes | u16[height*width]

with 0 = background.

Maps are written as binary PPM (P6, maxval 255).

CSV import/export used by ``convert``:

* cube CSV: header ``row,col,band_1,...,band_d`` then one line per pixel
  (every pixel of the H x W grid exactly once, any order);
* label CSV: H lines of W comma-separated integers, no header.
"""
from __future__ import annotations

import colorsys
import csv
import struct
from pathlib import Path

import numpy as np

from hsilbp.errors import FormatError
from hsilbp.hsidata import LabelField, check_cube

_HEADER = struct.Struct("<4sIII")


def encode_cube(cube):
    arr = check_cube(cube)
    h, w, d = arr.shape
    return _HEADER.pack(b"HSC1", h, w, d) + arr.astype("<f4").tobytes()


def decode_cube(data):
    if len(data) < _HEADER.size:
        raise FormatError("truncated HSC1 header")
    magic, h, w, d = _HEADER.unpack_from(data)
    if magic != b"HSC1":
        raise FormatError(f"bad magic {magic!r}, expected b'HSC1'")
    n = h * w * d
    if len(data) != _HEADER.size + 4 * n:
        raise FormatError(f"HSC1 payload is {len(data) - _HEADER.size} bytes, expected {4 * n}")
    values = np.frombuffer(data, dtype="<f4", count=n, offset=_HEADER.size)
    return check_cube(values.reshape(h, w, d))


def encode_labels(field):
    h, w = field.shape
    if field.labels.max() > 0xFFFF:
        raise FormatError("labels exceed u16 range")
    return _HEADER.pack(b"HSG1", h, w, field.num_classes) + field.labels.astype("<u2").tobytes()


def decode_labels(data):
    if len(data) < _HEADER.size:
        raise FormatError("truncated HSG1 header")
    magic, h, w, m = _HEADER.unpack_from(data)
    if magic != b"HSG1":
        raise FormatError(f"bad magic {magic!r}, expected b'HSG1'")
    if len(data) != _HEADER.size + 2 * h * w:
        raise FormatError(f"HSG1 payload is {len(data) - _HEADER.size} bytes, expected {2 * h * w}")
    labels = np.frombuffer(data, dtype="<u2", count=h * w, offset=_HEADER.size)
    return LabelField(labels.reshape(h, w).astype(np.int64), int(m))


def read_cube(path):
    return decode_cube(Path(path).read_bytes())


def write_cube(path, cube):
    Path(path).write_bytes(encode_cube(cube))


def read_labels(path):
    return decode_labels(Path(path).read_bytes())


def write_labels(path, field):
    Path(path).write_bytes(encode_labels(field))


# -- maps ---------------------------------------------------------------------

def default_palette(num_classes):
    """Black background followed by evenly spaced, fully saturated hues."""
    colors = [(0, 0, 0)]
    for c in range(num_classes):
        hue = c / max(num_classes, 1)
        value = 1.0 if c % 2 == 0 else 0.75
        r, g, b = colorsys.hsv_to_rgb(hue, 1.0, value)
        colors.append((round(r * 255), round(g * 255), round(b * 255)))
    return np.array(colors, dtype=np.uint8)


def encode_ppm(labels, palette=None):
    labels = np.asarray(labels.labels if isinstance(labels, LabelField) else labels, dtype=np.int64)
    if palette is None:
        palette = default_palette(int(labels.max()) if labels.size else 0)
    palette = np.asarray(palette, dtype=np.uint8).reshape(-1, 3)
    if labels.max() >= len(palette):
        raise FormatError(f"palette has {len(palette)} entries but labels reach {labels.max()}")
    h, w = labels.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + palette[labels].tobytes()


def render_map(labels, palette, path):
    """Write a label map as a P6 PPM; label c gets ``palette[c]`` (0 = background)."""
    Path(path).write_bytes(encode_ppm(labels, palette))


def decode_ppm(data):
    """Parse a binary P6 PPM (maxval 255) into an (H, W, 3) uint8 array."""
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PPM header")
        tokens.append(data[start:pos])
    pos += 1
    if tokens[0] != b"P6" or int(tokens[3]) != 255:
        raise FormatError("only P6 with maxval 255 is supported")
    w, h = int(tokens[1]), int(tokens[2])
    payload = data[pos:]
    if len(payload) != 3 * w * h:
        raise FormatError(f"PPM payload is {len(payload)} bytes, expected {3 * w * h}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w, 3)


# -- CSV conversion -----------------------------------------------------------

def cube_from_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["row", "col"] or len(header) < 3:
            raise FormatError("cube CSV header must start with row,col,band_1")
        rows = [r for r in reader if r]
    if not rows:
        raise FormatError("cube CSV has no pixels")
    table = np.array(rows, dtype=np.float64)
    rc = table[:, :2].astype(np.int64)
    h, w = rc[:, 0].max() + 1, rc[:, 1].max() + 1
    if len(table) != h * w or rc.min() < 0:
        raise FormatError(f"cube CSV must list each of the {h}x{w} pixels exactly once")
    cube = np.full((h, w, table.shape[1] - 2), np.nan)
    cube[rc[:, 0], rc[:, 1]] = table[:, 2:]
    if np.isnan(cube).any():
        raise FormatError("cube CSV has duplicate or missing pixels")
    return check_cube(cube)


def cube_to_csv(path, cube):
    cube = check_cube(cube)
    h, w, d = cube.shape
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col"] + [f"band_{k + 1}" for k in range(d)])
        for r in range(h):
            for c in range(w):
                writer.writerow([r, c] + [repr(float(v)) for v in cube[r, c]])


def labels_from_csv(path, num_classes=None):
    grid = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    m = int(num_classes) if num_classes else int(grid.max())
    return LabelField(grid, max(m, 1))


def labels_to_csv(path, field):
    np.savetxt(path, field.labels, fmt="%d", delimiter=",")
