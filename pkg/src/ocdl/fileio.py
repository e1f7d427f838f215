"""On-disk formats: dictionary files, mask images, filter grids, configs.

Dictionary file layout (little-endian): magic ``OCDL``, u32 format version
(1), u32 filter count M, u32 kernel rows, u32 kernel cols, then
``M * rows * cols`` float64 taps, row-major within a filter, filter-major.

Masks are stored as binary PGM with 0 = masked and 255 = valid.
"""

from __future__ import annotations

import struct

import numpy as np
from PIL import Image

from .signals import Dictionary, Mask

MAGIC = b"OCDL"
FORMAT_VERSION = 1


def save_dictionary(path, d: Dictionary):
    lr, lc = d.kernel_shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIII", FORMAT_VERSION, d.num_filters, lr, lc))
        fh.write(np.ascontiguousarray(d.filters, dtype="<f8").tobytes())


def load_dictionary(path) -> Dictionary:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"not a dictionary file (magic {magic!r})")
        version, num_filters, lr, lc = struct.unpack("<IIII", fh.read(16))
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported dictionary format version {version}")
        count = num_filters * lr * lc
        taps = np.frombuffer(fh.read(count * 8), dtype="<f8", count=count)
    return Dictionary(taps.astype(np.float64).reshape(num_filters, lr, lc))


def save_mask_pgm(path, mask: Mask):
    img = Image.fromarray((mask.values * 255).astype(np.uint8), mode="L")
    img.save(path, format="PPM")


def load_mask_pgm(path) -> Mask:
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"))
    return Mask((arr >= 128).astype(np.float64))


def save_filter_grid(path, d: Dictionary, pad: int = 1, cell_scale: int = 8):
    """Dump the filters as one grid image for visual inspection.

    Each filter is min-max normalized independently, upsampled by
    ``cell_scale`` with nearest-neighbor, and placed on a grid with
    ``pad``-pixel separators.
    """
    m = d.num_filters
    lr, lc = d.kernel_shape
    grid_cols = int(np.ceil(np.sqrt(m)))
    grid_rows = int(np.ceil(m / grid_cols))
    cell_r, cell_c = lr * cell_scale, lc * cell_scale
    canvas = np.zeros(
        (grid_rows * (cell_r + pad) + pad, grid_cols * (cell_c + pad) + pad),
        dtype=np.uint8,
    )
    for i in range(m):
        f = d.filters[i]
        lo, hi = f.min(), f.max()
        norm = (f - lo) / (hi - lo) if hi > lo else np.full_like(f, 0.5)
        cell = np.kron(norm, np.ones((cell_scale, cell_scale)))
        r0 = pad + (i // grid_cols) * (cell_r + pad)
        c0 = pad + (i % grid_cols) * (cell_c + pad)
        canvas[r0 : r0 + cell_r, c0 : c0 + cell_c] = (cell * 255).astype(np.uint8)
    Image.fromarray(canvas, mode="L").save(path)


def read_config_file(path) -> dict[str, str]:
    """Parse a flat ``key = value`` text file; ``#`` starts a comment."""
    values: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, val = line.split("=", 1)
            values[key.strip()] = val.strip()
    return values
