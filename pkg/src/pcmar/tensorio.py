"""Bit-exact tensor serialization (TNSR format) and PGM image export.

TNSR layout, all integers little-endian:
    magic   4 bytes  b"TNSR"
    version u32      1
    ndim    u32
    dims    ndim * u32
    data    product(dims) * f32, little-endian, row-major
"""

import struct

import numpy as np

MAGIC = b"TNSR"
VERSION = 1


class TensorFormatError(Exception):
    """Malformed TNSR file."""


class BadMagicError(TensorFormatError):
    pass


class VersionMismatchError(TensorFormatError):
    pass


class TruncatedFileError(TensorFormatError):
    pass


def tensor_write(t, path):
    """Write a float32 array to `path` in TNSR format.

    Rejects non-finite values: the on-disk format is reserved for
    well-formed tensors.
    """
    t = np.asarray(t, dtype="<f4")
    if not np.all(np.isfinite(t)):
        raise ValueError(f"tensor_write: non-finite values, refusing to write {path}")
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<II", VERSION, t.ndim))
            fh.write(struct.pack(f"<{t.ndim}I", *t.shape))
            fh.write(np.ascontiguousarray(t).tobytes())
    except OSError as e:
        raise OSError(f"tensor_write: cannot write {path}: {e}") from e


def tensor_read(path):
    """Read a TNSR file back into a float32 array (exact inverse of tensor_write)."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as e:
        raise OSError(f"tensor_read: cannot read {path}: {e}") from e

    if len(raw) < 4 or raw[:4] != MAGIC:
        raise BadMagicError(f"{path}: not a TNSR file (magic {raw[:4]!r})")
    if len(raw) < 12:
        raise TruncatedFileError(f"{path}: truncated header ({len(raw)} bytes)")
    version, ndim = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise VersionMismatchError(f"{path}: TNSR version {version}, expected {VERSION}")
    header_end = 12 + 4 * ndim
    if len(raw) < header_end:
        raise TruncatedFileError(f"{path}: truncated dims ({len(raw)} bytes, ndim={ndim})")
    shape = struct.unpack_from(f"<{ndim}I", raw, 12)
    count = 1
    for d in shape:
        count *= d
    payload = raw[header_end:]
    if len(payload) < 4 * count:
        raise TruncatedFileError(
            f"{path}: truncated payload ({len(payload)} bytes, need {4 * count})"
        )
    data = np.frombuffer(payload[: 4 * count], dtype="<f4")
    return data.reshape(shape).copy()


def pgm_export(t, path, lo, hi):
    """Write a 2D array as binary PGM (P5, maxval 255).

    Pixel value v maps to round(255 * clamp((v - lo) / (hi - lo), 0, 1))
    with round-half-up, so the output bytes are reproducible exactly.
    """
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 2:
        raise ValueError(f"pgm_export: expected 2D array, got shape {t.shape}")
    if not hi > lo:
        raise ValueError(f"pgm_export: need hi > lo, got lo={lo} hi={hi}")
    scaled = np.clip((t - lo) / (hi - lo), 0.0, 1.0) * 255.0
    pixels = np.floor(scaled + 0.5).astype(np.uint8)  # round-half-up
    h, w = t.shape
    try:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            fh.write(pixels.tobytes())
    except OSError as e:
        raise OSError(f"pgm_export: cannot write {path}: {e}") from e
