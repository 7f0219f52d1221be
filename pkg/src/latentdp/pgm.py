"""PGM (portable graymap) reading and writing.

Supports binary P5 and ASCII P2 with maxval 255 only. Pixel byte v maps
to v / 255 on read; writing rounds p * 255 to the nearest integer, so a
write/read round-trip moves a pixel by at most 1/510.
"""

from __future__ import annotations

import numpy as np

from .latent import FileFormatError


def read_pgm(path) -> np.ndarray:
    """Read a P5 or P2 graymap into an (height, width) array in [0, 1]."""
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, pos = _next_token(raw, 0, path)
    if magic not in (b"P5", b"P2"):
        raise FileFormatError(f"{path}: unsupported magic {magic!r}, need P5 or P2")
    fields = []
    for name in ("width", "height", "maxval"):
        token, pos = _next_token(raw, pos, path)
        try:
            value = int(token)
        except ValueError:
            raise FileFormatError(f"{path}: non-numeric {name} {token!r}") from None
        fields.append(value)
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FileFormatError(f"{path}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise FileFormatError(f"{path}: maxval {maxval} unsupported, need 255")
    count = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        data = raw[pos + 1 :]
        if len(data) < count:
            raise FileFormatError(
                f"{path}: truncated raster, expected {count} bytes, got {len(data)}"
            )
        if len(data) > count:
            raise FileFormatError(f"{path}: {len(data) - count} trailing bytes")
        values = np.frombuffer(data, dtype=np.uint8)
    else:
        tokens = []
        while True:
            try:
                token, pos = _next_token(raw, pos, path)
            except FileFormatError:
                break
            tokens.append(token)
        if len(tokens) < count:
            raise FileFormatError(
                f"{path}: truncated raster, expected {count} samples, got {len(tokens)}"
            )
        if len(tokens) > count:
            raise FileFormatError(f"{path}: {len(tokens) - count} trailing samples")
        try:
            values = np.array([int(t) for t in tokens], dtype=np.int64)
        except ValueError:
            raise FileFormatError(f"{path}: non-numeric sample") from None
        if values.min() < 0 or values.max() > 255:
            raise FileFormatError(f"{path}: sample outside [0, 255]")

    return values.reshape(height, width).astype(np.float64) / 255.0


def write_pgm(path, image, binary: bool = True) -> None:
    """Write an image with pixels in [0, 1] as maxval-255 PGM."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ValueError(f"image must be a nonempty 2-D array, got shape {img.shape}")
    if not np.all(np.isfinite(img)) or img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("image pixels must be finite and within [0, 1]")
    height, width = img.shape
    quantized = np.rint(img * 255.0).astype(np.uint8)
    if binary:
        with open(path, "wb") as fh:
            fh.write(b"P5\n%d %d\n255\n" % (width, height))
            fh.write(quantized.tobytes())
    else:
        with open(path, "w", newline="") as fh:
            fh.write(f"P2\n{width} {height}\n255\n")
            for row in quantized:
                fh.write(" ".join(str(int(v)) for v in row))
                fh.write("\n")


def _next_token(raw: bytes, pos: int, path) -> tuple[bytes, int]:
    """Next header token, skipping whitespace and # comments."""
    n = len(raw)
    while pos < n:
        b = raw[pos]
        if b in b" \t\r\n":
            pos += 1
        elif b == ord("#"):
            while pos < n and raw[pos] != ord("\n"):
                pos += 1
        else:
            break
    if pos >= n:
        raise FileFormatError(f"{path}: unexpected end of file in header")
    start = pos
    while pos < n and raw[pos] not in b" \t\r\n":
        pos += 1
    return raw[start:pos], pos
