"""Binary PGM (P5, maxval 255) and the full-precision GridFile format.

GridFile layout::

    b"F64GRID\\n" b"<width> <height>\\n" <width*height little-endian float64, row-major>
"""

import numpy as np

GRID_MAGIC = b"F64GRID\n"
PGM_MAGIC = b"P5"


class FormatError(ValueError):
    pass


def write_grid(path, values):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"grid must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("grid contains non-finite values")
    height, width = arr.shape
    with open(path, "wb") as fh:
        fh.write(GRID_MAGIC)
        fh.write(f"{width} {height}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_grid(path):
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_grid(data, path)


def parse_grid(data, name="<bytes>"):
    if not data.startswith(GRID_MAGIC):
        raise FormatError(f"{name}: not a GridFile (bad magic)")
    end = data.find(b"\n", len(GRID_MAGIC))
    if end < 0:
        raise FormatError(f"{name}: truncated GridFile header")
    try:
        width, height = (int(v) for v in data[len(GRID_MAGIC):end].decode("ascii").split(" "))
    except ValueError:
        raise FormatError(f"{name}: malformed GridFile dimensions") from None
    if width < 1 or height < 1:
        raise FormatError(f"{name}: nonpositive GridFile dimensions")
    payload = data[end + 1:]
    if len(payload) != 8 * width * height:
        raise FormatError(
            f"{name}: payload has {len(payload)} bytes, expected {8 * width * height}"
        )
    arr = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(height, width)
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{name}: GridFile contains non-finite values")
    return arr


def _pgm_tokens(data, count):
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise FormatError("truncated PGM header")
        if data[pos:pos + 1] == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def parse_pgm(data, name="<bytes>"):
    tokens, offset = _pgm_tokens(data, 4)
    if tokens[0] != PGM_MAGIC:
        raise FormatError(f"{name}: only binary PGM (P5) is supported")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError(f"{name}: malformed PGM header") from None
    if maxval != 255:
        raise FormatError(f"{name}: PGM maxval must be 255, got {maxval}")
    raster = data[offset:offset + width * height]
    if len(raster) != width * height:
        raise FormatError(f"{name}: truncated PGM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).astype(np.float64)


def read_pgm(path):
    with open(path, "rb") as fh:
        return parse_pgm(fh.read(), path)


def to_bytes(values):
    """Clamp to [0, 255] and round half to even."""
    return np.rint(np.clip(np.asarray(values, dtype=np.float64), 0.0, 255.0)).astype(np.uint8)


def write_pgm(path, values):
    img = to_bytes(values)
    height, width = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_image(path):
    """Read a GridFile or a P5 PGM, chosen by magic bytes. PGM bytes map to values unchanged."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data.startswith(GRID_MAGIC):
        return parse_grid(data, path)
    if data.startswith(PGM_MAGIC):
        return parse_pgm(data, path)
    raise FormatError(f"{path}: unrecognized image format (expected P5 PGM or GridFile)")


def preview_path(path):
    path = str(path)
    stem = path[:-len(".f64grid")] if path.endswith(".f64grid") else path
    return stem + ".preview.pgm"
