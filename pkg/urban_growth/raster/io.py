"""
Raster file I/O: ESRI ASCII grid and binary PGM (P5).
"""

import logging
from pathlib import Path
from typing import Dict, Literal, Union

import numpy as np

from urban_growth.core.errors import GridIOError, GridParseError, LayerValidationError
from urban_growth.raster.layers import BinaryLayer, GrayLayer, Layer, ProbabilityMap, SlopeLayer

logger = logging.getLogger(__name__)

Kind = Literal["binary", "slope", "gray", "probability"]
Format = Literal["ascii", "pgm"]

PathLike = Union[str, Path]

# NODATA substitutes: non-urban for masks, undevelopable for slope
_NODATA_FILL = {"binary": 0.0, "slope": 100.0, "gray": 0.0, "probability": 0.0}

_ASCII_KEYS = (
    "ncols", "nrows", "xllcorner", "yllcorner", "xllcenter", "yllcenter",
    "cellsize", "dx", "dy", "nodata_value",
)


def detect_format(path: PathLike) -> Format:
    """Sniff the magic bytes; anything that is not P5 is treated as ASCII grid."""
    try:
        with open(path, "rb") as handle:
            magic = handle.read(2)
    except OSError as e:
        raise GridIOError(path, e.strerror or str(e)) from e
    return "pgm" if magic == b"P5" else "ascii"


def read_grid(path: PathLike, kind: Kind = "binary") -> Layer:
    """
    Read a layer from an ESRI ASCII grid or a binary PGM.

    Binary layers map any value > 0 to 1. Slope layers reject values outside
    [0,100]. Probability layers read real values (ASCII) or value/255 (PGM).
    """
    if kind not in _NODATA_FILL:
        raise ValueError(f"unknown layer kind {kind!r}")
    if detect_format(path) == "pgm":
        values = _read_pgm(path)
        if kind == "probability":
            values = values / 255.0
    else:
        values = _read_ascii(path, kind)
    logger.debug(f"Read {kind} grid {path} ({values.shape[0]}x{values.shape[1]})")
    return _to_layer(values, kind, path)


def _to_layer(values: np.ndarray, kind: Kind, path: PathLike) -> Layer:
    if kind == "binary":
        return BinaryLayer(values > 0)
    if kind == "slope":
        _check_slope(values, path)
        return SlopeLayer(values.astype(np.int16))
    if kind == "gray":
        if values.min() < 0 or values.max() > 255:
            raise GridParseError(path, "gray values must lie in [0,255]")
        return GrayLayer(np.floor(values + 0.5).astype(np.uint8))
    if values.min() < 0 or values.max() > 1:
        raise GridParseError(path, "probability values must lie in [0,1]")
    return ProbabilityMap(values)


def _check_slope(values: np.ndarray, path: PathLike) -> None:
    """Slope cells must be whole percent values in [0,100]."""
    checks = (
        ((values < 0) | (values > 100), "outside [0,100]"),
        (values != np.floor(values), "is not a whole percent"),
    )
    for mask, problem in checks:
        bad = np.argwhere(mask)
        if len(bad):
            r, c = (int(v) for v in bad[0])
            raise LayerValidationError(
                f"{path}: slope value {values[r, c]:g} {problem} (cell index {r * values.shape[1] + c})",
                layer="slope",
                cell=(r, c),
            )


def _read_text(path: PathLike) -> str:
    try:
        return Path(path).read_text(encoding="ascii")
    except UnicodeDecodeError as e:
        raise GridParseError(path, f"not an ASCII grid ({e.reason})") from e
    except OSError as e:
        raise GridIOError(path, e.strerror or str(e)) from e


def _read_ascii(path: PathLike, kind: Kind) -> np.ndarray:
    lines = _read_text(path).splitlines()
    header: Dict[str, float] = {}
    index = 0
    while index < len(lines):
        tokens = lines[index].split()
        if not tokens:
            index += 1
            continue
        key = tokens[0].lower()
        if not key[0].isalpha():
            break
        if key not in _ASCII_KEYS:
            raise GridParseError(path, f"unknown header key {tokens[0]!r}", line=index + 1)
        if len(tokens) != 2:
            raise GridParseError(path, f"header line {tokens[0]!r} needs exactly one value", line=index + 1)
        try:
            header[key] = float(tokens[1])
        except ValueError:
            raise GridParseError(path, f"header value {tokens[1]!r} is not numeric", line=index + 1) from None
        index += 1

    for key in ("ncols", "nrows"):
        if key not in header:
            raise GridParseError(path, f"missing header key {key}", line=index + 1)
        if header[key] != int(header[key]) or header[key] < 1:
            raise GridParseError(path, f"{key} must be a positive integer", line=index + 1)
    rows, cols = int(header["nrows"]), int(header["ncols"])

    chunks = []
    for line_no in range(index, len(lines)):
        tokens = lines[line_no].split()
        if not tokens:
            continue
        try:
            chunks.append(np.array(tokens, dtype=np.float64))
        except ValueError:
            raise GridParseError(path, "non-numeric cell value", line=line_no + 1) from None
    values = np.concatenate(chunks) if chunks else np.empty(0)
    if values.size != rows * cols:
        raise GridParseError(path, f"expected {rows * cols} cell values, found {values.size}")

    values = values.reshape(rows, cols)
    if "nodata_value" in header:
        values = np.where(values == header["nodata_value"], _NODATA_FILL[kind], values)
    return values


def _read_pgm(path: PathLike) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise GridIOError(path, e.strerror or str(e)) from e

    # Header: magic, width, height, maxval; '#' comments run to end of line
    tokens = []
    pos = 0
    line = 1
    while len(tokens) < 4:
        if pos >= len(data):
            raise GridParseError(path, "truncated PGM header", line=line)
        byte = data[pos:pos + 1]
        if byte == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end
            continue
        if byte.isspace():
            line += byte == b"\n"
            pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append((data[start:pos], line))
    pos += 1  # single whitespace byte before raster data

    if tokens[0][0] != b"P5":
        raise GridParseError(path, f"bad magic {tokens[0][0]!r}, expected P5", line=tokens[0][1])
    try:
        cols, rows, maxval = (int(tok) for tok, _ in tokens[1:])
    except ValueError:
        raise GridParseError(path, "non-integer PGM header field", line=tokens[-1][1]) from None
    if cols < 1 or rows < 1:
        raise GridParseError(path, "PGM dims must be positive", line=tokens[1][1])
    if not 0 < maxval <= 255:
        raise GridParseError(path, f"unsupported maxval {maxval}", line=tokens[3][1])

    raster = data[pos:pos + rows * cols]
    if len(raster) != rows * cols:
        raise GridParseError(path, f"expected {rows * cols} raster bytes, found {len(raster)}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(rows, cols).astype(np.float64)


def write_grid(layer: Layer, path: PathLike, format: Format = "ascii") -> None:
    """Write a layer; ``read_grid`` of the result reproduces it."""
    path = Path(path)
    try:
        if format == "ascii":
            path.write_text(_ascii_text(layer), encoding="ascii")
        elif format == "pgm":
            path.write_bytes(_pgm_bytes(layer))
        else:
            raise ValueError(f"unknown grid format {format!r}")
    except OSError as e:
        raise GridIOError(path, e.strerror or str(e)) from e
    logger.debug(f"Wrote {type(layer).__name__} to {path} ({format})")


def _ascii_text(layer: Layer) -> str:
    rows, cols = layer.cells.shape
    header = [
        f"ncols {cols}",
        f"nrows {rows}",
        "xllcorner 0",
        "yllcorner 0",
        "cellsize 1",
        "NODATA_value -9999",
    ]
    if isinstance(layer, ProbabilityMap):
        body = [" ".join(repr(float(v)) for v in row) for row in layer.cells]
    else:
        body = [" ".join(str(int(v)) for v in row) for row in layer.cells.astype(np.int64)]
    return "\n".join(header + body) + "\n"


def _pgm_bytes(layer: Layer) -> bytes:
    if isinstance(layer, BinaryLayer):
        pixels = layer.cells.astype(np.uint8) * 255
    elif isinstance(layer, ProbabilityMap):
        pixels = layer.to_gray().cells
    else:
        pixels = layer.cells.astype(np.uint8)
    rows, cols = pixels.shape
    return f"P5\n{cols} {rows}\n255\n".encode("ascii") + np.ascontiguousarray(pixels).tobytes()
