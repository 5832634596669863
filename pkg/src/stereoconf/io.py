"""Readers and writers for the disparity/confidence file formats.

Disparity travels as PFM (32-bit float, rows stored bottom-to-top, header
scale sign encoding endianness) or as 16-bit grayscale PNG with
disparity = raw/256 and raw 0 meaning invalid.  Confidence travels as
16-bit grayscale PNG with confidence = raw/65535, or as PFM.  Metric
outputs are emitted as CSV (header row, LF endings) and JSON (no NaN).
"""

from __future__ import annotations

import csv
import io as _io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .maps import ConfidenceMap, DisparityMap
from .metrics import EvalReport, SparsificationCurve

# PFM samples at or beyond this magnitude encode missing measurements
# (some datasets use huge disparities instead of inf).
PFM_INVALID_LIMIT = 1e4

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_WHITESPACE = b" \t\n\r\f\v"


class FormatError(Exception):
    """The byte stream does not match the declared file format."""


@dataclass(frozen=True)
class PfmImage:
    """Decoded PFM payload: top-down float32 samples, original scale kept.

    ``samples`` has shape (height, width) for 1-channel "Pf" files and
    (height, width, 3) for "PF" files.
    """

    samples: np.ndarray
    scale: float

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.samples.ndim == 2 else self.samples.shape[2]


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Next whitespace-delimited token and the index just past it."""
    n = len(data)
    while pos < n and data[pos : pos + 1] in _WHITESPACE:
        pos += 1
    start = pos
    while pos < n and data[pos : pos + 1] not in _WHITESPACE:
        pos += 1
    if start == pos:
        raise FormatError("truncated header")
    return data[start:pos], pos


def read_pfm(data: bytes) -> PfmImage:
    """Decode a PFM byte stream.

    Header is three whitespace-separated fields (magic, "width height",
    scale) with exactly one whitespace byte between the scale and the raw
    samples; a negative scale means little-endian samples.  Rows are
    stored bottom-to-top and returned top-down.
    """
    magic, pos = _next_token(data, 0)
    if magic == b"Pf":
        channels = 1
    elif magic == b"PF":
        channels = 3
    else:
        raise FormatError(f"bad magic {magic!r}, expected b'Pf' or b'PF'")
    width_tok, pos = _next_token(data, pos)
    height_tok, pos = _next_token(data, pos)
    scale_tok, pos = _next_token(data, pos)
    try:
        width, height = int(width_tok), int(height_tok)
        scale = float(scale_tok)
    except ValueError as exc:
        raise FormatError(f"unparseable header field: {exc}") from exc
    if width <= 0 or height <= 0:
        raise FormatError(f"dimensions must be positive, got {width}x{height}")
    if scale == 0.0:
        raise FormatError("scale must be nonzero")

    offset = pos + 1
    count = width * height * channels
    if len(data) - offset < count * 4:
        raise FormatError(
            f"truncated payload: need {count * 4} sample bytes, have {len(data) - offset}"
        )
    dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
    flat = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
    shape = (height, width) if channels == 1 else (height, width, 3)
    samples = flat.reshape(shape)[::-1].copy()
    return PfmImage(samples, scale)


def write_pfm(disp: DisparityMap, path: str | Path) -> None:
    """Write a 1-channel little-endian PFM (scale -1.0, rows bottom-up).

    Invalid pixels are stored as the +inf sentinel; valid values must be
    finite.
    """
    if not np.isfinite(disp.values[disp.valid]).all():
        raise ValueError("valid disparities must be finite")
    samples = np.where(disp.valid, disp.values, np.inf)
    header = f"Pf\n{disp.width} {disp.height}\n-1.0\n".encode("ascii")
    payload = samples[::-1].astype("<f4").tobytes()
    Path(path).write_bytes(header + payload)


def pfm_to_disparity(img: PfmImage) -> DisparityMap:
    """1-channel PFM samples as a disparity map.

    Non-finite samples and magnitudes above ``PFM_INVALID_LIMIT`` are
    marked invalid.
    """
    if img.channels != 1:
        raise FormatError(f"disparity PFM must be 1-channel, got {img.channels}")
    values = img.samples.astype(np.float64)
    valid = np.isfinite(values) & (np.abs(values) <= PFM_INVALID_LIMIT)
    return DisparityMap(values, valid)


def pfm_to_confidence(img: PfmImage) -> ConfidenceMap:
    """1-channel PFM samples as a confidence map (all samples in [0, 1])."""
    if img.channels != 1:
        raise FormatError(f"confidence PFM must be 1-channel, got {img.channels}")
    values = img.samples.astype(np.float64)
    if not np.isfinite(values).all():
        raise FormatError("confidence PFM contains non-finite samples")
    return ConfidenceMap(values)


def _read_png_u16(data: bytes) -> np.ndarray:
    """Decode a 16-bit single-channel grayscale PNG to a uint16 grid."""
    if data[:8] != _PNG_SIGNATURE:
        raise FormatError("not a PNG stream")
    # IHDR is always the first chunk: bit depth and color type live at
    # fixed offsets 24 and 25.
    if len(data) < 26:
        raise FormatError("truncated PNG header")
    bit_depth, color_type = data[24], data[25]
    if bit_depth != 16 or color_type != 0:
        raise FormatError(
            f"need 16-bit grayscale PNG, got bit depth {bit_depth}, color type {color_type}"
        )
    with Image.open(_io.BytesIO(data)) as img:
        arr = np.asarray(img)
    return arr.astype(np.uint16)


def _write_png_u16(raw: np.ndarray, path: str | Path) -> None:
    Image.fromarray(raw.astype(np.uint16)).save(Path(path), format="PNG")


def read_kitti_disparity(data: bytes) -> DisparityMap:
    """16-bit PNG to disparity: value = raw/256, raw 0 means invalid."""
    raw = _read_png_u16(data)
    return DisparityMap(raw.astype(np.float64) / 256.0, raw != 0)


def write_kitti_disparity(disp: DisparityMap, path: str | Path) -> None:
    """Disparity to 16-bit PNG: raw = round(d*256) clipped to [1, 65535].

    Invalid pixels are stored as raw 0; the clip floor of 1 keeps small
    valid disparities from colliding with the invalid sentinel.
    """
    scaled = np.floor(disp.values * 256.0 + 0.5)
    raw = np.clip(scaled, 1, 65535).astype(np.uint16)
    raw[~disp.valid] = 0
    _write_png_u16(raw, path)


def read_confidence_png(data: bytes) -> ConfidenceMap:
    """16-bit PNG to confidence: value = raw/65535."""
    raw = _read_png_u16(data)
    return ConfidenceMap(raw.astype(np.float64) / 65535.0)


def write_confidence_png(conf: ConfidenceMap, path: str | Path) -> None:
    """Confidence to 16-bit PNG: raw = round(c*65535), half away from zero."""
    raw = np.floor(conf.values * 65535.0 + 0.5).astype(np.uint16)
    _write_png_u16(raw, path)


def load_disparity(path: str | Path) -> DisparityMap:
    """Read a disparity map, picking the format from the file extension."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pfm":
        return pfm_to_disparity(read_pfm(path.read_bytes()))
    if suffix == ".png":
        return read_kitti_disparity(path.read_bytes())
    raise FormatError(f"unsupported disparity format {suffix!r} (expected .pfm or .png)")


def load_confidence(path: str | Path) -> ConfidenceMap:
    """Read a confidence map, picking the format from the file extension."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pfm":
        return pfm_to_confidence(read_pfm(path.read_bytes()))
    if suffix == ".png":
        return read_confidence_png(path.read_bytes())
    raise FormatError(f"unsupported confidence format {suffix!r} (expected .pfm or .png)")


def _write_csv(path: str | Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.9g}" for v in row])


def write_curve_csv(curve: SparsificationCurve, path: str | Path) -> None:
    """Sparsification curve as CSV with columns density,error_rate."""
    _write_csv(path, ["density", "error_rate"], curve.points)


def write_scan_csv(scan: np.ndarray, path: str | Path) -> None:
    """Loss-versus-confidence scan as CSV with columns c,total."""
    _write_csv(path, ["c", "total"], scan)


def write_report_json(report: EvalReport, path: str | Path) -> None:
    """EvalReport as UTF-8 JSON; fields that are None are omitted."""
    write_json(report.to_json_dict(), path)


def write_json(payload: dict, path: str | Path) -> None:
    text = json.dumps(payload, indent=2, allow_nan=False, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")
