"""Image and annotation I/O.

Images are plain numpy arrays: RGB patches are ``(H, W, 3)`` uint8 and
single-channel planes (grayscale, haematoxylin, RNAscope) are ``(H, W)``
uint8. Point annotations use 0-based pixel coordinates with ``x`` the
column and ``y`` the row.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError


class ImageReadError(ValueError):
    """Raised when a patch file cannot be decoded as 8-bit RGB."""


class AnnotationError(ValueError):
    """Raised for malformed or out-of-bounds annotation files."""


def as_rgb(img) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"expected a non-empty (H, W, 3) image, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        raise ValueError(f"expected uint8 image, got {arr.dtype}")
    return arr


def as_channel(img) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a non-empty (H, W) plane, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        raise ValueError(f"expected uint8 plane, got {arr.dtype}")
    return arr


def round_half_up(x):
    """Round to nearest integer with halves going up (``floor(x + 0.5)``)."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def load_patch(path) -> np.ndarray:
    """Decode a PNG or TIFF patch into an ``(H, W, 3)`` uint8 array.

    Alpha is dropped. Anything that is not 8 bits per sample RGB(A), L or P
    is rejected rather than silently rescaled.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.format not in ("PNG", "TIFF"):
                raise ImageReadError(f"{path}: unsupported format {im.format}")
            if im.mode in ("RGB", "RGBA", "L", "P", "LA"):
                im.load()
                rgb = im.convert("RGB")
            else:
                raise ImageReadError(
                    f"{path}: unsupported bit depth / colour model {im.mode}"
                )
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageReadError(f"{path}: unreadable file ({exc})") from exc
    return np.array(rgb, dtype=np.uint8)


def save_patch(path, img) -> None:
    Image.fromarray(as_rgb(img), mode="RGB").save(Path(path))


def save_plane(path, plane) -> None:
    Image.fromarray(as_channel(plane), mode="L").save(Path(path))


def to_grayscale(img) -> np.ndarray:
    """BT.601 luma, rounded half-up to 8 bits."""
    rgb = as_rgb(img).astype(np.float64)
    gray = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.clip(round_half_up(gray), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class AnnotationSet:
    """Ordered point annotations for one patch.

    ``points`` is an ``(n, 2)`` float array of ``(x, y)`` pairs.
    """

    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    source: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AnnotationSet):
            return NotImplemented
        return self.source == other.source and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.source, self.points.tobytes()))


def _parse_coord(text: str, lineno: int, path) -> float:
    try:
        return float(text)
    except ValueError:
        raise AnnotationError(f"{path}: line {lineno}: bad coordinate {text!r}") from None


def load_annotations(path, shape=None, source: str | None = None) -> AnnotationSet:
    """Read an ``x,y`` CSV of point annotations.

    If ``shape`` (``(H, W)``) is given, rows outside the image raise
    :class:`AnnotationError`. Exact duplicate points are rejected.
    """
    path = Path(path)
    points = []
    seen = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["x", "y"]:
            raise AnnotationError(f"{path}: line 1: expected header 'x,y'")
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise AnnotationError(f"{path}: line {lineno}: expected 2 columns, got {len(row)}")
            x = _parse_coord(row[0], lineno, path)
            y = _parse_coord(row[1], lineno, path)
            if not (np.isfinite(x) and np.isfinite(y)):
                raise AnnotationError(f"{path}: line {lineno}: non-finite coordinate")
            if shape is not None:
                h, w = shape[:2]
                if not (0 <= x <= w - 1 and 0 <= y <= h - 1):
                    raise AnnotationError(f"{path}: line {lineno}: point ({x}, {y}) outside image")
            if (x, y) in seen:
                raise AnnotationError(f"{path}: line {lineno}: duplicate point ({x}, {y})")
            seen.add((x, y))
            points.append((x, y))
    return AnnotationSet(np.array(points, dtype=np.float64).reshape(-1, 2),
                         source=path.stem if source is None else source)


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def save_annotations(path, annotations: AnnotationSet) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y"])
        for x, y in annotations.points:
            writer.writerow([_fmt(x), _fmt(y)])
