"""Suzuki-Abe border following on binary masks.

Foreground is 8-connected, background 4-connected. Contours come out in
raster order of their starting pixel, each as an ordered loop of
``(x, y)`` pixel coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

# Neighbour offsets (drow, dcol) in counter-clockwise order, starting east.
# Rows grow downward, so "north" is drow = -1.
_OFFSETS = ((0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1))


@dataclass(frozen=True)
class Contour:
    points: np.ndarray  # (n, 2) int array of (x, y)
    kind: str  # "outer" or "hole"

    def __len__(self) -> int:
        return len(self.points)


def _direction(di: int, dj: int) -> int:
    return _OFFSETS.index((di, dj))


def find_contours(mask) -> list[Contour]:
    """Trace all outer and hole borders of a binary mask."""
    m = np.asarray(mask) != 0
    h, w = m.shape
    if not m.any():
        return []
    W = w + 2
    padded = np.zeros((h + 2, W), dtype=np.int8)
    padded[1:-1, 1:-1] = m
    # Only pixels with a zero left or right neighbour can start a border; the
    # zero pixels never change, so this superset can be computed up front.
    starts = (padded == 1) & ((np.roll(padded, 1, axis=1) == 0) | (np.roll(padded, -1, axis=1) == 0))
    start_idx = np.flatnonzero(starts).tolist()

    f = padded.astype(np.int64).ravel().tolist()
    offs = [di * W + dj for di, dj in _OFFSETS]
    contours: list[Contour] = []
    nbd = 1

    for p in start_idx:
        fp = f[p]
        if fp == 1 and f[p - 1] == 0:
            kind, from_dir = "outer", 4
        elif fp >= 1 and f[p + 1] == 0:
            kind, from_dir = "hole", 0
        else:
            continue
        nbd += 1
        pts = _follow(f, p, from_dir, nbd, offs)
        arr = np.array(pts, dtype=np.int64)
        xy = np.stack([arr % W - 1, arr // W - 1], axis=1)
        contours.append(Contour(xy, kind))
    return contours


def _follow(f: list, p: int, from_dir: int, nbd: int, offs: list) -> list:
    # (3.1) clockwise search around the start pixel, beginning at from_dir.
    first = -1
    for k in range(8):
        d = (from_dir - k) & 7
        if f[p + offs[d]] != 0:
            first = d
            break
    if first < 0:
        f[p] = -nbd
        return [p]

    p1 = p + offs[first]
    p2_dir_from_p3 = first  # direction from current pixel p3 to previous pixel p2
    p3 = p
    pts = [p]
    while True:
        # (3.3) counter-clockwise search starting just after p2.
        east_zero = False
        d = p2_dir_from_p3
        for _ in range(8):
            d = (d + 1) & 7
            q = p3 + offs[d]
            if f[q] != 0:
                break
            if d == 0:
                east_zero = True
        p4 = q
        # (3.4) marking
        if east_zero:
            f[p3] = -nbd
        elif f[p3] == 1:
            f[p3] = nbd
        # (3.5)
        if p4 == p and p3 == p1:
            return pts
        # direction from p4 back to p3 is the opposite of d
        p2_dir_from_p3 = (d + 4) & 7
        p3 = p4
        pts.append(p3)


def fill_contour(contour: Contour, shape) -> tuple[tuple[slice, slice], np.ndarray]:
    """Pixels on or enclosed by a contour.

    Returns ``(window, region)`` where ``region`` is a boolean array covering
    ``image[window]``; this keeps filling cheap for many small contours.
    """
    h, w = shape[:2]
    xs, ys = contour.points[:, 0], contour.points[:, 1]
    y0, y1 = max(int(ys.min()) - 1, 0), min(int(ys.max()) + 2, h)
    x0, x1 = max(int(xs.min()) - 1, 0), min(int(xs.max()) + 2, w)
    border = np.zeros((y1 - y0 + 2, x1 - x0 + 2), dtype=bool)
    border[ys - y0 + 1, xs - x0 + 1] = True
    region = ndimage.binary_fill_holes(border)[1:-1, 1:-1]
    return (slice(y0, y1), slice(x0, x1)), region


def fill_contours(contours, shape) -> np.ndarray:
    """Union of the filled interiors of the given contours."""
    out = np.zeros(shape[:2], dtype=bool)
    for c in contours:
        win, region = fill_contour(c, shape)
        out[win] |= region
    return out
