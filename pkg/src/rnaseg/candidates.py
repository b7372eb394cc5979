"""Candidate pixel selection from the RNAscope and grayscale planes.

The RNAscope plane is blurred and thresholded at its histogram mode, sub-
threshold and very dark regions are traced and painted onto a mask, and
candidates are then pulled off the mask darkest-first. Each pick blanks a
disc whose radius grows as the pick gets closer to the threshold, so weak
detections suppress their surroundings while strong ones can cluster.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .contours import Contour, fill_contour, find_contours
from .imgcore import as_channel, round_half_up

BLUR_SIGMA = 1.1
BLUR_SIZE = 5
HISTOGRAM_MAX = 250
THRESHOLD_DECREMENT = 8
TISSUE_FRACTION = 0.5
DARK_CUTOFF = 100
DARK_FILL_OFFSET = 11


class NoTissueError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Candidate:
    x: int
    y: int
    intensity: int
    radius: int


@dataclass(frozen=True)
class CandidateMask:
    data: np.ndarray
    thresh: int


def gaussian_kernel1d(sigma: float = BLUR_SIGMA, size: int = BLUR_SIZE) -> np.ndarray:
    half = size // 2
    k = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(k ** 2) / (2.0 * sigma ** 2))
    return g / g.sum()


def gaussian_blur5(img, sigma: float = BLUR_SIGMA) -> np.ndarray:
    """5x5 separable Gaussian blur with mirrored borders, rounded to uint8."""
    plane = as_channel(img).astype(np.float64)
    g = gaussian_kernel1d(sigma)
    out = ndimage.correlate1d(plane, g, axis=0, mode="mirror")
    out = ndimage.correlate1d(out, g, axis=1, mode="mirror")
    return np.clip(round_half_up(out), 0, 255).astype(np.uint8)


def select_threshold(blurred_rnascope, decrement: int = THRESHOLD_DECREMENT) -> int:
    """Histogram-mode threshold over tissue pixels (values <= 250).

    If more than half of the tissue lies below the mode, the threshold is
    lowered once by ``decrement``.
    """
    plane = as_channel(blurred_rnascope)
    hist = np.bincount(plane.ravel(), minlength=256)[: HISTOGRAM_MAX + 1]
    tissue = int(hist.sum())
    if tissue == 0:
        raise NoTissueError("no tissue: every pixel is above 250")
    thresh = int(np.argmax(hist))
    below = int(hist[:thresh].sum())
    if below / tissue > TISSUE_FRACTION:
        thresh = max(thresh - decrement, 0)
    return thresh


def dark_regions(blurred_gray, cutoff: int = DARK_CUTOFF) -> np.ndarray:
    return (as_channel(blurred_gray) < cutoff).astype(np.uint8)


def exclusion_radius(intensity, thresh):
    """``floor(max(intensity - thresh + 64, 0) / 32)``, exact in integers."""
    diff = np.asarray(intensity, dtype=np.int64) - np.asarray(thresh, dtype=np.int64) + 64
    r = np.maximum(diff, 0) // 32
    return int(r) if r.ndim == 0 else r


def build_mask(
    blurred_rnascope,
    thresh: int,
    rna_contours: list[Contour],
    dark_contours: list[Contour],
    dark_offset: int = DARK_FILL_OFFSET,
) -> CandidateMask:
    plane = as_channel(blurred_rnascope)
    shape = plane.shape
    data = np.full(shape, thresh, dtype=np.int32)
    rna_vals = np.minimum(plane.astype(np.int32), max(thresh - 1, 0))
    dark_val = max(thresh - dark_offset, 0)
    for c in rna_contours:
        if c.kind != "outer":
            continue  # holes lie inside their outer border's fill
        win, region = fill_contour(c, shape)
        sub = data[win]
        np.minimum(sub, np.where(region, rna_vals[win], thresh), out=sub)
    for c in dark_contours:
        if c.kind != "outer":
            continue
        win, region = fill_contour(c, shape)
        sub = data[win]
        sub[region] = np.minimum(sub[region], dark_val)
    return CandidateMask(data.astype(np.uint8), int(thresh))


def _disc_offsets(radius: int) -> np.ndarray:
    r = np.arange(-radius, radius + 1)
    dy, dx = np.meshgrid(r, r, indexing="ij")
    keep = dx * dx + dy * dy <= radius * radius
    return np.stack([dy[keep], dx[keep]], axis=1)


def paint_disc(img: np.ndarray, x: int, y: int, radius: int, value, combine=None) -> None:
    """Paint a filled disc (pixels with centre distance <= radius) in place."""
    h, w = img.shape
    offs = _disc_offsets(radius)
    ys, xs = offs[:, 0] + y, offs[:, 1] + x
    ok = (ys >= 0) & (ys < h) & (xs >= 0) & (xs < w)
    ys, xs = ys[ok], xs[ok]
    if combine is None:
        img[ys, xs] = value
    else:
        img[ys, xs] = combine(img[ys, xs], value)


def extract_candidates(mask: CandidateMask) -> list[Candidate]:
    """Greedy darkest-first candidate extraction.

    Painting only ever raises pixels back to ``thresh``, so repeatedly taking
    the global minimum is the same as walking the sub-threshold pixels in
    (value, row, column) order and skipping those already painted over.
    """
    data = np.asarray(mask.data)
    thresh = mask.thresh
    h, w = data.shape
    ys, xs = np.nonzero(data < thresh)
    if len(ys) == 0:
        return []
    vals = data[ys, xs].astype(np.int64)
    order = np.lexsort((xs, ys, vals))
    covered = np.zeros((h, w), dtype=bool)
    discs = {}
    out = []
    for k in order.tolist():
        y, x = int(ys[k]), int(xs[k])
        if covered[y, x]:
            continue
        v = int(vals[k])
        r = exclusion_radius(v, thresh)
        out.append(Candidate(x, y, v, r))
        if r == 0:
            covered[y, x] = True
        else:
            offs = discs.get(r)
            if offs is None:
                offs = discs[r] = _disc_offsets(r)
            py, px = offs[:, 0] + y, offs[:, 1] + x
            ok = (py >= 0) & (py < h) & (px >= 0) & (px < w)
            covered[py[ok], px[ok]] = True
    return out


def select_candidates(rnascope, gray, *, decrement: int = THRESHOLD_DECREMENT,
                      dark_cutoff: int = DARK_CUTOFF, dark_offset: int = DARK_FILL_OFFSET,
                      sigma: float = BLUR_SIGMA):
    """Run the whole selection stage on unblurred planes.

    Returns ``(candidates, mask)``.
    """
    blur_rna = gaussian_blur5(rnascope, sigma)
    blur_gray = gaussian_blur5(gray, sigma)
    thresh = select_threshold(blur_rna, decrement)
    rna_contours = find_contours(blur_rna < thresh)
    dark_contours = find_contours(dark_regions(blur_gray, dark_cutoff))
    mask = build_mask(blur_rna, thresh, rna_contours, dark_contours, dark_offset)
    return extract_candidates(mask), mask


def candidates_to_array(cands) -> np.ndarray:
    """``(n, 4)`` int array of x, y, intensity, radius."""
    if not cands:
        return np.zeros((0, 4), dtype=np.int64)
    return np.array([(c.x, c.y, c.intensity, c.radius) for c in cands], dtype=np.int64)
