"""Classifier scores -> segmentation map -> detection coordinates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from skimage.morphology import local_maxima
from skimage.segmentation import watershed

from .candidates import paint_disc
from .imgcore import round_half_up

GRAY_THRESHOLD = 132
AREA_THRESHOLD = 2
_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class Detection:
    x: float
    y: float
    area: int
    peak: int


def confidence(margins) -> np.ndarray:
    """``round(255 * logistic(margin))`` as uint8."""
    m = np.asarray(margins, dtype=np.float64)
    with np.errstate(over="ignore"):
        prob = 1.0 / (1.0 + np.exp(-m))
    return np.clip(round_half_up(255.0 * prob), 0, 255).astype(np.uint8)


def render_map(cands, margins, shape) -> np.ndarray:
    """Paint each candidate's exclusion disc with its confidence; max wins."""
    cands = list(cands)
    margins = np.asarray(margins, dtype=np.float64).ravel()
    if len(cands) != len(margins):
        raise ValueError("candidates and margins differ in length")
    out = np.zeros(shape[:2], dtype=np.uint8)
    for c, v in zip(cands, confidence(margins).tolist()):
        if c.radius == 0:
            if v > out[c.y, c.x]:
                out[c.y, c.x] = v
        else:
            paint_disc(out, c.x, c.y, c.radius, v, np.maximum)
    return out


def segment_regions(seg_map, gray_threshold: int = GRAY_THRESHOLD) -> np.ndarray:
    """Watershed labels of the binarised map.

    Seeds are the local-maximum plateaus of the unthresholded map that survive
    binarisation; every plateau becomes a single marker.
    """
    seg = np.asarray(seg_map)
    fg = (seg >= gray_threshold) & (seg > 0)  # 0 is background at any threshold
    if not fg.any():
        return np.zeros(seg.shape, dtype=np.int32)
    # a zero frame makes a plateau that fills the whole map count as a maximum
    peaks = local_maxima(np.pad(seg, 1), connectivity=2)[1:-1, 1:-1] & fg
    markers, _ = ndimage.label(peaks, structure=_EIGHT)
    return watershed(-seg.astype(np.int32), markers, mask=fg, connectivity=2)


def regions_to_detections(labels, seg_map, area_threshold: int = AREA_THRESHOLD):
    """Confidence-weighted centroids of regions with at least ``area_threshold``
    pixels, ordered by (y, x)."""
    labels = np.asarray(labels)
    n = int(labels.max()) if labels.size else 0
    if n == 0:
        return []
    seg = np.asarray(seg_map, dtype=np.float64)
    idx = np.arange(1, n + 1)
    area = ndimage.sum_labels(np.ones_like(seg), labels, idx)
    wsum = ndimage.sum_labels(seg, labels, idx)
    ys, xs = np.indices(seg.shape)
    cy = ndimage.sum_labels(seg * ys, labels, idx)
    cx = ndimage.sum_labels(seg * xs, labels, idx)
    peak = ndimage.maximum(seg, labels, idx)
    out = []
    for k in range(n):
        if area[k] < area_threshold or area[k] == 0:
            continue
        out.append(Detection(float(cx[k] / wsum[k]), float(cy[k] / wsum[k]),
                             int(area[k]), int(peak[k])))
    out.sort(key=lambda d: (d.y, d.x))
    return out


def detect(seg_map, gray_threshold: int = GRAY_THRESHOLD,
           area_threshold: int = AREA_THRESHOLD) -> list[Detection]:
    if not 0 <= gray_threshold <= 255:
        raise ValueError("gray_threshold must lie in [0, 255]")
    if area_threshold < 1:
        raise ValueError("area_threshold must be at least 1")
    labels = segment_regions(seg_map, gray_threshold)
    return regions_to_detections(labels, seg_map, area_threshold)


def detections_to_array(dets) -> np.ndarray:
    if not dets:
        return np.zeros((0, 2))
    return np.array([(d.x, d.y) for d in dets], dtype=np.float64)
