"""Per-candidate feature vectors over three planes and two window sizes.

The column layout is fixed by :func:`manifest`. The full set has 263
features per (channel, window) context, 1578 in total; the reduced set keeps
energy, variance, NGTDM coarseness at distance 3 and GLDM LDHGLE at distance
3 / cutoff 2, giving 24 columns. Reduced values are computed by the same
code paths as the full set, so they are bit-identical to the matching
full-set columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import features as F
from .matrices import (CUTOFFS, DISTANCES, WINDOW_SIDES, extract_windows, glcm, gldm,
                       glrlm, glszm, ngtdm, quantize)

CHANNELS = ("gray", "haem", "rnascope")
FEATURE_SETS = ("full", "reduced")
REDUCED_DISTANCE = 3
REDUCED_CUTOFF = 2
CHUNK = 512


@dataclass(frozen=True)
class FeatureSpec:
    channel: str
    window: int
    family: str
    name: str
    delta: int | None = None
    alpha: int | None = None

    @property
    def column(self) -> str:
        parts = [self.channel, f"w{self.window}", self.family]
        if self.delta is not None:
            parts.append(f"d{self.delta}")
        if self.alpha is not None:
            parts.append(f"a{self.alpha}")
        parts.append(self.name)
        return "_".join(parts)


def _context_specs(channel: str, window: int) -> list[FeatureSpec]:
    out = [FeatureSpec(channel, window, "firstorder", n) for n in F.FIRSTORDER_NAMES]
    for d in DISTANCES:
        out += [FeatureSpec(channel, window, "glcm", n, d) for n in F.GLCM_NAMES]
    out += [FeatureSpec(channel, window, "glrlm", n) for n in F.GLRLM_NAMES]
    out += [FeatureSpec(channel, window, "glszm", n) for n in F.GLSZM_NAMES]
    for d in DISTANCES:
        for a in CUTOFFS:
            out += [FeatureSpec(channel, window, "gldm", n, d, a) for n in F.GLDM_NAMES]
    for d in DISTANCES:
        out += [FeatureSpec(channel, window, "ngtdm", n, d) for n in F.NGTDM_NAMES]
    return out


def _reduced_specs(channel: str, window: int) -> list[FeatureSpec]:
    return [
        FeatureSpec(channel, window, "firstorder", "Energy"),
        FeatureSpec(channel, window, "firstorder", "Variance"),
        FeatureSpec(channel, window, "ngtdm", "Coarseness", REDUCED_DISTANCE),
        FeatureSpec(channel, window, "gldm", "LargeDependenceHighGrayLevelEmphasis",
                    REDUCED_DISTANCE, REDUCED_CUTOFF),
    ]


@lru_cache(maxsize=None)
def manifest(feature_set: str = "reduced") -> tuple[FeatureSpec, ...]:
    if feature_set not in FEATURE_SETS:
        raise ValueError(f"unknown feature set {feature_set!r}")
    build = _context_specs if feature_set == "full" else _reduced_specs
    return tuple(s for c in CHANNELS for w in WINDOW_SIDES for s in build(c, w))


def column_names(feature_set: str = "reduced") -> list[str]:
    return [s.column for s in manifest(feature_set)]


def reduced_indices() -> np.ndarray:
    """Positions of the reduced columns inside the full layout."""
    full = {s: k for k, s in enumerate(manifest("full"))}
    return np.array([full[s] for s in manifest("reduced")], dtype=np.intp)


def _context_full(win: np.ndarray) -> np.ndarray:
    side = win.shape[-1]
    q = quantize(win)
    cols = [F.firstorder(win, q)]
    for d in DISTANCES:
        cols.append(F.glcm_features(glcm(q, d)))
    cols.append(F.glrlm_features(glrlm(q), side))
    cols.append(F.glszm_features(glszm(q), side))
    for d in DISTANCES:
        for a in CUTOFFS:
            cols.append(F.gldm_features(gldm(q, d, a)))
    for d in DISTANCES:
        _, p, s = ngtdm(q, d)
        cols.append(F.ngtdm_features(p, s, float(side * side)))
    return np.concatenate(cols, axis=1)


def _context_reduced(win: np.ndarray) -> np.ndarray:
    q = quantize(win)
    _, p, s = ngtdm(q, REDUCED_DISTANCE)
    return np.stack([
        F.energy(win),
        F.variance(win),
        F.coarseness(p, s),
        F.ldhgle(gldm(q, REDUCED_DISTANCE, REDUCED_CUTOFF)),
    ], axis=1)


def _coords(candidates) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(candidates, np.ndarray):
        arr = candidates.reshape(-1, candidates.shape[-1]) if candidates.size else np.zeros((0, 2))
        return arr[:, 0].astype(np.intp), arr[:, 1].astype(np.intp)
    xs = np.array([c.x for c in candidates], dtype=np.intp)
    ys = np.array([c.y for c in candidates], dtype=np.intp)
    return xs, ys


def extract_features(channels, candidates, feature_set: str = "reduced",
                     chunk: int = CHUNK) -> np.ndarray:
    """Feature matrix ``(n_candidates, len(manifest(feature_set)))``.

    ``channels`` is ``(gray, haem, rnascope)``; ``candidates`` a sequence of
    objects with ``x``/``y`` attributes or an array whose first two columns
    are x, y.
    """
    if feature_set not in FEATURE_SETS:
        raise ValueError(f"unknown feature set {feature_set!r}")
    planes = [np.asarray(c) for c in channels]
    if len(planes) != len(CHANNELS):
        raise ValueError("expected (gray, haem, rnascope) planes")
    h, w = planes[0].shape
    xs, ys = _coords(candidates)
    if len(xs) and (xs.min() < 0 or ys.min() < 0 or xs.max() >= w or ys.max() >= h):
        raise ValueError("candidate outside image bounds")
    ncols = len(manifest(feature_set))
    out = np.empty((len(xs), ncols))
    ctx = _context_full if feature_set == "full" else _context_reduced
    for lo in range(0, len(xs), chunk):
        hi = min(lo + chunk, len(xs))
        blocks = []
        for plane in planes:
            for side in WINDOW_SIDES:
                blocks.append(ctx(extract_windows(plane, xs[lo:hi], ys[lo:hi], side)))
        out[lo:hi] = np.concatenate(blocks, axis=1)
    return out


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    specs: tuple[FeatureSpec, ...]

    def __len__(self) -> int:
        return len(self.values)

    def as_dict(self) -> dict[str, float]:
        return {s.column: float(v) for s, v in zip(self.specs, self.values)}


def extract_full(channels, candidate) -> FeatureVector:
    return FeatureVector(extract_features(channels, [candidate], "full")[0], manifest("full"))


def extract_reduced(channels, candidate) -> FeatureVector:
    return FeatureVector(extract_features(channels, [candidate], "reduced")[0],
                         manifest("reduced"))
