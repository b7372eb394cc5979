"""Gray-level texture matrices over small square windows.

Every builder takes quantized windows shaped ``(side, side)`` or a batch
``(n, side, side)`` and returns integer count matrices with the same
leading batch shape. Gray levels run ``1..NG``; matrix row ``i - 1`` holds
level ``i``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

NG = 32
BIN_WIDTH = 8
WINDOW_SIDES = (7, 11)
DISTANCES = (1, 2, 3)
CUTOFFS = (0, 1, 2)


def extract_windows(plane, xs, ys, side: int) -> np.ndarray:
    """``(n, side, side)`` windows centred on ``(xs, ys)``, mirror-padded."""
    plane = np.asarray(plane)
    half = side // 2
    padded = np.pad(plane, half, mode="reflect")
    view = sliding_window_view(padded, (side, side))
    return view[np.asarray(ys, dtype=np.intp), np.asarray(xs, dtype=np.intp)]


def quantize(values) -> np.ndarray:
    """Fixed-width binning: ``level = value // 8 + 1`` in ``1..32``."""
    return (np.asarray(values).astype(np.int64) // BIN_WIDTH) + 1


def _batched(q) -> tuple[np.ndarray, tuple]:
    q = np.asarray(q, dtype=np.int64)
    if q.ndim < 2 or q.shape[-1] != q.shape[-2]:
        raise ValueError(f"expected square windows, got shape {q.shape}")
    lead = q.shape[:-2]
    return q.reshape((-1,) + q.shape[-2:]), lead


def _count(batch_idx, level_idx, col_idx, n, ncols) -> np.ndarray:
    flat = (batch_idx * NG + level_idx) * ncols + col_idx
    return np.bincount(flat.ravel(), minlength=n * NG * ncols).reshape(n, NG, ncols)


def glcm_offsets(delta: int) -> tuple[tuple[int, int], ...]:
    """(drow, dcol) offsets for 0, 45, 90 and 135 degrees, scaled by delta."""
    return ((0, delta), (-delta, delta), (-delta, 0), (-delta, -delta))


def glcm(q, delta: int) -> np.ndarray:
    """Symmetric co-occurrence counts summed over the four directions."""
    qb, lead = _batched(q)
    n, s, _ = qb.shape
    if not 1 <= delta < s:
        raise ValueError(f"distance {delta} invalid for window side {s}")
    b = np.arange(n)[:, None, None]
    P = np.zeros((n, NG, NG), dtype=np.int64)
    for dr, dc in glcm_offsets(delta):
        r0, r1 = max(0, -dr), s - max(0, dr)
        c0, c1 = max(0, -dc), s - max(0, dc)
        a = qb[:, r0:r1, c0:c1] - 1
        nb = qb[:, r0 + dr:r1 + dr, c0 + dc:c1 + dc] - 1
        P += _count(np.broadcast_to(b, a.shape), a, nb, n, NG)
    P = P + P.transpose(0, 2, 1)
    return P.reshape(lead + (NG, NG))


@lru_cache(maxsize=None)
def _run_lines(side: int) -> np.ndarray:
    """Flat pixel indices along every line of the four run directions.

    Rows are padded to length ``side`` with -1.
    """
    idx = np.arange(side * side).reshape(side, side)
    lines = []
    lines.extend(idx)  # 0 degrees
    lines.extend(idx.T)  # 90 degrees
    for k in range(-(side - 1), side):
        lines.append(np.diagonal(idx, k))  # 135 degrees
        lines.append(np.diagonal(idx[::-1], k))  # 45 degrees
    out = np.full((len(lines), side), -1, dtype=np.int64)
    for r, ln in enumerate(lines):
        out[r, : len(ln)] = ln
    return out


def glrlm(q) -> np.ndarray:
    """Run-length counts ``(.., NG, side)``; column ``j - 1`` is run length ``j``."""
    qb, lead = _batched(q)
    n, s, _ = qb.shape
    lines = _run_lines(s)
    vals = qb.reshape(n, -1)[:, np.maximum(lines, 0)]
    vals[:, lines < 0] = 0
    pos = np.arange(s)
    diff = vals[:, :, 1:] != vals[:, :, :-1]
    start = np.ones(vals.shape, dtype=bool)
    start[:, :, 1:] = diff
    end = np.ones(vals.shape, dtype=bool)
    end[:, :, :-1] = diff
    start_pos = np.maximum.accumulate(np.where(start, pos, 0), axis=2)
    sel = end & (vals > 0)
    bi, _, ki = np.nonzero(sel)
    length = ki - start_pos[sel]
    P = _count(bi, vals[sel] - 1, length, n, s)
    return P.reshape(lead + (NG, s))


_ZONE_STRUCTURE = np.zeros((3, 3, 3), dtype=bool)
_ZONE_STRUCTURE[1] = True


def glszm(q) -> np.ndarray:
    """8-connected same-level zone counts ``(.., NG, side**2)``."""
    qb, lead = _batched(q)
    n, s, _ = qb.shape
    ss = s * s
    P = np.zeros((n, NG, ss), dtype=np.int64)
    flat_batch = np.arange(n * ss) // ss
    for level in np.unique(qb).tolist():
        lab, nz = ndimage.label(qb == level, structure=_ZONE_STRUCTURE)
        lab = lab.ravel()
        sizes = np.bincount(lab, minlength=nz + 1)[1:]
        owner = np.zeros(nz + 1, dtype=np.int64)
        hit = lab > 0
        owner[lab[hit]] = flat_batch[hit]
        P[:, level - 1, :] += np.bincount(
            owner[1:] * ss + (sizes - 1), minlength=n * ss
        ).reshape(n, ss)
    return P.reshape(lead + (NG, ss))


def _neighbour_offsets(delta: int):
    r = range(-delta, delta + 1)
    return [(dr, dc) for dr in r for dc in r if (dr, dc) != (0, 0)]


def gldm_columns(delta: int) -> int:
    return (2 * delta + 1) ** 2


def dependence(q, delta: int, alpha: int) -> np.ndarray:
    """Per-pixel count of in-window neighbours within Chebyshev distance
    ``delta`` whose level differs by at most ``alpha``."""
    qb, lead = _batched(q)
    n, s, _ = qb.shape
    pad = np.pad(qb, ((0, 0), (delta, delta), (delta, delta)), constant_values=-(10 ** 6))
    dep = np.zeros(qb.shape, dtype=np.int64)
    for dr, dc in _neighbour_offsets(delta):
        nb = pad[:, delta + dr:delta + dr + s, delta + dc:delta + dc + s]
        dep += np.abs(qb - nb) <= alpha
    return dep.reshape(lead + (s, s))


def gldm(q, delta: int, alpha: int) -> np.ndarray:
    """Dependence counts ``(.., NG, (2*delta+1)**2)``; column ``j`` is
    dependence ``j`` (zero included)."""
    qb, lead = _batched(q)
    n, s, _ = qb.shape
    dep = dependence(qb, delta, alpha)
    b = np.broadcast_to(np.arange(n)[:, None, None], qb.shape)
    P = _count(b, qb - 1, dep, n, gldm_columns(delta))
    return P.reshape(lead + (NG, gldm_columns(delta)))


def ngtdm(q, delta: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Neighbouring gray tone difference: per-level ``(n_i, p_i, s_i)``.

    ``s_i`` sums ``|i - mean neighbour level|`` over pixels of level ``i``,
    where neighbours are the in-window pixels within Chebyshev distance
    ``delta``, centre excluded.
    """
    qb, lead = _batched(q)
    n, s, _ = qb.shape
    qf = qb.astype(np.float64)
    pad = np.pad(qf, ((0, 0), (delta, delta), (delta, delta)))
    valid = np.pad(np.ones((s, s)), delta)
    total = np.zeros(qb.shape)
    for dr, dc in _neighbour_offsets(delta):
        total += pad[:, delta + dr:delta + dr + s, delta + dc:delta + dc + s]
    count = np.zeros((s, s))
    for dr, dc in _neighbour_offsets(delta):
        count += valid[delta + dr:delta + dr + s, delta + dc:delta + dc + s]
    diff = np.abs(qf - total / count)
    b = np.arange(n)[:, None, None] * NG + (qb - 1)
    counts = np.bincount(b.ravel(), minlength=n * NG).reshape(n, NG)
    sums = np.bincount(b.ravel(), weights=diff.ravel(), minlength=n * NG).reshape(n, NG)
    probs = counts / float(s * s)
    return (counts.reshape(lead + (NG,)), probs.reshape(lead + (NG,)),
            sums.reshape(lead + (NG,)))
