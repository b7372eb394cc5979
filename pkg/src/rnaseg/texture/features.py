"""Scalar texture features computed from windows and their matrices.

Formulas follow the usual radiomics definitions. All functions work on a
batch (leading axis ``n``) and never return NaN or inf: degenerate windows
fall back to 0, except NGTDM coarseness which is capped at ``1e6``.
"""

from __future__ import annotations

import numpy as np

from .matrices import NG

COARSENESS_CAP = 1e6

FIRSTORDER_NAMES = (
    "Energy", "TotalEnergy", "Entropy", "Minimum", "10Percentile", "90Percentile",
    "Maximum", "Mean", "Median", "InterquartileRange", "Range", "MeanAbsoluteDeviation",
    "RobustMeanAbsoluteDeviation", "RootMeanSquared", "Skewness", "Kurtosis",
    "Variance", "Uniformity",
)
GLCM_NAMES = (
    "Autocorrelation", "JointAverage", "ClusterProminence", "ClusterShade",
    "ClusterTendency", "Contrast", "Correlation", "DifferenceAverage",
    "DifferenceEntropy", "DifferenceVariance", "JointEnergy", "JointEntropy", "Imc1",
    "Imc2", "Idm", "MCC", "Idmn", "Id", "Idn", "InverseVariance", "MaximumProbability",
    "SumAverage", "SumEntropy", "SumSquares",
)
GLRLM_NAMES = (
    "ShortRunEmphasis", "LongRunEmphasis", "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized", "RunLengthNonUniformity",
    "RunLengthNonUniformityNormalized", "RunPercentage", "GrayLevelVariance",
    "RunVariance", "RunEntropy", "LowGrayLevelRunEmphasis", "HighGrayLevelRunEmphasis",
    "ShortRunLowGrayLevelEmphasis", "ShortRunHighGrayLevelEmphasis",
    "LongRunLowGrayLevelEmphasis", "LongRunHighGrayLevelEmphasis",
)
GLSZM_NAMES = (
    "SmallAreaEmphasis", "LargeAreaEmphasis", "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized", "SizeZoneNonUniformity",
    "SizeZoneNonUniformityNormalized", "ZonePercentage", "GrayLevelVariance",
    "ZoneVariance", "ZoneEntropy", "LowGrayLevelZoneEmphasis", "HighGrayLevelZoneEmphasis",
    "SmallAreaLowGrayLevelEmphasis", "SmallAreaHighGrayLevelEmphasis",
    "LargeAreaLowGrayLevelEmphasis", "LargeAreaHighGrayLevelEmphasis",
)
GLDM_NAMES = (
    "SmallDependenceEmphasis", "LargeDependenceEmphasis", "GrayLevelNonUniformity",
    "DependenceNonUniformity", "DependenceNonUniformityNormalized", "GrayLevelVariance",
    "DependenceVariance", "DependenceEntropy", "LowGrayLevelEmphasis",
    "HighGrayLevelEmphasis", "SmallDependenceLowGrayLevelEmphasis",
    "SmallDependenceHighGrayLevelEmphasis", "LargeDependenceLowGrayLevelEmphasis",
    "LargeDependenceHighGrayLevelEmphasis",
)
NGTDM_NAMES = ("Coarseness", "Contrast", "Busyness", "Complexity", "Strength")

_LEVELS = np.arange(1, NG + 1, dtype=np.float64)
_IDX = np.arange(NG)
_DIFF_ONEHOT = (np.abs(_IDX[:, None] - _IDX[None, :]).ravel()[:, None]
                == np.arange(NG)[None, :]).astype(np.float64)
_SUM_ONEHOT = ((_IDX[:, None] + _IDX[None, :]).ravel()[:, None]
               == np.arange(2 * NG - 1)[None, :]).astype(np.float64)


def _safe_div(num, den):
    num, den = np.broadcast_arrays(np.asarray(num, dtype=np.float64),
                                   np.asarray(den, dtype=np.float64))
    out = np.zeros(num.shape)
    np.divide(num, den, out=out, where=den != 0)
    return out


def _entropy(p):
    """Row-wise Shannon entropy in bits; empty cells contribute nothing."""
    p = np.asarray(p, dtype=np.float64)
    p = p.reshape(p.shape[0], -1)
    rows, cols = np.nonzero(p > 0)
    v = p[rows, cols]
    return -np.bincount(rows, weights=v * np.log2(v), minlength=p.shape[0])


def _second_singular_value(p, px, py) -> np.ndarray:
    """Second largest singular value of ``p / sqrt(px py)``.

    Levels absent from every window in the batch are dropped first; their
    rows and columns are zero and only add zero singular values.
    """
    present = px > 0
    k = max(int(present.sum(axis=1).max()), 2)
    order = np.argsort(~present, axis=1, kind="stable")[:, :k]
    b = np.arange(len(p))[:, None, None]
    sub = p[b, order[:, :, None], order[:, None, :]]
    sx = np.take_along_axis(px, order, axis=1)
    sy = np.take_along_axis(py, order, axis=1)
    B = _safe_div(sub, np.sqrt(sx[:, :, None] * sy[:, None, :]))
    return np.linalg.svd(B, compute_uv=False)[:, 1]


# --- first order ----------------------------------------------------------

def energy(values) -> np.ndarray:
    """Sum of squared raw values; exact for 8-bit input."""
    x = np.asarray(values).astype(np.int64)
    x = x.reshape(x.shape[0], -1) if x.ndim > 1 else x[None]
    return np.sum(x * x, axis=1).astype(np.float64)


def variance(values) -> np.ndarray:
    """Population variance of raw values."""
    x = np.asarray(values, dtype=np.float64)
    x = x.reshape(x.shape[0], -1) if x.ndim > 1 else x[None]
    mu = np.mean(x, axis=1, keepdims=True)
    return np.mean((x - mu) ** 2, axis=1)


def firstorder(values, levels) -> np.ndarray:
    """All first-order features, ``(n, 18)`` in ``FIRSTORDER_NAMES`` order.

    ``values`` are raw window samples ``(n, side, side)``; ``levels`` the
    matching quantized windows (used for entropy and uniformity).
    """
    x = np.asarray(values, dtype=np.float64).reshape(len(values), -1)
    n, m = x.shape
    en = energy(values)
    var = variance(values)
    mean = x.mean(axis=1)
    p10, p25, median, p75, p90 = np.percentile(x, [10, 25, 50, 75, 90], axis=1)
    lv = np.asarray(levels, dtype=np.int64).reshape(n, -1) - 1
    hist = np.bincount((np.arange(n)[:, None] * NG + lv).ravel(),
                       minlength=n * NG).reshape(n, NG) / m
    centred = x - mean[:, None]
    inrange = (x >= p10[:, None]) & (x <= p90[:, None])
    r_mean = _safe_div(np.sum(x * inrange, axis=1), inrange.sum(axis=1))
    rmad = _safe_div(np.sum(np.abs(x - r_mean[:, None]) * inrange, axis=1), inrange.sum(axis=1))
    m2 = np.mean(centred ** 2, axis=1)
    m3 = np.mean(centred ** 3, axis=1)
    m4 = np.mean(centred ** 4, axis=1)
    return np.stack([
        en,
        en,  # unit pixel area
        _entropy(hist),
        x.min(axis=1),
        p10,
        p90,
        x.max(axis=1),
        mean,
        median,
        p75 - p25,
        x.max(axis=1) - x.min(axis=1),
        np.mean(np.abs(centred), axis=1),
        rmad,
        np.sqrt(en / m),
        _safe_div(m3, m2 ** 1.5),
        _safe_div(m4, m2 ** 2),
        var,
        np.sum(hist ** 2, axis=1),
    ], axis=1)


# --- GLCM -----------------------------------------------------------------

_IJ = np.outer(_LEVELS, _LEVELS).ravel()


def glcm_features(P) -> np.ndarray:
    """``(n, 24)`` features of symmetric co-occurrence matrices ``(n, NG, NG)``.

    Joint entropies of the marginal product (HXY1, HXY2) both reduce to
    ``HX + HY`` because empty cells are skipped.
    """
    P = np.asarray(P, dtype=np.float64)
    n = len(P)
    flat = P.reshape(n, NG * NG)
    flat = flat / flat.sum(axis=1, keepdims=True)
    p = flat.reshape(n, NG, NG)
    px = p.sum(axis=2)
    py = p.sum(axis=1)
    ux = px @ _LEVELS
    uy = py @ _LEVELS
    sx2 = np.sum(px * (_LEVELS - ux[:, None]) ** 2, axis=1)
    sy2 = np.sum(py * (_LEVELS - uy[:, None]) ** 2, axis=1)
    pxmy = flat @ _DIFF_ONEHOT
    pxpy = flat @ _SUM_ONEHOT
    kd = np.arange(NG, dtype=np.float64)
    ks = np.arange(2, 2 * NG + 1, dtype=np.float64)

    hx = _entropy(px)
    hy = _entropy(py)
    hxy = _entropy(flat)
    hxy1 = hx + hy

    autocorr = flat @ _IJ
    sum_shift = ks[None, :] - (ux + uy)[:, None]
    diff_avg = pxmy @ kd

    # MCC: the eigenvalues of Q are squared singular values.
    mcc = _second_singular_value(p, px, py)

    return np.stack([
        autocorr,
        ux,
        np.sum(pxpy * sum_shift ** 4, axis=1),
        np.sum(pxpy * sum_shift ** 3, axis=1),
        np.sum(pxpy * sum_shift ** 2, axis=1),
        pxmy @ kd ** 2,
        _safe_div(autocorr - ux * uy, np.sqrt(sx2 * sy2)),
        diff_avg,
        _entropy(pxmy),
        np.sum(pxmy * (kd - diff_avg[:, None]) ** 2, axis=1),
        np.sum(flat ** 2, axis=1),
        hxy,
        _safe_div(hxy - hxy1, np.maximum(hx, hy)),
        np.sqrt(np.clip(-np.expm1(-2.0 * (hxy1 - hxy)), 0, None)),
        pxmy @ (1.0 / (1.0 + kd ** 2)),
        mcc,
        pxmy @ (1.0 / (1.0 + kd ** 2 / NG ** 2)),
        pxmy @ (1.0 / (1.0 + kd)),
        pxmy @ (1.0 / (1.0 + kd / NG)),
        pxmy[:, 1:] @ (1.0 / kd[1:] ** 2),
        flat.max(axis=1),
        pxpy @ ks,
        _entropy(pxpy),
        sx2,
    ], axis=1)


# --- GLRLM / GLSZM (same algebra, different column meaning) -----------------

def _size_features(P, npix: np.ndarray) -> np.ndarray:
    """Shared formulas for run-length and size-zone matrices.

    ``npix`` is the denominator of the percentage feature.
    """
    P = np.asarray(P, dtype=np.float64)
    n, _, ncols = P.shape
    j = np.arange(1, ncols + 1, dtype=np.float64)
    nz = P.sum(axis=(1, 2))
    p = P / nz[:, None, None]
    row = P.sum(axis=2)
    col = P.sum(axis=1)
    prow = row / nz[:, None]
    pcol = col / nz[:, None]
    mu_i = prow @ _LEVELS
    mu_j = pcol @ j
    i2, j2 = _LEVELS ** 2, j ** 2
    # Separable emphases: sum_ij p f(i) g(j) = sum_i f(i) * (p @ g)_i
    pj_inv = p @ (1.0 / j2)
    pj_sq = p @ j2
    return np.stack([
        pcol @ (1.0 / j2),
        pcol @ j2,
        np.sum(row ** 2, axis=1) / nz,
        np.sum(row ** 2, axis=1) / nz ** 2,
        np.sum(col ** 2, axis=1) / nz,
        np.sum(col ** 2, axis=1) / nz ** 2,
        nz / npix,
        np.sum(prow * (_LEVELS - mu_i[:, None]) ** 2, axis=1),
        np.sum(pcol * (j - mu_j[:, None]) ** 2, axis=1),
        _entropy(p.reshape(n, -1)),
        prow @ (1.0 / i2),
        prow @ i2,
        pj_inv @ (1.0 / i2),
        pj_inv @ i2,
        pj_sq @ (1.0 / i2),
        pj_sq @ i2,
    ], axis=1)


def glrlm_features(P, side: int) -> np.ndarray:
    """``(n, 16)``; run percentage is over the 4 directions' pixel visits."""
    P = np.asarray(P)
    return _size_features(P, np.full(len(P), 4.0 * side * side))


def glszm_features(P, side: int) -> np.ndarray:
    P = np.asarray(P)
    return _size_features(P, np.full(len(P), float(side * side)))


def lahgle(P) -> np.ndarray:
    """Large area high gray level emphasis from size-zone counts."""
    P = np.asarray(P, dtype=np.float64)
    z = np.arange(1, P.shape[-1] + 1, dtype=np.float64)
    w = _LEVELS[:, None] ** 2 * z[None, :] ** 2
    return np.sum(P * w, axis=(-2, -1)) / P.sum(axis=(-2, -1))


# --- GLDM -----------------------------------------------------------------

def ldhgle(P) -> np.ndarray:
    """Large dependence high gray level emphasis, ``sum P i^2 j^2 / Nz``.

    Column ``j`` is the neighbour count itself, so ``j = 0`` contributes 0.
    """
    P = np.asarray(P, dtype=np.float64)
    d = np.arange(P.shape[-1], dtype=np.float64)
    w = _LEVELS[:, None] ** 2 * d[None, :] ** 2
    return np.sum(P * w, axis=(-2, -1)) / P.sum(axis=(-2, -1))


def gldm_features(P) -> np.ndarray:
    """``(n, 14)`` dependence features.

    Large-dependence terms weight by ``d**2`` for neighbour count ``d``;
    small-dependence terms weight by ``1 / (d + 1)**2`` so that ``d = 0`` is
    finite.
    """
    P = np.asarray(P, dtype=np.float64)
    n, _, ncols = P.shape
    d = np.arange(ncols, dtype=np.float64)
    ds2 = (d + 1.0) ** 2
    i2 = _LEVELS ** 2
    nz = P.sum(axis=(1, 2))
    p = P / nz[:, None, None]
    row = P.sum(axis=2)
    col = P.sum(axis=1)
    prow = row / nz[:, None]
    pcol = col / nz[:, None]
    mu_i = prow @ _LEVELS
    mu_d = pcol @ d
    pd_inv = p @ (1.0 / ds2)
    pd_sq = p @ d ** 2
    return np.stack([
        pcol @ (1.0 / ds2),
        pcol @ d ** 2,
        np.sum(row ** 2, axis=1) / nz,
        np.sum(col ** 2, axis=1) / nz,
        np.sum(col ** 2, axis=1) / nz ** 2,
        np.sum(prow * (_LEVELS - mu_i[:, None]) ** 2, axis=1),
        np.sum(pcol * (d - mu_d[:, None]) ** 2, axis=1),
        _entropy(p.reshape(n, -1)),
        prow @ (1.0 / i2),
        prow @ i2,
        pd_inv @ (1.0 / i2),
        pd_inv @ i2,
        pd_sq @ (1.0 / i2),
        ldhgle(P),
    ], axis=1)


# --- NGTDM ----------------------------------------------------------------

def coarseness(p, s) -> np.ndarray:
    denom = np.sum(np.asarray(p) * np.asarray(s), axis=-1)
    denom = np.asarray(denom, dtype=np.float64)
    out = np.full(denom.shape, COARSENESS_CAP)
    np.divide(1.0, denom, out=out, where=denom != 0)
    return out


def ngtdm_features(p, s, npix: float) -> np.ndarray:
    """``(n, 5)``: coarseness, contrast, busyness, complexity, strength.

    Sums over level pairs only include levels present in the window.
    """
    p = np.asarray(p, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    present = p > 0
    both = present[:, :, None] & present[:, None, :]
    ngp = present.sum(axis=1).astype(np.float64)
    pi, pj = p[:, :, None], p[:, None, :]
    si, sj = s[:, :, None], s[:, None, :]
    ad = np.abs(_LEVELS[:, None] - _LEVELS[None, :])
    d2 = ad ** 2
    ssum = s.sum(axis=1)
    ip = _LEVELS * p
    contrast = _safe_div(np.sum(pi * pj * d2, axis=(1, 2)), ngp * (ngp - 1)) * ssum / npix
    busyness = _safe_div(np.sum(p * s, axis=1),
                         np.sum(np.abs(ip[:, :, None] - ip[:, None, :]) * both, axis=(1, 2)))
    complexity = np.sum(ad * _safe_div(pi * si + pj * sj, pi + pj) * both, axis=(1, 2)) / npix
    strength = _safe_div(np.sum((pi + pj) * d2 * both, axis=(1, 2)), ssum)
    return np.stack([coarseness(p, s), contrast, busyness, complexity, strength], axis=1)
