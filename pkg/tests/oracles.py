"""Slow reference implementations used only by the tests.

Everything here loops pixel by pixel (or cell by cell) in plain Python so it
shares no code path with the vectorised package. Windows are lists of lists
of quantized levels ``1..32``.
"""

from __future__ import annotations

import math
from collections import deque
from itertools import permutations

import numpy as np

NG = 32


def random_levels(rng: np.random.Generator, side: int) -> np.ndarray:
    """Raw 8-bit window with a random number of distinct levels, so runs and
    zones of many sizes show up."""
    k = int(rng.choice([1, 2, 3, 4, 6, 10, 32]))
    pool = rng.choice(np.arange(1, NG + 1), size=k, replace=False)
    lv = rng.choice(pool, size=(side, side))
    if rng.random() < 0.3:
        # blocky windows give long runs and big zones
        blk = rng.choice(pool, size=(side // 2 + 1, side // 2 + 1))
        lv = np.kron(blk, np.ones((2, 2), dtype=int))[:side, :side]
    return (lv - 1) * 8 + rng.integers(0, 8, size=(side, side))


def quantize(raw) -> list[list[int]]:
    return [[int(v) // 8 + 1 for v in row] for row in np.asarray(raw).tolist()]


# --- matrices -------------------------------------------------------------

def glcm(q, delta):
    s = len(q)
    P = [[0] * NG for _ in range(NG)]
    for r in range(s):
        for c in range(s):
            for dr, dc in ((0, 1), (-1, 1), (-1, 0), (-1, -1)):
                r2, c2 = r + dr * delta, c + dc * delta
                if 0 <= r2 < s and 0 <= c2 < s:
                    a, b = q[r][c] - 1, q[r2][c2] - 1
                    P[a][b] += 1
                    P[b][a] += 1
    return P


def glrlm(q):
    s = len(q)
    P = [[0] * s for _ in range(NG)]
    for dr, dc in ((0, 1), (1, 0), (1, 1), (1, -1)):
        for r in range(s):
            for c in range(s):
                pr, pc = r - dr, c - dc
                if 0 <= pr < s and 0 <= pc < s and q[pr][pc] == q[r][c]:
                    continue  # not the start of a run
                length, rr, cc = 0, r, c
                while 0 <= rr < s and 0 <= cc < s and q[rr][cc] == q[r][c]:
                    length += 1
                    rr += dr
                    cc += dc
                P[q[r][c] - 1][length - 1] += 1
    return P


def glszm(q):
    s = len(q)
    P = [[0] * (s * s) for _ in range(NG)]
    seen = [[False] * s for _ in range(s)]
    for r in range(s):
        for c in range(s):
            if seen[r][c]:
                continue
            level, size = q[r][c], 0
            todo = deque([(r, c)])
            seen[r][c] = True
            while todo:
                y, x = todo.popleft()
                size += 1
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        yy, xx = y + dy, x + dx
                        if 0 <= yy < s and 0 <= xx < s and not seen[yy][xx] and q[yy][xx] == level:
                            seen[yy][xx] = True
                            todo.append((yy, xx))
            P[level - 1][size - 1] += 1
    return P


def gldm(q, delta, alpha):
    s = len(q)
    P = [[0] * ((2 * delta + 1) ** 2) for _ in range(NG)]
    for r in range(s):
        for c in range(s):
            dep = 0
            for dr in range(-delta, delta + 1):
                for dc in range(-delta, delta + 1):
                    if (dr or dc) and 0 <= r + dr < s and 0 <= c + dc < s:
                        dep += abs(q[r][c] - q[r + dr][c + dc]) <= alpha
            P[q[r][c] - 1][dep] += 1
    return P


def ngtdm(q, delta):
    s = len(q)
    n = [0] * NG
    ssum = [0.0] * NG
    for r in range(s):
        for c in range(s):
            vals = [q[r + dr][c + dc]
                    for dr in range(-delta, delta + 1) for dc in range(-delta, delta + 1)
                    if (dr or dc) and 0 <= r + dr < s and 0 <= c + dc < s]
            n[q[r][c] - 1] += 1
            ssum[q[r][c] - 1] += abs(q[r][c] - sum(vals) / len(vals))
    p = [v / (s * s) for v in n]
    return n, p, ssum


# --- features ---------------------------------------------------------------

def _H(values):
    return -sum(v * math.log2(v) for v in values if v > 0)


def _div(a, b):
    return a / b if b != 0 else 0.0


def glcm_features(P):
    total = sum(map(sum, P))
    p = [[v / total for v in row] for row in P]
    L = range(NG)
    px = [sum(p[i][j] for j in L) for i in L]
    py = [sum(p[i][j] for i in L) for j in L]
    ux = sum((i + 1) * px[i] for i in L)
    uy = sum((j + 1) * py[j] for j in L)
    sx = math.sqrt(sum((i + 1 - ux) ** 2 * px[i] for i in L))
    sy = math.sqrt(sum((j + 1 - uy) ** 2 * py[j] for j in L))
    pxpy = [0.0] * (2 * NG + 1)  # index k = i + j with levels 1..NG
    pxmy = [0.0] * NG
    for i in L:
        for j in L:
            pxpy[i + j + 2] += p[i][j]
            pxmy[abs(i - j)] += p[i][j]
    hx, hy = _H(px), _H(py)
    hxy = _H(v for row in p for v in row)
    hxy1 = -sum(p[i][j] * math.log2(px[i] * py[j]) for i in L for j in L if p[i][j] > 0)
    hxy2 = -sum(px[i] * py[j] * math.log2(px[i] * py[j]) for i in L for j in L
                if px[i] * py[j] > 0)
    auto = sum(p[i][j] * (i + 1) * (j + 1) for i in L for j in L)
    da = sum(k * pxmy[k] for k in L)
    keep = [i for i in L if px[i] > 0]
    Q = np.zeros((len(keep), len(keep)))
    for a, i in enumerate(keep):
        for b, j in enumerate(keep):
            Q[a, b] = sum(p[i][k] * p[j][k] / (px[i] * py[k]) for k in keep)
    eig = sorted(np.linalg.eigvals(Q).real, reverse=True) if len(keep) > 1 else [1.0, 0.0]
    mcc = math.sqrt(max(eig[1], 0.0))
    cl = lambda e: sum(p[i][j] * (i + j + 2 - ux - uy) ** e for i in L for j in L)  # noqa: E731
    return [
        auto,
        ux,
        cl(4),
        cl(3),
        cl(2),
        sum(p[i][j] * (i - j) ** 2 for i in L for j in L),
        _div(auto - ux * uy, sx * sy),
        da,
        _H(pxmy),
        sum((k - da) ** 2 * pxmy[k] for k in L),
        sum(v * v for row in p for v in row),
        hxy,
        _div(hxy - hxy1, max(hx, hy)),
        math.sqrt(max(0.0, -math.expm1(-2 * (hxy2 - hxy)))),
        sum(p[i][j] / (1 + (i - j) ** 2) for i in L for j in L),
        mcc,
        sum(p[i][j] / (1 + (i - j) ** 2 / NG ** 2) for i in L for j in L),
        sum(p[i][j] / (1 + abs(i - j)) for i in L for j in L),
        sum(p[i][j] / (1 + abs(i - j) / NG) for i in L for j in L),
        sum(p[i][j] / (i - j) ** 2 for i in L for j in L if i != j),
        max(v for row in p for v in row),
        sum(k * pxpy[k] for k in range(2, 2 * NG + 1)),
        _H(pxpy),
        sum((i + 1 - ux) ** 2 * p[i][j] for i in L for j in L),
    ]


def _size_like(P, npix, col_value, small, large):
    """GLRLM/GLSZM/GLDM share this layout; ``col_value(k)`` is the run
    length, zone size or dependence stored in column ``k``."""
    nz = sum(map(sum, P))
    rows, cols = range(NG), range(len(P[0]))
    p = [[v / nz for v in row] for row in P]
    pr = [sum(p[i]) for i in rows]
    pc = [sum(p[i][k] for i in rows) for k in cols]
    mu_i = sum((i + 1) * pr[i] for i in rows)
    mu_j = sum(col_value(k) * pc[k] for k in cols)
    gln = sum(sum(P[i]) ** 2 for i in rows)
    rln = sum(sum(P[i][k] for i in rows) ** 2 for k in cols)
    cell = [(i + 1, col_value(k), p[i][k]) for i in rows for k in cols if p[i][k] > 0]
    return dict(
        small=sum(v * small(j) for _, j, v in cell),
        large=sum(v * large(j) for _, j, v in cell),
        gln=gln / nz, glnn=gln / nz ** 2, rln=rln / nz, rlnn=rln / nz ** 2,
        pct=nz / npix if npix else None,
        glv=sum(v * (i - mu_i) ** 2 for i, _, v in cell),
        rv=sum(v * (j - mu_j) ** 2 for _, j, v in cell),
        ent=_H(v for _, _, v in cell),
        low=sum(v / i ** 2 for i, _, v in cell),
        high=sum(v * i ** 2 for i, _, v in cell),
        sl=sum(v * small(j) / i ** 2 for i, j, v in cell),
        sh=sum(v * small(j) * i ** 2 for i, j, v in cell),
        ll=sum(v * large(j) / i ** 2 for i, j, v in cell),
        lh=sum(v * large(j) * i ** 2 for i, j, v in cell),
    )


def _run_zone_list(f):
    return [f["small"], f["large"], f["gln"], f["glnn"], f["rln"], f["rlnn"], f["pct"],
            f["glv"], f["rv"], f["ent"], f["low"], f["high"], f["sl"], f["sh"], f["ll"], f["lh"]]


def glrlm_features(P, side):
    return _run_zone_list(_size_like(P, 4 * side * side, lambda k: k + 1,
                                     lambda j: 1 / j ** 2, lambda j: j ** 2))


def glszm_features(P, side):
    return _run_zone_list(_size_like(P, side * side, lambda k: k + 1,
                                     lambda j: 1 / j ** 2, lambda j: j ** 2))


def gldm_features(P):
    f = _size_like(P, 0, lambda k: k, lambda d: 1 / (d + 1) ** 2, lambda d: d ** 2)
    return [f["small"], f["large"], f["gln"], f["rln"], f["rlnn"], f["glv"], f["rv"],
            f["ent"], f["low"], f["high"], f["sl"], f["sh"], f["ll"], f["lh"]]


def ngtdm_features(n, p, s, npix, cap=1e6):
    L = [i for i in range(NG) if p[i] > 0]
    ngp = len(L)
    den = sum(p[i] * s[i] for i in range(NG))
    coarse = 1 / den if den != 0 else cap
    ssum = sum(s)
    contrast = (_div(sum(p[i] * p[j] * (i - j) ** 2 for i in L for j in L), ngp * (ngp - 1))
                * ssum / npix)
    busy = _div(den, sum(abs((i + 1) * p[i] - (j + 1) * p[j]) for i in L for j in L))
    comp = sum(abs(i - j) * (p[i] * s[i] + p[j] * s[j]) / (p[i] + p[j]) for i in L for j in L) / npix
    strength = _div(sum((p[i] + p[j]) * (i - j) ** 2 for i in L for j in L), ssum)
    return [coarse, contrast, busy, comp, strength]


def firstorder(raw):
    x = sorted(float(v) for v in np.asarray(raw).ravel())
    m = len(x)
    mean = sum(x) / m
    energy = sum(v * v for v in x)

    def pct(q):
        pos = (m - 1) * q / 100
        lo = math.floor(pos)
        hi = min(lo + 1, m - 1)
        return x[lo] + (x[hi] - x[lo]) * (pos - lo)

    p10, p25, p50, p75, p90 = (pct(q) for q in (10, 25, 50, 75, 90))
    hist = [0] * NG
    for v in x:
        hist[int(v) // 8] += 1
    hist = [h / m for h in hist]
    mid = [v for v in x if p10 <= v <= p90]
    rmean = sum(mid) / len(mid) if mid else 0.0
    m2 = sum((v - mean) ** 2 for v in x) / m
    m3 = sum((v - mean) ** 3 for v in x) / m
    m4 = sum((v - mean) ** 4 for v in x) / m
    return [
        energy, energy, _H(hist), x[0], p10, p90, x[-1], mean, p50, p75 - p25, x[-1] - x[0],
        sum(abs(v - mean) for v in x) / m,
        sum(abs(v - rmean) for v in mid) / len(mid) if mid else 0.0,
        math.sqrt(energy / m), _div(m3, m2 ** 1.5), _div(m4, m2 ** 2), m2,
        sum(h * h for h in hist),
    ]


# --- candidates / matching --------------------------------------------------

def radius_eq(intensity, thresh):
    return max(intensity - thresh + 64, 0) // 32


def extract_candidates_naive(mask, thresh):
    """Repeated global minimum search with disc painting."""
    m = np.array(mask, dtype=np.int64)
    h, w = m.shape
    out = []
    while True:
        best = None
        for y in range(h):
            for x in range(w):
                if m[y, x] < thresh and (best is None or m[y, x] < best[0]):
                    best = (m[y, x], y, x)
        if best is None:
            return out
        v, y, x = best
        r = radius_eq(int(v), thresh)
        out.append((x, y, int(v), r))
        for yy in range(max(0, y - r), min(h, y + r + 1)):
            for xx in range(max(0, x - r), min(w, x + r + 1)):
                if (xx - x) ** 2 + (yy - y) ** 2 <= r * r:
                    m[yy, xx] = thresh


def max_matching_bruteforce(dets, truth, radius):
    """Largest number of disjoint (det, truth) pairs closer than ``radius``,
    by enumerating every injection of the smaller set into the larger."""
    a, b = list(map(tuple, dets)), list(map(tuple, truth))
    if len(a) > len(b):
        a, b = b, a
    best = 0
    for perm in permutations(range(len(b)), len(a)):
        cnt = sum(math.dist(a[i], b[j]) < radius for i, j in enumerate(perm))
        best = max(best, cnt)
    return best


# --- linear SVM ---------------------------------------------------------------

def svm_primal(params, X, ys, cost):
    """Objective for every row of ``params`` = (w..., b)."""
    w, b = params[:, :-1], params[:, -1]
    margins = ys[None, :] * (w @ X.T + b[:, None])
    return 0.5 * np.sum(w * w, axis=1) + np.maximum(0.0, 1.0 - margins) @ cost


def svm_grid_optimum(X, ys, cost, half_width=4.0, points=21, rounds=60):
    """Minimise the primal objective by a zooming grid around the best point.

    The objective is convex, so shrinking the box by a fraction each round
    around the incumbent converges to the optimum value.
    """
    X = np.asarray(X, float)
    ys = np.asarray(ys, float)
    cost = np.asarray(cost, float)
    dim = X.shape[1] + 1
    centre = np.zeros(dim)
    width = half_width
    best = float(svm_primal(centre[None], X, ys, cost)[0])
    axis = np.linspace(-1.0, 1.0, points)
    for _ in range(rounds):
        grid = np.stack(np.meshgrid(*[axis] * dim, indexing="ij"), axis=-1).reshape(-1, dim)
        cand = centre + width * grid
        vals = svm_primal(cand, X, ys, cost)
        k = int(np.argmin(vals))
        if vals[k] <= best:
            best, centre = float(vals[k]), cand[k]
        width *= 0.7
    return best, centre
