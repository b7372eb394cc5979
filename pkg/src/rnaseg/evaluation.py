"""Radius-constrained point matching, F1 scores and threshold sweeps."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .segmap import regions_to_detections, segment_regions

MATCH_RADIUS = 5.0
SWEEP_GRAYS = tuple(range(0, 256, 2))
SWEEP_AREAS = tuple(range(1, 11))

# Published reference rows (F1, precision, recall); documentation only.
REFERENCE_TABLE = {
    "full feature set classifier": (0.572, 0.626, 0.527),
    "reduced feature set classifier": (0.571, 0.633, 0.521),
    "experts": (0.596, 0.682, 0.530),
}


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass(frozen=True)
class MatchResult:
    pairs: list = field(default_factory=list)  # (det index, truth index, distance)
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return prf(self.tp, self.fp, self.fn)[0]

    @property
    def recall(self) -> float:
        return prf(self.tp, self.fp, self.fn)[1]

    @property
    def f1(self) -> float:
        return prf(self.tp, self.fp, self.fn)[2]


def _points(p) -> np.ndarray:
    p = getattr(p, "points", p)
    if isinstance(p, (list, tuple)) and p and hasattr(p[0], "x"):
        p = [(d.x, d.y) for d in p]
    return np.asarray(p, dtype=np.float64).reshape(-1, 2)


def candidate_pairs(dets, truth, radius: float = MATCH_RADIUS):
    """All (det, truth, distance) with distance strictly below ``radius``,
    sorted by distance, then detection index, then truth index."""
    a, b = _points(dets), _points(truth)
    if len(a) == 0 or len(b) == 0:
        return []
    dist = np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])
    ii, jj = np.nonzero(dist < radius)
    dd = dist[ii, jj]
    order = np.lexsort((jj, ii, dd))
    return [(int(ii[k]), int(jj[k]), float(dd[k])) for k in order]


def match(dets, truth, radius: float = MATCH_RADIUS, optimal: bool = False) -> MatchResult:
    """Pair detections to ground truth, each point used at most once.

    Greedy mode accepts pairs in ascending distance (ties by detection then
    truth index). ``optimal=True`` maximises the number of pairs, breaking
    ties by total distance.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    nd, nt = len(_points(dets)), len(_points(truth))
    cands = candidate_pairs(dets, truth, radius)
    if optimal:
        pairs = _optimal(cands)
    else:
        used_d, used_t, pairs = set(), set(), []
        for i, j, d in cands:
            if i not in used_d and j not in used_t:
                used_d.add(i)
                used_t.add(j)
                pairs.append((i, j, d))
    tp = len(pairs)
    return MatchResult(pairs, tp, nd - tp, nt - tp)


def _optimal(cands):
    if not cands:
        return []
    dset = sorted({i for i, _, _ in cands})
    tset = sorted({j for _, j, _ in cands})
    di = {v: k for k, v in enumerate(dset)}
    ti = {v: k for k, v in enumerate(tset)}
    # Every pair is worth more than all distances combined, so the assignment
    # maximises cardinality first and total distance second.
    big = 1.0 + sum(d for _, _, d in cands)
    cost = np.zeros((len(dset), len(tset)))
    dist = {}
    for i, j, d in cands:
        cost[di[i], ti[j]] = d - big
        dist[(i, j)] = d
    rows, cols = linear_sum_assignment(cost)
    pairs = [(dset[r], tset[c]) for r, c in zip(rows, cols) if cost[r, c] < 0]
    return sorted(((i, j, dist[(i, j)]) for i, j in pairs), key=lambda t: (t[2], t[0], t[1]))


def combine(results) -> MatchResult:
    """Pool counts over several patches (pairs are not kept)."""
    tp = sum(r.tp for r in results)
    return MatchResult([], tp, sum(r.fp for r in results), sum(r.fn for r in results))


def score_table(results) -> list[dict]:
    """One row per named result: ``{"name", "f1", "precision", "recall"}``.

    ``results`` maps names to :class:`MatchResult` (or ``(precision,
    recall)`` pairs).
    """
    if not results:
        raise ValueError("need at least one result")
    rows = []
    for name, r in dict(results).items():
        if isinstance(r, MatchResult):
            p, rc, f = r.precision, r.recall, r.f1
        else:
            p, rc = r
            f = 2 * p * rc / (p + rc) if p + rc else 0.0
        rows.append({"name": name, "f1": f, "precision": p, "recall": rc})
    return rows


def format_table(rows) -> str:
    width = max(len(r["name"]) for r in rows)
    lines = [f"{'classifier':<{width}}  {'F1':>6}  {'prec':>6}  {'recall':>6}"]
    for r in rows:
        lines.append(f"{r['name']:<{width}}  {r['f1']:6.3f}  {r['precision']:6.3f}  {r['recall']:6.3f}")
    return "\n".join(lines)


SWEEP_FIELDS = ("gray", "area", "f1", "precision", "recall", "tp", "fp", "fn", "detected_area")


def sweep_maps(maps, truths, grays=SWEEP_GRAYS, areas=SWEEP_AREAS,
               radius: float = MATCH_RADIUS, optimal: bool = False) -> list[dict]:
    """F1 surface over (gray threshold, area threshold), pooled across patches.

    Watershed labels depend only on the gray threshold, so each map is
    segmented once per gray value and re-filtered for every area value.
    """
    maps, truths = list(maps), list(truths)
    if not maps or len(maps) != len(truths):
        raise ValueError("need one truth set per map")
    rows = []
    for g in grays:
        per_patch = []
        for seg, tr in zip(maps, truths):
            labels = segment_regions(seg, g)
            per_patch.append((regions_to_detections(labels, seg, 1), tr))
        for a in areas:
            results, det_area = [], 0
            for dets, tr in per_patch:
                kept = [d for d in dets if d.area >= a]
                det_area += sum(d.area for d in kept)
                results.append(match(kept, tr, radius, optimal))
            tot = combine(results)
            rows.append({"gray": g, "area": a, "f1": tot.f1, "precision": tot.precision,
                         "recall": tot.recall, "tp": tot.tp, "fp": tot.fp, "fn": tot.fn,
                         "detected_area": det_area})
    return rows


def best_row(rows) -> dict:
    """Highest F1; ties go to the earliest (lowest gray, then area) row."""
    return max(rows, key=lambda r: (r["f1"], -r["gray"], -r["area"]))


def write_surface(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(SWEEP_FIELDS), lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: (repr(float(v)) if isinstance(v, float) else v)
                             for k, v in r.items()})
