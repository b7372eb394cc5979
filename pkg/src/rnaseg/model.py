"""Feature normalisation, linear SVM training/inference and model files.

The classifier minimises

    0.5 * ||w||^2 + C * sum_i cw(y_i) * max(0, 1 - y_i (w . x_i + b))

with an unregularised bias, solved in the dual by an interior point method.
``cw`` is the balanced class weight ``n_total / (2 * n_class)``.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.spatial import cKDTree

from .texture.extract import FeatureSpec

log = logging.getLogger(__name__)

MODEL_FORMAT = "rnaseg-linear-model"
MODEL_VERSION = 1
LABEL_RADIUS = 1.0
IPM_MAX_STEPS = 200


class SingleClassError(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    C: float = 1.0
    tol: float = 1e-7
    max_iter: int = 10_000_000
    penalty: str = "l2"
    class_weighting: str = "balanced"
    seed: int = 0

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.penalty != "l2":
            raise ValueError("only the l2 penalty is supported")
        if self.class_weighting not in ("balanced", "none"):
            raise ValueError(f"unknown class weighting {self.class_weighting!r}")


def label_candidates(cands, truth, radius: float = LABEL_RADIUS) -> np.ndarray:
    """1 where a ground-truth point lies within Euclidean ``radius``, else 0."""
    xy = _xy(cands)
    pts = np.asarray(getattr(truth, "points", truth), dtype=np.float64).reshape(-1, 2)
    labels = np.zeros(len(xy), dtype=np.int64)
    if len(xy) == 0 or len(pts) == 0:
        return labels
    dist, _ = cKDTree(pts).query(xy, k=1, distance_upper_bound=radius * (1 + 1e-12))
    labels[dist <= radius] = 1
    return labels


def _xy(cands) -> np.ndarray:
    if isinstance(cands, np.ndarray):
        return cands[:, :2].astype(np.float64) if cands.size else np.zeros((0, 2))
    return np.array([(c.x, c.y) for c in cands], dtype=np.float64).reshape(-1, 2)


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X) -> "NormStats":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or len(X) == 0:
            raise ValueError("need at least one feature row")
        return cls(X.mean(axis=0), X.std(axis=0))

    @property
    def scale(self) -> np.ndarray:
        return np.where(self.std > 0, self.std, 1.0)

    def apply(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale

    def invert(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=np.float64) * self.scale + self.mean


fit_normalizer = NormStats.fit


def class_weights(y) -> dict[int, float]:
    """Balanced weights ``n_total / (2 * n_class)`` keyed by label (0/1)."""
    y = np.asarray(y)
    n = len(y)
    return {c: n / (2.0 * np.count_nonzero(y == c)) for c in (0, 1) if np.any(y == c)}


def _signed(y) -> np.ndarray:
    y = np.asarray(y)
    if set(np.unique(y).tolist()) <= {-1, 1}:
        return y.astype(np.float64)
    return np.where(y > 0, 1.0, -1.0)


def ipm_solve(X, ys, upper, tol=1e-7, max_iter=200):
    """Primal-dual interior point method on the SVM dual.

    Solves ``min 0.5 a'Qa - sum(a)`` subject to ``y'a = 0`` and
    ``0 <= a <= upper`` with ``Q = Z Z'``, ``Z = diag(y) X``. Newton systems
    are reduced to ``(d + 1) x (d + 1)`` through ``w = Z'a``, so one step
    costs ``O(n d^2)``. Mehrotra predictor-corrector steps; stops once the
    primal-dual objective gap is below ``tol`` relative to the primal
    objective. Returns ``(alpha, w, b, iterations)``; ``b`` is the multiplier
    of the equality constraint.
    """
    X = np.asarray(X, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    u = np.asarray(upper, dtype=np.float64)
    n, d = X.shape
    Z = X * ys[:, None]
    alpha = 0.5 * u
    s = np.ones(n)
    t = np.ones(n)
    beta = 0.0
    it = 0
    best = None
    while True:
        w = Z.T @ alpha
        zw = Z @ w
        r_d = zw - 1.0 + beta * ys - s + t
        r_p = float(ys @ alpha)
        gap_obj = _objective_gap(w, beta, X, ys, u, alpha)
        if best is None or gap_obj[0] < best[0]:
            best = (gap_obj[0], alpha.copy(), w.copy(), beta)
        rel = gap_obj[1] / max(1.0, abs(gap_obj[0]))
        if (rel < tol and abs(r_p) <= tol * max(1.0, float(u.max()))) or it >= max_iter:
            break
        it += 1
        slack = u - alpha
        mu = (alpha @ s + slack @ t) / (2 * n)
        dinv = 1.0 / (s / alpha + t / slack)
        ZD = Z * dinv[:, None]
        K = np.empty((d + 1, d + 1))
        K[:d, :d] = Z.T @ ZD
        K[:d, :d][np.diag_indices(d)] += 1.0
        K[:d, d] = K[d, :d] = ZD.T @ ys
        K[d, d] = ys @ (dinv * ys)
        try:
            cho = _factor(K)
        except LinAlgError:
            break

        def direction(r1, r2):
            h = -r_d + r1 / alpha - r2 / slack
            rhs = np.concatenate([ZD.T @ h, [ys @ (dinv * h) + r_p]])
            sol = _solve(cho, rhs)
            dw, db = sol[:d], sol[d]
            da = dinv * (h - Z @ dw - ys * db)
            ds = (r1 - s * da) / alpha
            dt = (r2 + t * da) / slack
            return da, db, ds, dt

        da, db, ds, dt = direction(-alpha * s, -slack * t)
        step = _step(alpha, slack, s, t, da, ds, dt)
        mu_aff = ((alpha + step * da) @ (s + step * ds)
                  + (slack - step * da) @ (t + step * dt)) / (2 * n)
        sigma = (mu_aff / mu) ** 3
        da, db, ds, dt = direction(sigma * mu - alpha * s - da * ds,
                                   sigma * mu - slack * t + da * dt)
        step = 0.995 * _step(alpha, slack, s, t, da, ds, dt)
        alpha = alpha + step * da
        beta += step * db
        s = s + step * ds
        t = t + step * dt
    _, alpha, w, beta = best
    return alpha, w, float(beta), it


def _factor(K):
    return cho_factor(K)


def _solve(cho, rhs):
    return cho_solve(cho, rhs)


def _step(alpha, slack, s, t, da, ds, dt) -> float:
    ratios = [1.0]
    for v, dv in ((alpha, da), (slack, -da), (s, ds), (t, dt)):
        neg = dv < 0
        if neg.any():
            ratios.append(float(np.min(-v[neg] / dv[neg])))
    return min(ratios)


def _objective_gap(w, b, X, ys, u, alpha):
    """(primal objective at (w, b), primal minus dual objective)."""
    hinge = np.maximum(0.0, 1.0 - ys * (X @ w + b))
    half = 0.5 * float(w @ w)
    primal = half + float(u @ hinge)
    dual = float(alpha.sum()) - half
    return primal, primal - dual


def svm_objective(w, b, X, y, C=1.0, weights=None) -> float:
    """Primal objective of the weighted hinge-loss SVM."""
    ys = _signed(y)
    X = np.asarray(X, dtype=np.float64)
    cw = np.ones(len(ys)) if weights is None else np.asarray(weights, dtype=np.float64)
    hinge = np.maximum(0.0, 1.0 - ys * (X @ np.asarray(w) + b))
    return 0.5 * float(np.dot(w, w)) + C * float(np.sum(cw * hinge))


def sample_weights(y, cfg: TrainConfig) -> np.ndarray:
    y01 = (_signed(y) > 0).astype(int)
    if cfg.class_weighting == "none":
        return np.ones(len(y01))
    cw = class_weights(y01)
    return np.array([cw[v] for v in y01])


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    norm: NormStats
    specs: tuple = ()
    feature_set: str = "custom"
    config: TrainConfig = field(default_factory=TrainConfig)
    iterations: int = 0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.specs and len(self.specs) != len(self.weights):
            raise ValueError("manifest length does not match weight count")
        if not (np.all(np.isfinite(self.weights)) and np.isfinite(self.bias)):
            raise ValueError("model has non-finite parameters")

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def decision(self, Z) -> np.ndarray:
        """Margins for already-normalised rows."""
        return np.asarray(Z, dtype=np.float64) @ self.weights + self.bias

    def predict_score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        out = self.decision(self.norm.apply(X))
        return out[0] if single else out

    def predict_label(self, X) -> np.ndarray:
        return np.where(np.asarray(self.predict_score(X)) > 0, 1, 0)


def train(X, y, cfg: TrainConfig | None = None, norm: NormStats | None = None,
          specs=(), feature_set: str = "custom") -> LinearModel:
    """Train on rows ``X`` (already normalised when ``norm`` is given).

    With ``norm=None`` an identity normaliser is attached, so ``X`` is taken
    as the model's input space.
    """
    cfg = TrainConfig() if cfg is None else cfg
    X = np.asarray(X, dtype=np.float64)
    ys = _signed(y)
    if len(np.unique(ys)) < 2:
        raise SingleClassError("training data must contain both classes")
    upper = cfg.C * sample_weights(ys, cfg)
    _, w, b, iters = ipm_solve(X, ys, upper, cfg.tol, min(cfg.max_iter, IPM_MAX_STEPS))
    if iters >= min(cfg.max_iter, IPM_MAX_STEPS):
        log.warning("solver stopped after %d steps before reaching tol=%g", iters, cfg.tol)
    if norm is None:
        norm = NormStats(np.zeros(X.shape[1]), np.ones(X.shape[1]))
    return LinearModel(w, float(b), norm, tuple(specs), feature_set, cfg, iters)


def fit(X_raw, y, cfg: TrainConfig | None = None, specs=(), feature_set="custom") -> LinearModel:
    """Fit the normaliser on raw rows, then train."""
    norm = NormStats.fit(X_raw)
    return train(norm.apply(X_raw), y, cfg, norm, specs, feature_set)


# --- persistence ------------------------------------------------------------

_SPEC_FIELDS = ("column", "channel", "window", "family", "name", "delta", "alpha")


def save_model(path, model: LinearModel) -> None:
    cfg = model.config
    lines = [
        f"format={MODEL_FORMAT}",
        f"version={MODEL_VERSION}",
        f"feature_set={model.feature_set}",
        f"n_features={model.n_features}",
        f"bias={float(model.bias)!r}",
        f"iterations={model.iterations}",
    ]
    lines += [f"train.{k}={v!r}" if isinstance(v, float) else f"train.{k}={v}"
              for k, v in asdict(cfg).items()]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(_SPEC_FIELDS) + ["mean", "std", "weight"])
    specs = model.specs or tuple(FeatureSpec("", 0, "custom", f"f{k}")
                                 for k in range(model.n_features))
    for s, mu, sd, wt in zip(specs, model.norm.mean, model.norm.std, model.weights):
        writer.writerow([s.column, s.channel, s.window, s.family, s.name,
                         "" if s.delta is None else s.delta,
                         "" if s.alpha is None else s.alpha,
                         repr(float(mu)), repr(float(sd)), repr(float(wt))])
    Path(path).write_text("\n".join(lines) + "\n[features]\n" + buf.getvalue())


def load_model(path) -> LinearModel:
    text = Path(path).read_text()
    head, sep, table = text.partition("[features]\n")
    if not sep:
        raise ModelFormatError(f"{path}: missing [features] section")
    meta = {}
    for line in head.splitlines():
        if line.strip() and not line.startswith("#"):
            k, _, v = line.partition("=")
            meta[k.strip()] = v.strip()
    if meta.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"{path}: not a {MODEL_FORMAT} file")
    if int(meta.get("version", -1)) != MODEL_VERSION:
        raise ModelFormatError(f"{path}: unsupported version {meta.get('version')}")
    rows = list(csv.DictReader(io.StringIO(table)))
    if len(rows) != int(meta["n_features"]):
        raise ModelFormatError(f"{path}: expected {meta['n_features']} feature rows")
    specs = tuple(FeatureSpec(r["channel"], int(r["window"]), r["family"], r["name"],
                              int(r["delta"]) if r["delta"] else None,
                              int(r["alpha"]) if r["alpha"] else None) for r in rows)
    cfg = TrainConfig(C=float(meta["train.C"]), tol=float(meta["train.tol"]),
                      max_iter=int(meta["train.max_iter"]), penalty=meta["train.penalty"],
                      class_weighting=meta["train.class_weighting"],
                      seed=int(meta["train.seed"]))
    norm = NormStats(np.array([float(r["mean"]) for r in rows]),
                     np.array([float(r["std"]) for r in rows]))
    fs = meta.get("feature_set", "custom")
    return LinearModel(np.array([float(r["weight"]) for r in rows]), float(meta["bias"]), norm,
                       specs if fs != "custom" else (), fs, cfg, int(meta.get("iterations", 0)))


# --- coefficient analysis -----------------------------------------------------

def weight_breakdown(model: LinearModel) -> list[dict]:
    """Share of total ``|w|`` per (family, feature, channel).

    Distance, cutoff and window parameters are aggregated. Rows come back in
    descending share order; shares sum to 1 unless every weight is zero.
    """
    specs = model.specs or tuple(FeatureSpec("", 0, "custom", f"f{k}")
                                 for k in range(model.n_features))
    aw = np.abs(model.weights)
    total = float(aw.sum())
    groups: dict[tuple, float] = {}
    for s, v in zip(specs, aw):
        key = (s.family, s.name, s.channel)
        groups[key] = groups.get(key, 0.0) + float(v)
    rows = [{"family": f, "feature": n, "channel": c,
             "share": (v / total) if total > 0 else 0.0}
            for (f, n, c), v in groups.items()]
    rows.sort(key=lambda r: (-r["share"], r["family"], r["feature"], r["channel"]))
    return rows


def feature_shares(rows) -> dict[tuple[str, str], float]:
    """Collapse a breakdown over channels: (family, feature) -> share."""
    out: dict[tuple[str, str], float] = {}
    for r in rows:
        key = (r["family"], r["feature"])
        out[key] = out.get(key, 0.0) + r["share"]
    return out


def write_breakdown(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["family", "feature", "channel", "share"],
                                lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({**r, "share": repr(float(r["share"]))})
