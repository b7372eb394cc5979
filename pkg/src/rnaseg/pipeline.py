"""End-to-end wiring: patch -> candidates -> features -> scores -> detections.

Also holds :class:`PipelineConfig` and its flat ``key = value`` file format.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .candidates import (BLUR_SIGMA, DARK_CUTOFF, DARK_FILL_OFFSET, THRESHOLD_DECREMENT,
                         CandidateMask, select_candidates)
from .evaluation import MATCH_RADIUS, MatchResult, match, sweep_maps
from .imgcore import to_grayscale
from .model import LABEL_RADIUS, LinearModel, TrainConfig, fit, label_candidates
from .segmap import AREA_THRESHOLD, GRAY_THRESHOLD, detect, render_map
from .stain import DAB_OD, HAEMATOXYLIN_OD, StainMatrix, deconvolve
from .texture import extract_features, manifest


@dataclass(frozen=True)
class PipelineConfig:
    haematoxylin: tuple[float, float, float] = HAEMATOXYLIN_OD
    rnascope: tuple[float, float, float] = DAB_OD
    blur_sigma: float = BLUR_SIGMA
    threshold_decrement: int = THRESHOLD_DECREMENT
    dark_fill_offset: int = DARK_FILL_OFFSET
    dark_cutoff: int = DARK_CUTOFF
    feature_set: str = "reduced"
    train: TrainConfig = field(default_factory=TrainConfig)
    label_radius: float = LABEL_RADIUS
    gray_threshold: int = GRAY_THRESHOLD
    area_threshold: int = AREA_THRESHOLD
    match_radius: float = MATCH_RADIUS
    optimal_matching: bool = False

    def __post_init__(self):
        if self.feature_set not in ("full", "reduced"):
            raise ValueError(f"feature_set must be 'full' or 'reduced', got {self.feature_set!r}")
        if not self.blur_sigma > 0:
            raise ValueError("blur_sigma must be positive")
        if not 0 <= self.threshold_decrement <= 255:
            raise ValueError("threshold_decrement must lie in [0, 255]")
        if not 1 <= self.dark_fill_offset <= 255:
            raise ValueError("dark_fill_offset must lie in [1, 255]")
        if not 0 <= self.dark_cutoff <= 256:
            raise ValueError("dark_cutoff must lie in [0, 256]")
        if not 0 <= self.gray_threshold <= 255:
            raise ValueError("gray_threshold must lie in [0, 255]")
        if self.area_threshold < 1:
            raise ValueError("area_threshold must be at least 1")
        if not self.match_radius > 0 or not self.label_radius >= 0:
            raise ValueError("radii must be positive")

    @property
    def stain_matrix(self) -> StainMatrix:
        return StainMatrix.from_stains(self.haematoxylin, self.rnascope)


# dotted config key -> (field, parser); "train.*" keys go to TrainConfig
def _vec(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.strip().strip("[]()").replace(",", " ").split()]
    if len(parts) != 3:
        raise ValueError(f"expected three numbers, got {text!r}")
    return tuple(parts)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


CONFIG_KEYS = {
    "stain.haem": ("haematoxylin", _vec),
    "stain.rnascope": ("rnascope", _vec),
    "candidates.blur_sigma": ("blur_sigma", float),
    "candidates.threshold_decrement": ("threshold_decrement", int),
    "candidates.dark_fill_offset": ("dark_fill_offset", int),
    "candidates.dark_cutoff": ("dark_cutoff", int),
    "features.set": ("feature_set", str),
    "labels.radius": ("label_radius", float),
    "segment.gray_threshold": ("gray_threshold", int),
    "segment.area_threshold": ("area_threshold", int),
    "eval.match_radius": ("match_radius", float),
    "eval.optimal": ("optimal_matching", _bool),
    "train.C": ("C", float),
    "train.tol": ("tol", float),
    "train.max_iter": ("max_iter", lambda s: int(float(s))),
    "train.penalty": ("penalty", str),
    "train.class_weighting": ("class_weighting", str),
    "train.seed": ("seed", int),
}


def parse_config_text(text: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment. Unknown keys are errors."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ValueError(f"line {lineno}: expected key = value")
        if key not in CONFIG_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def config_from_mapping(values: dict[str, str], base: PipelineConfig | None = None) -> PipelineConfig:
    base = PipelineConfig() if base is None else base
    top, train = {}, {}
    for key, text in values.items():
        name, parse = CONFIG_KEYS[key]
        (train if key.startswith("train.") else top)[name] = parse(text)
    cfg_train = dataclasses.replace(base.train, **train) if train else base.train
    return dataclasses.replace(base, train=cfg_train, **top)


def load_config(path, base: PipelineConfig | None = None) -> PipelineConfig:
    return config_from_mapping(parse_config_text(Path(path).read_text()), base)


def format_config(cfg: PipelineConfig) -> str:
    lines = []
    for key, (name, _) in CONFIG_KEYS.items():
        v = getattr(cfg.train if key.startswith("train.") else cfg, name)
        if isinstance(v, tuple):
            v = ",".join(repr(float(x)) for x in v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


# --- stages -------------------------------------------------------------------

@dataclass
class Planes:
    gray: np.ndarray
    haem: np.ndarray
    rnascope: np.ndarray

    @property
    def channels(self):
        return self.gray, self.haem, self.rnascope


def split_planes(img, cfg: PipelineConfig) -> Planes:
    haem, rna, _ = deconvolve(img, cfg.stain_matrix)
    return Planes(to_grayscale(img), haem, rna)


def find_candidates(planes: Planes, cfg: PipelineConfig):
    return select_candidates(planes.rnascope, planes.gray, decrement=cfg.threshold_decrement,
                             dark_cutoff=cfg.dark_cutoff, dark_offset=cfg.dark_fill_offset,
                             sigma=cfg.blur_sigma)


@dataclass
class PatchResult:
    candidates: list
    mask: CandidateMask
    features: np.ndarray
    scores: np.ndarray
    seg_map: np.ndarray
    detections: list
    timings: dict[str, float] = field(default_factory=dict)
    match: MatchResult | None = None


def patch_features(img, cfg: PipelineConfig, timings: dict | None = None):
    """``(planes, candidates, mask, features)`` for one RGB patch."""
    timings = {} if timings is None else timings
    t0 = time.perf_counter()
    planes = split_planes(img, cfg)
    t1 = time.perf_counter()
    cands, mask = find_candidates(planes, cfg)
    t2 = time.perf_counter()
    X = extract_features(planes.channels, cands, cfg.feature_set)
    t3 = time.perf_counter()
    timings.update(deconvolve=t1 - t0, candidates=t2 - t1, features=t3 - t2)
    return planes, cands, mask, X


def process_patch(img, model: LinearModel, cfg: PipelineConfig, truth=None) -> PatchResult:
    """Run every stage on one patch; match against ``truth`` when given."""
    if model.feature_set not in ("custom", cfg.feature_set):
        raise ValueError(f"model was trained on the {model.feature_set!r} feature set, "
                         f"pipeline is configured for {cfg.feature_set!r}")
    timings: dict[str, float] = {}
    planes, cands, mask, X = patch_features(img, cfg, timings)
    t0 = time.perf_counter()
    scores = model.predict_score(X) if len(cands) else np.zeros(0)
    seg = render_map(cands, scores, planes.gray.shape)
    dets = detect(seg, cfg.gray_threshold, cfg.area_threshold)
    timings["segment"] = time.perf_counter() - t0
    res = PatchResult(cands, mask, X, scores, seg, dets, timings)
    if truth is not None:
        res.match = match(dets, truth, cfg.match_radius, cfg.optimal_matching)
    return res


def training_rows(images, truths, cfg: PipelineConfig):
    """Stack features and labels over several annotated patches."""
    Xs, ys = [], []
    for img, truth in zip(images, truths):
        _, cands, _, X = patch_features(img, cfg)
        Xs.append(X)
        ys.append(label_candidates(cands, truth, cfg.label_radius))
    ncols = len(manifest(cfg.feature_set))
    X = np.concatenate(Xs) if Xs else np.zeros((0, ncols))
    y = np.concatenate(ys) if ys else np.zeros(0, dtype=np.int64)
    return X, y


def train_model(images, truths, cfg: PipelineConfig) -> LinearModel:
    X, y = training_rows(images, truths, cfg)
    return fit(X, y, cfg.train, manifest(cfg.feature_set), cfg.feature_set)


def sweep_patches(images, truths, model: LinearModel, cfg: PipelineConfig, **kw) -> list[dict]:
    """F1 surface over gray/area thresholds for a trained model."""
    maps = [process_patch(img, model, cfg).seg_map for img in images]
    kw.setdefault("radius", cfg.match_radius)
    kw.setdefault("optimal", cfg.optimal_matching)
    return sweep_maps(maps, truths, **kw)
