"""Seeded synthetic RNAscope patches with exact ground truth.

Images are rendered in optical-density space with the default stain matrix
and pushed through the Beer-Lambert forward model, so colour deconvolution
recovers the painted concentrations up to rounding and pixel noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imgcore import AnnotationSet, round_half_up
from .stain import default_stain_matrix

MAX_ATTEMPTS = 10_000
# With default settings every dot centre is at least this much darker in the
# deconvolved RNAscope plane than the ring around it (see dot_contrast).
DOT_CONTRAST_MARGIN = 100


class TooDenseError(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    """Generator parameters. Concentrations are optical-density units."""

    seed: int = 0
    side: int = 480
    dots: int = 80
    dot_radius: tuple[float, float] = (1.0, 3.0)
    hue_jitter: float = 10.0  # degrees, rotation of the dot stain towards haematoxylin
    dot_intensity: tuple[float, float] = (0.7, 1.3)
    nuclei: int = 30
    nucleus_axes: tuple[float, float] = (6.0, 14.0)
    nucleus_intensity: tuple[float, float] = (0.3, 0.6)
    background_haem: float = 0.10
    background_dab: float = 0.03
    background_noise: float = 0.03
    dab_noise: float = 0.012
    dab_shift: float = 0.25
    noise_cell: int = 24
    pixel_noise: float = 1.5

    def __post_init__(self):
        for name in ("dot_radius", "dot_intensity", "nucleus_axes", "nucleus_intensity"):
            lo, hi = getattr(self, name)
            if not 0 <= lo <= hi:
                raise ValueError(f"{name} must be a non-empty range, got {(lo, hi)}")
        if self.dots < 0 or self.nuclei < 0:
            raise ValueError("counts must be non-negative")
        if self.side < 1 or self.noise_cell < 1:
            raise ValueError("side and noise_cell must be positive")
        if self.dot_radius[1] <= 0 < self.dots:
            raise ValueError("dots need a positive radius")


def value_noise(rng: np.random.Generator, shape, cell: int) -> np.ndarray:
    """Smooth noise in [-1, 1]: a coarse random lattice upsampled cubically."""
    gh, gw = shape[0] // cell + 3, shape[1] // cell + 3
    lattice = rng.uniform(-1.0, 1.0, size=(gh, gw))
    fine = ndimage.zoom(lattice, cell, order=3, mode="nearest")
    return np.clip(fine[cell:cell + shape[0], cell:cell + shape[1]], -1.0, 1.0)


def place_dots(rng: np.random.Generator, cfg: SynthConfig) -> np.ndarray:
    """Integer centres at least ``2 * max radius`` apart, by rejection sampling."""
    rmax = cfg.dot_radius[1]
    gap = 2.0 * rmax
    lo, hi = int(np.ceil(rmax)), cfg.side - int(np.ceil(rmax))
    if cfg.dots and hi <= lo:
        raise TooDenseError("too dense: patch too small for the dot radius")
    pts: list[tuple[int, int]] = []
    attempts = 0
    while len(pts) < cfg.dots:
        if attempts >= MAX_ATTEMPTS:
            raise TooDenseError(f"too dense: placed {len(pts)} of {cfg.dots} dots")
        attempts += 1
        x, y = (int(v) for v in rng.integers(lo, hi, size=2))
        if all((x - px) ** 2 + (y - py) ** 2 >= gap * gap for px, py in pts):
            pts.append((x, y))
    return np.array(pts, dtype=np.float64).reshape(-1, 2)


def _dot_direction(angle_deg: float) -> np.ndarray:
    """Unit OD vector: DAB rotated by ``angle_deg`` towards haematoxylin."""
    m = default_stain_matrix().vectors
    dab, haem = m[1], m[0]
    perp = haem - (haem @ dab) * dab
    perp /= np.linalg.norm(perp)
    a = np.deg2rad(angle_deg)
    return np.cos(a) * dab + np.sin(a) * perp


def generate(cfg: SynthConfig = SynthConfig()) -> tuple[np.ndarray, AnnotationSet]:
    """Render one patch and its dot centres."""
    rng = np.random.default_rng(cfg.seed)
    m = default_stain_matrix().vectors
    n = cfg.side
    yy, xx = np.mgrid[0:n, 0:n].astype(np.float64)

    haem = cfg.background_haem + cfg.background_noise * value_noise(rng, (n, n), cfg.noise_cell)
    # Darker-only DAB variation. Part of the tissue sits exactly at the base
    # tone, which stays the histogram peak while most tissue is darker.
    shade = np.clip(value_noise(rng, (n, n), cfg.noise_cell) + cfg.dab_shift, 0.0, None)
    dab = cfg.background_dab + cfg.dab_noise * shade / (1.0 + cfg.dab_shift)
    od = np.clip(haem, 0, None)[..., None] * m[0] + np.clip(dab, 0, None)[..., None] * m[1]

    for _ in range(cfg.nuclei):
        cx, cy = rng.uniform(0, n, size=2)
        a, b = np.sort(rng.uniform(*cfg.nucleus_axes, size=2))[::-1]
        theta = rng.uniform(0, np.pi)
        level = rng.uniform(*cfg.nucleus_intensity)
        dx, dy = xx - cx, yy - cy
        u = (dx * np.cos(theta) + dy * np.sin(theta)) / b
        v = (-dx * np.sin(theta) + dy * np.cos(theta)) / a
        rho = np.sqrt(u * u + v * v)
        # soft edge about one pixel wide
        weight = np.clip((1.0 - rho) * min(a, b) + 0.5, 0.0, 1.0)
        od += (level * weight)[..., None] * m[0]

    centres = place_dots(rng, cfg)
    for x, y in centres:
        r = rng.uniform(*cfg.dot_radius)
        level = rng.uniform(*cfg.dot_intensity)
        direction = _dot_direction(rng.uniform(-cfg.hue_jitter, cfg.hue_jitter))
        span = int(np.ceil(r + 1))
        ys = slice(max(int(y) - span, 0), min(int(y) + span + 1, n))
        xs = slice(max(int(x) - span, 0), min(int(x) + span + 1, n))
        dist = np.hypot(xx[ys, xs] - x, yy[ys, xs] - y)
        weight = np.clip(r + 0.5 - dist, 0.0, 1.0)
        od[ys, xs] += (level * weight)[..., None] * direction

    rgb = 255.0 * np.power(10.0, -od)
    if cfg.pixel_noise > 0:
        rgb += rng.normal(0.0, cfg.pixel_noise, size=rgb.shape)
    img = np.clip(round_half_up(rgb), 0, 255).astype(np.uint8)
    return img, AnnotationSet(centres, source=f"synth-{cfg.seed}")


def dot_contrast(rnascope, truth, ring: int = 8) -> np.ndarray:
    """Median RNAscope value in a square ring around each dot minus the value
    at its centre. Positive means the dot is darker than its surroundings."""
    plane = np.asarray(rnascope, dtype=np.float64)
    h, w = plane.shape
    out = []
    for x, y in np.asarray(getattr(truth, "points", truth)).reshape(-1, 2).astype(int):
        y0, y1, x0, x1 = max(y - ring, 0), min(y + ring + 1, h), max(x - ring, 0), min(x + ring + 1, w)
        win = plane[y0:y1, x0:x1]
        yy, xx = np.mgrid[y0:y1, x0:x1]
        border = np.maximum(np.abs(yy - y), np.abs(xx - x)) >= ring - 1
        out.append(np.median(win[border]) - plane[y, x])
    return np.array(out)
