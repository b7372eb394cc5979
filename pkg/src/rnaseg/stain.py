"""Colour deconvolution of haematoxylin + RNAscope (DAB-like brown) stains."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imgcore import as_rgb, round_half_up

HAEMATOXYLIN_OD = (0.650, 0.704, 0.286)
DAB_OD = (0.269, 0.568, 0.778)


class SingularStainMatrix(ValueError):
    pass


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n == 0 or not np.isfinite(n):
        raise SingularStainMatrix("stain vector has zero length")
    return v / n


@dataclass(frozen=True)
class StainMatrix:
    """Three unit optical-density rows: haematoxylin, RNAscope, residual."""

    vectors: np.ndarray

    def __post_init__(self):
        m = np.array(self.vectors, dtype=np.float64).reshape(3, 3)
        m = np.stack([_unit(r) for r in m])
        cond = np.linalg.cond(m)
        if not np.isfinite(cond) or cond > 1e12:
            raise SingularStainMatrix(f"stain matrix is singular (condition number {cond:.3g})")
        m.setflags(write=False)
        object.__setattr__(self, "vectors", m)

    @classmethod
    def from_stains(cls, haem, rnascope) -> "StainMatrix":
        h, r = _unit(haem), _unit(rnascope)
        resid = np.cross(h, r)
        if np.linalg.norm(resid) < 1e-12:
            raise SingularStainMatrix("haematoxylin and RNAscope vectors are parallel")
        return cls(np.stack([h, r, _unit(resid)]))

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.vectors)


def default_stain_matrix() -> StainMatrix:
    """Standard H-DAB vectors with the residual as their normalised cross product."""
    return StainMatrix.from_stains(HAEMATOXYLIN_OD, DAB_OD)


def optical_density(img) -> np.ndarray:
    rgb = as_rgb(img).astype(np.float64)
    return -np.log10(np.maximum(rgb, 1.0) / 255.0)


def concentrations(img, m: StainMatrix | None = None) -> np.ndarray:
    """Per-pixel stain concentrations, shape ``(H, W, 3)``.

    Optical density is a row vector ``a @ M`` so ``a = OD @ inv(M)``.
    """
    m = default_stain_matrix() if m is None else m
    return optical_density(img) @ m.inverse


def concentrations_to_planes(conc: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    vals = np.clip(round_half_up(255.0 * np.power(10.0, -conc)), 0, 255).astype(np.uint8)
    return vals[..., 0], vals[..., 1], vals[..., 2]


def deconvolve(img, m: StainMatrix | None = None):
    """Split an RGB patch into (haematoxylin, RNAscope, residual) planes.

    Each plane is a pseudo-intensity ``255 * 10**-a``: 255 means no stain,
    darker means more stain.
    """
    return concentrations_to_planes(concentrations(img, m))


def render_od(conc: np.ndarray, m: StainMatrix | None = None) -> np.ndarray:
    """Forward Beer-Lambert model: concentrations ``(..., 3)`` to RGB uint8."""
    m = default_stain_matrix() if m is None else m
    od = np.asarray(conc, dtype=np.float64) @ m.vectors
    rgb = 255.0 * np.power(10.0, -od)
    return np.clip(round_half_up(rgb), 0, 255).astype(np.uint8)
