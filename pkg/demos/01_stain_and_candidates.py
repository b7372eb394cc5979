"""Stain separation and candidate selection on one synthetic patch.

Run with ``python3 demos/01_stain_and_candidates.py``. Writes the brown
plane and the candidate mask next to the working directory as PNGs.
"""
# %%
import numpy as np

from rnaseg.candidates import exclusion_radius, select_candidates
from rnaseg.imgcore import save_plane, to_grayscale
from rnaseg.stain import deconvolve, default_stain_matrix
from rnaseg.synth import SynthConfig, generate

img, truth = generate(SynthConfig(seed=3, dots=60))
print("patch", img.shape, "with", len(truth.points), "annotated dots")

# %% Colour deconvolution: dark pixels mean high stain concentration.
m = default_stain_matrix()
haem, rna, residual = deconvolve(img, m)
print("stain vectors (rows: haematoxylin, RNAscope, residual)")
print(np.round(m.vectors, 3))
print("RNAscope plane range", rna.min(), rna.max())

# %% Candidate selection walks the mask darkest-first and blocks a disc
# around every accepted pixel. Darker pixels block a wider disc.
for i in (100, 150, 200):
    print(f"intensity {i} at threshold 120 -> radius {int(exclusion_radius(i, 120))}")

cands, mask = select_candidates(rna, to_grayscale(img))
print(f"threshold {mask.thresh}, {len(cands)} candidates")
radii = np.bincount([c.radius for c in cands])
print("radius histogram", dict(enumerate(radii.tolist())))

# %% How many annotated dots have a candidate within 2 px?
xy = np.array([(c.x, c.y) for c in cands], dtype=float)
d = np.sqrt(((truth.points[:, None, :] - xy[None]) ** 2).sum(-1)).min(axis=1)
print(f"dots covered by a candidate: {np.mean(d <= 2):.1%}")

save_plane("demo_rnascope.png", rna)
save_plane("demo_mask.png", mask.data)
