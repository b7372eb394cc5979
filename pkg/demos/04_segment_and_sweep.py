"""From classifier scores to detections, then a threshold sweep scored
against the annotations."""
# %%
from rnaseg.evaluation import best_row, match
from rnaseg.pipeline import PipelineConfig, process_patch, sweep_patches, train_model
from rnaseg.segmap import detect
from rnaseg.synth import SynthConfig, generate

cfg = PipelineConfig()
train = [generate(SynthConfig(seed=s, dots=80)) for s in range(6)]
model = train_model(*zip(*train), cfg)

img, truth = generate(SynthConfig(seed=300, dots=80))
res = process_patch(img, model, cfg, truth)
print(f"{len(res.candidates)} candidates -> {len(res.detections)} detections")
print(f"default thresholds: P={res.match.precision:.3f} R={res.match.recall:.3f} "
      f"F1={res.match.f1:.3f}")

# %% Raising the gray threshold shrinks the binarized regions.
for g in (100, 132, 180, 220):
    dets = detect(res.seg_map, g, cfg.area_threshold)
    m = match(dets, truth)
    print(f"gray {g:3d}: {len(dets):3d} detections, F1 {m.f1:.3f}")

# %% Greedy versus optimal pairing on the same detections.
print("optimal F1", round(match(res.detections, truth, optimal=True).f1, 3))

# %% Full 128 x 10 surface over three held-out patches.
test = [generate(SynthConfig(seed=s, dots=80)) for s in (301, 302, 303)]
rows = sweep_patches(*zip(*test), model, cfg)
best = best_row(rows)
print(f"{len(rows)} settings; best gray {best['gray']} area {best['area']} F1 {best['f1']:.3f}")
