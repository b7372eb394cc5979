"""Train the linear classifier on synthetic patches and look at which
feature families carry the weight."""
# %%
import numpy as np

from rnaseg.model import fit, load_model, save_model, weight_breakdown
from rnaseg.pipeline import PipelineConfig, training_rows
from rnaseg.synth import SynthConfig, generate
from rnaseg.texture import manifest

cfg = PipelineConfig()
data = [generate(SynthConfig(seed=s, dots=80)) for s in range(6)]
X, y = training_rows(*zip(*data), cfg)
print(f"{len(y)} candidates, {int(y.sum())} labelled as dots")

# %% Balanced class weights make up for the heavy imbalance.
model = fit(X, y, cfg.train, manifest("reduced"), "reduced")
acc = np.mean((model.predict_score(X) > 0) == (y > 0))
print(f"training accuracy {acc:.3f}, bias {model.bias:+.3f}")

# %% Share of |w| per family, feature and channel.
for row in weight_breakdown(model)[:10]:
    print(f"{row['share']:6.1%}  {row['family']:9s} {row['feature']:40s} {row['channel']}")

# %% Models round-trip through a plain text file.
save_model("demo_model.txt", model)
again = load_model("demo_model.txt")
print("round trip exact:", np.array_equal(again.weights, model.weights))
