from .extract import (CHANNELS, FeatureSpec, FeatureVector, column_names, extract_features,
                      extract_full, extract_reduced, manifest, reduced_indices)
from .features import coarseness, energy, ldhgle, lahgle, variance
from .matrices import (NG, extract_windows, glcm, gldm, glrlm, glszm, ngtdm, quantize)

feature_energy = energy
feature_variance = variance
feature_coarseness = coarseness
feature_ldhgle = ldhgle
feature_lahgle = lahgle

__all__ = [
    "CHANNELS", "FeatureSpec", "FeatureVector", "NG", "coarseness", "column_names", "energy",
    "extract_features", "extract_full", "extract_reduced", "extract_windows",
    "feature_coarseness", "feature_energy", "feature_lahgle", "feature_ldhgle",
    "feature_variance", "glcm", "gldm", "glrlm", "glszm", "lahgle", "ldhgle", "manifest",
    "ngtdm", "quantize", "reduced_indices", "variance",
]
