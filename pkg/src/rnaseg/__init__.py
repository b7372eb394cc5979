"""Texture-feature segmentation of RNAscope transcripts in histology patches."""

from .candidates import Candidate, CandidateMask, select_candidates
from .evaluation import MatchResult, match, sweep_maps
from .imgcore import AnnotationSet, load_annotations, load_patch, save_annotations, save_patch
from .model import LinearModel, NormStats, TrainConfig, fit, load_model, save_model, train
from .pipeline import PipelineConfig, process_patch, train_model
from .segmap import Detection, detect, render_map
from .stain import StainMatrix, deconvolve
from .synth import SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "AnnotationSet", "Candidate", "CandidateMask", "Detection", "LinearModel", "MatchResult",
    "NormStats", "PipelineConfig", "StainMatrix", "SynthConfig", "TrainConfig", "deconvolve",
    "detect", "fit", "generate", "load_annotations", "load_model", "load_patch", "match",
    "process_patch", "render_map", "save_annotations", "save_model", "save_patch",
    "select_candidates", "sweep_maps", "train", "train_model",
]
