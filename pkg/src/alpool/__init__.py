"""Pool-based active learning for multi-label text classification."""

from .acquisition import STRATEGY_NAMES, parse_strategy, select_batch
from .clustering import KMeansPlusPlus, kmeans_fit
from .corpus import Document, LabelSpace, clean_text, load_corpus
from .engine import ExperimentConfig, prepare_corpus, run_experiment
from .features import TfidfFeaturizer
from .metrics import confusion, micro_prf
from .models import FeedForwardNN, LogisticRegressionOVR, ModelConfig, RandomForestOVR
from .synthgen import SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "Document",
    "ExperimentConfig",
    "FeedForwardNN",
    "KMeansPlusPlus",
    "LabelSpace",
    "LogisticRegressionOVR",
    "ModelConfig",
    "RandomForestOVR",
    "STRATEGY_NAMES",
    "SynthSpec",
    "TfidfFeaturizer",
    "clean_text",
    "confusion",
    "generate",
    "kmeans_fit",
    "load_corpus",
    "micro_prf",
    "parse_strategy",
    "prepare_corpus",
    "run_experiment",
    "select_batch",
]
