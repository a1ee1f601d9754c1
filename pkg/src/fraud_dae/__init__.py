"""Fraud detection on imbalanced transactions: SMOTE, a denoising autoencoder and a softmax classifier."""

from .classifier import ClassifierModel, decide, predict_proba, train_classifier
from .dae import DaeModel, NoiseSpec, corrupt, denoise, train_dae
from .dataset import LabeledDataset, SplitSpec, generate_synthetic, load_csv, preprocess, split
from .evaluation import ConfusionMatrix, SweepRow, accuracy, confusion, recall, threshold_sweep
from .nn import LayerSpec, NetworkParams, TrainConfig
from .pipeline import PipelineConfig, load_models, run_model1, run_model2, save_models
from .resampler import SmoteConfig, minority_knn, smote

__version__ = "0.1.0"
