"""PolSAR land-cover classification with a compact adaptive CNN."""

from .cnn import (CnnLayer, CompactCnn, NetworkConfig, TrainConfig, TrainHistory,
                  adapt_learning_rate, backward, forward, gradcheck, init_weights,
                  mse_loss, predict, train)
from .errors import DataError, FormatError, PolcnnError, TrainingDiverged
from .io import load_model, read_cube, read_labels, save_model, write_cube, write_labels
from .metrics import ConfusionMatrix, accuracy_stats, confusion_matrix
from .pipeline import (LabelRaster, SampleSet, build_dataset, classify_image,
                       cross_site_remap, extract_patch, sample_training_pixels,
                       split_train_validation)
from .polsar import (FeatureCube, HermitianImage, ScatteringImage, build_hermitian_image,
                     features_from_coherency, features_from_scattering)
from .synth import SceneSpec, generate_scene, synth4

__version__ = "0.1.0"
