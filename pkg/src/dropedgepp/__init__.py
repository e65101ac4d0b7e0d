"""Layer-wise edge sampling for deep graph convolutional networks."""

__version__ = "0.1.0"

from .graph import EdgeSet, Graph, NormalizedAdjacency, degrees, normalize
from .samplers import SamplerParams, ScheduleSampler, dropedge_pp, sample_ldd, sample_li, sample_lid
from .men import men, men_report, men_star, spectral_gap, subspace_distance, layer_distance
from .backbones import ModelConfig, SamplerSpec, TrainOptions, evaluate, train
from .data import DatasetSpec, load_dataset, preprocess
