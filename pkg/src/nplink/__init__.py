"""Non-parametric link prediction on sequences of graph snapshots."""

from ._kernels import BACKEND
from .baselines import (AdamicAdarScorer, CommonNeighborsScorer, KatzScorer, LastLinkScorer,
                        RandomScorer, katz_row)
from .evaluation import METHODS, EvalReport, EvalTask, auc, candidate_set, evaluate
from .features import Datacube, PairFeature, build_datacube, pair_features, smooth_cell
from .graph import GraphSequence, Snapshot, load_edge_list, neighborhood
from .kernel import (CellPosterior, KernelConfig, NonParametricPredictor, datacube_distance,
                     kernel_weight, predict, tv_normal)
from .lsh import LshIndex, LshParams, build_index, encode_cell
from .simgen import SimConfig, generate

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AdamicAdarScorer", "CommonNeighborsScorer", "KatzScorer", "LastLinkScorer",
    "RandomScorer", "katz_row", "METHODS", "EvalReport", "EvalTask", "auc", "candidate_set",
    "evaluate", "Datacube", "PairFeature", "build_datacube", "pair_features", "smooth_cell",
    "GraphSequence", "Snapshot", "load_edge_list", "neighborhood", "CellPosterior", "KernelConfig",
    "NonParametricPredictor", "datacube_distance", "kernel_weight", "predict", "tv_normal",
    "LshIndex", "LshParams", "build_index", "encode_cell", "SimConfig", "generate",
]
