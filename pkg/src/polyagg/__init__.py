"""polyagg: polyhedral mesh agglomeration by recursive graph bisection."""

__version__ = "0.1.0"

from .mesh import Agglomeration, TetMesh, read_msh, write_msh, write_vtk
from .dualgraph import DualGraph, extract_dual_graph
from .features import build_features, normalize_features
from .gnn import init_params, load_checkpoint, save_checkpoint
from .bisection import GNNBisector, KMeansBisector, MultilevelBisector
from .agglomerate import AgglomerationConfig, agglomerate
from .quality import quality_report
from .train import TrainConfig, TrainSample, train

__all__ = [
    "__version__",
    "TetMesh",
    "Agglomeration",
    "read_msh",
    "write_msh",
    "write_vtk",
    "DualGraph",
    "extract_dual_graph",
    "build_features",
    "normalize_features",
    "init_params",
    "save_checkpoint",
    "load_checkpoint",
    "GNNBisector",
    "KMeansBisector",
    "MultilevelBisector",
    "AgglomerationConfig",
    "agglomerate",
    "quality_report",
    "TrainConfig",
    "TrainSample",
    "train",
]
