"""Local tangent space alignment for manifold learning and dimension reduction."""

from .align import (
    AlignmentOperator,
    Embedding,
    LinearModel,
    SolverOptions,
    build_operator,
    linear_embed,
    ltsa_embed,
)
from .dataset import (
    GroundTruth,
    LabeledSet,
    embed_highdim,
    gen_curve,
    gen_peak_surface,
    gen_three_gaussians,
    load_csv,
    save_csv,
)
from .eigen import SolverReport, smallest_eigenpairs
from .errors import (
    ConvergenceError,
    CSVFormatError,
    DatasetError,
    LTSAError,
    NeighborhoodError,
    ReconstructionError,
)
from .neighbors import NeighborhoodIndex, knn, knn_bruteforce, knn_tree
from .tangent import LocalFrame, all_frames, estimate_dim, local_frame, singular_ratio_profile

__version__ = "0.1.0"
