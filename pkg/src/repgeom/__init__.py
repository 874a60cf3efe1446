"""Geometry of learned representations: intrinsic dimension, encoding and
model-to-model alignment, noise ceilings, and seeded synthetic benchmarks."""
__version__ = "0.1.0"

from .alignment import (
    DEFAULT_LAMBDA_GRID,
    AlignmentConfig,
    AlignmentResult,
    align_models,
    alignment_matrix,
    encode,
    pick_reference,
    reference_alignment,
    split_dataset,
)
from .errors import RepgeomError
from .intrinsic_dim import (
    correlation_dimension,
    id_dataset,
    local_id,
    mada_point,
    mle_point,
    mom_point,
    scale_sweep,
    subsample_id,
)
from .io import load_manifest, read_matrix, write_matrix
from .neighbors import knn_all, knn_query, neighborhood_extract
from .noise_ceiling import TrialCounts, ceiling, ceiling_from_trials, effective_noise, normalize_alignment
from .stats import bin_by, grouped_summary, pearson, spearman, within_group_alignment
from .synthetic import ManifoldSpec, ZooSpec, linear_teacher, repeated_trials, sample_manifold, synth_zoo
