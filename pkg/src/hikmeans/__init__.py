"""Hierarchical k-means curation of embedding pools.

Builds a bottom-up cluster hierarchy over a pool of embedding vectors,
with resampling-clustering passes that spread centroids toward the uniform
distribution over the data support, then extracts balanced subsets by flat
or hierarchical quota allocation. A desk-scale harness verifies the
distributional claims numerically.
"""

from ._backend import BACKEND, set_threads
from .core import (
    ClusterConfig,
    ClusterTree,
    DataError,
    DegenerateDataError,
    EmbeddingDataset,
    FormatError,
    HikmeansError,
    SampleSpec,
    TreeLevel,
    ValidationError,
    load_dataset,
    load_indices,
    load_tree,
    save_dataset,
    save_indices,
    save_tree,
)
from .hierarchy import build_hierarchy, resample_cluster, subtree_leaf_count
from .kmeans import (
    KMeansResult,
    PowerDescentConfig,
    assign,
    distortion,
    fit_kmeans,
    kmeanspp_init,
    lloyd,
    power_kmeans,
    random_init,
)
from .sampling import SamplePlan, allocate, flat_sample, hierarchical_sample, sample_tree

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ClusterConfig",
    "ClusterTree",
    "DataError",
    "DegenerateDataError",
    "EmbeddingDataset",
    "FormatError",
    "HikmeansError",
    "KMeansResult",
    "PowerDescentConfig",
    "SamplePlan",
    "SampleSpec",
    "TreeLevel",
    "ValidationError",
    "allocate",
    "assign",
    "build_hierarchy",
    "distortion",
    "fit_kmeans",
    "flat_sample",
    "hierarchical_sample",
    "kmeanspp_init",
    "lloyd",
    "load_dataset",
    "load_indices",
    "load_tree",
    "power_kmeans",
    "random_init",
    "resample_cluster",
    "sample_tree",
    "save_dataset",
    "save_indices",
    "save_tree",
    "set_threads",
    "subtree_leaf_count",
    "__version__",
]
