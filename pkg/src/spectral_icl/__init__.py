"""Spectral in-context learning on synthetic manifolds.

Fixed-weight attention stacks that build a graph Laplacian and its bottom
eigenspace in their forward pass, an in-context head that runs kernel
gradient descent over the resulting features, exact-geodesic manifold
benchmarks, reference baselines, and a deterministic sweep harness.
"""

from .attention import (
    LayerParams,
    TokenState,
    kernel_linear,
    kernel_rbf,
    layer_update,
    normalize_lower_rows,
)
from .baselines import LogRegModel, fit_kernel_logreg, fit_logreg, predict_logreg
from .harness import (
    DEFAULT_HP,
    METHODS,
    SweepConfig,
    SweepResult,
    emit_plot,
    episode_seed,
    load_sweep_config,
    read_sweep_csv,
    run_episode,
    run_sweep,
    spectral_features,
    tune_scalars,
    write_sweep_csv,
)
from .icl_head import (
    ClassEmbeddings,
    IclConfig,
    IclState,
    default_class_embeddings,
    exact_expectation,
    feature_kernel,
    forward,
    gd_layer,
    icl_loss,
    init_state,
    predict,
    probabilities,
)
from .manifolds import (
    UNLABELED,
    Episode,
    ManifoldSpec,
    SampledManifold,
    apply_rigid_motion,
    assign_labels,
    chart,
    geodesic,
    load_episode,
    load_pointcloud_csv,
    make_episode,
    product_geodesic,
    sample_manifold,
    save_episode,
)
from .metrics import EmbeddingSet, accuracy, mutual_knn_alignment, separation_score
from .rep_transformer import (
    EigenmapProgram,
    build_eigenmap_program,
    dct_rows,
    estimate_lambda_max,
    tf_eigenmap,
    tf_laplacian,
    tf_rep,
)
from .spectral import (
    AffinityMatrix,
    LaplacianSet,
    affinity,
    bottom_eigenvectors,
    knn_sparsify,
    laplacians,
    load_matrix_csv,
    pairwise_sq_dists,
    principal_angles,
    save_matrix_csv,
)
from .validation import run_validation

__version__ = "0.1.0"
