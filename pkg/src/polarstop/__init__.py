"""Stopping-set analysis and simulation for polar code architectures."""

from .concat import (
    AugmentedSpec,
    Interleaver,
    LocalGlobalSpec,
    augmented_encode,
    build_augmented_spec,
    build_local_global_spec,
    h_set,
    local_global_encode,
    nde_construct,
    opss_construct,
    opss_outer_spec,
)
from .decoding import (
    DecodeResult,
    augmented_bec_peel,
    augmented_bp_decode,
    bec_peel,
    bp_decode,
    global_decode,
    local_decode,
)
from .factor_graph import (
    FactorGraph,
    LeafClassification,
    NodeRef,
    SubgraphMask,
    build_factor_graph,
    classify_leaves,
    is_stopping_set,
    stopping_tree,
    union_tree,
)
from .polar_core import (
    CodeSpec,
    check_cover_swap_closure,
    construct_bec,
    construct_ga,
    encode,
    leaf_count,
    polar_transform,
    row_support,
    systematic_encode,
)
from .stopping import (
    BoundReport,
    DeletionTrace,
    concat_sd_upper,
    deletion_bound_I,
    deletion_bound_II,
    encoding_bound,
    exhaustive_mvss,
    lower_bound_I,
    lower_bound_II,
    mvss_exact_or_bounds,
    stopping_distance,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
