"""Recursive spectral clustering of genotype panels by ancestry, with
case-control matching inside homogeneous clusters."""

__version__ = "0.1.0"

from .clustering import ClusterLabels, assign_nearest, choose_k, ward_cluster, ward_linkage
from .engine import ClusterTree, EngineConfig, Mode, cluster_gem, dac_gem, select_base, split_node
from .errors import (
    AncestryMapError,
    ArgumentError,
    ConstraintError,
    DataValidationError,
    DegeneratePanelError,
    ParseError,
)
from .genotype_io import (
    MISSING,
    GenotypeMatrix,
    PhenotypeTable,
    Status,
    impute_missing,
    load_genotypes,
    load_phenotypes,
    maf_filter,
    save_genotypes,
)
from .matching import MatchConfig, MatchResult, cc_match, match_all_leaves, match_dimension
from .simulate import HierarchicalConfig, SimConfig, balding_nichols, hierarchical_balding_nichols
from .spectral import (
    Eigenmap,
    build_eigenmap,
    compute_norm_stats,
    eigendecompose,
    kernel_block,
    normalize,
    nystrom_project,
    significant_dimensions,
)
