"""Reconstruct weighted trees from the weights of their m-leaf subtrees."""

from .counterexample import CaterpillarPair, build_counterexample, verify_pair
from .errors import (
    BelowThresholdError,
    MMapFormatError,
    MTreeError,
    NewickError,
    NotRealizableError,
    TreeError,
)
from .mdissim import (
    ConditionReport,
    MMap,
    Violation,
    check_necessary_conditions,
    compute_mmap,
    read_mmap,
    write_mmap,
)
from .newick import parse_newick, write_newick
from .reconstruct import (
    Outcome,
    QuartetCall,
    ReconstructionResult,
    perturbation_trial,
    quartet_oracle,
    reconstruct,
    reconstruct_topology,
    recover_internal_edge_weight,
    recover_leaf_edge_weights,
)
from .scalar import ScalarMode
from .tree_core import (
    Split,
    WeightedTree,
    random_tree,
    same_tree,
    splits_of,
    subtree_weight,
    tree_from_splits,
)
from .tropical import (
    LiftedMatrix,
    lift,
    plucker_minors,
    trop_membership,
    verify_minor_factorization,
    verify_triple_identity,
)

__version__ = "0.1.0"
