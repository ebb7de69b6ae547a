"""Consensus dependency trees from parser ensembles, without gold labels.

The pipeline reduces each sentence's candidate edges (the union over
parsers) to a signed vote matrix, estimates per-edge scores with one of
three aggregators, and decodes a maximum spanning arborescence per
sentence:

* ``vote_mst``: unweighted vote counts.
* ``crh_run``: iterative reliability weighting (conflict resolution).
* ``cim_run``: a pairwise binary graphical model with correlated-parser
  collapsing and method-of-moments accuracy estimates.

`evaluation` adds the surrounding protocol (filtering, seeded ranking,
UAS scoring, cross-treebank summaries) and `synth` generates corrupted
ensembles with known accuracies for calibration tests.
"""

from .arborescence import (
    NoArborescenceError,
    WeightedTokenGraph,
    brute_force_arborescence,
    max_arborescence,
    tree_weight,
)
from .cim import (
    CimOptions,
    CimResult,
    CollapseMap,
    CorrelationGraph,
    IsingParams,
    cim_run,
    cim_trees,
    collapse_correlated,
    estimate_correlation_graph,
    estimate_mean_params,
    fit_canonical_params,
    fit_l1_logistic,
    infer_scores,
    joint_prob_oracle,
)
from .conllu import (
    ConlluError,
    TreebankFile,
    build_ensemble,
    check_segmentation,
    load_treebank,
    parse_conllu,
    save_treebank,
    write_conllu,
)
from .crh import (
    CrhOptions,
    CrhState,
    crh_run,
    crh_trees,
    truth_update,
    weight_update,
)
from .edges import (
    CandidateEdge,
    EdgeLabelMatrix,
    build_edge_union,
    label_matrix,
    majority_vote,
    trees_from_scores,
)
from .evaluation import (
    MethodDiff,
    PreprocessResult,
    RankResult,
    SummaryReport,
    TreebankReport,
    method_diffs,
    preprocess,
    rank_and_select,
    summarize,
    uas,
    vote_mst,
)
from .synth import SynthConfig, SynthResult, generate
from .trees import (
    DepTree,
    InvalidTreeError,
    ParseEnsemble,
    Sentence,
    Token,
    edges_of,
    heads_from_edges,
    pooled_ensemble,
    validate_tree,
)

__version__ = "0.1.0"

__all__ = [
    "CandidateEdge",
    "CimOptions",
    "CimResult",
    "CollapseMap",
    "ConlluError",
    "CorrelationGraph",
    "CrhOptions",
    "CrhState",
    "DepTree",
    "EdgeLabelMatrix",
    "InvalidTreeError",
    "IsingParams",
    "MethodDiff",
    "NoArborescenceError",
    "ParseEnsemble",
    "PreprocessResult",
    "RankResult",
    "Sentence",
    "SummaryReport",
    "SynthConfig",
    "SynthResult",
    "Token",
    "TreebankFile",
    "TreebankReport",
    "WeightedTokenGraph",
    "brute_force_arborescence",
    "build_edge_union",
    "build_ensemble",
    "check_segmentation",
    "cim_run",
    "cim_trees",
    "collapse_correlated",
    "crh_run",
    "crh_trees",
    "edges_of",
    "estimate_correlation_graph",
    "estimate_mean_params",
    "fit_canonical_params",
    "fit_l1_logistic",
    "generate",
    "heads_from_edges",
    "infer_scores",
    "joint_prob_oracle",
    "label_matrix",
    "load_treebank",
    "majority_vote",
    "max_arborescence",
    "method_diffs",
    "parse_conllu",
    "pooled_ensemble",
    "preprocess",
    "rank_and_select",
    "save_treebank",
    "summarize",
    "trees_from_scores",
    "tree_weight",
    "truth_update",
    "uas",
    "validate_tree",
    "vote_mst",
    "weight_update",
    "write_conllu",
]
