"""Conflict-resolution truth discovery over the edge label matrix.

Block coordinate descent on the weighted-loss objective
``sum_k w_k * cost_k`` under the constraint ``sum_k exp(-w_k) = 1``:
the weight step has the closed form ``w_k = -log(cost_k / sum costs)``
and the truth step is a weighted majority vote, so the objective never
increases. Costs are either per-edge 0/1 disagreements ("edge" distance)
or per-sentence tree distances ``1 - UAS`` ("uas" distance); in the latter
mode the truth step is solved exactly as a maximum arborescence over
weight-summed votes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .edges import (
    EdgeLabelMatrix,
    majority_vote,
    sentence_rows,
    trees_from_scores,
)
from .trees import DepTree, ParseEnsemble, edges_of

DISTANCE_MODES = ("edge", "uas")


@dataclass(frozen=True)
class CrhOptions:
    distance: str = "edge"
    max_iterations: int = 100
    tol: float = 1e-9
    eps: float = 1e-8
    enforce_single_root: bool = True

    def __post_init__(self) -> None:
        if self.distance not in DISTANCE_MODES:
            raise ValueError(f"distance must be one of {DISTANCE_MODES}")
        if self.max_iterations < 1 or self.eps <= 0 or self.tol < 0:
            raise ValueError("bad CRH options")


@dataclass(frozen=True)
class CrhState:
    """Weights, truths, and the objective after the last completed step."""

    weights: np.ndarray
    truths: np.ndarray
    objective: float
    iterations: int
    converged: bool
    objective_history: tuple[float, ...] = ()


def _costs_edge(truths: np.ndarray, matrix: EdgeLabelMatrix) -> np.ndarray:
    return (matrix.labels != truths[:, None]).sum(axis=0).astype(np.float64)


def weight_update(
    truths: np.ndarray, matrix: EdgeLabelMatrix, eps: float = 1e-8
) -> np.ndarray:
    """Closed-form weights from per-parser 0/1 edge costs.

    Costs are smoothed by ``eps`` so perfect parsers keep finite weight;
    the result always satisfies sum(exp(-w)) == 1.
    """
    costs = _costs_edge(truths, matrix) + eps
    return -np.log(costs / costs.sum())


def truth_update(weights: np.ndarray, matrix: EdgeLabelMatrix) -> np.ndarray:
    """Weighted per-edge majority vote; exact ties break toward +1."""
    score = matrix.labels.astype(np.float64) @ weights
    return np.where(score >= 0, 1, -1).astype(np.int8)


def _weighted_vote_trees(
    weights: np.ndarray,
    matrix: EdgeLabelMatrix,
    ensemble: ParseEnsemble,
    enforce_single_root: bool,
) -> dict[str, DepTree]:
    votes = (matrix.labels == 1).astype(np.float64) @ weights
    return trees_from_scores(matrix, votes, ensemble, enforce_single_root)


def _uas_costs(
    ensemble: ParseEnsemble, aggregated: Mapping[str, DepTree]
) -> np.ndarray:
    costs = np.zeros(ensemble.m)
    for sid in ensemble.sentence_ids:
        agg = np.asarray(aggregated[sid].heads)
        for k, tree in enumerate(ensemble.trees[sid]):
            match = (np.asarray(tree.heads) == agg).mean()
            costs[k] += 1.0 - match
    return costs


def _truths_from_trees(
    matrix: EdgeLabelMatrix, trees: Mapping[str, DepTree]
) -> np.ndarray:
    truths = np.empty(matrix.n_edges, dtype=np.int8)
    for sid, rows in sentence_rows(matrix):
        chosen = set(edges_of(trees[sid]))
        for i, e in enumerate(matrix.edges[rows], start=rows.start):
            truths[i] = 1 if (e.head, e.dependent) in chosen else -1
    return truths


def crh_run(
    matrix: EdgeLabelMatrix,
    opts: CrhOptions = CrhOptions(),
    ensemble: ParseEnsemble | None = None,
) -> CrhState:
    """Alternate weight and truth updates from a majority-vote start.

    Stops when the truths stop changing or the objective decrease falls
    below ``opts.tol``, or after ``opts.max_iterations`` rounds. The "uas"
    distance needs the ensemble to score whole trees.
    """
    if matrix.m < 2:
        raise ValueError("need at least two parsers")
    uas_mode = opts.distance == "uas"
    if uas_mode and ensemble is None:
        raise ValueError('distance "uas" needs the ensemble')

    truths = majority_vote(matrix)
    trees: dict[str, DepTree] = {}
    if uas_mode:
        assert ensemble is not None
        uniform = np.ones(matrix.m)
        trees = _weighted_vote_trees(
            uniform, matrix, ensemble, opts.enforce_single_root
        )
        truths = _truths_from_trees(matrix, trees)

    objective = np.inf
    history: list[float] = []
    weights = np.full(matrix.m, np.log(matrix.m))
    converged = False
    iteration = 0
    for iteration in range(1, opts.max_iterations + 1):
        if uas_mode:
            assert ensemble is not None
            costs = _uas_costs(ensemble, trees) + opts.eps
        else:
            costs = _costs_edge(truths, matrix) + opts.eps
        weights = -np.log(costs / costs.sum())

        if uas_mode:
            assert ensemble is not None
            trees = _weighted_vote_trees(
                weights, matrix, ensemble, opts.enforce_single_root
            )
            new_truths = _truths_from_trees(matrix, trees)
            new_costs = _uas_costs(ensemble, trees) + opts.eps
        else:
            new_truths = truth_update(weights, matrix)
            new_costs = _costs_edge(new_truths, matrix) + opts.eps
        new_objective = float(weights @ new_costs)
        history.append(new_objective)

        unchanged = bool(np.array_equal(new_truths, truths))
        small_drop = objective - new_objective < opts.tol
        truths, objective = new_truths, new_objective
        if unchanged or small_drop:
            converged = True
            break
    return CrhState(
        weights, truths, objective, iteration, converged, tuple(history)
    )


def crh_trees(
    state: CrhState,
    matrix: EdgeLabelMatrix,
    ensemble: ParseEnsemble,
    enforce_single_root: bool = True,
) -> dict[str, DepTree]:
    """Decode consensus trees from converged weights.

    Edge scores are weight mass on +1 votes normalized by total weight, so
    they live in [0, 1] like the probabilistic aggregators' scores.
    """
    votes = (matrix.labels == 1).astype(np.float64) @ state.weights
    scores = votes / state.weights.sum()
    return trees_from_scores(matrix, scores, ensemble, enforce_single_root)
