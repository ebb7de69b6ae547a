"""Reduction of tree ensembles to an edge-level signed label matrix.

Per sentence, the candidate set is the union of all parsers' edges. Each
candidate edge becomes one row; parser k's entry is +1 if its tree contains
the edge and -1 otherwise, so every aggregation method downstream works on
one {-1, +1} matrix regardless of where the labels came from.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .arborescence import WeightedTokenGraph, max_arborescence
from .trees import DepTree, ParseEnsemble, edges_of


@dataclass(frozen=True, order=True)
class CandidateEdge:
    sentence_id: str
    head: int
    dependent: int


@dataclass(frozen=True, eq=False)
class EdgeLabelMatrix:
    """Rows are candidate edges (grouped by sentence, in corpus order, then
    sorted by (head, dependent)); columns are parsers; entries are +-1."""

    edges: tuple[CandidateEdge, ...]
    labels: np.ndarray
    parser_ids: tuple[str, ...]
    spans: tuple[tuple[str, int, int], ...] = field(init=False)

    def __post_init__(self) -> None:
        if self.labels.shape != (len(self.edges), len(self.parser_ids)):
            raise ValueError(
                f"labels shape {self.labels.shape} does not match "
                f"{len(self.edges)} edges x {len(self.parser_ids)} parsers"
            )
        if self.labels.size and not np.isin(self.labels, (-1, 1)).all():
            raise ValueError("labels must be -1 or +1")
        spans = []
        start = 0
        for sid, group in itertools.groupby(self.edges, key=lambda e: e.sentence_id):
            n = sum(1 for _ in group)
            spans.append((sid, start, start + n))
            start += n
        if len({s for s, _, _ in spans}) != len(spans):
            raise ValueError("edges of one sentence must be contiguous")
        object.__setattr__(self, "spans", tuple(spans))
        self.labels.setflags(write=False)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def m(self) -> int:
        return len(self.parser_ids)

    def with_labels(
        self, labels: np.ndarray, parser_ids: tuple[str, ...]
    ) -> "EdgeLabelMatrix":
        return EdgeLabelMatrix(self.edges, labels, parser_ids)

    @classmethod
    def from_labels(
        cls, labels: np.ndarray, parser_ids: Sequence[str] | None = None
    ) -> "EdgeLabelMatrix":
        """Wrap a bare label array; rows get placeholder one-edge sentences.

        Intended for estimation work on synthetic label data where no real
        sentences exist; such a matrix cannot drive tree extraction.
        """
        labels = np.asarray(labels, dtype=np.int8)
        n, m = labels.shape
        ids = tuple(parser_ids) if parser_ids is not None else tuple(
            f"p{k + 1}" for k in range(m)
        )
        edges = tuple(CandidateEdge(f"r{i}", 0, 1) for i in range(n))
        return cls(edges, labels, ids)


def build_edge_union(ensemble: ParseEnsemble) -> dict[str, tuple[tuple[int, int], ...]]:
    """Per-sentence union of parser edges, sorted by (head, dependent)."""
    union: dict[str, tuple[tuple[int, int], ...]] = {}
    for sid in ensemble.sentence_ids:
        seen: set[tuple[int, int]] = set()
        for tree in ensemble.trees[sid]:
            seen.update(edges_of(tree))
        union[sid] = tuple(sorted(seen))
    return union


def label_matrix(ensemble: ParseEnsemble) -> EdgeLabelMatrix:
    """Build the signed label matrix for an ensemble.

    Row order is deterministic: sentences in corpus order, edges within a
    sentence by (head, dependent). Every row has at least one +1 because
    each candidate edge was proposed by some parser.
    """
    union = build_edge_union(ensemble)
    edges: list[CandidateEdge] = []
    rows: list[np.ndarray] = []
    for sid in ensemble.sentence_ids:
        edge_sets = [set(edges_of(t)) for t in ensemble.trees[sid]]
        for h, d in union[sid]:
            edges.append(CandidateEdge(sid, h, d))
            rows.append(
                np.fromiter(
                    (1 if (h, d) in es else -1 for es in edge_sets),
                    dtype=np.int8,
                    count=len(edge_sets),
                )
            )
    labels = (
        np.stack(rows) if rows else np.zeros((0, ensemble.m), dtype=np.int8)
    )
    return EdgeLabelMatrix(tuple(edges), labels, ensemble.parser_ids)


def majority_vote(matrix: EdgeLabelMatrix) -> np.ndarray:
    """Per-edge majority label; exact ties break toward +1."""
    sums = matrix.labels.astype(np.int64).sum(axis=1)
    return np.where(sums >= 0, 1, -1).astype(np.int8)


def sentence_rows(matrix: EdgeLabelMatrix) -> Iterator[tuple[str, slice]]:
    for sid, start, stop in matrix.spans:
        yield sid, slice(start, stop)


def trees_from_scores(
    matrix: EdgeLabelMatrix,
    scores: np.ndarray,
    ensemble: ParseEnsemble,
    enforce_single_root: bool = True,
) -> dict[str, DepTree]:
    """Decode one tree per sentence from per-edge scores."""
    out: dict[str, DepTree] = {}
    for sid, rows in sentence_rows(matrix):
        q = ensemble.token_count(sid)
        arcs = tuple(
            (e.head, e.dependent, float(s))
            for e, s in zip(matrix.edges[rows], scores[rows])
        )
        graph = WeightedTokenGraph(sid, q, arcs)
        out[sid] = max_arborescence(graph, enforce_single_root)
    return out


def iter_dump_lines(matrix: EdgeLabelMatrix) -> Iterator[str]:
    """Debug dump, one line per edge: sentence id, head, dependent, votes."""
    for edge, row in zip(matrix.edges, matrix.labels):
        votes = "\t".join(f"{int(v):+d}" for v in row)
        yield f"{edge.sentence_id}\t{edge.head}\t{edge.dependent}\t{votes}"
