"""Shared test utilities: random graphs, synthetic vote matrices, rank stats."""

from __future__ import annotations

import numpy as np

from treeagg.arborescence import WeightedTokenGraph


def random_complete_digraph(
    name: str, q: int, rng: np.random.Generator
) -> WeightedTokenGraph:
    """Complete directed graph over {0..q} with uniform random weights."""
    arcs = tuple(
        (h, d, float(rng.random()))
        for d in range(1, q + 1)
        for h in range(0, q + 1)
        if h != d
    )
    return WeightedTokenGraph(name, q, arcs)


def ci_label_matrix(
    accuracies: list[float] | tuple[float, ...] | np.ndarray,
    n: int,
    rng: np.random.Generator,
    balanced: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Conditionally independent voters with known per-voter accuracies.

    Returns (labels, truth) with entries in {-1, +1}. Voter j agrees with
    the truth on each row independently with probability accuracies[j].
    ``balanced`` makes the truth exactly half +1 (shuffled).
    """
    m = len(accuracies)
    if balanced:
        truth = np.ones(n, dtype=np.int8)
        truth[n // 2 :] = -1
        truth = truth[rng.permutation(n)]
    else:
        truth = np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8)
    labels = np.empty((n, m), dtype=np.int8)
    for j, a in enumerate(accuracies):
        agree = rng.random(n) < a
        labels[:, j] = np.where(agree, truth, -truth)
    return labels, truth


def random_vote_matrix(
    n: int, m: int, rng: np.random.Generator
) -> np.ndarray:
    """Uniform random {-1,+1} votes with every row given at least one +1."""
    labels = np.where(rng.random((n, m)) < 0.5, 1, -1).astype(np.int8)
    all_minus = labels.sum(axis=1) == -m
    if all_minus.any():
        cols = rng.integers(0, m, size=int(all_minus.sum()))
        labels[np.flatnonzero(all_minus), cols] = 1
    return labels


def average_ranks(values: list[float]) -> list[float]:
    """1-based ranks; ties share the mean of the ranks they occupy."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = shared
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Spearman rank correlation with average ranks for ties."""
    rx = np.asarray(average_ranks([float(v) for v in x]))
    ry = np.asarray(average_ranks([float(v) for v in y]))
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    return float(rx @ ry / np.sqrt((rx @ rx) * (ry @ ry)))


def conllu_text(sentences: list[tuple[str, list[str], list[int]]]) -> str:
    """Minimal CoNLL-U text from (sent_id, forms, heads) triples."""
    blocks = []
    for sid, forms, heads in sentences:
        lines = [f"# sent_id = {sid}"]
        for i, (form, head) in enumerate(zip(forms, heads), start=1):
            lines.append(
                "\t".join(
                    (str(i), form, "_", "_", "_", "_", str(head), "_", "_", "_")
                )
            )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
