"""Maximum spanning arborescence over a sentence's candidate edges.

The solver is Chu-Liu/Edmonds with recursive cycle contraction, rooted at
the artificial node 0. Ties are broken deterministically: candidate arcs
are scanned in (head, dependent) order and only strict improvements
replace the incumbent, so among equal-weight optima the head sequence that
compares lexicographically smallest wins. ``brute_force_arborescence``
enumerates every head assignment (q <= 8) with the same tie rule and
exists as an independent check on the solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .trees import DepTree


class NoArborescenceError(ValueError):
    """The graph has no spanning arborescence under the requested rooting."""


@dataclass(frozen=True)
class WeightedTokenGraph:
    """Candidate arcs (head, dependent) -> weight for one sentence.

    Arcs are deduplicated keeping the larger weight, sorted, and validated:
    finite weights, heads in 0..q, dependents in 1..q, no self-loops.
    """

    sentence_id: str
    q: int
    arcs: tuple[tuple[int, int, float], ...]

    def __post_init__(self) -> None:
        if self.q < 1:
            raise ValueError("graph needs at least one token")
        best: dict[tuple[int, int], float] = {}
        for h, d, w in self.arcs:
            if not 1 <= d <= self.q or not 0 <= h <= self.q:
                raise ValueError(f"arc ({h}, {d}) outside token range 0..{self.q}")
            if h == d:
                raise ValueError(f"self-loop arc on token {d}")
            w = float(w)
            if not np.isfinite(w):
                raise ValueError(f"non-finite weight on arc ({h}, {d})")
            if (h, d) not in best or w > best[(h, d)]:
                best[(h, d)] = w
        object.__setattr__(
            self, "arcs", tuple((h, d, best[(h, d)]) for h, d in sorted(best))
        )

    def weight_of(self, head: int, dependent: int) -> float:
        for h, d, w in self.arcs:
            if (h, d) == (head, dependent):
                return w
        raise KeyError((head, dependent))


def tree_weight(graph: WeightedTokenGraph, tree: DepTree) -> float:
    """Total weight of a tree under the graph, summed in dependent order."""
    lookup = {(h, d): w for h, d, w in graph.arcs}
    total = 0.0
    for d, h in enumerate(tree.heads, start=1):
        if (h, d) not in lookup:
            raise ValueError(f"tree uses arc ({h}, {d}) absent from the graph")
        total += lookup[(h, d)]
    return total


class _Arc(NamedTuple):
    head: int
    dep: int
    weight: float
    parent: "_Arc | None"


def _find_cycle(best: dict[int, _Arc], root: int) -> list[int] | None:
    color: dict[int, int] = {root: 2}
    for start in sorted(best):
        if color.get(start, 0):
            continue
        walk: list[int] = []
        node = start
        while color.get(node, 0) == 0:
            color[node] = 1
            walk.append(node)
            node = best[node].head
        hit = color[node]
        for v in walk:
            color[v] = 2
        if hit == 1:
            return walk[walk.index(node) :]
    return None


def _solve(nodes: list[int], arcs: list[_Arc], root: int) -> list[_Arc]:
    """One Chu-Liu/Edmonds pass; returns chosen arcs at this level."""
    best: dict[int, _Arc] = {}
    for arc in sorted(arcs, key=lambda a: (a.head, a.dep, -a.weight)):
        if arc.dep == root or arc.head == arc.dep:
            continue
        cur = best.get(arc.dep)
        if cur is None or arc.weight > cur.weight:
            best[arc.dep] = arc
    for v in nodes:
        if v != root and v not in best:
            raise NoArborescenceError(f"node {v} has no incoming arc")
    cycle = _find_cycle(best, root)
    if cycle is None:
        return list(best.values())

    in_cycle = set(cycle)
    c = max(nodes) + 1
    contracted: list[_Arc] = []
    for arc in arcs:
        h_in, d_in = arc.head in in_cycle, arc.dep in in_cycle
        if h_in and d_in:
            continue
        if d_in:
            contracted.append(
                _Arc(arc.head, c, arc.weight - best[arc.dep].weight, arc)
            )
        elif h_in:
            contracted.append(_Arc(c, arc.dep, arc.weight, arc))
        else:
            contracted.append(_Arc(arc.head, arc.dep, arc.weight, arc))
    sub_nodes = [v for v in nodes if v not in in_cycle] + [c]
    chosen: list[_Arc] = []
    entering: _Arc | None = None
    for arc in _solve(sub_nodes, contracted, root):
        lifted = arc.parent
        assert lifted is not None
        chosen.append(lifted)
        if arc.dep == c:
            entering = lifted
    assert entering is not None
    for v in cycle:
        if v != entering.dep:
            chosen.append(best[v])
    return chosen


def _heads_from(chosen: Iterable[_Arc], q: int) -> DepTree:
    heads = [-1] * q
    for arc in chosen:
        heads[arc.dep - 1] = arc.head
    return DepTree(tuple(heads))


def max_arborescence(
    graph: WeightedTokenGraph, enforce_single_root: bool = True
) -> DepTree:
    """Maximum-weight spanning arborescence rooted at node 0.

    Ties are broken deterministically by scanning arcs in (head,
    dependent) order and keeping the incumbent unless strictly beaten;
    with a unique optimum the result is exact, and with all-equal
    weights it is the lexicographically smallest head sequence. Between
    those extremes the choice among equal-weight optima is stable but
    unspecified, because cycle contraction reorders the comparison.

    With ``enforce_single_root`` the tree uses exactly one arc out of
    the root, found by re-solving once per candidate root arc with the
    other root arcs removed and keeping the best solution (equal totals
    resolved toward the smaller head sequence).
    """
    arcs = [_Arc(h, d, w, None) for h, d, w in graph.arcs]
    nodes = list(range(graph.q + 1))
    if not enforce_single_root:
        return _heads_from(_solve(nodes, arcs, 0), graph.q)

    root_children = sorted({a.dep for a in arcs if a.head == 0})
    if not root_children:
        raise NoArborescenceError("no arc out of the root")
    best: tuple[float, tuple[int, ...]] | None = None
    for r in root_children:
        restricted = [a for a in arcs if a.head != 0 or a.dep == r]
        try:
            tree = _heads_from(_solve(nodes, restricted, 0), graph.q)
        except NoArborescenceError:
            continue
        total = tree_weight(graph, tree)
        key = (total, tuple(-h for h in tree.heads))
        if best is None or key > best:
            best, best_tree = key, tree
    if best is None:
        raise NoArborescenceError("no single-rooted spanning arborescence")
    return best_tree


_CHUNK = 1 << 18


def brute_force_arborescence(
    graph: WeightedTokenGraph, enforce_single_root: bool = True
) -> DepTree:
    """Exhaustive maximum arborescence for q <= 8.

    Enumerates all head assignments drawn from each token's incoming arcs,
    in lexicographic order of the head sequence, keeping the first
    assignment that attains the maximum weight. Independent of the
    Chu-Liu/Edmonds path by design.
    """
    q = graph.q
    if q > 8:
        raise ValueError(f"exhaustive search capped at 8 tokens, got {q}")
    cand: list[list[int]] = [[] for _ in range(q)]
    weight = np.full((q + 1, q + 1), -np.inf)
    for h, d, w in graph.arcs:
        cand[d - 1].append(h)
        weight[h, d] = w
    for d, heads in enumerate(cand, start=1):
        if not heads:
            raise NoArborescenceError(f"node {d} has no incoming arc")
        heads.sort()
    cand_arrays = [np.array(c, dtype=np.int16) for c in cand]
    sizes = np.array([len(c) for c in cand], dtype=np.int64)
    total = int(np.prod(sizes))
    cols = np.arange(1, q + 1)

    best_total: float | None = None
    best_heads: tuple[int, ...] | None = None
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        assign = np.empty((len(idx), q), dtype=np.int16)
        t = idx
        for d in range(q - 1, -1, -1):
            assign[:, d] = cand_arrays[d][t % sizes[d]]
            t = t // sizes[d]
        # Parent-pointer chase: after q hops every token of a valid tree
        # has reached the root.
        ptr = assign.copy()
        for _ in range(q):
            hop = np.take_along_axis(
                assign, np.maximum(ptr - 1, 0).astype(np.intp), axis=1
            )
            ptr = np.where(ptr == 0, 0, hop).astype(np.int16)
        valid = (ptr == 0).all(axis=1)
        if enforce_single_root:
            valid &= (assign == 0).sum(axis=1) == 1
        if not valid.any():
            continue
        totals = weight[assign, cols].sum(axis=1)
        totals[~valid] = -np.inf
        j = int(np.argmax(totals))
        if best_total is None or totals[j] > best_total:
            best_total = float(totals[j])
            best_heads = tuple(int(x) for x in assign[j])
    if best_heads is None:
        raise NoArborescenceError("no spanning arborescence")
    return DepTree(best_heads)
