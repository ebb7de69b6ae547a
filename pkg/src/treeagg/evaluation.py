"""Treebank-level evaluation protocol: filtering, ranking, scoring.

The protocol mirrors how ensembles of shared-task parser outputs are
compared: drop sentences the parsers tokenize differently, drop sentences
they all agree on (nothing to aggregate), reject treebanks that end up too
small or too thin, rank parsers by UAS on a small seeded sample, and score
consensus trees by micro-averaged UAS over syntactic words.
"""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .conllu import TreebankFile, build_ensemble, check_segmentation
from .edges import label_matrix, trees_from_scores
from .trees import DepTree, ParseEnsemble


@dataclass(frozen=True)
class FilterLog:
    total: int
    seg_dropped: int
    agree_dropped: int
    kept_positions: tuple[int, ...]
    n_parsers: int
    rejected: str | None = None

    @property
    def kept(self) -> int:
        return len(self.kept_positions)


@dataclass(frozen=True)
class PreprocessResult:
    ensemble: ParseEnsemble | None
    files: tuple[TreebankFile, ...] | None
    gold: TreebankFile | None
    log: FilterLog

    @property
    def rejected(self) -> bool:
        return self.log.rejected is not None


def preprocess(
    files: Sequence[TreebankFile],
    gold: TreebankFile,
    min_sentences: int = 50,
    min_parsers: int = 9,
) -> PreprocessResult:
    """Filter a treebank's ensemble for aggregation.

    Drops sentences whose segmentation differs across the parser files or
    the gold file (UAS would be undefined), then sentences on which every
    parser outputs the same tree. Rejection (too few parsers, too few
    surviving sentences) is an outcome recorded in the log, not an error.
    """
    total = len(gold)
    if len(files) < min_parsers:
        log = FilterLog(
            total, 0, 0, (), len(files),
            f"{len(files)} parsers, need at least {min_parsers}",
        )
        return PreprocessResult(None, None, None, log)
    seg_ok = check_segmentation([*files, gold])
    seg_dropped = seg_ok.count(False)
    kept: list[int] = []
    agree_dropped = 0
    for i, ok in enumerate(seg_ok):
        if not ok:
            continue
        trees = [f.sentences[i].tree for f in files]
        if all(t == trees[0] for t in trees[1:]):
            agree_dropped += 1
            continue
        kept.append(i)
    if len(kept) < min_sentences:
        log = FilterLog(
            total, seg_dropped, agree_dropped, tuple(kept), len(files),
            f"{len(kept)} surviving sentences, need at least {min_sentences}",
        )
        return PreprocessResult(None, None, None, log)
    log = FilterLog(total, seg_dropped, agree_dropped, tuple(kept), len(files))
    filtered = tuple(f.subset(kept) for f in files)
    return PreprocessResult(
        build_ensemble(filtered), filtered, gold.subset(kept), log
    )


def uas(
    pred: Sequence[DepTree],
    gold: Sequence[DepTree],
    exclude: Sequence[Sequence[bool]] | None = None,
) -> float:
    """Micro-averaged unlabeled attachment score, as a percentage.

    ``exclude`` optionally masks tokens (True = skip), e.g. punctuation.
    Token counts must agree sentence by sentence.
    """
    if len(pred) != len(gold):
        raise ValueError(f"{len(pred)} predicted trees vs {len(gold)} gold")
    if not gold:
        raise ValueError("no sentences to score")
    correct = 0
    counted = 0
    for i, (p, g) in enumerate(zip(pred, gold)):
        if len(p) != len(g):
            raise ValueError(f"sentence {i}: {len(p)} tokens predicted, {len(g)} gold")
        mask = exclude[i] if exclude is not None else None
        for d in range(len(g)):
            if mask is not None and mask[d]:
                continue
            counted += 1
            if p.heads[d] == g.heads[d]:
                correct += 1
    if counted == 0:
        raise ValueError("every token excluded")
    return 100.0 * correct / counted


@dataclass(frozen=True)
class RankResult:
    selected: tuple[str, ...]
    table: tuple[tuple[str, float], ...]
    sample_positions: tuple[int, ...]
    warning: str | None = None


def rank_and_select(
    ensemble: ParseEnsemble,
    gold_trees: Sequence[DepTree],
    sample_size: int = 10,
    top_k: int = 9,
    seed: int = 0,
) -> RankResult:
    """Rank parsers by UAS on a seeded sentence sample; keep the top k.

    Sampling is uniform without replacement over the (already filtered)
    sentences; ranking ties keep ensemble order (stable sort).
    """
    sids = ensemble.sentence_ids
    if len(gold_trees) != len(sids):
        raise ValueError("gold trees do not align with the ensemble")
    n = len(sids)
    take = min(sample_size, n)
    positions = sorted(random.Random(seed).sample(range(n), take))
    sample_gold = [gold_trees[i] for i in positions]
    table = []
    for k, pid in enumerate(ensemble.parser_ids):
        sample_pred = [ensemble.trees[sids[i]][k] for i in positions]
        table.append((pid, uas(sample_pred, sample_gold)))
    warning = None
    if top_k > ensemble.m:
        warning = f"asked for top {top_k} of {ensemble.m} parsers; keeping all"
    order = sorted(range(ensemble.m), key=lambda k: -table[k][1])
    selected = tuple(ensemble.parser_ids[k] for k in order[:top_k])
    return RankResult(selected, tuple(table), tuple(positions), warning)


def vote_mst(
    ensemble: ParseEnsemble, enforce_single_root: bool = True
) -> dict[str, DepTree]:
    """Consensus trees from unweighted vote counts (the MST baseline)."""
    matrix = label_matrix(ensemble)
    votes = (matrix.labels == 1).sum(axis=1).astype(np.float64)
    return trees_from_scores(matrix, votes, ensemble, enforce_single_root)


@dataclass(frozen=True)
class SummaryReport:
    """Distribution summary of one method's per-treebank UAS values."""

    group: str
    n: int
    mean: float
    median: float
    std: float

    def rounded(self) -> dict:
        return {
            "group": self.group,
            "n": self.n,
            "mean": round(self.mean, 2),
            "median": round(self.median, 2),
            "std": round(self.std, 2),
        }


def summarize(values: Sequence[float], group: str = "all") -> SummaryReport:
    """Mean, median, and population standard deviation of UAS values.

    Nothing is rounded here; rounding happens only at display time.
    """
    if not values:
        raise ValueError("no values to summarize")
    vals = [float(v) for v in values]
    return SummaryReport(
        group,
        len(vals),
        statistics.fmean(vals),
        float(statistics.median(vals)),
        statistics.pstdev(vals),
    )


@dataclass(frozen=True)
class TreebankReport:
    """Evaluation record for one treebank, JSON-shaped via ``to_json``."""

    treebank: str
    n_sentences: int
    methods: Mapping[str, float]
    selected_parsers: tuple[str, ...] = ()
    filters: Mapping[str, int] = field(default_factory=dict)
    sample_table: tuple[tuple[str, float], ...] = ()

    def to_json(self) -> dict:
        out: dict = {
            "treebank": self.treebank,
            "n_sentences": self.n_sentences,
            "methods": dict(self.methods),
            "selected_parsers": list(self.selected_parsers),
            "filters": dict(self.filters),
        }
        if self.sample_table:
            out["sample_table"] = [[p, u] for p, u in self.sample_table]
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "TreebankReport":
        return cls(
            treebank=data["treebank"],
            n_sentences=int(data["n_sentences"]),
            methods={k: float(v) for k, v in data["methods"].items()},
            selected_parsers=tuple(data.get("selected_parsers", ())),
            filters={k: int(v) for k, v in data.get("filters", {}).items()},
            sample_table=tuple(
                (p, float(u)) for p, u in data.get("sample_table", ())
            ),
        )


@dataclass(frozen=True)
class MethodDiff:
    diffs: Mapping[str, float]
    positive: int
    negative: int
    zero: int


def method_diffs(
    reports: Sequence[TreebankReport], primary: str = "cim"
) -> dict[str, MethodDiff]:
    """Per-treebank UAS differences, primary method minus each baseline.

    Every report must score the primary method, and each baseline must be
    scored on exactly the treebanks the primary is.
    """
    if not reports:
        raise ValueError("no reports")
    for r in reports:
        if primary not in r.methods:
            raise ValueError(f"treebank {r.treebank!r} lacks method {primary!r}")
    baselines = sorted(
        {m for r in reports for m in r.methods} - {primary}
    )
    out: dict[str, MethodDiff] = {}
    for b in baselines:
        missing = [r.treebank for r in reports if b not in r.methods]
        if missing:
            raise ValueError(f"method {b!r} missing on treebanks {missing}")
        diffs = {r.treebank: r.methods[primary] - r.methods[b] for r in reports}
        vals = list(diffs.values())
        out[b] = MethodDiff(
            diffs,
            sum(v > 0 for v in vals),
            sum(v < 0 for v in vals),
            sum(v == 0 for v in vals),
        )
    return out
