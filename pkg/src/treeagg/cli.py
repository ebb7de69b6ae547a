"""Command line pipeline: preprocess, rank, aggregate, evaluate, report, synth.

Stages compose through files so each step is independently inspectable:

    treeagg synth      --out-dir corpus --sentences 200 --tokens 5:12 \\
                       --rates 0.05,0.1,0.2 --seed 7
    treeagg preprocess --inputs corpus/parsers --gold corpus/gold.conllu \\
                       --out-dir filtered
    treeagg rank       --inputs filtered/parsers --gold filtered/gold.conllu \\
                       --seed 7 --out selected.json
    treeagg aggregate  --inputs filtered/parsers --method cim --out pred.conllu
    treeagg evaluate   --gold filtered/gold.conllu --pred cim=pred.conllu \\
                       --out report.json
    treeagg report     --reports report.json --out summary.json

Identical inputs, flags, and seeds produce byte-identical outputs. Exit
codes: 0 success, 1 runtime error, 2 usage error, 3 treebank rejected by
preprocessing thresholds.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from . import cim as cim_mod
from . import crh as crh_mod
from .conllu import (
    ConlluError,
    TreebankFile,
    load_treebank,
    save_treebank,
)
from .edges import iter_dump_lines, label_matrix
from .evaluation import (
    TreebankReport,
    method_diffs,
    preprocess,
    rank_and_select,
    summarize,
    uas,
    vote_mst,
)
from .synth import SynthConfig, generate

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_REJECTED = 3

METHODS = ("mst", "crh", "cim")


def _load_parser_dir(inputs: str) -> list[TreebankFile]:
    paths = sorted(Path(inputs).glob("*.conllu"))
    if not paths:
        raise FileNotFoundError(f"no .conllu files under {inputs}")
    return [load_treebank(p) for p in paths]


def _write_json(path: str, payload: object) -> None:
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _cmd_preprocess(args: argparse.Namespace) -> int:
    files = _load_parser_dir(args.inputs)
    gold = load_treebank(args.gold)
    result = preprocess(files, gold, args.min_sentences, args.min_parsers)
    log = result.log
    payload = {
        "total": log.total,
        "seg_dropped": log.seg_dropped,
        "agree_dropped": log.agree_dropped,
        "kept": log.kept,
        "n_parsers": log.n_parsers,
        "rejected": log.rejected,
    }
    out_dir = Path(args.out_dir)
    (out_dir / "parsers").mkdir(parents=True, exist_ok=True)
    _write_json(str(out_dir / "filters.json"), payload)
    if result.rejected:
        print(f"treebank rejected: {log.rejected}", file=sys.stderr)
        return EXIT_REJECTED
    assert result.files is not None and result.gold is not None
    for f in result.files:
        save_treebank(f, out_dir / "parsers" / f"{f.parser_id}.conllu")
    save_treebank(result.gold, out_dir / "gold.conllu")
    print(
        f"kept {log.kept}/{log.total} sentences "
        f"(segmentation {log.seg_dropped}, agreement {log.agree_dropped})"
    )
    return EXIT_OK


def _cmd_rank(args: argparse.Namespace) -> int:
    files = _load_parser_dir(args.inputs)
    gold = load_treebank(args.gold)
    from .conllu import build_ensemble

    ensemble = build_ensemble(files)
    result = rank_and_select(
        ensemble, gold.trees, args.sample_size, args.top_k, args.seed
    )
    payload = {
        "selected": list(result.selected),
        "table": [[p, u] for p, u in result.table],
        "sample_positions": list(result.sample_positions),
        "seed": args.seed,
    }
    if result.warning:
        payload["warning"] = result.warning
        print(result.warning, file=sys.stderr)
    _write_json(args.out, payload)
    return EXIT_OK


def _selected_ids(path: str | None) -> list[str] | None:
    if path is None:
        return None
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return list(data["selected"]) if isinstance(data, dict) else list(data)


def _cmd_aggregate(args: argparse.Namespace) -> int:
    files = _load_parser_dir(args.inputs)
    selected = _selected_ids(args.selected)
    if selected is not None:
        by_id = {f.parser_id: f for f in files}
        missing = [p for p in selected if p not in by_id]
        if missing:
            raise ValueError(f"selected parsers not found: {missing}")
        files = [f for f in files if f.parser_id in set(selected)]
    from .conllu import build_ensemble

    ensemble = build_ensemble(files)
    matrix = label_matrix(ensemble)
    if args.dump_matrix:
        Path(args.dump_matrix).write_text(
            "\n".join(iter_dump_lines(matrix)) + "\n", encoding="utf-8"
        )
    single_root = not args.no_single_root
    if args.method == "mst":
        trees = vote_mst(ensemble, single_root)
    elif args.method == "crh":
        opts = crh_mod.CrhOptions(
            distance=args.crh_distance,
            max_iterations=args.crh_max_iter,
            eps=args.crh_eps,
            enforce_single_root=single_root,
        )
        state = crh_mod.crh_run(matrix, opts, ensemble)
        trees = crh_mod.crh_trees(state, matrix, ensemble, single_root)
    else:
        opts = cim_mod.CimOptions(
            l1_penalty=args.cim_l1,
            coef_threshold=args.cim_coef_threshold,
            collapse=not args.cim_no_collapse,
            triplet_min=args.cim_triplet_min,
            enforce_single_root=single_root,
        )
        result = cim_mod.cim_run(matrix, opts)
        trees = cim_mod.cim_trees(result.scores, matrix, ensemble, single_root)
        if args.diagnostics:
            _write_json(args.diagnostics, result.diagnostics())
    save_treebank(files[0], args.out, trees)
    return EXIT_OK


def _cmd_evaluate(args: argparse.Namespace) -> int:
    gold = load_treebank(args.gold)
    exclude = None
    if args.exclude_punct:
        exclude = [
            [t.upos == "PUNCT" for t in s.tokens] for s in gold.sentences
        ]
    methods: dict[str, float] = {}
    for spec in args.pred:
        name, _, path = spec.partition("=")
        if not path:
            raise ValueError(f"--pred wants NAME=FILE, got {spec!r}")
        pred = load_treebank(path)
        methods[name] = uas(pred.trees, gold.trees, exclude)
    selected: tuple[str, ...] = ()
    if args.inputs:
        files = _load_parser_dir(args.inputs)
        sel = _selected_ids(args.selected)
        if sel is not None:
            files = [f for f in files if f.parser_id in set(sel)]
            selected = tuple(sel)
        per_parser = {
            f.parser_id: uas(f.trees, gold.trees, exclude) for f in files
        }
        methods["best_parser"] = max(per_parser.values())
        methods["avg_parser"] = sum(per_parser.values()) / len(per_parser)
    filters: dict[str, int] = {}
    if args.filters:
        raw = json.loads(Path(args.filters).read_text(encoding="utf-8"))
        filters = {
            "seg_dropped": int(raw["seg_dropped"]),
            "agree_dropped": int(raw["agree_dropped"]),
        }
    report = TreebankReport(
        treebank=args.treebank or Path(args.gold).stem,
        n_sentences=len(gold),
        methods=methods,
        selected_parsers=selected,
        filters=filters,
    )
    _write_json(args.out, report.to_json())
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    reports = [
        TreebankReport.from_json(json.loads(Path(p).read_text(encoding="utf-8")))
        for p in args.reports
    ]
    groups: dict[str, list[str]] = {"all": [r.treebank for r in reports]}
    if args.groups:
        raw = json.loads(Path(args.groups).read_text(encoding="utf-8"))
        groups = {g: list(names) for g, names in raw.items()}
    payload: dict = {"groups": {}, "diffs": {}}
    for group, names in groups.items():
        members = [r for r in reports if r.treebank in set(names)]
        if not members:
            continue
        per_method: dict[str, list[float]] = {}
        for r in members:
            for method, value in r.methods.items():
                per_method.setdefault(method, []).append(value)
        payload["groups"][group] = {
            method: summarize(vals, group).rounded()
            for method, vals in sorted(per_method.items())
        }
        scored = [r for r in members if args.primary in r.methods]
        baselines = sorted(
            {m for r in scored for m in r.methods} - {args.primary}
        )
        group_diffs: dict[str, dict] = {}
        for b in baselines:
            # method_diffs is strict, so hand it only the treebanks scored on
            # both methods and only those two columns.
            subset = [
                TreebankReport(
                    r.treebank,
                    r.n_sentences,
                    {args.primary: r.methods[args.primary], b: r.methods[b]},
                )
                for r in scored
                if b in r.methods
            ]
            if not subset:
                continue
            d = method_diffs(subset, args.primary)[b]
            group_diffs[b] = {
                "diffs": {t: round(v, 2) for t, v in d.diffs.items()},
                "positive": d.positive,
                "negative": d.negative,
                "zero": d.zero,
            }
        if group_diffs:
            payload["diffs"][group] = group_diffs
    _write_json(args.out, payload)
    return EXIT_OK


def _parse_tokens(value: str) -> tuple[int, int]:
    lo, _, hi = value.partition(":")
    return (int(lo), int(hi or lo))


def _cmd_synth(args: argparse.Namespace) -> int:
    rates = tuple(float(r) for r in args.rates.split(","))
    config = SynthConfig(
        n_sentences=args.sentences,
        tokens=_parse_tokens(args.tokens),
        rates=rates,
        seed=args.seed,
        duplicates=tuple(args.duplicate_of or ()),
    )
    result = generate(config)
    out_dir = Path(args.out_dir)
    (out_dir / "parsers").mkdir(parents=True, exist_ok=True)
    save_treebank(result.gold, out_dir / "gold.conllu")
    for f in result.files:
        save_treebank(f, out_dir / "parsers" / f"{f.parser_id}.conllu")
    _write_json(
        str(out_dir / "manifest.json"),
        {
            "sentences": config.n_sentences,
            "tokens": list(config.tokens),
            "rates": list(config.rates),
            "duplicates": list(config.duplicates),
            "seed": config.seed,
            "parsers": [f.parser_id for f in result.files],
            "accuracies": list(result.accuracies),
        },
    )
    print(f"wrote {config.m} parser files under {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treeagg",
        description="Aggregate dependency parser ensembles into consensus trees.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="filter a treebank for aggregation")
    p.add_argument("--inputs", required=True, help="directory of parser .conllu files")
    p.add_argument("--gold", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--min-sentences", type=int, default=50)
    p.add_argument("--min-parsers", type=int, default=9)
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("rank", help="rank parsers on a seeded sample")
    p.add_argument("--inputs", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sample-size", type=int, default=10)
    p.add_argument("--top-k", type=int, default=9)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("aggregate", help="produce consensus trees")
    p.add_argument("--inputs", required=True)
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--selected", help="JSON from the rank step")
    p.add_argument("--no-single-root", action="store_true")
    p.add_argument("--dump-matrix", help="write the edge/vote matrix here")
    p.add_argument("--diagnostics", help="write estimation diagnostics here (cim)")
    p.add_argument("--crh-distance", choices=crh_mod.DISTANCE_MODES, default="edge")
    p.add_argument("--crh-max-iter", type=int, default=100)
    p.add_argument("--crh-eps", type=float, default=1e-8)
    p.add_argument("--cim-l1", type=float, default=None)
    p.add_argument("--cim-coef-threshold", type=float, default=1.0)
    p.add_argument("--cim-no-collapse", action="store_true")
    p.add_argument("--cim-triplet-min", type=float, default=0.01)
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("evaluate", help="score predictions against gold")
    p.add_argument("--gold", required=True)
    p.add_argument(
        "--pred", action="append", required=True, metavar="NAME=FILE"
    )
    p.add_argument("--out", required=True)
    p.add_argument("--treebank")
    p.add_argument("--inputs", help="parser dir, adds best/average baselines")
    p.add_argument("--selected")
    p.add_argument("--exclude-punct", action="store_true")
    p.add_argument("--filters", help="filters.json from the preprocess step")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("report", help="summarize per-treebank reports")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--groups", help="JSON mapping group name to treebank names")
    p.add_argument("--primary", default="cim")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("synth", help="generate a noisy synthetic ensemble")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--sentences", type=int, required=True)
    p.add_argument("--tokens", required=True, help="MIN:MAX token range")
    p.add_argument("--rates", required=True, help="comma-separated corruption rates")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument(
        "--duplicate-of",
        type=int,
        action="append",
        metavar="INDEX",
        help="append a copy of parser INDEX (0-based); repeatable",
    )
    p.set_defaults(func=_cmd_synth)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConlluError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())
