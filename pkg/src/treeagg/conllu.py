"""CoNLL-U reading and writing.

Only the HEAD column is ever interpreted as structure; everything else
(comments, multiword-token ranges, empty nodes, annotation columns) passes
through verbatim so that writing a file back with unchanged trees is
byte-identical. Input may use LF or CRLF line endings; output is LF.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from .trees import DepTree, InvalidTreeError, ParseEnsemble, Sentence, Token

_WORD_ID = re.compile(r"[1-9][0-9]*$")
_RANGE_ID = re.compile(r"[0-9]+-[0-9]+$")
_EMPTY_ID = re.compile(r"[0-9]+\.[0-9]+$")
_INT = re.compile(r"[0-9]+$")
_SENT_ID = re.compile(r"#\s*sent_id\s*=\s*(.+)$")

N_COLUMNS = 10
HEAD_COLUMN = 6


class ConlluError(ValueError):
    """Malformed CoNLL-U input; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class TreebankFile:
    """One parser's (or the gold) trees for a whole treebank."""

    parser_id: str
    sentences: tuple[Sentence, ...]
    path: str | None = None

    def __len__(self) -> int:
        return len(self.sentences)

    @property
    def trees(self) -> tuple[DepTree, ...]:
        return tuple(s.tree for s in self.sentences)

    def subset(self, positions: Sequence[int]) -> "TreebankFile":
        picked = tuple(self.sentences[i] for i in positions)
        return replace(self, sentences=picked)


def parse_conllu(source: str | IO[str] | Iterable[str], parser_id: str = "") -> TreebankFile:
    """Parse CoNLL-U text into a :class:`TreebankFile`.

    Errors carry line numbers. Word lines must have ten tab-separated
    columns, consecutive integer ids from 1, and an integer HEAD; the head
    sequence of every sentence must form a valid rooted tree. Range ids
    ("2-3") and empty-node ids ("2.1") are kept verbatim and never parsed.
    """
    if hasattr(source, "read"):
        text = source.read()  # type: ignore[union-attr]
    elif isinstance(source, str):
        text = source
    else:
        text = "\n".join(source)
    lines = text.split("\n")

    sentences: list[Sentence] = []
    seen_ids: set[str] = set()
    comments: list[str] = []
    tokens: list[Token] = []
    extras: list[tuple[int, str]] = []
    first_word_line = 0

    def flush(line_no: int) -> None:
        nonlocal comments, tokens, extras
        if not tokens and not comments and not extras:
            return
        if not tokens:
            raise ConlluError(line_no, "sentence block without word lines")
        sid = ""
        for c in comments:
            m = _SENT_ID.match(c)
            if m:
                sid = m.group(1).strip()
                break
        if not sid:
            sid = f"s{len(sentences) + 1}"
        if sid in seen_ids:
            raise ConlluError(line_no, f"duplicate sentence id {sid!r}")
        seen_ids.add(sid)
        heads = tuple(int(t.columns[HEAD_COLUMN]) for t in tokens)
        try:
            tree = DepTree(heads)
        except InvalidTreeError as e:
            raise ConlluError(first_word_line, str(e)) from None
        sentences.append(
            Sentence(sid, tuple(tokens), tree, tuple(comments), tuple(extras))
        )
        comments, tokens, extras = [], [], []

    for line_no, raw in enumerate(lines, start=1):
        line = raw[:-1] if raw.endswith("\r") else raw
        if line.strip() == "":
            flush(line_no)
            continue
        if line.startswith("#"):
            if tokens or extras:
                raise ConlluError(line_no, "comment after word lines in the same block")
            comments.append(line)
            continue
        cols = line.split("\t")
        if len(cols) != N_COLUMNS:
            raise ConlluError(line_no, f"expected {N_COLUMNS} columns, found {len(cols)}")
        ident = cols[0]
        if _WORD_ID.fullmatch(ident):
            index = int(ident)
            if index != len(tokens) + 1:
                raise ConlluError(line_no, f"token id {index} out of sequence")
            if not _INT.fullmatch(cols[HEAD_COLUMN]):
                raise ConlluError(line_no, f"non-integer HEAD {cols[HEAD_COLUMN]!r}")
            if not tokens:
                first_word_line = line_no
            tokens.append(Token(index, cols[1], tuple(cols)))
        elif _RANGE_ID.fullmatch(ident) or _EMPTY_ID.fullmatch(ident):
            extras.append((len(tokens) + len(extras), line))
        else:
            raise ConlluError(line_no, f"unrecognized token id {ident!r}")
    flush(len(lines))

    return TreebankFile(parser_id, tuple(sentences))


def load_treebank(path: str | Path, parser_id: str | None = None) -> TreebankFile:
    p = Path(path)
    with open(p, encoding="utf-8", newline="") as fh:
        parsed = parse_conllu(fh, parser_id if parser_id is not None else p.stem)
    return replace(parsed, path=str(p))


def _sentence_lines(sentence: Sentence, tree: DepTree) -> list[str]:
    lines = list(sentence.comments)
    extras = dict(sentence.extra_rows)
    n_rows = len(sentence.tokens) + len(extras)
    it = iter(sentence.tokens)
    for pos in range(n_rows):
        if pos in extras:
            lines.append(extras[pos])
            continue
        tok = next(it)
        head = tree.heads[tok.index - 1]
        cols = tok.columns
        if int(cols[HEAD_COLUMN]) != head:
            cols = cols[:HEAD_COLUMN] + (str(head),) + cols[HEAD_COLUMN + 1 :]
        lines.append("\t".join(cols))
    return lines


def write_conllu(
    treebank: TreebankFile, predicted: Mapping[str, DepTree] | None = None
) -> str:
    """Serialize a treebank, substituting trees from ``predicted`` by id.

    Sentences absent from ``predicted`` keep their own trees. Output is
    byte-identical to the parsed input except for changed HEAD fields.
    """
    out: list[str] = []
    for sentence in treebank.sentences:
        tree = sentence.tree
        if predicted is not None and sentence.sentence_id in predicted:
            tree = predicted[sentence.sentence_id]
            if len(tree) != len(sentence):
                raise ValueError(
                    f"sentence {sentence.sentence_id!r}: predicted tree over "
                    f"{len(tree)} tokens, sentence has {len(sentence)}"
                )
        out.extend(_sentence_lines(sentence, tree))
        out.append("")
    return "\n".join(out)


def save_treebank(
    treebank: TreebankFile,
    path: str | Path,
    predicted: Mapping[str, DepTree] | None = None,
) -> None:
    Path(path).write_text(write_conllu(treebank, predicted), encoding="utf-8")


def check_segmentation(files: Sequence[TreebankFile]) -> list[bool]:
    """Per-sentence agreement flags: same token count and identical forms.

    Comparison is exact byte equality of FORM, position by position. All
    files must contain the same number of sentences.
    """
    if not files:
        raise ValueError("no files to compare")
    counts = {len(f) for f in files}
    if len(counts) != 1:
        raise ValueError(f"sentence counts differ across files: {sorted(counts)}")
    flags = []
    for group in zip(*(f.sentences for f in files)):
        ref = group[0].forms
        flags.append(all(s.forms == ref for s in group[1:]))
    return flags


def build_ensemble(files: Sequence[TreebankFile]) -> ParseEnsemble:
    """Stack parser files into an ensemble, aligned by sentence position.

    Sentence ids are taken from the first file; ids in the other files are
    ignored (they are reporting metadata, alignment is positional).
    """
    if not files:
        raise ValueError("no parser files")
    n = len(files[0])
    for f in files[1:]:
        if len(f) != n:
            raise ValueError(
                f"{f.parser_id!r} has {len(f)} sentences, "
                f"{files[0].parser_id!r} has {n}"
            )
    trees = {
        files[0].sentences[i].sentence_id: tuple(f.sentences[i].tree for f in files)
        for i in range(n)
    }
    return ParseEnsemble(tuple(f.parser_id for f in files), trees)
