"""CoNLL-U parsing, serialization, and cross-file checks."""

import pytest

from treeagg.conllu import (
    ConlluError,
    build_ensemble,
    check_segmentation,
    load_treebank,
    parse_conllu,
    save_treebank,
    write_conllu,
)
from treeagg.trees import DepTree

from helpers import conllu_text

# Comments, a multiword range, and an empty node, all of which must
# survive a parse/write cycle byte for byte.
FULL_FIXTURE = """# sent_id = rt1
# text = ab c
1-2\tab\t_\t_\t_\t_\t_\t_\t_\tSpaceAfter=No
1\ta\tA\tDET\t_\t_\t2\tdet\t_\t_
2\tb\tB\tNOUN\t_\t_\t0\troot\t_\t_
2.1\tc\tC\tVERB\t_\t_\t_\t_\t_\t_
3\tc\tC\tPUNCT\t_\t_\t2\tpunct\t_\t_

# sent_id = rt2
1\td\tD\tNOUN\t_\t_\t0\troot\t_\t_
"""


def test_parse_minimal():
    tb = parse_conllu(conllu_text([("s1", ["a", "b"], [0, 1])]), "p")
    assert tb.parser_id == "p"
    assert len(tb) == 1
    assert tb.sentences[0].sentence_id == "s1"
    assert tb.trees == (DepTree((0, 1)),)


def test_parse_assigns_fallback_sentence_ids():
    text = "1\ta\t_\t_\t_\t_\t0\t_\t_\t_\n"
    tb = parse_conllu(text)
    assert tb.sentences[0].sentence_id == "s1"


def test_parse_extras_and_comments():
    tb = parse_conllu(FULL_FIXTURE)
    s = tb.sentences[0]
    assert s.comments == ("# sent_id = rt1", "# text = ab c")
    assert [t.form for t in s.tokens] == ["a", "b", "c"]
    assert s.tree == DepTree((2, 0, 2))
    # extras keep their position in the row stream: range first, empty
    # node between words 2 and 3
    assert [pos for pos, _ in s.extra_rows] == [0, 3]
    assert s.tokens[2].upos == "PUNCT"


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ConlluError) as err:
        parse_conllu("1\ta\t_\t_\t_\t_\t0\t_\t_\n")  # 9 columns
    assert err.value.line_no == 1

    bad_head = "1\ta\t_\t_\t_\t_\tx\t_\t_\t_\n"
    with pytest.raises(ConlluError, match="non-integer HEAD"):
        parse_conllu(bad_head)

    skipped = "1\ta\t_\t_\t_\t_\t0\t_\t_\t_\n3\tb\t_\t_\t_\t_\t1\t_\t_\t_\n"
    with pytest.raises(ConlluError, match="out of sequence"):
        parse_conllu(skipped)

    with pytest.raises(ConlluError, match="unrecognized token id"):
        parse_conllu("x\ta\t_\t_\t_\t_\t0\t_\t_\t_\n")


def test_parse_rejects_cycles_with_first_word_line():
    text = "# c\n1\ta\t_\t_\t_\t_\t2\t_\t_\t_\n2\tb\t_\t_\t_\t_\t1\t_\t_\t_\n"
    with pytest.raises(ConlluError) as err:
        parse_conllu(text)
    assert err.value.line_no == 2
    assert "cycle" in str(err.value)


def test_parse_rejects_duplicate_sentence_ids():
    text = conllu_text([("s1", ["a"], [0]), ("s1", ["b"], [0])])
    with pytest.raises(ConlluError, match="duplicate sentence id"):
        parse_conllu(text)


def test_parse_rejects_comment_after_words():
    text = "1\ta\t_\t_\t_\t_\t0\t_\t_\t_\n# late\n"
    with pytest.raises(ConlluError, match="comment after word lines"):
        parse_conllu(text)


def test_parse_rejects_commentonly_block():
    with pytest.raises(ConlluError, match="without word lines"):
        parse_conllu("# sent_id = s1\n\n")


def test_crlf_input_parses_like_lf():
    text = conllu_text([("s1", ["a", "b"], [0, 1])])
    crlf = text.replace("\n", "\r\n")
    assert write_conllu(parse_conllu(crlf)) == write_conllu(parse_conllu(text))


def test_roundtrip_is_byte_identical():
    tb = parse_conllu(FULL_FIXTURE)
    assert write_conllu(tb) == FULL_FIXTURE


def test_write_substitutes_only_head_fields():
    tb = parse_conllu(FULL_FIXTURE)
    out = write_conllu(tb, {"rt1": DepTree((0, 1, 2))})
    original = FULL_FIXTURE.split("\n")
    changed = out.split("\n")
    assert len(original) == len(changed)
    for before, after in zip(original, changed):
        if before == after:
            continue
        cols_b, cols_a = before.split("\t"), after.split("\t")
        diff = [i for i in range(10) if cols_b[i] != cols_a[i]]
        assert diff == [6]
    # unmentioned sentences keep their trees
    assert changed[-3] == original[-3]


def test_write_rejects_token_count_mismatch():
    tb = parse_conllu(conllu_text([("s1", ["a", "b"], [0, 1])]))
    with pytest.raises(ValueError, match="predicted tree over"):
        write_conllu(tb, {"s1": DepTree((0,))})


def test_load_and_save(tmp_path):
    path = tmp_path / "sample.conllu"
    path.write_text(FULL_FIXTURE, encoding="utf-8")
    tb = load_treebank(path)
    assert tb.parser_id == "sample"  # stem is the default id
    assert tb.path == str(path)
    out = tmp_path / "copy.conllu"
    save_treebank(tb, out)
    assert out.read_text(encoding="utf-8") == FULL_FIXTURE
    assert load_treebank(path, "other").parser_id == "other"


def test_subset_picks_positions():
    tb = parse_conllu(
        conllu_text([("s1", ["a"], [0]), ("s2", ["b"], [0]), ("s3", ["c"], [0])])
    )
    sub = tb.subset([0, 2])
    assert [s.sentence_id for s in sub.sentences] == ["s1", "s3"]


def test_check_segmentation_flags_form_mismatches():
    a = parse_conllu(conllu_text([("s1", ["x", "y"], [0, 1]), ("s2", ["z"], [0])]), "a")
    b = parse_conllu(conllu_text([("s1", ["x", "y"], [2, 0]), ("s2", ["w"], [0])]), "b")
    assert check_segmentation([a, b]) == [True, False]
    short = parse_conllu(conllu_text([("s1", ["x", "y"], [0, 1])]), "c")
    with pytest.raises(ValueError, match="sentence counts differ"):
        check_segmentation([a, short])
    with pytest.raises(ValueError, match="no files"):
        check_segmentation([])


def test_build_ensemble_aligns_by_position():
    a = parse_conllu(conllu_text([("s1", ["x"], [0]), ("s2", ["y", "z"], [0, 1])]), "a")
    b = parse_conllu(conllu_text([("t1", ["x"], [0]), ("t2", ["y", "z"], [2, 0])]), "b")
    ens = build_ensemble([a, b])
    assert ens.parser_ids == ("a", "b")
    # ids come from the first file; the second file's ids are ignored
    assert ens.sentence_ids == ("s1", "s2")
    assert ens.trees["s2"] == (DepTree((0, 1)), DepTree((2, 0)))
    short = parse_conllu(conllu_text([("s1", ["x"], [0])]), "c")
    with pytest.raises(ValueError, match="has 1 sentences"):
        build_ensemble([a, short])
    with pytest.raises(ValueError, match="no parser files"):
        build_ensemble([])
