import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icadetect import text
from icadetect.errors import DataError, EmptyVocabulary, WrongWeighting

from helpers import make_docs

NO_STOP = text.TokenizeConfig(stop_words=frozenset())


def test_tokenize_lowercases_and_strips_punctuation():
    assert text.tokenize("Countries LIE. Ego,", NO_STOP) == ["countries", "lie", "ego"]


def test_tokenize_removes_stop_words():
    cfg = text.TokenizeConfig(stop_words=frozenset({"the", "is"}))
    assert text.tokenize("the virus IS spreading", cfg) == ["virus", "spreading"]


def test_tokenize_empty():
    assert text.tokenize("", NO_STOP) == []


def test_tokenize_keeps_hashtags_and_mentions():
    assert text.tokenize("Read this #Coronavirus @WHO!!", NO_STOP) == ["read", "this", "#coronavirus", "@who"]


def test_tokenize_drops_punctuation_only_tokens():
    assert text.tokenize("wait ... -- what?!", NO_STOP) == ["wait", "what"]


def test_default_stop_words_cover_common_words():
    sw = text.default_stop_words()
    assert {"the", "is", "and"} <= sw
    assert text.tokenize("The virus is here") == ["virus"]


@given(st.text(max_size=80))
def test_tokenize_postconditions(s):
    cfg = text.TokenizeConfig(stop_words=frozenset({"a", "the"}))
    toks = text.tokenize(s, cfg)
    for t in toks:
        assert t == t.lower()
        assert t not in cfg.stop_words
        assert not all(text._is_punct(c) for c in t)


def test_build_matrix_hand_count():
    m = text.build_matrix(make_docs(["a b a", "b c"]), NO_STOP)
    assert m.vocab.terms == ("a", "b", "c")
    np.testing.assert_array_equal(m.values, [[2, 0], [1, 1], [0, 1]])
    assert m.weighting is text.Weighting.RAW


def test_build_matrix_single_doc():
    m = text.build_matrix(make_docs(["x"]), NO_STOP)
    np.testing.assert_array_equal(m.values, [[1]])


def test_build_matrix_repeated_term():
    m = text.build_matrix(make_docs(["virus virus", "virus"]), NO_STOP)
    assert m.vocab.terms == ("virus",)
    np.testing.assert_array_equal(m.values, [[2, 1]])


def test_build_matrix_empty_vocabulary():
    cfg = text.TokenizeConfig(stop_words=frozenset({"the"}))
    with pytest.raises(EmptyVocabulary):
        text.build_matrix(make_docs(["the", "..."]), cfg)


def test_build_matrix_deterministic():
    docs = make_docs(["zeta alpha beta", "beta gamma", "alpha alpha"])
    a = text.build_matrix(docs, NO_STOP)
    b = text.build_matrix(docs, NO_STOP)
    assert a.vocab == b.vocab
    assert a.values.tobytes() == b.values.tobytes()


def test_vocabulary_rejects_duplicates():
    with pytest.raises(DataError):
        text.Vocabulary(("a", "a"))


def test_tfidf_hand_values():
    counts = text.TermDocMatrix(np.array([[2.0, 0.0], [1.0, 1.0]]), text.Vocabulary(("a", "b")), ("0", "1"))
    out = text.tfidf(counts)
    idf1 = np.log(3 / 2) + 1
    np.testing.assert_allclose(out.values[0], [2 * idf1, 0.0])
    np.testing.assert_allclose(out.values[1], [1.0, 1.0])
    assert out.values[0, 0] == pytest.approx(2.8109, abs=1e-4)
    assert out.idf[0] == pytest.approx(1.4055, abs=1e-4)


def test_tfidf_single_document():
    counts = text.TermDocMatrix(np.array([[3.0]]), text.Vocabulary(("a",)), ("0",))
    np.testing.assert_allclose(text.tfidf(counts).values, [[3.0]])


def test_tfidf_rejects_weighted_input():
    counts = text.TermDocMatrix(np.array([[3.0]]), text.Vocabulary(("a",)), ("0",))
    with pytest.raises(WrongWeighting):
        text.tfidf(text.tfidf(counts))


def test_idf_standard_variant():
    idf = text.idf_weights(np.array([[1, 0, 0, 0], [1, 1, 1, 1]]), "standard")
    np.testing.assert_allclose(idf, [np.log(4) + 1, 1.0])


@settings(max_examples=50)
@given(st.lists(st.lists(st.integers(0, 5), min_size=4, max_size=4), min_size=1, max_size=6))
def test_tfidf_preserves_sparsity_pattern(rows):
    vals = np.array(rows, dtype=float)
    vocab = text.Vocabulary(tuple(f"t{i}" for i in range(len(rows))))
    out = text.tfidf(text.TermDocMatrix(vals, vocab, ("a", "b", "c", "d")))
    np.testing.assert_array_equal(out.values == 0, vals == 0)
    assert np.all(out.values >= 0)
    assert np.all(out.idf >= 1.0)


def test_apply_idf_drops_oov_and_uses_training_idf():
    train = make_docs(["alpha beta", "beta gamma"])
    counts = text.build_matrix(train, NO_STOP)
    weighted = text.tfidf(counts)
    test_counts = text.count_matrix(make_docs(["alpha unseen alpha"]), counts.vocab, NO_STOP)
    np.testing.assert_array_equal(test_counts.values[:, 0], [2, 0, 0])
    out = text.apply_idf(test_counts, weighted.idf)
    assert out.values[0, 0] == pytest.approx(2 * weighted.idf[0])


def _write(tmp_path, body):
    p = tmp_path / "d.csv"
    p.write_text(body, encoding="utf-8")
    return p


def test_load_csv_roundtrip(tmp_path):
    p = _write(tmp_path, 'id,label,text\n1,Reliable,"hello, world"\n2,UNRELIABLE,"multi\nline"\n')
    docs = text.load_csv(p)
    assert [d.id for d in docs] == ["1", "2"]
    assert docs[0].text == "hello, world"
    assert docs[1].label is text.Label.UNRELIABLE
    np.testing.assert_array_equal(text.label_signs(docs), [-1, 1])


def test_load_csv_missing_column(tmp_path):
    p = _write(tmp_path, "id,text\n1,hi\n")
    with pytest.raises(DataError, match=r":1: missing required column\(s\) label"):
        text.load_csv(p)


def test_load_csv_bad_label_reports_line(tmp_path):
    p = _write(tmp_path, "id,label,text\n1,reliable,ok\n2,maybe,hm\n")
    with pytest.raises(DataError, match=r"d\.csv:3:"):
        text.load_csv(p)


def test_load_csv_duplicate_id(tmp_path):
    p = _write(tmp_path, "id,label,text\n1,reliable,a\n1,reliable,b\n")
    with pytest.raises(DataError, match="duplicate id"):
        text.load_csv(p)


def test_load_csv_empty_text_needs_flag(tmp_path):
    p = _write(tmp_path, "id,label,text\n1,reliable,\n")
    with pytest.raises(DataError, match="empty text"):
        text.load_csv(p)
    assert text.load_csv(p, allow_empty=True)[0].text == ""


def test_triplets_roundtrip(tmp_path):
    m = text.tfidf(text.build_matrix(make_docs(["a b a", "b c", "c c d"]), NO_STOP))
    path = tmp_path / "m.csv"
    text.write_triplets(m, path)
    assert path.read_text().splitlines()[:2] == ["# d=4 V=3 weighting=tfidf", "row,col,value"]
    dense, weighting = text.read_triplets(path)
    assert weighting == "tfidf"
    np.testing.assert_array_equal(dense, m.values)
