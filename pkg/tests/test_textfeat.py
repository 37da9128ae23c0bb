"""Tokenizer, vocabulary, and TF-IDF tests.

The three-document oracle below was computed by hand before the module
was written: with documents d1={a,b}, d2={b}, d3={c} and min_df=1,

    idf(a) = ln((1+3)/(1+1)) + 1 = ln 2 + 1
    idf(b) = ln((1+3)/(1+2)) + 1 = ln(4/3) + 1

and d1's normalized vector is (w_a, w_b)/||.||. The constants are frozen
so a regression in either the idf formula or the normalization shows up
as an exact mismatch.
"""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crashqc.textfeat import (
    EMPTY_VECTOR,
    SparseVector,
    Vocabulary,
    build_vocabulary,
    idf,
    tfidf,
    tokenize,
    vectorize,
    with_bigrams,
)

IDF_A = 1.6931471805599454
IDF_B = 1.2876820724517808
D1_WEIGHT_A = 0.7959605415681652
D1_WEIGHT_B = 0.6053485081062916

ORACLE_DOCS = [["a", "b"], ["b"], ["c"]]


class TestOracle:
    def test_idf_values_match_hand_computation(self):
        vocab = build_vocabulary(ORACLE_DOCS, min_df=1)
        assert idf(vocab, "a") == pytest.approx(IDF_A, abs=1e-9)
        assert idf(vocab, "b") == pytest.approx(IDF_B, abs=1e-9)
        assert idf(vocab, "c") == pytest.approx(IDF_A, abs=1e-9)

    def test_d1_vector_matches_hand_computation(self):
        vocab = build_vocabulary(ORACLE_DOCS, min_df=1)
        vec = tfidf(ORACLE_DOCS[0], vocab)
        assert vec.indices == (0, 1)
        assert vec.weights[0] == pytest.approx(D1_WEIGHT_A, abs=1e-9)
        assert vec.weights[1] == pytest.approx(D1_WEIGHT_B, abs=1e-9)

    def test_repeated_term_scales_raw_tf(self):
        vocab = build_vocabulary(ORACLE_DOCS, min_df=1)
        vec = tfidf(["a", "a", "b"], vocab)
        # tf doubles a's unnormalized weight, so the ratio is 2*idf_a/idf_b
        ratio = vec.weights[0] / vec.weights[1]
        assert ratio == pytest.approx(2 * IDF_A / IDF_B, abs=1e-9)


class TestTokenize:
    def test_lowercases_and_splits(self):
        assert tokenize("Two Vehicles COLLIDED on I-64") == [
            "two",
            "vehicles",
            "collided",
            "on",
            "i-64",
        ]

    def test_radio_codes_stay_whole(self):
        assert tokenize("responded to a 10-46 near MP 12") == [
            "responded",
            "to",
            "a",
            "10-46",
            "near",
            "mp",
            "12",
        ]

    def test_punctuation_is_a_separator(self):
        assert tokenize("stopped; then (rear-ended)!") == ["stopped", "then", "rear-ended"]

    def test_empty_and_symbol_only(self):
        assert tokenize("") == []
        assert tokenize("!!! ---") == []

    def test_with_bigrams_appends_pairs(self):
        assert with_bigrams(["a", "b", "c"]) == ["a", "b", "c", "a b", "b c"]
        assert with_bigrams(["solo"]) == ["solo"]


class TestVocabulary:
    def test_min_df_drops_rare_terms(self):
        vocab = build_vocabulary(ORACLE_DOCS, min_df=2)
        assert vocab.terms == ("b",)
        assert vocab.df("b") == 2

    def test_lexicographic_contiguous_indices(self):
        vocab = build_vocabulary([["zebra", "apple"], ["apple", "mango"]], min_df=1)
        assert vocab.terms == ("apple", "mango", "zebra")
        assert vocab.index == {"apple": 0, "mango": 1, "zebra": 2}

    def test_df_counts_presence_not_occurrences(self):
        vocab = build_vocabulary([["x", "x", "x"], ["x"]], min_df=1)
        assert vocab.df("x") == 2

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            build_vocabulary([], min_df=1)

    def test_empty_documents_are_fine(self):
        vocab = build_vocabulary([[], ["a"], ["a"]], min_df=2)
        assert vocab.terms == ("a",)
        assert vocab.corpus_size == 3

    def test_save_load_round_trip(self, tmp_path):
        vocab = build_vocabulary(ORACLE_DOCS, min_df=1)
        path = tmp_path / "vocab.json"
        vocab.save(path)
        loaded = Vocabulary.load(path)
        assert loaded == vocab
        assert loaded.version == vocab.version

    def test_load_rejects_tampered_contents(self, tmp_path):
        vocab = build_vocabulary(ORACLE_DOCS, min_df=1)
        path = tmp_path / "vocab.json"
        vocab.save(path)
        text = path.read_text().replace('["a", 0, 1]', '["a", 0, 2]')
        path.write_text(text)
        with pytest.raises(ValueError):
            Vocabulary.load(path)

    def test_version_changes_with_contents(self):
        v1 = build_vocabulary(ORACLE_DOCS, min_df=1)
        v2 = build_vocabulary(ORACLE_DOCS + [["d"]], min_df=1)
        assert v1.version != v2.version


class TestVectors:
    def test_oov_only_gives_zero_vector(self):
        vocab = build_vocabulary(ORACLE_DOCS, min_df=1)
        assert tfidf(["zzz"], vocab) is EMPTY_VECTOR
        assert tfidf([], vocab) is EMPTY_VECTOR

    def test_vectorize_tokenizes_first(self):
        vocab = build_vocabulary(ORACLE_DOCS, min_df=1)
        assert vectorize("A! b?", vocab).indices == (0, 1)

    def test_bigram_vocab_expands_at_vectorize_time(self):
        vocab = build_vocabulary([["a", "b"], ["a", "b"]], min_df=2, use_bigrams=True)
        assert "a b" in vocab.terms
        vec = tfidf(["a", "b"], vocab)
        assert vec.nnz == 3

    def test_sparse_vector_rejects_unsorted_indices(self):
        with pytest.raises(ValueError):
            SparseVector((1, 0), (0.5, 0.5))
        with pytest.raises(ValueError):
            SparseVector((0, 0), (0.5, 0.5))
        with pytest.raises(ValueError):
            SparseVector((0,), (math.inf,))


# documents drawn from a small alphabet so vocabulary overlap is common
_doc = st.lists(st.sampled_from("abcdefgh"), min_size=0, max_size=12)


@settings(max_examples=1000, deadline=None)
@given(docs=st.lists(_doc, min_size=1, max_size=8), target=_doc)
def test_unit_norm_property(docs, target):
    vocab = build_vocabulary(docs, min_df=1)
    vec = tfidf(target, vocab)
    if vec.nnz:
        assert vec.l2_norm() == pytest.approx(1.0, abs=1e-9)
    else:
        assert vec is EMPTY_VECTOR


@given(docs=st.lists(_doc, min_size=1, max_size=8))
def test_idf_monotonicity_property(docs):
    """Rarer terms never get smaller idf than common ones."""
    vocab = build_vocabulary(docs, min_df=1)
    pairs = sorted((vocab.df(t), idf(vocab, t)) for t in vocab.terms)
    for (df1, idf1), (df2, idf2) in zip(pairs, pairs[1:]):
        if df1 < df2:
            assert idf1 > idf2
        elif df1 == df2:
            assert idf1 == pytest.approx(idf2, abs=1e-12)


@given(docs=st.lists(_doc, min_size=1, max_size=8))
def test_idf_always_positive(docs):
    vocab = build_vocabulary(docs, min_df=1)
    for t in vocab.terms:
        assert idf(vocab, t) > 0
