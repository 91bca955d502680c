import logging
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqinfer.corpus import (
    STAR,
    CorpusFormatError,
    EmbeddingTable,
    Example,
    HmmSpec,
    HmmSpecError,
    LabelVocab,
    bio_spans,
    corpus_from_json,
    corpus_to_json,
    deterministic_hmm,
    extract_spans,
    gen_hmm_corpus,
    load_conll,
    load_corpus_json,
    load_embeddings,
    random_embeddings,
    random_hmm,
    save_corpus_json,
    span_f1,
    to_bioes,
    token_accuracy,
    truncate_labels,
    write_conll,
)

# -- CoNLL I/O -----------------------------------------------------------

def test_load_two_line_file(tmp_path):
    path = tmp_path / "a.conll"
    path.write_text("dog NN\n. .\n\n")
    corpus = load_conll(path)
    assert len(corpus) == 1
    assert corpus[0].tokens == ("dog", ".")
    assert corpus[0].labels == ("NN", ".")


def test_load_blank_only_file(tmp_path):
    path = tmp_path / "blank.conll"
    path.write_text("\n\n\n")
    with pytest.raises(CorpusFormatError, match="empty corpus"):
        load_conll(path)


def test_load_skips_docstart_and_selects_columns(tmp_path):
    path = tmp_path / "ner.conll"
    path.write_text("-DOCSTART- -X- O O\n\nEU NNP B-NP B-ORG\nrejects VBZ B-VP O\n\nPeter NNP B-NP B-PER\n")
    corpus = load_conll(path, token_col=0, label_col=3)
    assert [ex.tokens for ex in corpus] == [("EU", "rejects"), ("Peter",)]
    assert corpus[0].labels == ("B-ORG", "O")
    assert load_conll(path, label_col=1)[0].labels == ("NNP", "VBZ")


def test_load_ragged_columns(tmp_path):
    path = tmp_path / "bad.conll"
    path.write_text("a X\nb Y Z\n")
    with pytest.raises(CorpusFormatError, match="ragged"):
        load_conll(path)


token_st = st.text(alphabet="abcXYZ.,-01", min_size=1, max_size=6)
sentence_st = st.lists(st.tuples(token_st, st.sampled_from(["O", "B-PER", "I-PER", "NN"])),
                       min_size=1, max_size=6)


@settings(max_examples=30, deadline=None)
@given(st.lists(sentence_st, min_size=1, max_size=5))
def test_conll_round_trip(tmp_path_factory, sentences):
    corpus = [Example([t for t, _ in s], [lab for _, lab in s]) for s in sentences]
    path = tmp_path_factory.mktemp("rt") / "c.conll"
    write_conll(corpus, path)
    assert load_conll(path) == corpus
    assert corpus_from_json(corpus_to_json(corpus)) == corpus


def test_json_round_trip_file(tmp_path):
    corpus = [Example(["a", "b"], ["X", "Y"])]
    save_corpus_json(corpus, tmp_path / "c.json")
    assert load_corpus_json(tmp_path / "c.json") == corpus
    with pytest.raises(CorpusFormatError):
        corpus_from_json({"format": "other", "sentences": []})


def test_example_validation():
    with pytest.raises(CorpusFormatError):
        Example([], [])
    with pytest.raises(CorpusFormatError):
        Example(["a", ""], ["X", "Y"])
    with pytest.raises(CorpusFormatError):
        Example(["a"], ["X", "Y"])


# -- BIOES ---------------------------------------------------------------

def test_bioes_examples():
    assert to_bioes(["B-PER", "I-PER", "O"]) == ["B-PER", "E-PER", "O"]
    assert to_bioes(["B-LOC"]) == ["S-LOC"]
    assert to_bioes(["B-A", "I-A", "I-A", "B-A", "O", "B-B"]) == ["B-A", "I-A", "E-A", "S-A", "O", "S-B"]


def test_bioes_repairs_stray_inside(caplog):
    with caplog.at_level(logging.WARNING):
        out = to_bioes(["O", "I-PER", "I-PER", "I-LOC"])
    assert out == ["O", "B-PER", "E-PER", "S-LOC"]
    assert "repaired" in caplog.text


def random_bio(rng, n, types=("PER", "LOC", "ORG")):
    tags, prev = [], "O"
    for _ in range(n):
        r = rng.random()
        if r < 0.4:
            tag = "O"
        elif r < 0.7 or prev == "O":
            tag = "B-" + types[rng.integers(len(types))]
        else:
            tag = "I-" + prev.split("-", 1)[1]
        tags.append(tag)
        prev = tag
    return tags


def test_bioes_preserves_spans_on_random_sequences():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        bio = random_bio(rng, int(rng.integers(1, 15)))
        assert set(bio_spans(bio)) == extract_spans(to_bioes(bio))
        assert set(bio_spans(bio)) == extract_spans(bio)


# -- truncation ----------------------------------------------------------

def test_truncate_counting_example():
    corpus = [Example(["x"] * 9, ["a"] * 5 + ["b"] * 3 + ["c"])]
    out, vocab = truncate_labels(corpus, 2)
    assert vocab.labels == ("a", "b", STAR)
    assert out[0].labels == tuple(["a"] * 5 + ["b"] * 3 + [STAR])


def test_truncate_noop_when_k_covers_labels():
    corpus = [Example(["x", "y"], ["a", "b"])]
    out, vocab = truncate_labels(corpus, 5)
    assert out == corpus
    assert not vocab.has_star


def test_truncate_rejects_zero():
    with pytest.raises(ValueError):
        truncate_labels([Example(["x"], ["a"])], 0)


def test_truncate_zipf_fraction_matches_direct_count():
    rng = np.random.default_rng(4)
    labels = [f"L{int(z)}" for z in rng.zipf(1.5, size=5000) if z < 500]
    corpus = [Example(["w"] * 50, labels[i:i + 50]) for i in range(0, len(labels) - 49, 50)]
    counts = Counter(lab for ex in corpus for lab in ex.labels)
    k = 20
    keep = set(sorted(counts, key=lambda lab: (-counts[lab], lab))[:k])
    expected = sum(c for lab, c in counts.items() if lab not in keep) / sum(counts.values())
    out, vocab = truncate_labels(corpus, k)
    replaced = sum(lab == STAR for ex in out for lab in ex.labels) / sum(len(ex) for ex in out)
    assert replaced == pytest.approx(expected, abs=1e-12)
    assert len(vocab) == k + 1


def test_label_vocab_encode_decode():
    vocab = LabelVocab(["a", "b", STAR])
    ids = vocab.encode(["b", "zzz", "a"])
    assert list(ids) == [1, 2, 0]
    assert vocab.decode(ids) == ["b", STAR, "a"]
    assert LabelVocab.from_json(vocab.to_json()) == vocab
    with pytest.raises(CorpusFormatError):
        LabelVocab(["a"]).encode(["b"])


# -- metrics -------------------------------------------------------------

def test_token_accuracy_examples():
    assert token_accuracy(["a", "b"], ["a", "b"]) == 100.0
    assert token_accuracy([STAR], [STAR]) == 0.0
    assert token_accuracy(["a", "b", "c", "d"], ["a", "b", "c", "x"]) == 75.0
    with pytest.raises(ValueError):
        token_accuracy(["a"], ["a", "b"])


def test_token_accuracy_on_indices_with_star_vocab():
    vocab = LabelVocab(["a", STAR])
    assert token_accuracy([np.array([0, 1])], [np.array([0, 1])], vocab) == 50.0


def test_span_f1_examples():
    gold = ["B-PER", "E-PER", "O"]
    assert span_f1(gold, gold).as_tuple() == (100.0, 100.0, 100.0)
    score = span_f1(["B-PER", "E-PER"], ["B-PER", "O"])
    assert score.as_tuple() == (0.0, 0.0, 0.0)
    assert extract_spans(["B-PER", "O"]) == {("PER", 0, 0)}
    empty = span_f1(["O", "O"], ["O", "O"])
    assert empty.as_tuple() == (0.0, 0.0, 0.0) and empty.no_spans


def test_span_f1_micro_average():
    gold = [["S-A", "O", "S-B"], ["B-A", "E-A"]]
    pred = [["S-A", "O", "O"], ["B-A", "E-A"]]
    score = span_f1(gold, pred)
    assert (score.true_positives, score.gold_spans, score.pred_spans) == (2, 3, 2)
    assert score.precision == 100.0
    assert score.recall == pytest.approx(200 / 3)
    assert score.f1 == pytest.approx(80.0)


@pytest.mark.parametrize("tags, spans", [
    (["I-PER", "I-PER"], {("PER", 0, 1)}),
    (["B-PER", "I-LOC"], {("PER", 0, 0), ("LOC", 1, 1)}),
    (["E-PER"], {("PER", 0, 0)}),
    (["S-PER", "I-PER"], {("PER", 0, 0), ("PER", 1, 1)}),
    (["B-X", "I-X", "E-X", "E-X"], {("X", 0, 2), ("X", 3, 3)}),
    (["O", "B-X", "B-X", "I-X"], {("X", 1, 1), ("X", 2, 3)}),
])
def test_lenient_span_decoding(tags, spans):
    assert extract_spans(tags) == spans


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_metrics_invariant_to_sentence_order(seed):
    rng = np.random.default_rng(seed)
    gold = [to_bioes(random_bio(rng, int(rng.integers(1, 8)))) for _ in range(6)]
    pred = [to_bioes(random_bio(rng, len(g))) for g in gold]
    perm = rng.permutation(len(gold))
    assert span_f1(gold, pred) == span_f1([gold[i] for i in perm], [pred[i] for i in perm])
    assert token_accuracy(gold, pred) == pytest.approx(
        token_accuracy([gold[i] for i in perm], [pred[i] for i in perm]), abs=1e-12)
    if any(extract_spans(g) for g in gold):
        assert span_f1(gold, gold).f1 == 100.0


# -- HMM corpora ---------------------------------------------------------

def test_hmm_rejects_invalid_rows():
    with pytest.raises(HmmSpecError):
        HmmSpec([[0.5, 0.6], [0.5, 0.5]], [[1, 0], [0, 1]], [0.5, 0.5])
    with pytest.raises(HmmSpecError):
        HmmSpec([[1.0, 0.0], [0.5, 0.5]], [[1.2, -0.2], [0, 1]], [0.5, 0.5])


def test_deterministic_hmm_labels_recoverable():
    spec = deterministic_hmm(4, 12, seed=0)
    corpus = gen_hmm_corpus(spec, 200, (3, 10), seed=1)
    owner = {}
    for ex in corpus:
        for tok, lab in zip(ex.tokens, ex.labels):
            assert owner.setdefault(tok, lab) == lab


def test_hmm_corpus_deterministic_in_seed():
    spec = random_hmm(5, 30, seed=2)
    a = gen_hmm_corpus(spec, 50, (2, 9), seed=7)
    assert a == gen_hmm_corpus(spec, 50, (2, 9), seed=7)
    assert a != gen_hmm_corpus(spec, 50, (2, 9), seed=8)
    assert all(2 <= len(ex) <= 9 for ex in a)


def test_hmm_transition_frequencies_law_of_large_numbers():
    spec = random_hmm(3, 9, seed=5, transition_concentration=1.0)
    corpus = gen_hmm_corpus(spec, 1000, (101, 101), seed=3)
    index = {name: k for k, name in enumerate(spec.state_names)}
    counts = np.zeros((3, 3))
    for ex in corpus:
        ids = [index[lab] for lab in ex.labels]
        np.add.at(counts, (ids[:-1], ids[1:]), 1)
    assert counts.sum() == 100_000
    empirical = counts / counts.sum(axis=1, keepdims=True)
    assert np.abs(empirical - spec.transition).max() <= 0.01


def test_hmm_spec_json_round_trip():
    spec = random_hmm(3, 5, seed=0)
    again = HmmSpec.from_json(spec.to_json())
    np.testing.assert_array_equal(again.transition, spec.transition)
    np.testing.assert_array_equal(again.emission, spec.emission)


# -- embeddings ----------------------------------------------------------

def test_load_embeddings_basic(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("the 0.1 0.2\nCat 1 2\n")
    table = load_embeddings(path, 2)
    np.testing.assert_array_equal(table.vector("the"), [0.1, 0.2])
    np.testing.assert_array_equal(table.vector("CAT"), [1.0, 2.0])
    unk = table.vector("zebra").copy()
    np.testing.assert_array_equal(table.vector("zebra"), unk)
    np.testing.assert_array_equal(table.vector("yak"), unk)


def test_load_embeddings_wrong_dim(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("the 0.1 0.2\ncat 1\n")
    with pytest.raises(CorpusFormatError, match="expected 2"):
        load_embeddings(path, 2)


def test_load_embeddings_duplicate_last_wins(tmp_path, caplog):
    path = tmp_path / "emb.txt"
    path.write_text("a 1 1\nb 2 2\na 3 3\n")
    with caplog.at_level(logging.WARNING):
        table = load_embeddings(path, 2)
    np.testing.assert_array_equal(table.vector("a"), [3.0, 3.0])
    assert "duplicate" in caplog.text


def test_embedding_table_shapes():
    table = random_embeddings(["a", "b", "A"], 4, seed=0)
    assert len(table) == 3  # UNK + a + b (lower-cased)
    assert table.dim == 4
    with pytest.raises(CorpusFormatError):
        EmbeddingTable(["a"], np.zeros((1, 3)))
