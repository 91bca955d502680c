"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``criterion N: PASS`` or ``FAIL`` line and the full list
is repeated in the pytest terminal summary.
"""
import itertools
import math
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from seqinfer.bench import BenchConfig, LmConfig, correlate_search_error, run_bench, spearman_rho, train_lm
from seqinfer.corpus import (
    STAR,
    LabelVocab,
    deterministic_hmm,
    extract_spans,
    gen_hmm_corpus,
    random_hmm,
    span_f1,
    token_accuracy,
)
from seqinfer.crf import (
    CrfConfig,
    CrfTrainConfig,
    brute_force_decode,
    crf_nll,
    evaluate_labels,
    log_partition,
    path_energy,
    relaxed_energy,
    train_crf,
    viterbi,
)
from seqinfer.features import EncoderConfig
from seqinfer.infnet import (
    InfNetConfig,
    InfNetTrainConfig,
    build_infnet,
    infnet_loss,
    table_of,
    train_infnet,
    train_local_baseline,
)
from seqinfer.numgrad import Tensor, grad_check, softmax
from seqinfer.relaxinf import (
    LR_GRID,
    GdConfig,
    RefineConfig,
    gd_oracle_tune,
    instance_tailor,
    tune_on_dev,
    warm_start_gd,
)
from seqinfer.training import OptimConfig

import conftest
from conftest import label_size_pair, rare_pattern_fixture, small_encoder


@contextmanager
def criterion(number, title):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        line = f"criterion {number} ({title}): FAIL [{time.perf_counter() - start:.1f}s]"
        conftest.ACCEPTANCE.append(line)
        print(line, file=sys.stderr)
        raise
    line = f"criterion {number} ({title}): PASS [{time.perf_counter() - start:.1f}s]"
    conftest.ACCEPTANCE.append(line)
    print(line)


def small_train(hidden=32, epochs=3):
    return OptimConfig(lr=0.05, epochs=epochs), EncoderConfig(word_dim=hidden)


# -- shared pipeline: ambiguous HMM, 500 test sentences ------------------------

@pytest.fixture(scope="module")
def pipeline():
    spec = random_hmm(5, 40, seed=21)
    train = gen_hmm_corpus(spec, 1000, (5, 12), seed=22)
    dev = gen_hmm_corpus(spec, 100, (5, 12), seed=23)
    test = gen_hmm_corpus(spec, 500, (5, 12), seed=24)
    optim, enc = small_train()
    crf, _ = train_crf(train, dev, CrfTrainConfig(model=CrfConfig(hidden=32, encoder=enc), optim=optim))
    frozen = crf.frozen()
    models = {}
    for family in ("blstm", "cnn", "seq2seq"):
        cfg = InfNetTrainConfig(model=InfNetConfig(family, hidden=32, encoder=EncoderConfig(word_dim=32)),
                                optim=OptimConfig(lr=0.05, epochs=2))
        models[family], _ = train_infnet(train, dev, frozen, cfg)
    base_cfg = InfNetTrainConfig(model=InfNetConfig("blstm", hidden=32, encoder=EncoderConfig(word_dim=32)),
                                 optim=OptimConfig(lr=0.05, epochs=2))
    models["baseline"], _ = train_local_baseline(train, dev, base_cfg, frozen.labels,
                                                 table_of(frozen.model.encoder))
    models["infnet"] = models["blstm"]
    net = models["blstm"]
    tune = dev[:50]
    tailor_lr, _ = tune_on_dev(tune, frozen, lambda t, lr: instance_tailor(t, net, frozen, RefineConfig(10, lr)).labels,
                               (0.1, 0.03, 0.01, 0.003))
    warm_lr, _ = tune_on_dev(tune, frozen, lambda t, lr: warm_start_gd(t, net, frozen, GdConfig(10, lr)).labels,
                             (10.0, 5.0, 1.0, 0.5, 0.1))
    return {"train": train, "dev": dev, "test": test, "frozen": frozen, "models": models,
            "tailor_lr": tailor_lr, "warm_lr": warm_lr}


@pytest.fixture(scope="module")
def full_report(pipeline):
    p = pipeline
    methods = [
        "viterbi",
        "gd:n=20,lr=1",
        "gd:n=20,oracle=1,n_grid=5/10/20/50/100",
        "infnet",
        "infnet-discretized",
        "infnet-discretized@cnn",
        "infnet-discretized@seq2seq",
        f"instance-tailored:n=10,lr={p['tailor_lr']}",
        f"warm-start:n=10,lr={p['warm_lr']}",
        "local-baseline",
    ]
    return run_bench(p["test"], p["frozen"], methods, p["models"], BenchConfig(timing=False))


# -- 1 -------------------------------------------------------------------------

def test_criterion_1_exactness():
    with criterion(1, "Viterbi and partition function are exact"):
        start = time.perf_counter()
        rng = np.random.default_rng(2024)
        for k in range(200):
            n, L = int(rng.integers(1, 8)), int(rng.integers(1, 6))
            unary, W = rng.normal(size=(n, L)), rng.normal(size=(L, L))
            if k % 4 == 0:  # quantized potentials force exact ties
                unary, W = np.round(unary), np.round(W)
            y_v, e_v = viterbi(unary, W)
            y_b, e_b = brute_force_decode(unary, W)
            assert list(y_v) == list(y_b)
            assert e_v == pytest.approx(e_b, abs=1e-12)
            if n <= 6:
                scores = np.array([-path_energy(unary, W, np.array(y))
                                   for y in itertools.product(range(L), repeat=n)])
                oracle = scores.max() + math.log(np.exp(scores - scores.max()).sum())
                assert abs(log_partition(unary, W).item() - oracle) <= 1e-6
        assert time.perf_counter() - start < 10


# -- 2 -------------------------------------------------------------------------

def test_criterion_2_gradients(toy_corpus, toy_crf):
    with criterion(2, "analytic gradients agree with finite differences"):
        start = time.perf_counter()
        for tokens, gold in [(["w0", "w1", "w2"], [0, 1, 2]), (["w3", "w3", "w8"], [2, 0, 0]),
                             (["w5", "unseen"], [1, 1])]:
            f = lambda: crf_nll(tokens, gold, toy_crf)
            assert grad_check(f, toy_crf.trainable_parameters()) <= 1e-4
        frozen = toy_crf.frozen()
        for family in ("cnn", "blstm", "seq2seq"):
            net = build_infnet(toy_corpus, toy_crf.labels,
                               InfNetConfig(family, hidden=5, label_dim=4, encoder=small_encoder(), seed=1))
            rng = np.random.default_rng(2)
            for q in net.trainable_parameters():
                q.data = rng.normal(scale=0.8, size=q.shape)
            for tokens, gold in [(["w0", "w1", "w2"], [0, 1, 2]), (["w3", "w7", "w7", "w1"], [2, 2, 0, 1]),
                                 (["w5", "zzz"], [1, 0])]:
                f = lambda: infnet_loss(net, tokens, gold, frozen, lam=0.7)
                assert grad_check(f, net.trainable_parameters()) <= 1e-4
        rng = np.random.default_rng(3)
        for n, L in [(3, 2), (4, 3), (6, 5)]:
            unary, W = rng.normal(size=(n, L)), rng.normal(size=(L, L))
            y = Tensor(rng.normal(size=(n, L)), requires_grad=True)
            assert grad_check(lambda: relaxed_energy(unary, W, softmax(y, axis=1)), [y]) <= 1e-4
        assert time.perf_counter() - start < 60


# -- 3 -------------------------------------------------------------------------

def test_criterion_3_search_error_sign(pipeline, full_report):
    with criterion(3, "no method beats Viterbi on any of 500 sentences"):
        assert full_report.n_sentences == 500
        assert len(full_report.rows) == 10
        for name in full_report.outcomes:
            errors = full_report.search_errors(name)
            assert len(errors) == 500
            assert min(errors) >= -1e-9, name
            discrete = [o.discrete_energy - v for o, v in zip(full_report.outcomes[name],
                                                             full_report.viterbi_energies)]
            assert min(discrete) >= -1e-9, name
        assert full_report.row("viterbi").mean_search_error == 0.0


# -- 4 -------------------------------------------------------------------------

def test_criterion_4_learning_sanity():
    with criterion(4, "CRF and inference network learn a deterministic HMM"):
        start = time.perf_counter()
        spec = deterministic_hmm(5, 20, seed=1)
        train = gen_hmm_corpus(spec, 2000, (5, 12), seed=2)
        dev = gen_hmm_corpus(spec, 200, (5, 12), seed=3)
        test = gen_hmm_corpus(spec, 500, (5, 12), seed=4)
        optim, enc = small_train()
        crf, _ = train_crf(train, dev, CrfTrainConfig(model=CrfConfig("base", hidden=32, encoder=enc), optim=optim))
        frozen = crf.frozen()
        gold = [frozen.labels.encode(ex.labels) for ex in test]
        vit = [viterbi(frozen.unary(ex.tokens), frozen.W) for ex in test]
        assert evaluate_labels(gold, [y for y, _ in vit], frozen.labels, "accuracy") >= 99.0
        net_cfg = InfNetTrainConfig(model=InfNetConfig("blstm", hidden=32, encoder=EncoderConfig(word_dim=32)),
                                    optim=OptimConfig(lr=0.05, epochs=3))
        net, _ = train_infnet(train, dev, frozen, net_cfg)
        pred = [net.predict(ex.tokens) for ex in test]
        assert evaluate_labels(gold, pred, frozen.labels, "accuracy") >= 95.0
        mean_inf = np.mean([path_energy(frozen.unary(ex.tokens), frozen.W, y) for ex, y in zip(test, pred)])
        mean_vit = np.mean([e for _, e in vit])
        assert abs(mean_inf - mean_vit) <= 0.05 * abs(mean_vit)
        assert time.perf_counter() - start < 600


# -- 5 -------------------------------------------------------------------------

def gd_task(L):
    spec = random_hmm(L, 100, seed=3)
    train = gen_hmm_corpus(spec, 400, (5, 12), seed=4)
    dev = gen_hmm_corpus(spec, 50, (5, 12), seed=5)
    test = gen_hmm_corpus(spec, 100, (5, 12), seed=6)
    optim, enc = small_train(16)
    crf, _ = train_crf(train, dev, CrfTrainConfig(model=CrfConfig(hidden=16, encoder=enc), optim=optim))
    frozen = crf.frozen()
    gold = [frozen.labels.encode(ex.labels) for ex in test]
    vit = [viterbi(frozen.unary(ex.tokens), frozen.W) for ex in test]
    tuned = [gd_oracle_tune(ex.tokens, g, frozen, (20,), LR_GRID) for ex, g in zip(test, gold)]
    return {
        "search_error": float(np.mean([r.energy - e for r, (_, e) in zip(tuned, vit)])),
        "acc_gd": evaluate_labels(gold, [r.labels for r in tuned], frozen.labels, "accuracy"),
        "acc_vit": evaluate_labels(gold, [y for y, _ in vit], frozen.labels, "accuracy"),
    }


def test_criterion_5_gd_struggles_with_many_labels():
    with criterion(5, "GD search error grows with the label set"):
        small, large = gd_task(5), gd_task(50)
        print(f"  L=5 search error {small['search_error']:.3f}, L=50 search error {large['search_error']:.3f}; "
              f"L=5 accuracy GD {small['acc_gd']:.2f} vs Viterbi {small['acc_vit']:.2f}")
        assert large["search_error"] > small["search_error"]
        assert small["acc_gd"] >= small["acc_vit"] - 1.0


# -- 6 -------------------------------------------------------------------------

def test_criterion_6_refinements(pipeline, full_report):
    with criterion(6, "refinements lower the inference network's energy"):
        base = full_report.row("infnet-discretized").mean_energy
        tailored = full_report.row(f"instance-tailored:n=10,lr={pipeline['tailor_lr']}").mean_energy
        warm = full_report.row(f"warm-start:n=10,lr={pipeline['warm_lr']}").mean_energy
        print(f"  mean energy: infnet {base:.4f}, tailored {tailored:.4f}, warm start {warm:.4f}")
        assert tailored <= base
        assert warm <= base
        net, frozen = pipeline["models"]["blstm"], pipeline["frozen"]
        for ex in pipeline["test"]:
            res = warm_start_gd(ex.tokens, net, frozen, GdConfig(0, 1.0))
            assert np.array_equal(res.labels, net.predict(ex.tokens))


# -- 7 -------------------------------------------------------------------------

def test_criterion_7_speed(pipeline):
    with criterion(7, "throughput ordering and Viterbi label scaling"):
        methods = ["infnet-discretized@cnn", "infnet-discretized@blstm", "infnet-discretized@seq2seq"]
        rep = run_bench(pipeline["test"], pipeline["frozen"], methods, pipeline["models"], BenchConfig())
        cnn, blstm, s2s = (rep.row(m).throughput for m in methods)
        print(f"  sentences/s: cnn {cnn:.1f}, blstm {blstm:.1f}, seq2seq {s2s:.1f}")
        assert cnn > blstm > s2s
        corpus, frozen = label_size_pair()
        t = {L: run_bench(corpus, fr, ["viterbi"], config=BenchConfig()).row("viterbi").seconds
             for L, fr in frozen.items()}
        ratio = t[100] / t[10]
        print(f"  Viterbi time ratio L=100 / L=10: {ratio:.1f}")
        assert 25 <= ratio <= 400


# -- 8 -------------------------------------------------------------------------

# (gold, pred, gold spans, pred spans), all enumerated by hand
SPAN_FIXTURES = [
    (["S-PER"], ["S-PER"], {("PER", 0, 0)}, {("PER", 0, 0)}),
    (["B-LOC", "E-LOC", "O"], ["B-LOC", "E-LOC", "O"], {("LOC", 0, 1)}, {("LOC", 0, 1)}),
    (["B-ORG", "I-ORG", "E-ORG"], ["B-ORG", "E-ORG", "S-ORG"], {("ORG", 0, 2)}, {("ORG", 0, 1), ("ORG", 2, 2)}),
    (["O", "S-PER", "O", "S-LOC"], ["O", "S-PER", "O", "S-PER"], {("PER", 1, 1), ("LOC", 3, 3)},
     {("PER", 1, 1), ("PER", 3, 3)}),
    (["O", "O", "O"], ["S-MISC", "O", "O"], set(), {("MISC", 0, 0)}),
    (["B-PER", "E-PER", "S-PER"], ["B-PER", "E-PER", "S-PER"], {("PER", 0, 1), ("PER", 2, 2)},
     {("PER", 0, 1), ("PER", 2, 2)}),
    (["B-MISC", "I-MISC", "I-MISC", "E-MISC"], ["O", "O", "O", "O"], {("MISC", 0, 3)}, set()),
    (["S-LOC", "B-ORG", "E-ORG"], ["S-LOC", "B-LOC", "E-LOC"], {("LOC", 0, 0), ("ORG", 1, 2)},
     {("LOC", 0, 0), ("LOC", 1, 2)}),
    (["B-PER", "E-PER", "O", "B-PER", "E-PER"], ["B-PER", "E-PER", "O", "B-PER", "E-PER"],
     {("PER", 0, 1), ("PER", 3, 4)}, {("PER", 0, 1), ("PER", 3, 4)}),
    (["O", "B-LOC", "I-LOC", "E-LOC", "O"], ["O", "O", "B-LOC", "E-LOC", "O"], {("LOC", 1, 3)}, {("LOC", 2, 3)}),
    (["S-ORG", "S-ORG"], ["B-ORG", "E-ORG"], {("ORG", 0, 0), ("ORG", 1, 1)}, {("ORG", 0, 1)}),
]


def test_criterion_8_metrics():
    with criterion(8, "span F1 and token accuracy"):
        tp_total = gold_total = pred_total = 0
        for gold, pred, gold_spans, pred_spans in SPAN_FIXTURES:
            assert extract_spans(gold) == gold_spans and extract_spans(pred) == pred_spans
            tp = len(gold_spans & pred_spans)
            score = span_f1(gold, pred)
            assert (score.true_positives, score.gold_spans, score.pred_spans) == (tp, len(gold_spans), len(pred_spans))
            p = 100.0 * tp / len(pred_spans) if pred_spans else 0.0
            r = 100.0 * tp / len(gold_spans) if gold_spans else 0.0
            f = 2 * p * r / (p + r) if p + r else 0.0
            assert score.as_tuple() == pytest.approx((p, r, f))
            tp_total, gold_total, pred_total = tp_total + tp, gold_total + len(gold_spans), pred_total + len(pred_spans)
        micro = span_f1([g for g, *_ in SPAN_FIXTURES], [p for _, p, *_ in SPAN_FIXTURES])
        assert micro.true_positives == tp_total == 8
        assert micro.precision == pytest.approx(100.0 * tp_total / pred_total)
        assert micro.recall == pytest.approx(100.0 * tp_total / gold_total)
        assert token_accuracy([STAR], [STAR]) == 0.0
        assert token_accuracy(["NN", STAR, "VB"], ["NN", STAR, "VB"]) == pytest.approx(200 / 3)
        vocab = LabelVocab(["NN", "VB", STAR])
        assert token_accuracy([np.array([2])], [np.array([2])], vocab) == 0.0


# -- 9 -------------------------------------------------------------------------

def naive_rank_rho(a, b):
    def ranks(x):
        return [1 + sum(y < v for y in x) + 0.5 * (sum(y == v for y in x) - 1) for v in x]
    ra, rb = ranks(a), ranks(b)
    ma, mb = sum(ra) / len(ra), sum(rb) / len(rb)
    cov = sum((p - ma) * (q - mb) for p, q in zip(ra, rb))
    return cov / math.sqrt(sum((p - ma) ** 2 for p in ra) * sum((q - mb) ** 2 for q in rb))


def test_criterion_9_correlation():
    with criterion(9, "rank correlation machinery"):
        a = [0.5, 1.0, 3.0, 4.5, 10.0, 11.0]
        assert spearman_rho(a, [2 * v + 1 for v in a]) == pytest.approx(1.0)
        assert spearman_rho(a, [-v for v in a]) == pytest.approx(-1.0)
        for x, y in [([1, 2, 2, 4], [1, 3, 3, 8]), ([3, 1, 1, 2, 5], [2, 2, 1, 4, 4]), ([1, 1, 2, 2], [4, 3, 2, 1])]:
            assert spearman_rho(x, y) == pytest.approx(naive_rank_rho(x, y), abs=1e-12)
        corpus, errors = rare_pattern_fixture()
        cfg = LmConfig(hidden=16, emb_dim=8, optim=OptimConfig(lr=0.1, epochs=3))
        word_lm, _ = train_lm([ex.tokens for ex, e in zip(corpus, errors) if e < 1], cfg)
        label_lm, _ = train_lm([ex.labels for ex in corpus], cfg)
        rho_word, _ = correlate_search_error(corpus, {"infnet": errors}, word_lm, label_lm)["infnet"]
        print(f"  rare-pattern fixture: rho_word {rho_word:.3f}")
        assert rho_word > 0
