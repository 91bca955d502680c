import numpy as np
import pytest

from seqinfer.corpus import Example, LabelVocab, deterministic_hmm, gen_hmm_corpus, random_hmm
from seqinfer.crf import CrfConfig, CrfTrainConfig, EnergyModel, train_crf
from seqinfer.features import EncoderConfig
from seqinfer.infnet import InfNetConfig, InfNetTrainConfig, train_infnet
from seqinfer.training import OptimConfig


def small_encoder(variant="base", dim=6):
    return EncoderConfig.for_variant(variant, word_dim=dim, char_dim=4, char_filters=3)


@pytest.fixture(scope="session")
def toy_corpus():
    spec = deterministic_hmm(3, 9, seed=0)
    return gen_hmm_corpus(spec, 30, (2, 7), seed=1)


@pytest.fixture(scope="session")
def toy_crf(toy_corpus):
    """Untrained but randomly initialized energy model over three labels."""
    labels = LabelVocab.build(toy_corpus)
    model = EnergyModel.build(toy_corpus, labels, CrfConfig("base", hidden=4, encoder=small_encoder(), seed=0))
    rng = np.random.default_rng(0)
    for p in model.parameters():
        p.data = rng.normal(scale=1.0, size=p.shape)
    return model


@pytest.fixture(scope="session")
def hmm_task():
    """Train/dev/test splits from an ambiguous HMM plus a trained CRF and BLSTM infnet."""
    spec = random_hmm(5, 30, seed=4)
    train = gen_hmm_corpus(spec, 300, (5, 12), seed=5)
    dev = gen_hmm_corpus(spec, 60, (5, 12), seed=6)
    test = gen_hmm_corpus(spec, 40, (5, 12), seed=7)
    crf_cfg = CrfTrainConfig(model=CrfConfig(hidden=16, encoder=EncoderConfig(word_dim=16)),
                             optim=OptimConfig(lr=0.05, epochs=3))
    crf, _ = train_crf(train, dev, crf_cfg)
    frozen = crf.frozen()
    net_cfg = InfNetTrainConfig(model=InfNetConfig("blstm", hidden=16, encoder=EncoderConfig(word_dim=16)),
                                optim=OptimConfig(lr=0.05, epochs=2))
    net, _ = train_infnet(train, dev, frozen, net_cfg)
    return {"train": train, "dev": dev, "test": test, "crf": crf, "frozen": frozen, "infnet": net}


def random_energy_model(corpus, labels, hidden=8, seed=0):
    """Untrained energy model with N(0, 1) parameters; for timing and plumbing only."""
    model = EnergyModel.build(corpus, labels, CrfConfig("base", hidden=hidden, encoder=small_encoder(), seed=seed))
    rng = np.random.default_rng(seed)
    for p in model.parameters():
        p.data = rng.normal(size=p.shape)
    return model


def label_size_pair(n_sentences=150, length_range=(50, 200), sizes=(10, 100)):
    """Frozen energy models with different label counts over the same sentences."""
    spec = random_hmm(5, 40, seed=11)
    corpus = gen_hmm_corpus(spec, n_sentences, length_range, seed=12)
    corpus = [Example(ex.tokens, ["y0"] * len(ex)) for ex in corpus]
    frozen = {L: random_energy_model(corpus, LabelVocab([f"y{k}" for k in range(L)])).frozen() for L in sizes}
    return corpus, frozen


def rare_pattern_fixture(n_common=60, n_rare=12, seed=0):
    """Sentences of frequent words plus a minority containing rare words.

    The rare sentences get large search errors and the rest get small noise,
    imitating an inference network that fails on unusual inputs.
    """
    rng = np.random.default_rng(seed)
    common = [f"c{k}" for k in range(5)]
    corpus, errors = [], []
    for i in range(n_common + n_rare):
        n = int(rng.integers(4, 9))
        tokens = [str(t) for t in rng.choice(common, size=n)]
        rare = i % ((n_common + n_rare) // n_rare) == 0 and sum(e > 1 for e in errors) < n_rare
        if rare:
            for pos in rng.choice(n, size=2, replace=False):
                tokens[pos] = f"r{int(rng.integers(0, 1000))}"
        corpus.append(Example(tokens, ["O"] * n))
        errors.append(float(rng.uniform(2.0, 5.0)) if rare else float(rng.uniform(0.0, 0.3)))
    return corpus, errors


ACCEPTANCE: list[str] = []  # filled by test_acceptance, printed after the run


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
