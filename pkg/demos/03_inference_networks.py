"""
Inference networks
==================

An inference network maps a sentence straight to per-position label
distributions. It is trained to output low energy under a frozen CRF,
with a small token-level cross-entropy term to guide it. Three
architectures are available; a local baseline drops the energy term.
"""

import numpy as np

from seqinfer.corpus import gen_hmm_corpus, random_hmm
from seqinfer.crf import EnergyModel, path_energy, viterbi
from seqinfer.features import EncoderConfig
from seqinfer.infnet import InfNetConfig, InfNetTrainConfig, train_infnet, train_local_baseline
from seqinfer.training import OptimConfig

# Run 02_train_energy_model.py first; it writes the CRF checkpoint.
crf = EnergyModel.load("demo_crf.json")
frozen = crf.frozen()
spec = random_hmm(5, 40, seed=21)
train = gen_hmm_corpus(spec, 400, (5, 12), seed=22)
dev = gen_hmm_corpus(spec, 60, (5, 12), seed=23)


def mean_energy(predict):
    return np.mean([path_energy(frozen.unary(ex.tokens), frozen.W, predict(ex.tokens)) for ex in dev])


print("viterbi:", mean_energy(lambda t: viterbi(frozen.unary(t), frozen.W)[0]))
for family in ("cnn", "blstm", "seq2seq"):
    cfg = InfNetTrainConfig(model=InfNetConfig(family, hidden=32, encoder=EncoderConfig(word_dim=32)),
                            optim=OptimConfig(lr=0.05, epochs=2))
    net, log = train_infnet(train, dev, frozen, cfg)
    print(f"{family}: dev accuracy {log.best_dev_metric:.2f}, mean energy {mean_energy(net.predict):.3f}")
    if family == "blstm":
        net.save("demo_infnet.json")

# Without the energy term the network only imitates the gold labels.
cfg = InfNetTrainConfig(model=InfNetConfig("blstm", hidden=32, encoder=EncoderConfig(word_dim=32)),
                        optim=OptimConfig(lr=0.05, epochs=2))
baseline, log = train_local_baseline(train, dev, cfg, frozen.labels)
print(f"local baseline: dev accuracy {log.best_dev_metric:.2f}, mean energy {mean_energy(baseline.predict):.3f}")
