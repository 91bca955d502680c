"""
Training a BLSTM-CRF on synthetic data
======================================

Sentences come from a hidden Markov model, so the right answer is known.
The CRF's label scores come from a bidirectional LSTM over word embeddings.
"""

from seqinfer.corpus import gen_hmm_corpus, random_hmm
from seqinfer.crf import CrfConfig, CrfTrainConfig, evaluate_labels, train_crf
from seqinfer.features import EncoderConfig
from seqinfer.training import OptimConfig

spec = random_hmm(5, 40, seed=21)
train = gen_hmm_corpus(spec, 400, (5, 12), seed=22)
dev = gen_hmm_corpus(spec, 60, (5, 12), seed=23)
print(train[0].tokens)
print(train[0].labels)

config = CrfTrainConfig(model=CrfConfig(hidden=32, encoder=EncoderConfig(word_dim=32)),
                        optim=OptimConfig(lr=0.05, epochs=3))
crf, history = train_crf(train, dev, config)
for record in history.epochs:
    print(f"epoch {record.epoch}: train loss {record.train_loss:.3f}, dev accuracy {record.dev_metric:.2f}")

# Decoding reuses the trained unary tables and transition matrix.
gold = [crf.labels.encode(ex.labels) for ex in dev]
pred = [crf.decode(ex.tokens)[0] for ex in dev]
print("dev accuracy:", evaluate_labels(gold, pred, crf.labels, "accuracy"))

crf.save("demo_crf.json")
