"""
Gradient descent over relaxed outputs
=====================================

Instead of searching labelings, optimize unconstrained scores ``y`` so
that ``E(x, softmax(y))`` is small, then take the argmax per position.
The per-step energy shows how quickly the relaxation converges.
"""

import numpy as np

from seqinfer.corpus import gen_hmm_corpus, random_hmm
from seqinfer.crf import EnergyModel, viterbi
from seqinfer.relaxinf import GdConfig, gd_infer, gd_oracle_tune

crf = EnergyModel.load("demo_crf.json")
frozen = crf.frozen()
test = gen_hmm_corpus(random_hmm(5, 40, seed=21), 20, (5, 12), seed=24)
ex = test[0]
_, e_vit = viterbi(frozen.unary(ex.tokens), frozen.W)

for lr in (0.1, 1.0, 10.0):
    res = gd_infer(ex.tokens, frozen, GdConfig(iterations=50, lr=lr))
    steps = [f"{e:.2f}" for e in res.energies[::10]]
    print(f"lr={lr}: relaxed energy every 10 steps {steps}, final discrete {res.energy:.2f} (viterbi {e_vit:.2f})")

# Oracle tuning picks (N, lr) per sentence using the gold labels: an upper
# bound on what the method could do with perfect hyperparameters.
gaps = []
for ex in test:
    gold = frozen.labels.encode(ex.labels)
    best = gd_oracle_tune(ex.tokens, gold, frozen, n_grid=(5, 20, 100))
    gaps.append(best.energy - viterbi(frozen.unary(ex.tokens), frozen.W)[1])
print("mean search error with oracle tuning:", np.mean(gaps))
