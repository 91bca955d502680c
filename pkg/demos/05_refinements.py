"""
Refining an inference network at test time
==========================================

Two ways to spend a little extra computation on each sentence:

* instance tailoring fine-tunes a private copy of the network on that
  sentence's energy;
* warm starting runs gradient descent from the network's logits.
"""

import numpy as np

from seqinfer.corpus import gen_hmm_corpus, random_hmm
from seqinfer.crf import EnergyModel, path_energy
from seqinfer.infnet import InfNet
from seqinfer.relaxinf import GdConfig, RefineConfig, instance_tailor, warm_start_gd

crf = EnergyModel.load("demo_crf.json")
net = InfNet.load("demo_infnet.json")  # written by 03_inference_networks.py
frozen = crf.frozen()
test = gen_hmm_corpus(random_hmm(5, 40, seed=21), 50, (5, 12), seed=24)

plain, tailored, warm = [], [], []
for ex in test:
    plain.append(path_energy(frozen.unary(ex.tokens), frozen.W, net.predict(ex.tokens)))
    tailored.append(instance_tailor(ex.tokens, net, frozen, RefineConfig(epochs=10, lr=0.01)).energy)
    warm.append(warm_start_gd(ex.tokens, net, frozen, GdConfig(iterations=10, lr=1.0)).energy)
print(f"mean energy: network {np.mean(plain):.3f}, tailored {np.mean(tailored):.3f}, warm start {np.mean(warm):.3f}")

# With zero iterations a warm start is the network's own prediction.
ex = test[0]
print(warm_start_gd(ex.tokens, net, frozen, GdConfig(0)).labels, net.predict(ex.tokens))
