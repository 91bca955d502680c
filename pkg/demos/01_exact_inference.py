"""
Exact inference in a linear-chain CRF
=====================================

An energy model scores a labeling ``y`` of a sentence with per-position
label scores and a transition matrix. Viterbi finds the lowest-energy
labeling exactly; the forward algorithm sums over all of them.
"""

import itertools

import numpy as np

from seqinfer.crf import brute_force_decode, log_partition, path_energy, viterbi

# A two-token, two-label instance small enough to check by hand.
unary = np.array([[1.0, 0.0], [0.0, 2.0]])
W = np.diag([0.5, 0.5])
labels, energy = viterbi(unary, W)
print("viterbi:", labels, energy)  # [0 1] -3.0

# Every labeling and its energy; the minimum agrees with Viterbi.
for y in itertools.product(range(2), repeat=2):
    print(y, path_energy(unary, W, np.array(y)))
print("brute force:", brute_force_decode(unary, W))

# log Z is a log-sum-exp over the negated energies above.
print("log Z:", log_partition(unary, W).item())

# Larger random instances: Viterbi stays exact where enumeration gets slow.
rng = np.random.default_rng(0)
unary, W = rng.normal(size=(7, 5)), rng.normal(size=(5, 5))
print(viterbi(unary, W)[1], brute_force_decode(unary, W)[1])
