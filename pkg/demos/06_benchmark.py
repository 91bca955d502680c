"""
Benchmarking inference methods
==============================

``run_bench`` evaluates every method on the same sentences and reports
accuracy, mean energy, search error against Viterbi and throughput.
Search errors can then be correlated with language-model perplexity to
see whether unusual sentences are the hard ones.
"""

from seqinfer.bench import BenchConfig, LmConfig, correlate_search_error, run_bench, train_lm
from seqinfer.corpus import gen_hmm_corpus, random_hmm
from seqinfer.crf import EnergyModel
from seqinfer.infnet import InfNet
from seqinfer.training import OptimConfig

crf = EnergyModel.load("demo_crf.json")
net = InfNet.load("demo_infnet.json")
frozen = crf.frozen()
spec = random_hmm(5, 40, seed=21)
train = gen_hmm_corpus(spec, 400, (5, 12), seed=22)
test = gen_hmm_corpus(spec, 100, (5, 12), seed=24)

methods = ["viterbi", "gd:n=20,lr=1", "infnet", "infnet-discretized",
           "instance-tailored:n=5,lr=0.01", "warm-start:n=5,lr=1"]
report = run_bench(test, frozen, methods, {"infnet": net}, BenchConfig(warmup=1, repeats=3))
print(report.to_text())

cfg = LmConfig(hidden=32, emb_dim=16, optim=OptimConfig(lr=0.1, epochs=2))
word_lm, _ = train_lm([ex.tokens for ex in train], cfg)
label_lm, _ = train_lm([ex.labels for ex in train], cfg)
for name, (rho_word, rho_label) in correlate_search_error(test, report, word_lm, label_lm).items():
    print(f"{name}: spearman word {rho_word}, label {rho_label}")
