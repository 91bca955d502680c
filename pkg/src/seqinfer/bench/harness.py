"""Run inference methods over a corpus and collect speed, accuracy and energy."""
from __future__ import annotations

import csv
import hashlib
import json
import statistics
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from ..corpus import Corpus
from ..crf.inference import path_energy, relaxed_energy, viterbi
from ..crf.model import FrozenEnergy, evaluate_labels
from ..infnet import InfNet, discretize
from ..numgrad import no_grad, softmax
from ..relaxinf import GdConfig, RefineConfig, gd_minimize, gd_oracle_tune, instance_tailor, warm_start_gd
from .lm import LstmLm, lm_perplexity
from .stats import check_search_error, spearman_rho

METHOD_KINDS = ("viterbi", "gd", "infnet", "infnet-discretized", "instance-tailored",
                "warm-start", "local-baseline")
DEFAULT_MODEL = {"infnet": "infnet", "infnet-discretized": "infnet", "instance-tailored": "infnet",
                 "warm-start": "infnet", "local-baseline": "baseline"}


class BenchConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MethodSpec:
    """``kind[@model][:key=value,...]``, e.g. ``gd:n=20,lr=1`` or ``warm-start@cnn:n=10``."""

    kind: str
    model: str | None = None
    params: tuple[tuple[str, str], ...] = ()
    name: str = ""

    def get(self, key: str, default, cast=float):
        value = dict(self.params).get(key)
        return default if value is None else cast(value)


def parse_method(text: str) -> MethodSpec:
    head, _, tail = text.strip().partition(":")
    kind, _, model = head.partition("@")
    if kind not in METHOD_KINDS:
        raise BenchConfigError(f"unknown method {kind!r}; expected one of {METHOD_KINDS}")
    params = []
    for item in filter(None, (p.strip() for p in tail.split(","))):
        key, eq, value = item.partition("=")
        if not eq or not key:
            raise BenchConfigError(f"bad method parameter {item!r} in {text!r}")
        params.append((key.strip(), value.strip()))
    model = model or DEFAULT_MODEL.get(kind)
    return MethodSpec(kind, model, tuple(params), text.strip())


def _flag(value: str) -> bool:
    return str(value).lower() in ("1", "true", "yes", "on")


@dataclass
class InferenceOutcome:
    method: str
    labels: np.ndarray
    energy: float  # energy of the method's output (relaxed for ``infnet``)
    discrete_energy: float
    relaxed_energy: float | None = None
    seconds: float | None = None
    iterations: int | None = None


Runner = Callable[[Sequence[str], np.ndarray], tuple[np.ndarray, float | None, int | None]]


def make_runner(spec: MethodSpec, frozen: FrozenEnergy, models: Mapping[str, InfNet]) -> Runner:
    """A function ``(tokens, gold) -> (labels, relaxed energy or None, iterations or None)``."""
    net = None
    if spec.model is not None:
        if spec.model not in models:
            raise BenchConfigError(f"method {spec.name!r} needs model {spec.model!r}, which was not provided")
        net = models[spec.model]
    g = spec.get

    if spec.kind == "viterbi":
        return lambda tokens, gold: (viterbi(frozen.unary(tokens), frozen.W)[0], None, None)

    if spec.kind == "gd":
        cfg = GdConfig(g("n", 20, int), g("lr", 1.0), g("momentum", 0.9), g("init", "gaussian", str),
                       g("sigma", 0.1), g("seed", 0, int))
        if _flag(g("oracle", "0", str)):
            n_grid = tuple(int(v) for v in g("n_grid", str(cfg.iterations), str).split("/"))
            lr_grid = tuple(float(v) for v in g("lr_grid", "1e4/5e3/1e3/500/100/50/10/5/1", str).split("/"))

            def run_oracle(tokens, gold):
                best = gd_oracle_tune(tokens, gold, frozen, n_grid, lr_grid, g("metric", "accuracy", str), cfg)
                return best.labels, None, best.iterations
            return run_oracle

        def run_gd(tokens, gold):
            res = gd_minimize(frozen.unary(tokens), frozen.W, cfg)
            return res.labels, res.energies[-1], res.iterations
        return run_gd

    if spec.kind == "infnet":
        def run_relaxed(tokens, gold):
            with no_grad():
                logits = net.forward(tokens)
                e = relaxed_energy(frozen.unary(tokens), frozen.W, softmax(logits, axis=1)).item()
            return discretize(logits), e, None
        return run_relaxed

    if spec.kind in ("infnet-discretized", "local-baseline"):
        return lambda tokens, gold: (net.predict(tokens), None, None)

    if spec.kind == "instance-tailored":
        cfg = RefineConfig(g("n", 10, int), g("lr", 0.01), g("momentum", 0.9), _flag(g("keep_best", "1", str)))

        def run_tailor(tokens, gold):
            res = instance_tailor(tokens, net, frozen, cfg)
            return res.labels, None, cfg.epochs
        return run_tailor

    if spec.kind == "warm-start":
        cfg = GdConfig(g("n", 10, int), g("lr", 1.0), g("momentum", 0.9), "warm")

        def run_warm(tokens, gold):
            res = warm_start_gd(tokens, net, frozen, cfg)
            return res.labels, res.energies[-1], res.iterations
        return run_warm
    raise BenchConfigError(f"unknown method {spec.kind!r}")


@dataclass
class BenchConfig:
    timing: bool = True
    warmup: int = 1
    repeats: int = 3
    metric: str = "accuracy"
    seed: int = 0

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class MethodRow:
    name: str
    kind: str
    metric: float
    mean_energy: float
    mean_search_error: float
    throughput: float | None  # sentences per second
    seconds: float | None  # median full-corpus pass


@dataclass
class BenchReport:
    rows: list[MethodRow]
    outcomes: dict[str, list[InferenceOutcome]]
    viterbi_energies: list[float]
    metric: str
    n_sentences: int
    seed: int
    fingerprint: str
    lengths: list[int] = field(default_factory=list)

    def row(self, name: str) -> MethodRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def search_errors(self, name: str) -> list[float]:
        return [o.energy - v for o, v in zip(self.outcomes[name], self.viterbi_energies)]

    def to_json(self, mask_timing: bool = False) -> dict:
        rows = []
        for r in self.rows:
            d = asdict(r)
            if mask_timing:
                d["throughput"] = d["seconds"] = None
            rows.append(d)
        return {"format": "seqinfer-bench", "version": 1, "metric": self.metric,
                "n_sentences": self.n_sentences, "seed": self.seed,
                "fingerprint": self.fingerprint, "methods": rows}

    def to_text(self) -> str:
        header = ["method", self.metric, "mean energy", "search err", "sent/s"]
        lines = [[r.name, f"{r.metric:.2f}", f"{r.mean_energy:.4f}", f"{r.mean_search_error:.4f}",
                  "-" if r.throughput is None else f"{r.throughput:.1f}"] for r in self.rows]
        widths = [max(len(row[k]) for row in [header] + lines) for k in range(len(header))]
        fmt = lambda row: "  ".join(c.ljust(w) if k == 0 else c.rjust(w)
                                    for k, (c, w) in enumerate(zip(row, widths)))
        return "\n".join([fmt(header), "  ".join("-" * w for w in widths)] + [fmt(row) for row in lines]) + "\n"

    def write_csv(self, path, word_ppl: Sequence[float] | None = None,
                  label_ppl: Sequence[float] | None = None) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["method", "sentence", "length", "energy", "search_error", "seconds",
                        "word_perplexity", "label_perplexity"])
            for name, outs in self.outcomes.items():
                for i, (o, v) in enumerate(zip(outs, self.viterbi_energies)):
                    w.writerow([name, i, self.lengths[i], repr(o.energy), repr(o.energy - v),
                                "" if o.seconds is None else repr(o.seconds),
                                "" if word_ppl is None else repr(word_ppl[i]),
                                "" if label_ppl is None else repr(label_ppl[i])])


def _fingerprint(methods: Sequence[str], config: BenchConfig, frozen: FrozenEnergy, n: int) -> str:
    doc = json.dumps({"methods": list(methods), "config": config.to_json(), "n": n,
                      "W": hashlib.sha256(np.ascontiguousarray(frozen.W).tobytes()).hexdigest()},
                     sort_keys=True)
    return hashlib.sha256(doc.encode()).hexdigest()[:16]


def run_bench(corpus: Corpus, frozen: FrozenEnergy, methods: Sequence[str | MethodSpec],
              models: Mapping[str, InfNet] | None = None, config: BenchConfig | None = None) -> BenchReport:
    """Evaluate every method on the same sentences in the same order.

    Each method makes ``warmup`` untimed passes and ``repeats`` timed passes
    over the corpus (monotonic clock, one process, no workers); throughput
    uses the median pass. Unary tables are cached by ``frozen``, so the
    timed passes of CRF-based methods measure inference, not the feature
    network. Outputs and energies come from the first pass.
    """
    config = config or BenchConfig()
    models = dict(models or {})
    specs = [m if isinstance(m, MethodSpec) else parse_method(m) for m in methods]
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise BenchConfigError("duplicate method names")
    runners = [make_runner(s, frozen, models) for s in specs]
    if not corpus:
        raise ValueError("empty corpus")
    gold = [frozen.labels.encode(ex.labels) for ex in corpus]
    vit_e = [viterbi(frozen.unary(ex.tokens), frozen.W)[1] for ex in corpus]

    rows, outcomes = [], {}
    for spec, run in zip(specs, runners):
        first: list[InferenceOutcome] | None = None
        pass_times = []
        n_passes = (config.warmup + config.repeats) if config.timing else 1
        for p in range(n_passes):
            outs = []
            start = time.perf_counter()
            for ex, g in zip(corpus, gold):
                t0 = time.perf_counter()
                labels, rel, iters = run(ex.tokens, g)
                dt = time.perf_counter() - t0
                outs.append((labels, rel, iters, dt))
            elapsed = time.perf_counter() - start
            if p == 0:
                first = _outcomes(spec, outs, corpus, frozen)
            if config.timing and p >= config.warmup:
                pass_times.append(elapsed)
                for o, (_, _, _, dt) in zip(first, outs):
                    o.seconds = dt
        for i, (o, v) in enumerate(zip(first, vit_e)):
            check_search_error(o.energy - v, f"{spec.name}, sentence {i}")
        seconds = statistics.median(pass_times) if pass_times else None
        metric = evaluate_labels(gold, [o.labels for o in first], frozen.labels, config.metric)
        rows.append(MethodRow(
            spec.name, spec.kind, metric,
            float(np.mean([o.energy for o in first])),
            float(np.mean([o.energy - v for o, v in zip(first, vit_e)])),
            len(corpus) / seconds if seconds else None, seconds,
        ))
        outcomes[spec.name] = first
    return BenchReport(rows, outcomes, vit_e, config.metric, len(corpus), config.seed,
                       _fingerprint(names, config, frozen, len(corpus)), [len(ex) for ex in corpus])


def _outcomes(spec: MethodSpec, outs, corpus: Corpus, frozen: FrozenEnergy) -> list[InferenceOutcome]:
    result = []
    for ex, (labels, rel, iters, _) in zip(corpus, outs):
        labels = np.asarray(labels, dtype=np.int64)
        e = path_energy(frozen.unary(ex.tokens), frozen.W, labels)
        main = rel if spec.kind == "infnet" else e
        result.append(InferenceOutcome(spec.name, labels, main, e, rel, None, iters))
    return result


def correlate_search_error(corpus: Corpus, outcomes: BenchReport | Mapping[str, Sequence[float]],
                           word_lm: LstmLm, label_lm: LstmLm) -> dict[str, tuple[float | None, float | None]]:
    """Per method, Spearman's rho of search error against word and gold-label perplexity.

    ``outcomes`` is a bench report or a map from method name to per-sentence
    search errors.
    """
    if isinstance(outcomes, BenchReport):
        errors = {name: outcomes.search_errors(name) for name in outcomes.outcomes}
    else:
        errors = {name: list(v) for name, v in outcomes.items()}
    for name, errs in errors.items():
        if len(errs) != len(corpus):
            raise ValueError(f"outcomes for {name!r} do not cover the corpus")
    word_ppl = [lm_perplexity(word_lm, ex.tokens) for ex in corpus]
    label_ppl = [lm_perplexity(label_lm, ex.labels) for ex in corpus]
    return {name: (spearman_rho(word_ppl, errs), spearman_rho(label_ppl, errs))
            for name, errs in errors.items()}
