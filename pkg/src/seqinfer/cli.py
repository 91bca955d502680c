"""Command-line front end: ``seqinfer <command> [--config FILE] [--set key=value ...]``.

Every command reads one JSON experiment config (all keys optional, see
``DEFAULTS``), applies ``--set`` overrides, writes the resolved config
to ``<output_dir>/resolved_config.json`` and then runs.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from pathlib import Path

from .bench import (
    BenchConfig,
    BenchConfigError,
    LmConfig,
    correlate_search_error,
    lm_perplexity,
    parse_method,
    run_bench,
    train_lm,
)
from .checkpoint import CheckpointError
from .corpus import (
    Corpus,
    CorpusFormatError,
    Example,
    HmmSpec,
    HmmSpecError,
    LabelVocab,
    apply_vocab,
    deterministic_hmm,
    gen_hmm_corpus,
    load_conll,
    load_embeddings,
    random_hmm,
    span_f1,
    to_bioes,
    token_accuracy,
    truncate_labels,
    write_conll,
)
from .crf import CrfTrainConfig, EnergyModel, train_crf
from .infnet import InfNet, InfNetTrainConfig, table_of, train_infnet, train_local_baseline
from .relaxinf import GdDivergence
from .training import TrainingDiverged

log = logging.getLogger("seqinfer")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
SPLITS = ("train", "dev", "test")

DEFAULTS: dict = {
    "output_dir": "run",
    "workers": 1,
    "data": {
        "hmm": {"kind": "deterministic", "n_states": 5, "vocab_size": 20, "seed": 1},
        "sizes": {"train": 2000, "dev": 200, "test": 500},
        "length_range": [5, 12],
        "seed": 2,
        "paths": {},  # split -> CoNLL file; defaults to <output_dir>/data/<split>.conll
        "token_col": 0,
        "label_col": -1,
        "bioes": False,
        "truncate": None,
        "embeddings": None,
        "embedding_dim": 100,
    },
    "crf": CrfTrainConfig().to_json(),
    "infnet": {"name": "infnet", **InfNetTrainConfig().to_json()},
    "baseline": {"name": "baseline", **InfNetTrainConfig().to_json()},
    "models": {},  # model name -> checkpoint path; defaults to <output_dir>/<name>.json
    "infer": {"method": "viterbi", "input": "test", "output": None, "energy_column": False},
    "bench": {
        "methods": ["viterbi", "infnet-discretized", "gd:n=20,lr=1"],
        "corpus": "test",
        "timing": True,
        "warmup": 1,
        "repeats": 3,
        "metric": "accuracy",
        "seed": 0,
        "lm": None,  # LmConfig fields to also correlate search error with perplexity
    },
    "eval": {"predictions": None, "gold_col": 1, "pred_col": 2},
}


class ConfigError(ValueError):
    pass


# -- configuration -------------------------------------------------------

def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def apply_override(cfg: dict, assignment: str) -> None:
    """``a.b.c=value``; the value is parsed as JSON when possible."""
    key, eq, raw = assignment.partition("=")
    if not eq or not key:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    parts = key.split(".")
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            node[part] = {}
        node = node[part]
    node[parts[-1]] = value


def resolve_config(path: str | None, overrides: list[str], output_dir: str | None = None) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path:
        try:
            user = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be an object")
        cfg = deep_merge(cfg, user)
    for item in overrides:
        apply_override(cfg, item)
    if output_dir:
        cfg["output_dir"] = output_dir
    return cfg


def _out(cfg: dict) -> Path:
    return Path(cfg["output_dir"])


def _write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _train_config(section: dict) -> InfNetTrainConfig:
    fields = {k: v for k, v in section.items() if k != "name"}
    try:
        return InfNetTrainConfig(**fields)
    except TypeError as exc:
        raise ConfigError(f"bad inference-network config: {exc}") from exc


# -- data ----------------------------------------------------------------

def _hmm_spec(hmm: dict) -> HmmSpec:
    kind = hmm.get("kind", "deterministic")
    params = {k: v for k, v in hmm.items() if k not in ("kind", "path")}
    try:
        if kind == "file":
            return HmmSpec.from_json(json.loads(Path(hmm["path"]).read_text(encoding="utf-8")))
        if kind == "deterministic":
            return deterministic_hmm(**params)
        if kind == "random":
            return random_hmm(**params)
    except (TypeError, KeyError, FileNotFoundError) as exc:
        raise ConfigError(f"bad hmm spec: {exc}") from exc
    raise ConfigError(f"unknown hmm kind {kind!r}")


def generate_splits(cfg: dict) -> tuple[HmmSpec, dict[str, Corpus]]:
    data = cfg["data"]
    spec = _hmm_spec(data["hmm"])
    lo, hi = data["length_range"]
    splits = {}
    for k, split in enumerate(SPLITS):
        n = int(data["sizes"].get(split, 0))
        if n > 0:
            splits[split] = gen_hmm_corpus(spec, n, (lo, hi), seed=int(data["seed"]) + k)
    return spec, splits


def split_path(cfg: dict, split: str) -> Path:
    given = cfg["data"].get("paths", {}).get(split)
    return Path(given) if given else _out(cfg) / "data" / f"{split}.conll"


def load_split(cfg: dict, split: str) -> Corpus:
    """A named split, or any CoNLL path, with the configured label preprocessing."""
    path = split_path(cfg, split) if split in SPLITS else Path(split)
    if not path.exists():
        raise ConfigError(f"corpus not found: {path} (run gen-data or set data.paths.{split})")
    data = cfg["data"]
    corpus = load_conll(path, data["token_col"], data["label_col"])
    if data.get("bioes"):
        corpus = [Example(ex.tokens, to_bioes(ex.labels)) for ex in corpus]
    return corpus


def label_space(cfg: dict, train: Corpus) -> tuple[Corpus, LabelVocab]:
    k = cfg["data"].get("truncate")
    if k:
        return truncate_labels(train, int(k))
    return train, LabelVocab.build(train)


def embedding_table(cfg: dict):
    path = cfg["data"].get("embeddings")
    if not path:
        return None
    if not Path(path).exists():
        raise ConfigError(f"embedding file not found: {path}")
    return load_embeddings(path, int(cfg["data"]["embedding_dim"]), seed=int(cfg["crf"]["model"]["seed"]))


def _restrict(corpus: Corpus, labels: LabelVocab) -> Corpus:
    return apply_vocab(corpus, labels) if labels.has_star else corpus


# -- checkpoints ---------------------------------------------------------

def model_path(cfg: dict, name: str) -> Path:
    given = cfg.get("models", {}).get(name)
    return Path(given) if given else _out(cfg) / f"{name}.json"


def load_crf(cfg: dict) -> EnergyModel:
    path = model_path(cfg, "crf")
    if not path.exists():
        raise ConfigError(f"CRF checkpoint not found: {path} (run train-crf first)")
    return EnergyModel.load(path)


def load_models(cfg: dict, names) -> dict[str, InfNet]:
    models = {}
    for name in names:
        path = model_path(cfg, name)
        if not path.exists():
            raise ConfigError(f"checkpoint for model {name!r} not found: {path}")
        models[name] = InfNet.load(path)
    return models


# -- commands ------------------------------------------------------------

def cmd_gen_data(cfg: dict) -> None:
    spec, splits = generate_splits(cfg)
    out = _out(cfg) / "data"
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    spec.save(out / "hmm.json")
    for split, corpus in splits.items():
        write_conll(corpus, out / f"{split}.conll")
        tokens = sum(len(ex) for ex in corpus)
        labels = len({lab for ex in corpus for lab in ex.labels})
        print(f"{split}: {len(corpus)} sentences, {tokens} tokens, {labels} labels -> {out / (split + '.conll')}")


def cmd_train_crf(cfg: dict) -> None:
    train, labels = label_space(cfg, load_split(cfg, "train"))
    dev = _restrict(load_split(cfg, "dev"), labels)
    try:
        config = CrfTrainConfig(**cfg["crf"])
    except TypeError as exc:
        raise ConfigError(f"bad crf config: {exc}") from exc
    model, history = train_crf(train, dev, config, labels, embedding_table(cfg))
    model.save(model_path(cfg, "crf"))
    _write_json(_out(cfg) / "crf_log.json", history.to_json())
    print(f"crf: best dev {config.metric} {history.best_dev_metric:.2f} at epoch {history.best_epoch}"
          f" -> {model_path(cfg, 'crf')}")


def cmd_train_infnet(cfg: dict) -> None:
    crf = load_crf(cfg)
    config = _train_config(cfg["infnet"])
    train = _restrict(load_split(cfg, "train"), crf.labels)
    dev = _restrict(load_split(cfg, "dev"), crf.labels)
    model, history = train_infnet(train, dev, crf.frozen(), config)
    name = cfg["infnet"].get("name", "infnet")
    model.save(model_path(cfg, name))
    _write_json(_out(cfg) / f"{name}_log.json", history.to_json())
    print(f"{name} ({model.family}): best dev {config.metric} {history.best_dev_metric:.2f}"
          f" at epoch {history.best_epoch} -> {model_path(cfg, name)}")


def cmd_train_baseline(cfg: dict) -> None:
    config = _train_config(cfg["baseline"])
    crf_path = model_path(cfg, "crf")
    if crf_path.exists():
        # share the CRF's label space and word embeddings so outputs are comparable
        crf = EnergyModel.load(crf_path)
        labels, table = crf.labels, table_of(crf.encoder)
        train = _restrict(load_split(cfg, "train"), labels)
    else:
        train, labels = label_space(cfg, load_split(cfg, "train"))
        table = embedding_table(cfg)
    dev = _restrict(load_split(cfg, "dev"), labels)
    model, history = train_local_baseline(train, dev, config, labels, table)
    name = cfg["baseline"].get("name", "baseline")
    model.save(model_path(cfg, name))
    _write_json(_out(cfg) / f"{name}_log.json", history.to_json())
    print(f"{name} ({model.family}): best dev {config.metric} {history.best_dev_metric:.2f}"
          f" at epoch {history.best_epoch} -> {model_path(cfg, name)}")


def cmd_infer(cfg: dict) -> None:
    inf = cfg["infer"]
    spec = parse_method(inf["method"])
    crf = load_crf(cfg)
    models = load_models(cfg, [spec.model] if spec.model else [])
    corpus = _restrict(load_split(cfg, inf["input"]), crf.labels)
    report = run_bench(corpus, crf.frozen(), [spec], models, BenchConfig(timing=False))
    outcomes = report.outcomes[spec.name]
    pred = [crf.labels.decode(o.labels) for o in outcomes]
    extra = [pred]
    if inf.get("energy_column"):
        extra.append([[repr(o.energy)] * len(o.labels) for o in outcomes])
    out = Path(inf["output"]) if inf.get("output") else _out(cfg) / "predictions.conll"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_conll(corpus, out, extra)
    row = report.rows[0]
    print(f"{spec.name}: {row.metric:.2f} {report.metric}, mean energy {row.mean_energy:.4f} -> {out}")


def cmd_bench(cfg: dict) -> None:
    b = cfg["bench"]
    specs = [parse_method(m) for m in b["methods"]]
    crf = load_crf(cfg)
    models = load_models(cfg, sorted({s.model for s in specs if s.model}))
    corpus = _restrict(load_split(cfg, b["corpus"]), crf.labels)
    config = BenchConfig(bool(b["timing"]), int(b["warmup"]), int(b["repeats"]), b["metric"], int(b["seed"]))
    if config.timing and int(cfg.get("workers", 1)) > 1:
        log.warning("timing mode runs on one worker; ignoring workers=%s", cfg["workers"])
    report = run_bench(corpus, crf.frozen(), specs, models, config)
    doc = report.to_json()
    word_ppl = label_ppl = None
    if b.get("lm") is not None:
        lm_cfg = LmConfig(**b["lm"])
        train = _restrict(load_split(cfg, "train"), crf.labels)
        word_lm, _ = train_lm([ex.tokens for ex in train], lm_cfg)
        label_lm, _ = train_lm([ex.labels for ex in train], lm_cfg)
        word_ppl = [lm_perplexity(word_lm, ex.tokens) for ex in corpus]
        label_ppl = [lm_perplexity(label_lm, ex.labels) for ex in corpus]
        rho = correlate_search_error(corpus, report, word_lm, label_lm)
        doc["spearman"] = {name: {"word": w, "label": lab} for name, (w, lab) in rho.items()}
    out = _out(cfg)
    _write_json(out / "bench.json", doc)
    (out / "bench.txt").write_text(report.to_text(), encoding="utf-8")
    report.write_csv(out / "bench.csv", word_ppl, label_ppl)
    print(report.to_text(), end="")


def cmd_eval(cfg: dict) -> None:
    ev = cfg["eval"]
    path = ev.get("predictions") or str(_out(cfg) / "predictions.conll")
    if not Path(path).exists():
        raise ConfigError(f"predictions file not found: {path}")
    gold = load_conll(path, 0, int(ev["gold_col"]))
    pred = load_conll(path, 0, int(ev["pred_col"]))
    g, p = [list(ex.labels) for ex in gold], [list(ex.labels) for ex in pred]
    acc = token_accuracy(g, p)
    f1 = span_f1(g, p)
    doc = {"accuracy": acc, "precision": f1.precision, "recall": f1.recall, "f1": f1.f1,
           "no_spans": f1.no_spans, "sentences": len(g), "tokens": sum(map(len, g))}
    _write_json(_out(cfg) / "eval.json", doc)
    print(f"accuracy {acc:.2f}  precision {f1.precision:.2f}  recall {f1.recall:.2f}  F1 {f1.f1:.2f}")


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train-crf": cmd_train_crf,
    "train-infnet": cmd_train_infnet,
    "train-baseline": cmd_train_baseline,
    "infer": cmd_infer,
    "bench": cmd_bench,
    "eval": cmd_eval,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqinfer", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (dotted path; value parsed as JSON if possible)")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--workers", type=int, help="worker count (timing runs always use one)")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "infer":
            p.add_argument("--method", help="inference method, e.g. viterbi or warm-start:n=10,lr=1")
            p.add_argument("--input", help="split name or CoNLL path")
            p.add_argument("--output", help="predictions file")
            p.add_argument("--energy-column", action="store_true", help="append per-sentence energy")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = list(args.overrides)
        if args.workers is not None:
            overrides.append(f"workers={args.workers}")
        if args.command == "infer":
            for flag, key in (("method", "infer.method"), ("input", "infer.input"), ("output", "infer.output")):
                if getattr(args, flag):
                    overrides.append(f"{key}={json.dumps(getattr(args, flag))}")
            if args.energy_column:
                overrides.append("infer.energy_column=true")
        cfg = resolve_config(args.config, overrides, args.out)
        _write_json(_out(cfg) / "resolved_config.json", cfg)
        COMMANDS[args.command](cfg)
    except (ConfigError, BenchConfigError, CheckpointError, CorpusFormatError, HmmSpecError, OSError) as exc:
        print(f"seqinfer {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TrainingDiverged, GdDivergence, FloatingPointError, ValueError, RuntimeError) as exc:
        print(f"seqinfer {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
