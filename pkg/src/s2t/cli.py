"""Command-line entry point: data generation, BPE training, model training,
inference, evaluation, ablation and attention export.

Exit codes: 0 success, 2 bad usage/config, 3 missing file, 4 data or
runtime failure. Errors print as a single `error: ...` line on stderr.
"""

import os

if "S2T_THREADS" in os.environ:
    for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMBA_NUM_THREADS"):
        os.environ.setdefault(var, os.environ["S2T_THREADS"])

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import corpus as corpus_mod
from . import dataset as ds
from . import evaluation as ev
from . import training as tr
from .glyphs import default_bank
from .model import ModelConfig, count_params, load_checkpoint
from .strokes import AffineParams
from .vocab import BpeVocab, SymbolVocab, bpe_train

EXIT_CONFIG, EXIT_MISSING, EXIT_RUNTIME = 2, 3, 4

# Model presets. v64/v68 are the short-word configurations (57-symbol
# output, n=2m=48, k=1); v74/v80 the sentence models (2000-token output,
# n=2m=200, k=3). v80 differs from v74 only in training provenance (frozen
# transferred encoder), not in architecture. "desk" is the small CPU-scale
# configuration used by the acceptance suite.
PRESETS = {
    "v64": {"model": dict(l_e=5, l_d=2, d_a=2, d_h=64, d_p=128, k=1, d_f=128,
                          n=48, m=24, vocab_size=57),
            "vocab": {"type": "symbol", "punctuation": ""}},
    "v68": {"model": dict(l_e=5, l_d=2, d_a=4, d_h=32, d_p=128, k=1, d_f=128,
                          n=48, m=24, vocab_size=57),
            "vocab": {"type": "symbol", "punctuation": ""}},
    "v74": {"model": dict(l_e=5, l_d=4, d_a=4, d_h=32, d_p=128, k=3, d_f=128,
                          n=200, m=100, vocab_size=2000),
            "vocab": {"type": "bpe", "size": 2000}},
    "v80": {"model": dict(l_e=5, l_d=4, d_a=4, d_h=32, d_p=128, k=3, d_f=128,
                          n=200, m=100, vocab_size=2000),
            "vocab": {"type": "bpe", "size": 2000}},
    "desk": {"model": dict(l_e=3, l_d=2, d_a=2, d_h=32, d_p=64, k=1, d_f=64,
                           n=56, m=28, vocab_size=61),
             "vocab": {"type": "symbol", "punctuation": ".?-'"}},
}

_MODEL_KEYS = {f.name for f in dataclasses.fields(ModelConfig)}
_TRAIN_KEYS = {f.name for f in dataclasses.fields(tr.TrainConfig)} | {"augment"}
_DATA_KEYS = {"language", "corpus_path", "subjects", "sentences_per_subject",
              "max_strokes", "split", "sentence_count"}
_VOCAB_KEYS = {"type", "punctuation", "path", "size"}
_TOP_KEYS = {"preset", "seed", "model", "train", "data", "vocab"}


class ConfigError(ValueError):
    pass


def _reject_unknown(section, given, allowed):
    unknown = set(given) - allowed
    if unknown:
        raise ConfigError(f"unknown {section} keys: {sorted(unknown)}")


def build_run_config(args):
    """Merge preset, config file and CLI overrides into one validated dict."""
    cfg = {"seed": 0, "model": {}, "train": {}, "data": {}, "vocab": {}}
    preset = getattr(args, "preset", None)
    file_cfg = {}
    if getattr(args, "config", None):
        if not os.path.exists(args.config):
            raise FileNotFoundError(args.config)
        with open(args.config, "r", encoding="utf-8") as f:
            file_cfg = json.load(f)
        _reject_unknown("top-level", file_cfg, _TOP_KEYS)
        preset = file_cfg.get("preset", preset)
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r} "
                              f"(available: {sorted(PRESETS)})")
        cfg["model"].update(PRESETS[preset]["model"])
        cfg["vocab"].update(PRESETS[preset]["vocab"])
    for section in ("model", "train", "data", "vocab"):
        cfg[section].update(file_cfg.get(section, {}))
    if "seed" in file_cfg:
        cfg["seed"] = file_cfg["seed"]
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "precision", None):
        cfg["train"]["precision"] = args.precision

    _reject_unknown("model", cfg["model"], _MODEL_KEYS)
    _reject_unknown("train", cfg["train"], _TRAIN_KEYS)
    _reject_unknown("data", cfg["data"], _DATA_KEYS)
    _reject_unknown("vocab", cfg["vocab"], _VOCAB_KEYS)
    return cfg


def model_config_from(cfg):
    try:
        return ModelConfig(**cfg["model"]).validate()
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from None


def train_config_from(cfg):
    t = dict(cfg["train"])
    aug = t.pop("augment", None)
    t.setdefault("seed", cfg["seed"])
    try:
        tc = tr.TrainConfig(**t)
        tc.dtype()
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from None
    if aug:
        tc.augment = AffineParams(**{k: tuple(v) for k, v in aug.items()})
    return tc


def load_vocab_from(cfg, vocab_path=None):
    v = cfg["vocab"]
    kind = v.get("type", "symbol")
    if kind == "symbol":
        return SymbolVocab(punctuation=v.get("punctuation", ""))
    if kind == "bpe":
        path = vocab_path or v.get("path")
        if not path:
            raise ConfigError("bpe vocab requires a trained vocabulary file "
                              "(vocab.path or --vocab)")
        if not os.path.exists(path):
            raise FileNotFoundError(path)
        return BpeVocab.load(path)
    raise ConfigError(f"unknown vocab type {kind!r}")


def corpus_spec_from(cfg):
    data = cfg["data"]
    return ds.CorpusSpec(language=data.get("language", "desk_a"),
                         path=data.get("corpus_path"),
                         max_strokes=data.get("max_strokes", 54))


def corpus_lines_for(spec, count, seed):
    if spec.path:
        if not os.path.exists(spec.path):
            raise FileNotFoundError(spec.path)
        with open(spec.path, "r", encoding="utf-8") as f:
            lines = [line.strip() for line in f if line.strip()]
    elif spec.language in ("desk_a", "desk_b"):
        lex = corpus_mod.desk_lexicon(spec.language[-1])
        lines = corpus_mod.make_sentences(lex, count, seed)
    elif spec.language in corpus_mod.WORD_BANKS:
        lines = corpus_mod.make_corpus_lines(spec.language, count, seed)
    else:
        raise ConfigError(f"unknown language {spec.language!r} and no corpus_path")
    return [ds.preprocess_text(line, spec.language) for line in lines]


def cmd_gen_data(args):
    cfg = build_run_config(args)
    data = cfg["data"]
    seed = cfg["seed"]
    bank = default_bank()
    spec = corpus_spec_from(cfg)
    lines = corpus_lines_for(spec, data.get("sentence_count", 400), seed)
    subjects = ds.make_subjects(data.get("subjects", 40), seed)
    split = ds.SplitConfig(**data.get("split", {}))
    train_s, val_s, test_s = ds.split_subjects(subjects, split, seed)
    max_strokes = spec.max_strokes
    per = data.get("sentences_per_subject", 50)

    os.makedirs(args.out, exist_ok=True)
    counts = {}
    for name, subs in (("train", train_s), ("val", val_s), ("test", test_s)):
        examples = ds.build_examples(lines, subs, bank, max_strokes,
                                     sentences_per_subject=per)
        ds.save_jsonl(examples, os.path.join(args.out, f"{name}.jsonl"))
        counts[name] = len(examples)
    with open(os.path.join(args.out, "meta.json"), "w", encoding="utf-8") as f:
        json.dump({"seed": seed, "counts": counts,
                   "subjects": {"train": [s.subject_id for s in train_s],
                                "val": [s.subject_id for s in val_s],
                                "test": [s.subject_id for s in test_s]},
                   "data": data}, f, indent=1)
    print(f"wrote {counts} examples to {args.out}")
    return 0


def cmd_train_bpe(args):
    if not os.path.exists(args.corpus):
        raise FileNotFoundError(args.corpus)
    with open(args.corpus, "r", encoding="utf-8") as f:
        lines = [line.strip() for line in f if line.strip()]
    vocab = bpe_train(lines, args.size)
    vocab.save(args.out)
    print(f"trained bpe vocabulary: {vocab.size} tokens -> {args.out}")
    return 0


def _load_split(data_dir, name):
    path = os.path.join(data_dir, f"{name}.jsonl")
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return ds.load_jsonl(path)


def cmd_train(args):
    cfg = build_run_config(args)
    model_cfg = model_config_from(cfg)
    train_cfg = train_config_from(cfg)
    theta_e, theta_d = count_params(model_cfg)
    print(f"params encoder={theta_e} decoder={theta_d}")

    vocab = load_vocab_from(cfg, getattr(args, "vocab", None))
    if vocab.size != model_cfg.vocab_size:
        raise ConfigError(f"vocab size {vocab.size} != model vocab_size "
                          f"{model_cfg.vocab_size}")
    train_ex = _load_split(args.data, "train")
    val_ex = _load_split(args.data, "val")
    if args.epochs is not None:
        train_cfg.max_epochs = args.epochs
    log = print if not args.quiet else None
    result = tr.fit(train_ex, val_ex, model_cfg, train_cfg, vocab,
                    out_dir=args.out, log=log)
    print(f"best val_xel {result.best_val_xel:.4f} at epoch {result.best_epoch}; "
          f"checkpoint {result.checkpoint_path}")
    return 0


def _load_model(args):
    if not os.path.exists(args.checkpoint):
        raise FileNotFoundError(args.checkpoint)
    dtype = np.float64 if getattr(args, "precision", "32") == "64" else np.float32
    params, config, vocab_dump = load_checkpoint(args.checkpoint, dtype=dtype)
    if vocab_dump and "merges" in vocab_dump:
        vocab = BpeVocab.from_dict(vocab_dump)
    elif vocab_dump:
        vocab = SymbolVocab(punctuation=vocab_dump.get("punctuation", ""))
    else:
        raise ConfigError("checkpoint carries no vocabulary")
    return params, config, vocab, dtype


def cmd_infer(args):
    params, config, vocab, dtype = _load_model(args)
    if not os.path.exists(args.data):
        raise FileNotFoundError(args.data)
    examples = ds.load_jsonl(args.data)
    hyps = tr.decode_texts(examples, params, config, vocab, dtype)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for h in hyps:
            out.write(h + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def cmd_eval(args):
    params, config, vocab, dtype = _load_model(args)
    examples = _load_split(args.data, args.split) if os.path.isdir(args.data) \
        else ds.load_jsonl(args.data)
    report = ev.evaluate(params, config, vocab, examples, dtype)
    doc = json.dumps(report.to_dict(), ensure_ascii=False, indent=1)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(doc)
    print(f"xel {report.xel:.4f} la {report.la:.4f} cer {report.cer:.4f} "
          f"wer {report.wer:.4f} ({len(examples)} examples)")
    return 0


def cmd_ablate(args):
    params, config, vocab, dtype = _load_model(args)
    examples = _load_split(args.data, args.split) if os.path.isdir(args.data) \
        else ds.load_jsonl(args.data)
    spec = ev.AblationSpec(mode=args.mode, k=args.k, rate=args.rate,
                           seed=args.seed if args.seed is not None else 0)
    ablated = [ev.ablate(ex, spec) for ex in examples]
    os.makedirs(args.out, exist_ok=True)
    ds.save_jsonl(ablated, os.path.join(args.out, "ablated.jsonl"))
    report = ev.evaluate(params, config, vocab, ablated, dtype)
    report.save(os.path.join(args.out, "report.json"))
    print(f"ablated {args.mode}: la {report.la:.4f} cer {report.cer:.4f} "
          f"-> {args.out}")
    return 0


def cmd_attn(args):
    from . import tensor as T
    from .model import encoder_forward, greedy_decode

    params, config, vocab, dtype = _load_model(args)
    examples = ds.load_jsonl(args.data)
    if not 0 <= args.index < len(examples):
        raise ConfigError(f"--index {args.index} out of range "
                          f"(file has {len(examples)} examples)")
    ex = examples[args.index]
    batch = tr.make_batch([ex], vocab, config, dtype=dtype)
    z = encoder_forward(T.Tensor(batch.x), batch.x_mask, params, config)
    ids, record = greedy_decode(z, batch.x_mask, params, config,
                                bos_id=vocab.bos_id, eos_id=vocab.eos_id)
    labels = ["<bos>"] + [f"s{i}" for i in range(ex.stroke_count())] + ["<eos>"]
    tokens = [vocab.tokens[i] for i in ids]
    json_path, pgms = ev.export_attention(record, labels, tokens, args.out)
    print(f"decoded {vocab.decode(ids)!r}; wrote {json_path} and "
          f"{len(pgms)} heatmaps")
    return 0


def make_parser():
    parser = argparse.ArgumentParser(
        prog="s2t",
        description="stroke-sequence-to-text transduction toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="JSON run config")
            p.add_argument("--preset", choices=sorted(PRESETS),
                           help="named model preset")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--precision", choices=["32", "64"], default=None)
        p.add_argument("--deterministic", action="store_true",
                       help="single-threaded, bit-reproducible mode")

    p = sub.add_parser("gen-data", help="generate synthetic dataset splits")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("train-bpe", help="train a pair-merge vocabulary")
    common(p, config=False)
    p.add_argument("--corpus", required=True, help="one sentence per line")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train_bpe)

    p = sub.add_parser("train", help="train a model on generated splits")
    common(p)
    p.add_argument("--data", required=True, help="directory with *.jsonl splits")
    p.add_argument("--out", required=True)
    p.add_argument("--vocab", help="trained bpe vocabulary file")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("infer", help="decode stroke sequences to text")
    common(p, config=False)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="JSONL examples")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_infer)

    p = sub.add_parser("eval", help="score a checkpoint on a split")
    common(p, config=False)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="JSONL file or split dir")
    p.add_argument("--split", default="test")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("ablate", help="corrupt inputs and re-evaluate")
    common(p, config=False)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--mode", required=True,
                   choices=["drop_last_k_strokes", "drop_random_strokes"])
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--rate", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("attn", help="export cross-attention for one example")
    common(p, config=False)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="JSONL examples")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_attn)
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    if getattr(args, "deterministic", False):
        os.environ.setdefault("S2T_THREADS", "1")
        try:
            import threadpoolctl

            threadpoolctl.threadpool_limits(limits=1)
        except ImportError:
            pass
    try:
        return args.fn(args)
    except FileNotFoundError as e:
        print(f"error: missing file: {e}", file=sys.stderr)
        return EXIT_MISSING
    except ConfigError as e:
        print(f"error: config: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
