"""Command-line entry points.

One subcommand per pipeline stage: synth, pretrain-dae, train-lm, mine-pairs,
train (selfsup|joint), transfer, evaluate, report.  Configuration comes from
flat dotted JSON keys; command-line --set overrides beat the file, which
beats the built-in defaults.  Every command drops a manifest (config hash,
seed, version) into its output directory so runs can be reproduced.

Exit codes: 0 ok, 2 config error, 3 missing artifact, 4 data error,
5 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .corpus import (
    BpeModel,
    NoiseConfig,
    StyledCorpus,
    Vocabulary,
    build_vocab,
    encode_corpus,
    learn_bpe,
    load_corpus,
)
from .errors import ConfigError, DataError, MissingArtifactError, OgstyleError
from .losses import LossWeights
from .mining import SpeConfig, build_spe_indexes, extract_pairs, write_pairs_tsv
from .models import (
    ModelConfig,
    init_lm,
    init_model,
    load_checkpoint,
    save_checkpoint,
)
from .synth import (
    default_grammar,
    default_style_transform,
    gen_mtr,
    sample_sentences,
    transform_subset,
)
from .training import (
    TrainConfig,
    TrainLogger,
    finetune_lm,
    pretrain_dae,
    train_joint,
    train_lm,
    train_selfsup,
    transfer_sentences,
)

ENV_OUT_ROOT = "OGSTYLE_OUT"

# Every known configuration key with its type and default.  Unknown keys in a
# file or --set override are rejected by name.
CONFIG_DEFAULTS: dict[str, object] = {
    "seed": 0,
    "model.layers": 2,
    "model.heads": 2,
    "model.dim": 64,
    "model.ff_dim": 128,
    "model.max_len": 64,
    "model.dropout": 0.1,
    "train.learning_rate": 3e-4,
    "train.sup_batch_size": 32,
    "train.unsup_batch_size": 32,
    "train.val_batch_size": 500,
    "train.warmup_updates": 300,
    "train.warm_start_steps": 300,
    "train.epochs": 30,
    "train.patience": 15,
    "train.checkpoint_every": 25,
    "train.grad_clip": 1.0,
    "train.unsup_samples_per_epoch": None,
    "weights.alpha": 0.7,
    "weights.beta": 1.0,
    "weights.gamma": 1.0,
    "weights.tau": 0.1,
    "spe.k": 4,
    "spe.retrieval_depth": 8,
    "spe.threshold": 1.01,
    "spe.mode": 1,
    "spe.num_clusters": 16,
    "spe.nprobe": 16,
    "corpus.merges": 500,
    "noise.mask_prob": 0.35,
    "noise.delete_prob": 0.0,
    "noise.window": 3,
    "dae.steps": 1000,
    "dae.learning_rate": 3e-4,
    "dae.batch_size": 32,
    "lm.steps": 2000,
    "lm.learning_rate": 5e-3,
    "lm.batch_size": 32,
    "lm.finetune_steps": 0,
    "lm.finetune_learning_rate": 5e-4,
    "synth.n_og": 5000,
    "synth.n_tr": 5000,
    "synth.n_val": 500,
    "synth.n_test": 1000,
    "synth.filler_prob": 0.15,
    "synth.mtr_noise": 0.1,
    "eval.hash_dim": 16384,
    "eval.classifier_max_iter": 200,
    "transfer.batch_size": 64,
}

_INT_OR_NONE_KEYS = {"train.unsup_samples_per_epoch"}


def _coerce(key: str, value):
    """Check a raw config value against the default's type; ints may not be
    silently truncated from floats."""
    default = CONFIG_DEFAULTS[key]
    if key in _INT_OR_NONE_KEYS:
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"config key {key!r} expects an integer or null, got {value!r}")
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"config key {key!r} expects a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"config key {key!r} expects an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config key {key!r} expects a number, got {value!r}")
        return float(value)
    return value


@dataclass
class RunConfig:
    """Resolved flat configuration with typed section accessors."""

    values: dict[str, object]

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def seed(self) -> int:
        return int(self.values["seed"])

    def model_config(self) -> ModelConfig:
        v = self.values
        return ModelConfig(
            layers=v["model.layers"], heads=v["model.heads"], dim=v["model.dim"],
            ff_dim=v["model.ff_dim"], max_len=v["model.max_len"],
            dropout=v["model.dropout"], seed=self.seed,
        )

    def loss_weights(self) -> LossWeights:
        v = self.values
        return LossWeights(alpha=v["weights.alpha"], beta=v["weights.beta"],
                           gamma=v["weights.gamma"], tau=v["weights.tau"])

    def spe_config(self) -> SpeConfig:
        v = self.values
        return SpeConfig(k=v["spe.k"], retrieval_depth=v["spe.retrieval_depth"],
                         threshold=v["spe.threshold"], mode=v["spe.mode"],
                         num_clusters=v["spe.num_clusters"], nprobe=v["spe.nprobe"])

    def train_config(self) -> TrainConfig:
        v = self.values
        return TrainConfig(
            learning_rate=v["train.learning_rate"],
            sup_batch_size=v["train.sup_batch_size"],
            unsup_batch_size=v["train.unsup_batch_size"],
            val_batch_size=v["train.val_batch_size"],
            warmup_updates=v["train.warmup_updates"],
            warm_start_steps=v["train.warm_start_steps"],
            epochs=v["train.epochs"],
            patience=v["train.patience"],
            checkpoint_every=v["train.checkpoint_every"],
            grad_clip=v["train.grad_clip"],
            unsup_samples_per_epoch=v["train.unsup_samples_per_epoch"],
            weights=self.loss_weights(),
            spe=self.spe_config(),
            seed=self.seed,
        )

    def noise_config(self) -> NoiseConfig:
        v = self.values
        return NoiseConfig(mask_prob=v["noise.mask_prob"], delete_prob=v["noise.delete_prob"],
                           window=v["noise.window"], seed=self.seed)

    def config_hash(self) -> str:
        canonical = json.dumps(self.values, sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _parse_override(item: str) -> tuple[str, object]:
    if "=" not in item:
        raise ConfigError(f"override must look like key=value, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def parse_config(path: str | None = None, overrides: list[str] | None = None) -> RunConfig:
    """Resolve defaults < file < overrides into a validated RunConfig."""
    values = dict(CONFIG_DEFAULTS)
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            loaded = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {p}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in loaded.items():
            if key not in CONFIG_DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = _coerce(key, value)
    for item in overrides or []:
        key, value = _parse_override(item)
        if key not in CONFIG_DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _coerce(key, value)
    cfg = RunConfig(values=values)
    try:
        cfg.model_config()
        cfg.train_config()
        cfg.noise_config()
    except DataError as exc:
        raise ConfigError(f"out-of-range configuration value: {exc}") from exc
    return cfg


# ---------------------------------------------------------------------------
# artifact plumbing
# ---------------------------------------------------------------------------


def resolve_out(path: str | Path) -> Path:
    root = os.environ.get(ENV_OUT_ROOT)
    p = Path(path)
    if root and not p.is_absolute():
        p = Path(root) / p
    p.mkdir(parents=True, exist_ok=True)
    return p


def write_manifest(out_dir: Path, command: str, cfg: RunConfig, extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "config_hash": cfg.config_hash(),
        "config": cfg.values,
    }
    if extra:
        manifest.update(extra)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n",
                                           encoding="utf-8")


def _require(path: str | Path, hint: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise MissingArtifactError(f"missing artifact {p}; {hint}")
    return p


def load_artifacts(artifacts_dir: str | Path) -> tuple[Vocabulary, BpeModel]:
    d = Path(artifacts_dir)
    vocab = Vocabulary.load(_require(d / "vocab.txt", "run `ogstyle pretrain-dae` first"))
    bpe = BpeModel.load(_require(d / "bpe.txt", "run `ogstyle pretrain-dae` first"))
    return vocab, bpe


def _load_encoded(path: str | Path, style: str, vocab: Vocabulary, bpe: BpeModel) -> StyledCorpus:
    return encode_corpus(load_corpus(path, style), vocab, bpe)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_synth(args, cfg: RunConfig) -> None:
    out = resolve_out(args.out)
    v = cfg.values
    n_og, n_tr = v["synth.n_og"], v["synth.n_tr"]
    n_val, n_test = v["synth.n_val"], v["synth.n_test"]
    grammar = default_grammar()
    transform = default_style_transform(filler_prob=v["synth.filler_prob"], seed=cfg.seed)

    total = n_og + n_val + n_test
    sentences = sample_sentences(grammar, total, seed=cfg.seed)
    og_train = sentences[:n_og]
    og_val = sentences[n_og:n_og + n_val]
    og_test = sentences[n_og + n_val:]

    tr_train, align_train = transform_subset(og_train, n_tr, transform, seed=cfg.seed + 1)
    tr_val, _ = transform_subset(og_val, n_val, transform, seed=cfg.seed + 2)
    tr_test, align_test = transform_subset(og_test, n_test, transform, seed=cfg.seed + 3)
    og_val_corpus = StyledCorpus(sentences=og_val, style="OG", provenance="synthetic")
    mtr_val = gen_mtr(og_val_corpus, transform, noise=v["synth.mtr_noise"], seed=cfg.seed + 4)

    for name, lines in [
        ("og_train.txt", og_train), ("tr_train.txt", tr_train.sentences),
        ("og_val.txt", og_val), ("tr_val.txt", tr_val.sentences),
        ("mtr_val.txt", mtr_val.sentences),
        ("og_test.txt", og_test), ("tr_test.txt", tr_test.sentences),
    ]:
        (out / name).write_text("\n".join(lines) + "\n", encoding="utf-8")
    align_train.save(out / "alignment_train.tsv")
    align_test.save(out / "alignment_test.tsv")
    write_manifest(out, "synth", cfg)
    print(f"synth: wrote {n_og}+{n_tr} train, {n_val} val, {n_test} test sentences to {out}")


def cmd_pretrain_dae(args, cfg: RunConfig) -> None:
    out = resolve_out(args.out)
    og = load_corpus(args.og, "OG")
    tr = load_corpus(args.tr, "TR")
    bpe = learn_bpe([og, tr], cfg["corpus.merges"])
    vocab = build_vocab([og, tr], bpe)
    bpe.save(out / "bpe.txt")
    vocab.save(out / "vocab.txt")
    og_e, tr_e = encode_corpus(og, vocab, bpe), encode_corpus(tr, vocab, bpe)

    model = init_model(cfg.model_config(), len(vocab))
    log = TrainLogger(out / "dae_log.jsonl")
    pretrain_dae(
        model, [og_e, tr_e], cfg.noise_config(), cfg["dae.steps"],
        learning_rate=cfg["dae.learning_rate"], warmup_updates=cfg["train.warmup_updates"],
        batch_size=cfg["dae.batch_size"], seed=cfg.seed, log=log,
    )
    log.close()
    save_checkpoint(out / "dae.ckpt", model, vocab.hash_hex())
    write_manifest(out, "pretrain-dae", cfg, {"vocab_size": len(vocab)})
    print(f"pretrain-dae: {cfg['dae.steps']} steps, vocab {len(vocab)}, saved to {out}")


def cmd_train_lm(args, cfg: RunConfig) -> None:
    out = resolve_out(args.out)
    vocab, bpe = load_artifacts(args.artifacts)
    og = _load_encoded(args.og, "OG", vocab, bpe)
    lm = init_lm(cfg.model_config(), len(vocab))
    log = TrainLogger(out / "lm_log.jsonl")
    train_lm(lm, og, cfg["lm.steps"], learning_rate=cfg["lm.learning_rate"],
             warmup_updates=cfg["train.warmup_updates"], batch_size=cfg["lm.batch_size"],
             seed=cfg.seed, log=log)
    if cfg["lm.finetune_steps"] > 0:
        finetune_og = og
        if args.finetune_og:
            finetune_og = _load_encoded(args.finetune_og, "OG", vocab, bpe)
        finetune_lm(lm, finetune_og, cfg["lm.finetune_steps"],
                    learning_rate=cfg["lm.finetune_learning_rate"],
                    batch_size=cfg["lm.batch_size"], seed=cfg.seed, log=log)
    log.close()
    save_checkpoint(out / "lm.ckpt", lm, vocab.hash_hex())
    write_manifest(out, "train-lm", cfg)
    print(f"train-lm: {cfg['lm.steps']} steps, saved to {out}")


def _load_model(path: str | Path, vocab: Vocabulary, hint: str):
    model, _ = load_checkpoint(_require(path, hint), vocab.hash_hex())
    return model


def cmd_mine_pairs(args, cfg: RunConfig) -> None:
    out = resolve_out(args.out)
    vocab, bpe = load_artifacts(args.artifacts)
    model_path = args.model or Path(args.artifacts) / "dae.ckpt"
    model = _load_model(model_path, vocab, "run `ogstyle pretrain-dae` first")
    og = _load_encoded(args.og, "OG", vocab, bpe)
    tr = _load_encoded(args.tr, "TR", vocab, bpe)
    state = build_spe_indexes(model, og, cfg.spe_config(), seed=cfg.seed)
    pairs = extract_pairs(model, list(enumerate(tr.encoded)), og, state, cfg.spe_config())
    write_pairs_tsv(out / "pairs.tsv", 0, pairs)
    write_manifest(out, "mine-pairs", cfg, {"accepted_pairs": len(pairs)})
    print(f"mine-pairs: accepted {len(pairs)} pairs out of {len(tr)} queries")


def cmd_train(args, cfg: RunConfig) -> None:
    out = resolve_out(args.out)
    vocab, bpe = load_artifacts(args.artifacts)
    model = _load_model(Path(args.artifacts) / "dae.ckpt", vocab,
                        "run `ogstyle pretrain-dae` first")
    og = _load_encoded(args.og, "OG", vocab, bpe)
    tr = _load_encoded(args.tr, "TR", vocab, bpe)
    tcfg = cfg.train_config()

    if args.mode == "selfsup":
        val_src = _load_encoded(args.val_src, "TR", vocab, bpe)
        val_tgt = _load_encoded(args.val_tgt, "OG", vocab, bpe)
        if len(val_src) != len(val_tgt):
            raise DataError("validation sides must be aligned line-for-line")
        parallel_val = list(zip(val_src.encoded, val_tgt.encoded))
        result = train_selfsup(model, og, tr, parallel_val, tcfg, out_dir=out)
    else:
        if not args.lm:
            raise MissingArtifactError(
                "train joint needs --lm; run `ogstyle train-lm` first")
        lm = _load_model(args.lm, vocab, "run `ogstyle train-lm` first")
        ref = _load_model(Path(args.artifacts) / "dae.ckpt", vocab,
                          "run `ogstyle pretrain-dae` first")
        val_tr = _load_encoded(args.val_tr, "TR", vocab, bpe)
        result = train_joint(model, lm, og, tr, val_tr.encoded, tcfg, ref, out_dir=out)

    model.load_state_dict(result.best_state)
    save_checkpoint(out / "best.ckpt", model, vocab.hash_hex())
    write_manifest(out, f"train-{args.mode}", cfg, {
        "best_step": result.best_step,
        "best_score": result.best_score,
        "steps": result.steps,
        "epochs_run": result.epochs_run,
        "pair_counts": result.pair_counts,
        "stopped_early": result.stopped_early,
    })
    print(f"train {args.mode}: {result.steps} steps, best at {result.best_step} "
          f"(score {result.best_score:.4f})")


def cmd_transfer(args, cfg: RunConfig) -> None:
    vocab, bpe = load_artifacts(args.artifacts)
    model = _load_model(args.model, vocab, "run `ogstyle train` first")
    in_path = Path(args.input)
    if not in_path.exists():
        raise DataError(f"input file not found: {in_path}")
    lines = in_path.read_text(encoding="utf-8").splitlines()
    outputs = transfer_sentences(model, vocab, bpe, lines,
                                 batch_size=cfg["transfer.batch_size"])
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    Path(args.output).write_text("\n".join(outputs) + "\n", encoding="utf-8")
    print(f"transfer: wrote {len(outputs)} lines to {args.output}")


def cmd_evaluate(args, cfg: RunConfig) -> None:
    from . import evaluation as ev
    from .corpus import encode as encode_text

    out = resolve_out(args.out)
    vocab, bpe = load_artifacts(args.artifacts)
    lm = _load_model(args.lm, vocab, "run `ogstyle train-lm` first")
    ref = _load_model(Path(args.artifacts) / "dae.ckpt", vocab,
                      "run `ogstyle pretrain-dae` first")

    og_texts = load_corpus(args.og_test, "OG").sentences
    in_path = Path(args.inputs)
    if not in_path.exists():
        raise DataError(f"inputs file not found: {in_path}")
    inputs = in_path.read_text(encoding="utf-8").splitlines()
    outputs = _require(args.outputs, "run `ogstyle transfer` first").read_text(
        encoding="utf-8").splitlines()
    if len(inputs) != len(outputs):
        raise DataError("inputs and outputs must be aligned line-for-line")

    clf_og = load_corpus(args.clf_og, "OG")
    clf_tr = load_corpus(args.clf_tr, "TR")
    clf = ev.train_classifier(clf_og, clf_tr, seed=cfg.seed,
                              hash_dim=cfg["eval.hash_dim"],
                              max_iter=cfg["eval.classifier_max_iter"])

    out_encoded = [encode_text(vocab, bpe, s) for s in outputs]
    in_encoded = [encode_text(vocab, bpe, s) for s in inputs]
    row = ev.EvalReport(
        setup=args.setup,
        acc_full=ev.accuracy_full(clf, og_texts, outputs),
        acc_half=ev.accuracy_half(clf, outputs),
        og_like_count=ev.og_like(clf, outputs),
        content_f1=ev.content_f1(ref, in_encoded, out_encoded),
        ppl_og=ev.perplexity(lm, out_encoded),
        ttr=ev.ttr(outputs),
        ld=ev.lexical_density(outputs, ev.load_function_words()),
        n_identical=ev.count_identical(inputs, outputs),
    )
    report = ev.build_report([row])
    ev.write_report(report, out / "report.json", out / "report.tsv")
    write_manifest(out, "evaluate", cfg, {"setup": args.setup})
    print(ev.report_tsv(report), end="")


def cmd_report(args, cfg: RunConfig) -> None:
    from . import evaluation as ev

    out = resolve_out(args.out)
    rows = []
    for path in args.reports:
        rows.extend(ev.load_report(_require(path, "run `ogstyle evaluate` first"))["rows"])
    merged = {"schema_version": ev.REPORT_SCHEMA_VERSION, "rows": rows}
    ev.write_report(merged, out / "report.json", out / "report.tsv")
    if args.log:
        write_training_plots(_require(args.log, "training log"), out)
    write_manifest(out, "report", cfg, {"merged": len(rows)})
    print(ev.report_tsv(merged), end="")


def write_training_plots(log_path: str | Path, out_dir: Path) -> list[Path]:
    """Render loss curves, validation scores and pair counts to SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    records = [json.loads(line) for line in
               Path(log_path).read_text(encoding="utf-8").splitlines() if line.strip()]
    written: list[Path] = []

    steps = [(r["step"], r["l_total"], r["l_sup"], r["l_lm"], r["l_ss"])
             for r in records if "l_total" in r and "step" in r]
    if steps:
        fig, ax = plt.subplots(figsize=(7, 4))
        xs = [s[0] for s in steps]
        for idx, label in ((1, "total"), (2, "supervised"), (3, "language model"),
                           (4, "similarity")):
            ax.plot(xs, [s[idx] for s in steps], label=label, linewidth=0.8)
        ax.set_xlabel("step")
        ax.set_ylabel("loss")
        ax.legend()
        fig.tight_layout()
        path = out_dir / "loss_curves.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)

    vals = [(r["step"], r.get("combined", r.get("val_ce")))
            for r in records if r.get("phase") == "validate"]
    if vals:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot([v[0] for v in vals], [v[1] for v in vals], marker="o", linewidth=0.8)
        ax.set_xlabel("step")
        ax.set_ylabel("validation score")
        fig.tight_layout()
        path = out_dir / "validation_score.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)

    mines = [(r["epoch"], r["pairs"]) for r in records if r.get("phase") == "mine"]
    if mines:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.bar([m[0] for m in mines], [m[1] for m in mines])
        ax.set_xlabel("epoch")
        ax.set_ylabel("accepted pairs")
        fig.tight_layout()
        path = out_dir / "accepted_pairs.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# argument parsing and dispatch
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ogstyle",
        description="Rewrite translated-style text into original-style text.",
    )
    parser.add_argument("--version", action="version", version=f"ogstyle {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file with flat dotted keys")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override one config key")

    p = sub.add_parser("synth", help="generate synthetic OG/TR corpora with alignment")
    common(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("pretrain-dae", help="learn BPE/vocab and denoise-pretrain the model")
    common(p)
    p.add_argument("--og", required=True)
    p.add_argument("--tr", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train-lm", help="train the original-style language model")
    common(p)
    p.add_argument("--og", required=True)
    p.add_argument("--artifacts", required=True, help="pretrain-dae output directory")
    p.add_argument("--finetune-og", help="corpus for the optional fine-tuning stage")
    p.add_argument("--out", required=True)

    p = sub.add_parser("mine-pairs", help="one extraction pass over the corpora")
    common(p)
    p.add_argument("--og", required=True)
    p.add_argument("--tr", required=True)
    p.add_argument("--artifacts", required=True)
    p.add_argument("--model", help="checkpoint to mine with (default: the DAE model)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="self-supervised baseline or joint training")
    common(p)
    p.add_argument("mode", choices=["selfsup", "joint"])
    p.add_argument("--og", required=True)
    p.add_argument("--tr", required=True)
    p.add_argument("--artifacts", required=True)
    p.add_argument("--lm", help="language-model checkpoint (joint mode)")
    p.add_argument("--val-src", help="aligned validation source file (selfsup)")
    p.add_argument("--val-tgt", help="aligned validation target file (selfsup)")
    p.add_argument("--val-tr", help="translated-style validation file (joint)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("transfer", help="style-transfer a file line by line")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--artifacts", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)

    p = sub.add_parser("evaluate", help="compute the full metric row for one system")
    common(p)
    p.add_argument("--artifacts", required=True)
    p.add_argument("--lm", required=True)
    p.add_argument("--og-test", required=True)
    p.add_argument("--inputs", required=True, help="the translated test half")
    p.add_argument("--outputs", required=True, help="style-transferred outputs")
    p.add_argument("--clf-og", required=True, help="classifier training originals")
    p.add_argument("--clf-tr", required=True, help="classifier training translations")
    p.add_argument("--setup", default="system")
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="merge evaluation rows and render plots")
    common(p)
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--log", help="training log for SVG plots")
    p.add_argument("--out", required=True)

    return parser


COMMANDS = {
    "synth": cmd_synth,
    "pretrain-dae": cmd_pretrain_dae,
    "train-lm": cmd_train_lm,
    "mine-pairs": cmd_mine_pairs,
    "train": cmd_train,
    "transfer": cmd_transfer,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config, args.overrides)
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"ERROR[config]: {exc}", file=sys.stderr)
        return 2
    except MissingArtifactError as exc:
        print(f"ERROR[missing-artifact]: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"ERROR[data]: {exc}", file=sys.stderr)
        return 4
    except OgstyleError as exc:
        print(f"ERROR[internal]: {exc}", file=sys.stderr)
        return 5
    except Exception as exc:  # noqa: BLE001 - the CLI boundary
        print(f"ERROR[internal]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 5
    return 0


if __name__ == "__main__":
    sys.exit(main())
