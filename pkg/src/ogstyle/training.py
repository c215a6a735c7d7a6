"""Training loops: denoising pretraining, language-model training, the
self-supervised baseline, the joint loop with two-pass decoding, and
unsupervised validation with patience-based checkpoint selection.

Checkpoint selection never sees parallel data in the joint loop: the
validation criterion combines the target-style LM entropy of first-pass
outputs with a frozen-encoder similarity between input and output.  The two
terms are made commensurate by normalizing entropy with log2(V); this
combination rule is this artifact's choice and is configurable through the
loss weights.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path

import torch

from .corpus import BOS_ID, EOS_ID, PAD_ID, STYLE_OG, NoiseConfig, StyledCorpus, make_noisy
from .errors import DataError
from .losses import LossBreakdown, LossWeights, joint_loss, lm_loss, ss_loss, sup_loss, unsup_loss
from .mining import SpeConfig, build_spe_indexes, extract_pairs, write_pairs_tsv
from .models import (
    DecoderLm,
    TransformerEncDec,
    ban_artifact_tokens,
    greedy_decode_batch,
    gumbel_softmax,
    lm_next_dists_from_dists,
    lm_token_logprobs,
    pad_batch,
    sample_gumbel,
)

logger = logging.getLogger(__name__)

MINE_BATCH = 256


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 3e-4
    sup_batch_size: int = 32
    unsup_batch_size: int = 32
    val_batch_size: int = 500
    warmup_updates: int = 300
    warm_start_steps: int = 300       # supervised-only steps before the unsupervised term
    epochs: int = 30
    patience: int = 15
    checkpoint_every: int = 25        # validate/checkpoint every N optimization steps
    grad_clip: float = 1.0
    unsup_samples_per_epoch: int | None = None
    weights: LossWeights = field(default_factory=LossWeights)
    spe: SpeConfig = field(default_factory=SpeConfig)
    seed: int = 0

    def __post_init__(self):
        counts = (self.sup_batch_size, self.unsup_batch_size, self.val_batch_size,
                  self.warmup_updates, self.warm_start_steps, self.epochs,
                  self.patience, self.checkpoint_every)
        if any(c < 0 for c in counts):
            raise DataError("all TrainConfig counts must be >= 0")


@dataclass(frozen=True)
class ValidationScore:
    """Unsupervised validation: lower combined is better."""

    entropy_bits: float
    similarity: float
    combined: float

    @classmethod
    def compute(cls, entropy_bits: float, similarity: float, w: LossWeights,
                vocab_size: int) -> "ValidationScore":
        combined = w.beta * (entropy_bits / math.log2(vocab_size)) + w.gamma * (1.0 - similarity)
        return cls(entropy_bits=entropy_bits, similarity=similarity, combined=combined)


@dataclass
class TrainResult:
    best_state: dict
    best_score: float
    best_step: int
    steps: int
    epochs_run: int
    pair_counts: list[int]
    stopped_early: bool
    log_records: list[dict]


class TrainLogger:
    """JSON-lines training log, also kept in memory."""

    def __init__(self, path: str | Path | None = None):
        self.records: list[dict] = []
        self._fh = open(path, "w", encoding="utf-8") if path else None

    def log(self, **fields) -> None:
        self.records.append(fields)
        if self._fh:
            self._fh.write(json.dumps(fields) + "\n")
            self._fh.flush()

    def close(self) -> None:
        if self._fh:
            self._fh.close()
            self._fh = None


class EarlyStopper:
    """Strict-improvement early stopping: stops after `patience` consecutive
    validations without a new minimum."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = math.inf
        self.bad_count = 0

    def update(self, score: float) -> bool:
        if score < self.best:
            self.best = score
            self.bad_count = 0
            return True
        self.bad_count += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.bad_count >= self.patience


def make_optimizer(model: torch.nn.Module, learning_rate: float, warmup: int):
    """Adam with the inverse-square-root schedule and linear warm-up."""
    warmup = max(warmup, 1)
    opt = torch.optim.Adam(model.parameters(), lr=learning_rate, betas=(0.9, 0.98), eps=1e-9)

    def factor(step: int) -> float:
        s = step + 1
        return min(s / warmup, math.sqrt(warmup / s))

    sched = torch.optim.lr_scheduler.LambdaLR(opt, factor)
    return opt, sched


def _optim_step(model, opt, sched, loss, grad_clip: float) -> None:
    opt.zero_grad()
    loss.backward()
    if grad_clip > 0:
        torch.nn.utils.clip_grad_norm_(model.parameters(), grad_clip)
    opt.step()
    sched.step()


def _snapshot(model: torch.nn.Module) -> dict:
    return {k: v.detach().clone() for k, v in model.state_dict().items()}


def _require_encoded(*corpora: StyledCorpus) -> None:
    for c in corpora:
        if c.encoded is None:
            raise DataError("corpus must be encoded before training")


def _truncate(seq: list[int], cap: int) -> list[int]:
    return seq[:cap] if len(seq) > cap else seq


def seq2seq_batch(model_max_len: int, src_seqs: list[list[int]], tgt_seqs: list[list[int]]):
    """Teacher-forcing tensors: encoder input, decoder input, decoder target."""
    cap = model_max_len - 1
    src_ids = pad_batch([_truncate(s, cap) + [EOS_ID] for s in src_seqs])
    tgt = [_truncate(t, cap) for t in tgt_seqs]
    dec_in = pad_batch([[BOS_ID] + t for t in tgt])
    dec_tgt = pad_batch([t + [EOS_ID] for t in tgt])
    return src_ids, dec_in, dec_tgt, dec_tgt != PAD_ID


def supervised_loss(model: TransformerEncDec, src_seqs: list[list[int]],
                    tgt_seqs: list[list[int]]) -> torch.Tensor:
    """Cross-entropy of teacher-forced predictions against the target pair side."""
    src_ids, dec_in, dec_tgt, mask = seq2seq_batch(model.cfg.max_len, src_seqs, tgt_seqs)
    enc = model.encode(src_ids)
    logits = model.decode_logits(enc, src_ids != PAD_ID, dec_in)
    return sup_loss(torch.softmax(logits, dim=-1), dec_tgt, mask)


# ---------------------------------------------------------------------------
# denoising-autoencoder pretraining
# ---------------------------------------------------------------------------


def pretrain_dae(
    model: TransformerEncDec,
    corpora: list[StyledCorpus],
    noise: NoiseConfig,
    steps: int,
    *,
    learning_rate: float = 3e-4,
    warmup_updates: int = 300,
    batch_size: int = 32,
    seed: int = 0,
    log: TrainLogger | None = None,
) -> TransformerEncDec:
    """Train the model to reconstruct clean sentences from noised inputs."""
    _require_encoded(*corpora)
    pool = [ids for c in corpora for ids in c.encoded]
    if not pool:
        raise DataError("no sentences to pretrain on")
    if steps == 0:
        return model
    rng = random.Random(seed)
    opt, sched = make_optimizer(model, learning_rate, warmup_updates)
    model.train()
    order: list[int] = []
    for step in range(steps):
        while len(order) < batch_size:
            refill = list(range(len(pool)))
            rng.shuffle(refill)
            order.extend(refill)
        batch_idx = [order.pop() for _ in range(batch_size)]
        clean = [pool[i] for i in batch_idx]
        noisy = [
            make_noisy(ids, replace(noise, seed=noise.seed ^ (step * 1_000_003 + j * 7919)))
            for j, ids in enumerate(clean)
        ]
        loss = supervised_loss(model, noisy, clean)
        _optim_step(model, opt, sched, loss, grad_clip=1.0)
        if log:
            log.log(step=step + 1, phase="dae", l_sup=float(loss.item()))
    return model


# ---------------------------------------------------------------------------
# language-model training
# ---------------------------------------------------------------------------


def train_lm(
    lm: DecoderLm,
    og_train: StyledCorpus,
    steps: int,
    *,
    learning_rate: float = 5e-3,
    warmup_updates: int = 300,
    batch_size: int = 32,
    seed: int = 0,
    log: TrainLogger | None = None,
) -> DecoderLm:
    """Next-token cross-entropy training on target-style (original) text."""
    if og_train.style != STYLE_OG:
        raise DataError(f"language model must be trained on OG-style text, got {og_train.style}")
    _require_encoded(og_train)
    if steps == 0:
        return lm
    rng = random.Random(seed)
    opt, sched = make_optimizer(lm, learning_rate, warmup_updates)
    lm.train()
    cap = lm.cfg.max_len - 1
    order: list[int] = []
    for step in range(steps):
        while len(order) < batch_size:
            refill = list(range(len(og_train.encoded)))
            rng.shuffle(refill)
            order.extend(refill)
        batch_idx = [order.pop() for _ in range(batch_size)]
        ids = pad_batch([_truncate(og_train.encoded[i], cap) + [EOS_ID] for i in batch_idx])
        logprobs = lm_token_logprobs(lm, ids)
        mask = (ids != PAD_ID).to(logprobs.dtype)
        loss = -(logprobs * mask).sum() / mask.sum()
        _optim_step(lm, opt, sched, loss, grad_clip=1.0)
        if log:
            log.log(step=step + 1, phase="lm", nll=float(loss.item()))
    return lm


def finetune_lm(
    lm: DecoderLm,
    og_style_train: StyledCorpus,
    steps: int,
    *,
    learning_rate: float = 5e-4,
    **kwargs,
) -> DecoderLm:
    """Continue LM training at a ten-fold lower learning rate."""
    return train_lm(lm, og_style_train, steps, learning_rate=learning_rate, **kwargs)


# ---------------------------------------------------------------------------
# two-pass decoding and the joint objective
# ---------------------------------------------------------------------------


def soft_redecode(
    model: TransformerEncDec,
    src_seqs: list[list[int]],
    first_pass: list[list[int]],
    w: LossWeights,
    noise: torch.Tensor | None = None,
    generator: torch.Generator | None = None,
):
    """Teacher-force the shifted first-pass sequence with gradient tracking.

    Returns (pi, mask): Gumbel-Softmax distributions over each decoding step
    and the per-position validity mask.
    """
    cap = model.cfg.max_len - 1
    src_ids = pad_batch([_truncate(s, cap) + [EOS_ID] for s in src_seqs])
    enc = model.encode(src_ids)
    dec_in = pad_batch([[BOS_ID] + f[:-1] for f in first_pass])
    # the same artifact-token ban as greedy decoding, so both passes choose
    # over the same effective vocabulary
    logits = ban_artifact_tokens(model.decode_logits(enc, src_ids != PAD_ID, dec_in))
    if noise is None:
        noise = sample_gumbel(logits.shape, generator=generator, dtype=logits.dtype)
    pi = gumbel_softmax(logits, w.tau, noise)
    mask = pad_batch(first_pass) != PAD_ID
    return pi, mask


def two_pass_decode(
    model: TransformerEncDec,
    src_seqs: list[list[int]],
    w: LossWeights,
    noise: torch.Tensor | None = None,
    generator: torch.Generator | None = None,
    max_len: int | None = None,
):
    """Gradient-free greedy pass, then a differentiable re-decode of it.

    Returns (first_pass token lists, pi distributions, step mask).
    """
    cap = model.cfg.max_len - 1
    src_ids = pad_batch([_truncate(s, cap) + [EOS_ID] for s in src_seqs])
    first = greedy_decode_batch(model, src_ids, max_len)
    pi, mask = soft_redecode(model, src_seqs, first, w, noise=noise, generator=generator)
    return first, pi, mask


def _masked_mean(states: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    m = mask.unsqueeze(-1).to(states.dtype)
    return (states * m).sum(dim=1) / m.sum(dim=1).clamp_min(1.0)


def encoder_sentence_reps(model: TransformerEncDec, src_seqs: list[list[int]],
                          inference: bool = True) -> torch.Tensor:
    """Mean-pooled contextual encoder representations, one row per sentence."""
    cap = model.cfg.max_len - 1
    src_ids = pad_batch([_truncate(s, cap) + [EOS_ID] for s in src_seqs])
    mask = src_ids != PAD_ID
    if inference:
        was_training = model.training
        model.eval()
        try:
            with torch.no_grad():
                states = model.encode(src_ids)
        finally:
            model.train(was_training)
    else:
        states = model.encode(src_ids)
    return _masked_mean(states, mask)


def joint_objective(
    model: TransformerEncDec,
    lm: DecoderLm,
    sup_src: list[list[int]],
    sup_tgt: list[list[int]],
    unsup_src: list[list[int]],
    first_pass: list[list[int]],
    w: LossWeights,
    noise: torch.Tensor | None = None,
    generator: torch.Generator | None = None,
    src_reps: torch.Tensor | None = None,
):
    """The full training objective for one step, with the first pass given.

    The gradient flows through the second decoding pass, the soft encoder
    re-entry, and the LM read-out; the first-pass tokens and the input-side
    sentence representations are constants.  Returns (total, breakdown parts).
    """
    l_sup = supervised_loss(model, sup_src, sup_tgt)
    pi, mask = soft_redecode(model, unsup_src, first_pass, w, noise=noise, generator=generator)
    q = lm_next_dists_from_dists(lm, pi, mask)
    l_lm = lm_loss(pi, q, mask)
    if src_reps is None:
        src_reps = encoder_sentence_reps(model, unsup_src, inference=True)
    soft_embeds = model.src_expected_embeddings(pi)
    out_states = model.encode_soft(soft_embeds, mask)
    out_reps = _masked_mean(out_states, mask)
    l_ss = ss_loss(src_reps.to(out_reps.dtype), out_reps)
    total = joint_loss(l_sup, unsup_loss(l_lm, l_ss, w), w)
    return total, l_sup, l_lm, l_ss


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def parallel_val_score(model: TransformerEncDec, parallel_val: list[tuple[list[int], list[int]]],
                       batch_size: int = 500) -> float:
    """Mean per-token teacher-forced cross-entropy on aligned pairs."""
    if not parallel_val:
        raise DataError("empty validation set")
    was_training = model.training
    model.eval()
    total_nll, total_tokens = 0.0, 0
    try:
        with torch.no_grad():
            for start in range(0, len(parallel_val), max(batch_size, 1)):
                chunk = parallel_val[start:start + max(batch_size, 1)]
                src_ids, dec_in, dec_tgt, mask = seq2seq_batch(
                    model.cfg.max_len, [p[0] for p in chunk], [p[1] for p in chunk])
                logits = model.decode_logits(model.encode(src_ids), src_ids != PAD_ID, dec_in)
                logprobs = torch.log_softmax(logits, dim=-1)
                nll = -logprobs.gather(-1, dec_tgt.unsqueeze(-1)).squeeze(-1)
                m = mask.to(torch.float64)
                total_nll += float((nll.to(torch.float64) * m).sum().item())
                total_tokens += int(m.sum().item())
    finally:
        model.train(was_training)
    return total_nll / max(total_tokens, 1)


def validate_unsup(
    model: TransformerEncDec,
    lm: DecoderLm,
    frozen_ref_encoder: TransformerEncDec,
    val_tr: list[list[int]],
    w: LossWeights,
    batch_size: int = 64,
) -> ValidationScore:
    """Score first-pass transfers by LM entropy and frozen-encoder similarity."""
    from .evaluation import greedy_match_f1_pairs

    if not val_tr:
        raise DataError("empty validation set")
    outputs: list[list[int]] = []
    cap = model.cfg.max_len - 1
    with torch.no_grad():
        for start in range(0, len(val_tr), batch_size):
            chunk = val_tr[start:start + batch_size]
            src_ids = pad_batch([_truncate(s, cap) + [EOS_ID] for s in chunk])
            outputs.extend(greedy_decode_batch(model, src_ids))

    was_training = lm.training
    lm.eval()
    total_nll, total_tokens = 0.0, 0
    try:
        with torch.no_grad():
            for start in range(0, len(outputs), batch_size):
                chunk = outputs[start:start + batch_size]
                ids = pad_batch(chunk)
                logprobs = lm_token_logprobs(lm, ids).to(torch.float64)
                mask = (ids != PAD_ID).to(torch.float64)
                total_nll += float(-(logprobs * mask).sum().item())
                total_tokens += int(mask.sum().item())
    finally:
        lm.train(was_training)
    entropy_bits = (total_nll / max(total_tokens, 1)) / math.log(2.0)

    stripped = [[t for t in out if t != EOS_ID] for out in outputs]
    similarity = greedy_match_f1_pairs(frozen_ref_encoder, val_tr, stripped)
    return ValidationScore.compute(entropy_bits, similarity, w, model.vocab_size)


# ---------------------------------------------------------------------------
# mining + training loops
# ---------------------------------------------------------------------------


def _mine_epoch(model, og, tr, cfg: TrainConfig, epoch: int, out_dir: Path | None):
    state = build_spe_indexes(model, og, cfg.spe, seed=cfg.seed + epoch)
    pairs = []
    items = list(enumerate(tr.encoded))
    for start in range(0, len(items), MINE_BATCH):
        pairs.extend(extract_pairs(model, items[start:start + MINE_BATCH], og, state, cfg.spe))
    if out_dir is not None:
        write_pairs_tsv(Path(out_dir) / f"pairs_epoch{epoch:03d}.tsv", epoch, pairs)
    return pairs


def cycle_batches(items: list, batch_size: int):
    """Endless batches cycling through `items` in order."""
    if not items:
        raise DataError("cannot cycle over an empty list")
    pool = itertools.cycle(items)
    while True:
        yield [next(pool) for _ in range(batch_size)]


def train_selfsup(
    model: TransformerEncDec,
    og: StyledCorpus,
    tr: StyledCorpus,
    parallel_val: list[tuple[list[int], list[int]]],
    cfg: TrainConfig,
    out_dir: str | Path | None = None,
    log: TrainLogger | None = None,
) -> TrainResult:
    """Per epoch: re-index, mine pairs, then supervised updates on them.

    Checkpoints by minimum validation cross-entropy on the aligned pairs;
    stops early after `patience` non-improving validations.
    """
    _require_encoded(og, tr)
    out_dir = Path(out_dir) if out_dir is not None else None
    own_log = log is None
    log = log or TrainLogger(out_dir / "training_log.jsonl" if out_dir else None)
    rng = random.Random(cfg.seed)
    opt, sched = make_optimizer(model, cfg.learning_rate, cfg.warmup_updates)
    stopper = EarlyStopper(cfg.patience)
    baseline_weights = replace(cfg.weights, alpha=1.0)
    best_state, best_score, best_step = None, math.inf, 0
    step, empty_epochs, epochs_run = 0, 0, 0
    pair_counts: list[int] = []
    stop = False

    for epoch in range(cfg.epochs):
        epochs_run += 1
        pairs = _mine_epoch(model, og, tr, cfg, epoch, out_dir)
        pair_counts.append(len(pairs))
        log.log(phase="mine", epoch=epoch, pairs=len(pairs))
        if not pairs:
            empty_epochs += 1
            logger.warning("epoch %d accepted no pairs; skipping", epoch)
            if empty_epochs >= 3:
                raise DataError("no accepted pairs for 3 consecutive epochs; aborting")
            continue
        empty_epochs = 0
        rng.shuffle(pairs)
        for start in range(0, len(pairs), cfg.sup_batch_size):
            chunk = pairs[start:start + cfg.sup_batch_size]
            src = [tr.encoded[p.tr_id] for p in chunk]
            tgt = [og.encoded[p.og_id] for p in chunk]
            model.train()
            loss = supervised_loss(model, src, tgt)
            _optim_step(model, opt, sched, loss, cfg.grad_clip)
            step += 1
            breakdown = LossBreakdown.from_components(loss.item(), 0.0, 0.0, baseline_weights)
            log.log(step=step, phase="selfsup", epoch=epoch, pairs=len(pairs),
                    **breakdown.as_dict())
            if cfg.checkpoint_every and step % cfg.checkpoint_every == 0:
                score = parallel_val_score(model, parallel_val, cfg.val_batch_size)
                improved = stopper.update(score)
                if improved:
                    best_state, best_score, best_step = _snapshot(model), score, step
                log.log(step=step, phase="validate", val_ce=score, improved=improved)
                if stopper.should_stop:
                    stop = True
                    break
        if stop:
            break

    if best_state is None:
        best_state, best_score, best_step = _snapshot(model), math.inf, step
    if own_log:
        log.close()
    return TrainResult(best_state=best_state, best_score=best_score, best_step=best_step,
                       steps=step, epochs_run=epochs_run, pair_counts=pair_counts,
                       stopped_early=stop, log_records=log.records)


def train_joint(
    model: TransformerEncDec,
    lm: DecoderLm,
    og: StyledCorpus,
    tr: StyledCorpus,
    unsup_val: list[list[int]],
    cfg: TrainConfig,
    frozen_ref_encoder: TransformerEncDec,
    out_dir: str | Path | None = None,
    log: TrainLogger | None = None,
) -> TrainResult:
    """Joint loop: each step pairs one supervised batch (mined pairs, cycled)
    with one unsupervised translated-style batch.

    The unsupervised term is excluded (alpha treated as 1) until
    `warm_start_steps` optimization steps have run.  Selection uses the
    unsupervised validation score; patience applies across validations.
    """
    _require_encoded(og, tr)
    out_dir = Path(out_dir) if out_dir is not None else None
    own_log = log is None
    log = log or TrainLogger(out_dir / "training_log.jsonl" if out_dir else None)
    rng = random.Random(cfg.seed)
    gumbel_gen = torch.Generator().manual_seed(cfg.seed)
    opt, sched = make_optimizer(model, cfg.learning_rate, cfg.warmup_updates)
    stopper = EarlyStopper(cfg.patience)
    warmup_weights = replace(cfg.weights, alpha=1.0)
    lm.eval()
    lm.requires_grad_(False)
    frozen_ref_encoder.eval()
    frozen_ref_encoder.requires_grad_(False)

    best_state, best_score, best_step = None, math.inf, 0
    step, empty_epochs, epochs_run = 0, 0, 0
    pair_counts: list[int] = []
    stop = False

    for epoch in range(cfg.epochs):
        epochs_run += 1
        pairs = _mine_epoch(model, og, tr, cfg, epoch, out_dir)
        pair_counts.append(len(pairs))
        log.log(phase="mine", epoch=epoch, pairs=len(pairs))
        if not pairs:
            empty_epochs += 1
            logger.warning("epoch %d accepted no pairs; skipping", epoch)
            if empty_epochs >= 3:
                raise DataError("no accepted pairs for 3 consecutive epochs; aborting")
            continue
        empty_epochs = 0
        rng.shuffle(pairs)
        sup_stream = cycle_batches(pairs, cfg.sup_batch_size)

        unsup_ids = list(range(len(tr.encoded)))
        if cfg.unsup_samples_per_epoch and cfg.unsup_samples_per_epoch < len(unsup_ids):
            unsup_ids = rng.sample(unsup_ids, cfg.unsup_samples_per_epoch)
        rng.shuffle(unsup_ids)

        for start in range(0, len(unsup_ids), cfg.unsup_batch_size):
            step += 1
            sup_chunk = next(sup_stream)
            sup_src = [tr.encoded[p.tr_id] for p in sup_chunk]
            sup_tgt = [og.encoded[p.og_id] for p in sup_chunk]
            model.train()
            if step <= cfg.warm_start_steps:
                phase = "joint-warmup"
                loss = supervised_loss(model, sup_src, sup_tgt)
                breakdown = LossBreakdown.from_components(loss.item(), 0.0, 0.0, warmup_weights)
            else:
                phase = "joint"
                unsup_src = [tr.encoded[i] for i in unsup_ids[start:start + cfg.unsup_batch_size]]
                cap = model.cfg.max_len - 1
                unsup_ids_t = pad_batch([_truncate(s, cap) + [EOS_ID] for s in unsup_src])
                first = greedy_decode_batch(model, unsup_ids_t)
                loss, l_sup, l_lm, l_ss = joint_objective(
                    model, lm, sup_src, sup_tgt, unsup_src, first,
                    cfg.weights, generator=gumbel_gen)
                breakdown = LossBreakdown.from_components(
                    l_sup.item(), l_lm.item(), l_ss.item(), cfg.weights)
            _optim_step(model, opt, sched, loss, cfg.grad_clip)
            log.log(step=step, phase=phase, epoch=epoch, pairs=len(pairs),
                    **breakdown.as_dict())
            if cfg.checkpoint_every and step % cfg.checkpoint_every == 0:
                score = validate_unsup(model, lm, frozen_ref_encoder, unsup_val,
                                       cfg.weights, batch_size=max(cfg.val_batch_size, 1))
                improved = stopper.update(score.combined)
                if improved:
                    best_state, best_score, best_step = _snapshot(model), score.combined, step
                log.log(step=step, phase="validate", entropy_bits=score.entropy_bits,
                        similarity=score.similarity, combined=score.combined,
                        improved=improved)
                if stopper.should_stop:
                    stop = True
                    break
        if stop:
            break

    if best_state is None:
        best_state, best_score, best_step = _snapshot(model), math.inf, step
    if own_log:
        log.close()
    return TrainResult(best_state=best_state, best_score=best_score, best_step=best_step,
                       steps=step, epochs_run=epochs_run, pair_counts=pair_counts,
                       stopped_early=stop, log_records=log.records)


# ---------------------------------------------------------------------------
# inference helper
# ---------------------------------------------------------------------------


def transfer_sentences(
    model: TransformerEncDec,
    vocab,
    bpe,
    sentences: list[str],
    batch_size: int = 64,
    max_len: int | None = None,
) -> list[str]:
    """Style-transfer raw sentences, one output line per input line."""
    from .corpus import decode as decode_text
    from .corpus import encode as encode_text

    outputs: list[str] = []
    cap = model.cfg.max_len - 1
    for start in range(0, len(sentences), batch_size):
        chunk = sentences[start:start + batch_size]
        encoded = [_truncate(encode_text(vocab, bpe, s), cap) for s in chunk]
        src_ids = pad_batch([ids + [EOS_ID] for ids in encoded])
        for out in greedy_decode_batch(model, src_ids, max_len):
            outputs.append(decode_text(vocab, [t for t in out if t != EOS_ID]))
    return outputs
