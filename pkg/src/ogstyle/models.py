"""Small transformer encoder-decoder and decoder-only language model.

Both networks share one sub-word vocabulary and support an embedding-level
entry point, so soft (probability-vector) inputs flow through exactly the
same code path as token ids.  Attention is written out with plain matmuls to
keep every operation differentiable and dtype-flexible (float64 is used by
the finite-difference gradient checks).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
from torch import nn

from .corpus import BOS_ID, EOS_ID, MASK_ID, PAD_ID
from .errors import DataError

CHECKPOINT_FORMAT_VERSION = 1
NEG_BIAS = -1e9

# artifact tokens that decoding may never emit (eos stays legal)
GENERATION_BANNED = (PAD_ID, BOS_ID, MASK_ID)


def ban_artifact_tokens(logits: torch.Tensor) -> torch.Tensor:
    """Push padding/start/mask logits to the floor so no decoding step can
    choose them; purely additive, so gradients stay intact."""
    bias = torch.zeros(logits.shape[-1], dtype=logits.dtype, device=logits.device)
    bias[list(GENERATION_BANNED)] = NEG_BIAS
    return logits + bias


@dataclass(frozen=True)
class ModelConfig:
    layers: int = 2
    heads: int = 2
    dim: int = 64
    ff_dim: int = 128
    max_len: int = 64
    dropout: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.dim % self.heads != 0:
            raise DataError(f"dim {self.dim} not divisible by heads {self.heads}")
        if self.dim % 2 != 0:
            raise DataError("dim must be even for the sinusoidal position table")
        if self.max_len < 2:
            raise DataError("max_len must be >= 2")
        if not (0.0 <= self.dropout < 1.0):
            raise DataError(f"dropout out of range: {self.dropout}")


def sinusoidal_positions(max_len: int, dim: int) -> torch.Tensor:
    pos = torch.arange(max_len, dtype=torch.float32).unsqueeze(1)
    div = torch.exp(torch.arange(0, dim, 2, dtype=torch.float32) * (-math.log(10000.0) / dim))
    pe = torch.zeros(max_len, dim)
    pe[:, 0::2] = torch.sin(pos * div)
    pe[:, 1::2] = torch.cos(pos * div)
    return pe


def _mask_to_bias(mask: torch.Tensor, dtype: torch.dtype) -> torch.Tensor:
    """(B, Tk) key mask (True = attend) -> additive (B, 1, 1, Tk) bias."""
    bias = torch.zeros(mask.shape, dtype=dtype, device=mask.device)
    bias = bias.masked_fill(~mask, NEG_BIAS)
    return bias[:, None, None, :]


def causal_bias(length: int, dtype: torch.dtype, device=None) -> torch.Tensor:
    upper = torch.triu(torch.ones(length, length, dtype=torch.bool, device=device), diagonal=1)
    bias = torch.zeros(length, length, dtype=dtype, device=device)
    return bias.masked_fill(upper, NEG_BIAS)[None, None, :, :]


class MultiHeadAttention(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.heads = heads
        self.head_dim = dim // heads
        self.q_proj = nn.Linear(dim, dim)
        self.k_proj = nn.Linear(dim, dim)
        self.v_proj = nn.Linear(dim, dim)
        self.out_proj = nn.Linear(dim, dim)

    def _split(self, x: torch.Tensor) -> torch.Tensor:
        b, t, _ = x.shape
        return x.view(b, t, self.heads, self.head_dim).transpose(1, 2)

    def forward(self, query: torch.Tensor, memory: torch.Tensor, bias: torch.Tensor | None):
        q = self._split(self.q_proj(query))
        k = self._split(self.k_proj(memory))
        v = self._split(self.v_proj(memory))
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        if bias is not None:
            scores = scores + bias
        attn = torch.softmax(scores, dim=-1)
        out = attn @ v
        b, _, t, _ = out.shape
        out = out.transpose(1, 2).reshape(b, t, self.heads * self.head_dim)
        return self.out_proj(out)


class FeedForward(nn.Module):
    def __init__(self, dim: int, ff_dim: int):
        super().__init__()
        self.lin1 = nn.Linear(dim, ff_dim)
        self.lin2 = nn.Linear(ff_dim, dim)

    def forward(self, x):
        return self.lin2(torch.relu(self.lin1(x)))


class EncoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.dim)
        self.attn = MultiHeadAttention(cfg.dim, cfg.heads)
        self.ln2 = nn.LayerNorm(cfg.dim)
        self.ff = FeedForward(cfg.dim, cfg.ff_dim)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x, bias):
        h = self.ln1(x)
        x = x + self.drop(self.attn(h, h, bias))
        x = x + self.drop(self.ff(self.ln2(x)))
        return x


class DecoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig, cross_attention: bool = True):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.dim)
        self.self_attn = MultiHeadAttention(cfg.dim, cfg.heads)
        self.cross_attn = MultiHeadAttention(cfg.dim, cfg.heads) if cross_attention else None
        self.ln2 = nn.LayerNorm(cfg.dim) if cross_attention else None
        self.ln3 = nn.LayerNorm(cfg.dim)
        self.ff = FeedForward(cfg.dim, cfg.ff_dim)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x, self_bias, memory=None, memory_bias=None):
        h = self.ln1(x)
        x = x + self.drop(self.self_attn(h, h, self_bias))
        if self.cross_attn is not None:
            x = x + self.drop(self.cross_attn(self.ln2(x), memory, memory_bias))
        x = x + self.drop(self.ff(self.ln3(x)))
        return x


class TransformerEncDec(nn.Module):
    """Encoder-decoder over a shared vocabulary with soft-input entry points."""

    def __init__(self, cfg: ModelConfig, vocab_size: int):
        super().__init__()
        self.cfg = cfg
        self.vocab_size = vocab_size
        self.embed_src = nn.Embedding(vocab_size, cfg.dim, padding_idx=PAD_ID)
        self.embed_tgt = nn.Embedding(vocab_size, cfg.dim, padding_idx=PAD_ID)
        self.enc_layers = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.layers))
        self.enc_norm = nn.LayerNorm(cfg.dim)
        self.dec_layers = nn.ModuleList(DecoderLayer(cfg) for _ in range(cfg.layers))
        self.dec_norm = nn.LayerNorm(cfg.dim)
        self.out_proj = nn.Linear(cfg.dim, vocab_size)
        self.emb_drop = nn.Dropout(cfg.dropout)
        self.register_buffer("positions", sinusoidal_positions(cfg.max_len, cfg.dim),
                             persistent=False)

    def _check_length(self, length: int):
        if length > self.cfg.max_len:
            raise DataError(f"sequence length {length} exceeds max_len {self.cfg.max_len}")

    def src_expected_embeddings(self, dists: torch.Tensor) -> torch.Tensor:
        """Expected encoder-embedding rows under probability vectors."""
        return dists @ self.embed_src.weight

    def encode_soft(self, embeds: torch.Tensor, mask: torch.Tensor | None = None) -> torch.Tensor:
        """Run the encoder from raw embedding rows (the soft entry point)."""
        b, t, _ = embeds.shape
        self._check_length(t)
        if mask is None:
            mask = torch.ones(b, t, dtype=torch.bool, device=embeds.device)
        x = embeds * math.sqrt(self.cfg.dim) + self.positions[:t].to(embeds.dtype)
        x = self.emb_drop(x)
        bias = _mask_to_bias(mask, x.dtype)
        for layer in self.enc_layers:
            x = layer(x, bias)
        return self.enc_norm(x)

    def encode(self, src_ids: torch.Tensor) -> torch.Tensor:
        """Token entry point; identical to encode_soft on the id's embedding rows."""
        return self.encode_soft(self.embed_src(src_ids), src_ids != PAD_ID)

    def decode_logits(
        self,
        enc_states: torch.Tensor,
        src_mask: torch.Tensor,
        tgt_in_ids: torch.Tensor,
    ) -> torch.Tensor:
        """Teacher-forced decoder logits for every target position."""
        b, t = tgt_in_ids.shape
        self._check_length(t)
        x = self.embed_tgt(tgt_in_ids) * math.sqrt(self.cfg.dim)
        x = x + self.positions[:t].to(x.dtype)
        x = self.emb_drop(x)
        self_bias = causal_bias(t, x.dtype, x.device)
        self_bias = self_bias + _mask_to_bias(tgt_in_ids != PAD_ID, x.dtype)
        memory_bias = _mask_to_bias(src_mask, x.dtype)
        for layer in self.dec_layers:
            x = layer(x, self_bias, enc_states, memory_bias)
        return self.out_proj(self.dec_norm(x))


class DecoderLm(nn.Module):
    """Decoder-only network used as the target-style language model."""

    def __init__(self, cfg: ModelConfig, vocab_size: int):
        super().__init__()
        self.cfg = cfg
        self.vocab_size = vocab_size
        self.embed = nn.Embedding(vocab_size, cfg.dim, padding_idx=PAD_ID)
        self.layers = nn.ModuleList(
            DecoderLayer(cfg, cross_attention=False) for _ in range(cfg.layers)
        )
        self.norm = nn.LayerNorm(cfg.dim)
        self.out_proj = nn.Linear(cfg.dim, vocab_size)
        self.emb_drop = nn.Dropout(cfg.dropout)
        self.register_buffer("positions", sinusoidal_positions(cfg.max_len, cfg.dim),
                             persistent=False)

    def expected_embeddings(self, dists: torch.Tensor) -> torch.Tensor:
        return dists @ self.embed.weight

    def forward_embeds(self, embeds: torch.Tensor, mask: torch.Tensor | None = None) -> torch.Tensor:
        b, t, _ = embeds.shape
        if t > self.cfg.max_len:
            raise DataError(f"prefix length {t} exceeds max_len {self.cfg.max_len}")
        x = embeds * math.sqrt(self.cfg.dim) + self.positions[:t].to(embeds.dtype)
        x = self.emb_drop(x)
        bias = causal_bias(t, x.dtype, x.device)
        if mask is not None:
            bias = bias + _mask_to_bias(mask, x.dtype)
        for layer in self.layers:
            x = layer(x, bias)
        return self.out_proj(self.norm(x))

    def forward_tokens(self, ids: torch.Tensor) -> torch.Tensor:
        return self.forward_embeds(self.embed(ids), ids != PAD_ID)

    def _bos_row(self, batch: int, dtype: torch.dtype) -> torch.Tensor:
        return self.embed.weight[BOS_ID].to(dtype).expand(batch, 1, -1)


def lm_next_dist(lm: DecoderLm, soft_prefix: torch.Tensor) -> torch.Tensor:
    """Next-token distribution after a prefix of expected embeddings.

    `soft_prefix` holds the rows E_lm-dot-dist for steps 1..j; a start-of-
    sequence embedding is prepended internally.  With one-hot distributions
    the result equals the ordinary next-token distribution.
    """
    single = soft_prefix.dim() == 2
    if single:
        soft_prefix = soft_prefix.unsqueeze(0)
    if soft_prefix.shape[1] == 0:
        raise DataError("soft prefix must be non-empty")
    bos = lm._bos_row(soft_prefix.shape[0], soft_prefix.dtype)
    logits = lm.forward_embeds(torch.cat([bos, soft_prefix], dim=1))
    dist = torch.softmax(logits[:, -1], dim=-1)
    return dist[0] if single else dist


def lm_next_dists_from_dists(
    lm: DecoderLm, dists: torch.Tensor, mask: torch.Tensor | None = None
) -> torch.Tensor:
    """All next-token distributions q_1..q_T for soft sequences, in one pass.

    Position j of the output conditions on the start token plus dists[<j];
    by causal masking this equals calling lm_next_dist per prefix.
    """
    b, t, _ = dists.shape
    embeds = lm.expected_embeddings(dists)
    bos = lm._bos_row(b, embeds.dtype)
    full_mask = None
    if mask is not None:
        full_mask = torch.cat(
            [torch.ones(b, 1, dtype=torch.bool, device=mask.device), mask], dim=1
        )
    logits = lm.forward_embeds(torch.cat([bos, embeds], dim=1), full_mask)
    return torch.softmax(logits[:, :t], dim=-1)


def lm_token_logprobs(lm: DecoderLm, ids: torch.Tensor) -> torch.Tensor:
    """Teacher-forced log P(token_j | tokens_<j) for a padded (B, T) batch."""
    b, t = ids.shape
    bos = torch.full((b, 1), BOS_ID, dtype=ids.dtype, device=ids.device)
    inputs = torch.cat([bos, ids[:, :-1]], dim=1)
    logits = lm.forward_tokens(inputs)
    logprobs = torch.log_softmax(logits, dim=-1)
    return logprobs.gather(-1, ids.unsqueeze(-1)).squeeze(-1)


def lm_logprob(lm: DecoderLm, tokens: list[int]) -> torch.Tensor:
    """Per-token log probabilities of one sequence under the LM."""
    if not tokens:
        raise DataError("cannot score an empty sequence")
    was_training = lm.training
    lm.eval()
    try:
        with torch.no_grad():
            ids = torch.tensor([tokens], dtype=torch.long)
            out = lm_token_logprobs(lm, ids)[0]
    finally:
        lm.train(was_training)
    return out


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------


def _init_weights(module: nn.Module, dim: int):
    for m in module.modules():
        if isinstance(m, nn.Linear):
            nn.init.xavier_uniform_(m.weight)
            nn.init.zeros_(m.bias)
        elif isinstance(m, nn.Embedding):
            nn.init.normal_(m.weight, mean=0.0, std=dim ** -0.5)
            if m.padding_idx is not None:
                with torch.no_grad():
                    m.weight[m.padding_idx].fill_(0.0)


def init_model(cfg: ModelConfig, vocab_size: int) -> TransformerEncDec:
    torch.manual_seed(cfg.seed)
    model = TransformerEncDec(cfg, vocab_size)
    _init_weights(model, cfg.dim)
    return model


def init_lm(cfg: ModelConfig, vocab_size: int) -> DecoderLm:
    torch.manual_seed(cfg.seed)
    lm = DecoderLm(cfg, vocab_size)
    _init_weights(lm, cfg.dim)
    return lm


# ---------------------------------------------------------------------------
# Gumbel-Softmax relaxation
# ---------------------------------------------------------------------------


def sample_gumbel(
    shape,
    generator: torch.Generator | None = None,
    dtype: torch.dtype = torch.float32,
) -> torch.Tensor:
    u = torch.rand(shape, generator=generator, dtype=dtype)
    eps = 1e-20
    return -torch.log(-torch.log(u + eps) + eps)


def gumbel_softmax(
    logits: torch.Tensor,
    tau: float,
    noise: torch.Tensor | None = None,
    generator: torch.Generator | None = None,
) -> torch.Tensor:
    """Soft relaxation of argmax: softmax((logits + g) / tau).

    Because softmax ignores additive constants, passing unnormalized logits
    is equivalent to passing log-probabilities.  `noise` can be supplied for
    reproducibility; otherwise fresh Gumbel(0, 1) noise is drawn.
    """
    if tau <= 0:
        raise DataError(f"temperature must be positive: {tau}")
    if noise is None:
        noise = sample_gumbel(logits.shape, generator=generator, dtype=logits.dtype)
    return torch.softmax((logits + noise.to(logits.dtype)) / tau, dim=-1)


def pad_batch(seqs: list[list[int]], pad_id: int = PAD_ID) -> torch.Tensor:
    """Right-pad variable-length id lists into a (B, T) long tensor."""
    if not seqs:
        raise DataError("cannot pad an empty batch")
    width = max(len(s) for s in seqs)
    out = torch.full((len(seqs), width), pad_id, dtype=torch.long)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = torch.tensor(s, dtype=torch.long)
    return out


# ---------------------------------------------------------------------------
# greedy decoding
# ---------------------------------------------------------------------------


def greedy_decode_batch(
    model: TransformerEncDec,
    src_ids: torch.Tensor,
    max_len: int | None = None,
) -> list[list[int]]:
    """Argmax decoding for a padded (B, T) batch.

    Every output ends in eos and is at most min(max_len, cfg.max_len - 1)
    tokens long including that eos, so outputs always fit back through the
    decoder and language model with their start token prepended.
    """
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            cap = model.cfg.max_len - 1
            gen_cap = cap if max_len is None else min(max_len, cap)
            b = src_ids.shape[0]
            src_mask = src_ids != PAD_ID
            enc = model.encode(src_ids)
            ys = torch.full((b, 1), BOS_ID, dtype=torch.long, device=src_ids.device)
            finished = torch.zeros(b, dtype=torch.bool, device=src_ids.device)
            for _ in range(max(gen_cap - 1, 0)):
                logits = ban_artifact_tokens(model.decode_logits(enc, src_mask, ys)[:, -1])
                next_tok = logits.argmax(dim=-1)
                next_tok = torch.where(finished, torch.full_like(next_tok, PAD_ID), next_tok)
                ys = torch.cat([ys, next_tok.unsqueeze(1)], dim=1)
                finished = finished | (next_tok == EOS_ID)
                if bool(finished.all()):
                    break
            outputs = []
            for row in ys[:, 1:].tolist():
                seq = []
                for tok in row:
                    if tok == PAD_ID:
                        break
                    seq.append(tok)
                    if tok == EOS_ID:
                        break
                if not seq or seq[-1] != EOS_ID:
                    seq.append(EOS_ID)
                outputs.append(seq)
    finally:
        model.train(was_training)
    return outputs


def greedy_decode(model: TransformerEncDec, src: list[int], max_len: int | None = None) -> list[int]:
    """Single-sentence greedy decoding; deterministic given the parameters."""
    ids = torch.tensor([src], dtype=torch.long)
    return greedy_decode_batch(model, ids, max_len)[0]


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(path: str | Path, model: nn.Module, vocab_hash: str) -> None:
    kind = "encdec" if isinstance(model, TransformerEncDec) else "lm"
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "kind": kind,
        "config": asdict(model.cfg),
        "vocab_size": model.vocab_size,
        "vocab_hash": vocab_hash,
        "state_dict": model.state_dict(),
    }
    torch.save(payload, path)


def load_checkpoint(path: str | Path, vocab_hash: str | None = None):
    """Restore a model; refuses version or vocabulary-hash mismatches.

    Returns (model, payload-metadata-dict).
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}")
    payload = torch.load(path, weights_only=True)
    if payload.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise DataError(f"unsupported checkpoint format: {payload.get('format_version')}")
    if vocab_hash is not None and payload["vocab_hash"] != vocab_hash:
        raise DataError("checkpoint was built with a different vocabulary (hash mismatch)")
    cfg = ModelConfig(**payload["config"])
    cls = TransformerEncDec if payload["kind"] == "encdec" else DecoderLm
    model = cls(cfg, payload["vocab_size"])
    model.load_state_dict(payload["state_dict"])
    meta = {k: payload[k] for k in ("format_version", "kind", "vocab_hash", "vocab_size")}
    return model, meta
