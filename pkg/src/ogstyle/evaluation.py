"""Evaluation harness for style transfer: classification accuracy, target-
style perplexity, content-preservation F1, lexical statistics, and report
assembly.

The style classifier is a hashed 1-2-gram logistic model: deterministic,
dependency-light, and sufficient to pick up the marker words of the
synthetic translated style.  Content preservation replaces an external
contextual scorer with greedy maximal cosine matching over token states from
a frozen reference encoder (the denoising-pretrained model).
"""

from __future__ import annotations

import importlib.resources
import json
import math
import random
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import torch
from torch import nn
from sklearn.linear_model import LogisticRegression

import jsonschema

from .corpus import EOS_ID, PAD_ID, StyledCorpus
from .errors import DataError
from .models import (
    DecoderLm,
    EncoderLayer,
    ModelConfig,
    TransformerEncDec,
    lm_token_logprobs,
    pad_batch,
    sinusoidal_positions,
)

LABEL_OG = 0
LABEL_TR = 1

DEFAULT_HASH_DIM = 16384

REPORT_SCHEMA_VERSION = 1

REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "rows"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": REPORT_SCHEMA_VERSION},
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": [
                    "setup", "acc_full", "acc_half", "og_like_count",
                    "content_f1", "ppl_og", "ttr", "ld", "n_identical",
                ],
                "additionalProperties": False,
                "properties": {
                    "setup": {"type": "string"},
                    "acc_full": {"type": "number", "minimum": 0, "maximum": 100},
                    "acc_half": {"type": "number", "minimum": 0, "maximum": 100},
                    "og_like_count": {"type": "integer", "minimum": 0},
                    "content_f1": {"type": "number", "minimum": 0, "maximum": 1},
                    "ppl_og": {"type": "number", "minimum": 1},
                    "ttr": {"type": "number", "minimum": 0, "maximum": 1},
                    "ld": {"type": "number", "minimum": 0, "maximum": 1},
                    "n_identical": {"type": "integer", "minimum": 0},
                },
            },
        },
    },
}

TSV_COLUMNS = ("Setup", "Acc1", "Acc2", "OGlike", "ContentF1", "PPL", "TTR", "LD", "NIdentical")


# ---------------------------------------------------------------------------
# style classifier
# ---------------------------------------------------------------------------


def _hashed_ngram_features(texts: list[str], hash_dim: int) -> sp.csr_matrix:
    """Counts of lowercased token 1-2-grams, hashed with crc32."""
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for text in texts:
        tokens = text.lower().split()
        grams = tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
        counts: dict[int, int] = {}
        for g in grams:
            h = zlib.crc32(g.encode("utf-8")) % hash_dim
            counts[h] = counts.get(h, 0) + 1
        for h in sorted(counts):
            indices.append(h)
            data.append(float(counts[h]))
        indptr.append(len(indices))
    return sp.csr_matrix((data, indices, indptr), shape=(len(texts), hash_dim))


@dataclass
class StyleClassifier:
    """Linear model over hashed n-gram counts; predicts 1 for translated style."""

    hash_dim: int
    coef: np.ndarray
    intercept: float
    metadata: dict = field(default_factory=dict)

    def decision(self, texts: list[str]) -> np.ndarray:
        x = _hashed_ngram_features(texts, self.hash_dim)
        return np.asarray(x @ self.coef) + self.intercept

    def predict(self, texts: list[str]) -> np.ndarray:
        return (self.decision(texts) > 0).astype(np.int64)

    def predict_proba_tr(self, texts: list[str]) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.decision(texts)))


def train_classifier(
    og: StyledCorpus,
    tr: StyledCorpus,
    seed: int = 0,
    hash_dim: int = DEFAULT_HASH_DIM,
    max_iter: int = 200,
) -> StyleClassifier:
    """Fit the logistic style model on balanced original/translated text."""
    if len(og) == 0 or len(tr) == 0:
        raise DataError("both corpora must be non-empty to train the classifier")
    og_texts, tr_texts = list(og.sentences), list(tr.sentences)
    rng = random.Random(seed)
    n = min(len(og_texts), len(tr_texts))
    if len(og_texts) > n:
        og_texts = rng.sample(og_texts, n)
    if len(tr_texts) > n:
        tr_texts = rng.sample(tr_texts, n)
    x = _hashed_ngram_features(og_texts + tr_texts, hash_dim)
    y = np.array([LABEL_OG] * n + [LABEL_TR] * n)
    model = LogisticRegression(max_iter=max_iter, solver="lbfgs")
    model.fit(x, y)
    return StyleClassifier(
        hash_dim=hash_dim,
        coef=model.coef_[0].copy(),
        intercept=float(model.intercept_[0]),
        metadata={"n_per_class": n, "seed": seed, "max_iter": max_iter},
    )


def accuracy_full(clf: StyleClassifier, og_texts: list[str], x_texts: list[str]) -> float:
    """Percent correct with og labeled original and x labeled translated."""
    if not og_texts or not x_texts:
        raise DataError("accuracy_full needs non-empty inputs")
    correct = int((clf.predict(og_texts) == LABEL_OG).sum())
    correct += int((clf.predict(x_texts) == LABEL_TR).sum())
    return 100.0 * correct / (len(og_texts) + len(x_texts))


def accuracy_half(clf: StyleClassifier, x_texts: list[str]) -> float:
    """Percent of the given texts classified as translated."""
    if not x_texts:
        raise DataError("accuracy_half needs non-empty input")
    return 100.0 * int((clf.predict(x_texts) == LABEL_TR).sum()) / len(x_texts)


def og_like(clf: StyleClassifier, x_texts: list[str]) -> int:
    """How many of the given texts the classifier takes for originals."""
    if not x_texts:
        raise DataError("og_like needs non-empty input")
    return int((clf.predict(x_texts) == LABEL_OG).sum())


class TransformerStyleClassifier(nn.Module):
    """Optional parity classifier: a small transformer encoder with a binary
    head over mean-pooled states, trained from scratch on encoded text.

    The hashed n-gram model is the default everywhere; this exists to check
    that a representation-learning classifier reads the same style signal.
    """

    def __init__(self, cfg: ModelConfig, vocab_size: int):
        super().__init__()
        self.cfg = cfg
        self.embed = nn.Embedding(vocab_size, cfg.dim, padding_idx=PAD_ID)
        self.layers = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.layers))
        self.norm = nn.LayerNorm(cfg.dim)
        self.head = nn.Linear(cfg.dim, 1)
        self.register_buffer("positions", sinusoidal_positions(cfg.max_len, cfg.dim),
                             persistent=False)

    def logits(self, ids: torch.Tensor) -> torch.Tensor:
        mask = ids != PAD_ID
        t = ids.shape[1]
        x = self.embed(ids) * math.sqrt(self.cfg.dim) + self.positions[:t]
        bias = torch.zeros(mask.shape, dtype=x.dtype, device=x.device)
        bias = bias.masked_fill(~mask, -1e9)[:, None, None, :]
        for layer in self.layers:
            x = layer(x, bias)
        x = self.norm(x)
        m = mask.unsqueeze(-1).to(x.dtype)
        pooled = (x * m).sum(dim=1) / m.sum(dim=1).clamp_min(1.0)
        return self.head(pooled).squeeze(-1)

    @torch.no_grad()
    def predict(self, encoded: list[list[int]], batch_size: int = 128) -> np.ndarray:
        self.eval()
        out = []
        cap = self.cfg.max_len
        for start in range(0, len(encoded), batch_size):
            ids = pad_batch([s[:cap] for s in encoded[start:start + batch_size]])
            out.append((self.logits(ids) > 0).long().numpy())
        return np.concatenate(out)


def train_transformer_classifier(
    og: StyledCorpus,
    tr: StyledCorpus,
    model_cfg: ModelConfig | None = None,
    seed: int = 0,
    steps: int = 300,
    learning_rate: float = 1e-3,
    batch_size: int = 32,
) -> TransformerStyleClassifier:
    """Train the parity classifier on balanced encoded corpora."""
    if og.encoded is None or tr.encoded is None:
        raise DataError("parity classifier needs encoded corpora")
    if len(og) == 0 or len(tr) == 0:
        raise DataError("both corpora must be non-empty to train the classifier")
    rng = random.Random(seed)
    n = min(len(og), len(tr))
    og_seqs = rng.sample(og.encoded, n) if len(og) > n else list(og.encoded)
    tr_seqs = rng.sample(tr.encoded, n) if len(tr) > n else list(tr.encoded)
    examples = [(s, 0.0) for s in og_seqs] + [(s, 1.0) for s in tr_seqs]
    vocab_size = max(max(s) for s, _ in examples if s) + 1
    cfg = model_cfg or ModelConfig(layers=1, heads=2, dim=32, ff_dim=64,
                                   max_len=64, dropout=0.1, seed=seed)
    torch.manual_seed(seed)
    clf = TransformerStyleClassifier(cfg, vocab_size)
    opt = torch.optim.Adam(clf.parameters(), lr=learning_rate)
    loss_fn = nn.BCEWithLogitsLoss()
    clf.train()
    order: list[int] = []
    cap = cfg.max_len
    for _ in range(steps):
        while len(order) < batch_size:
            refill = list(range(len(examples)))
            rng.shuffle(refill)
            order.extend(refill)
        batch = [examples[order.pop()] for _ in range(batch_size)]
        ids = pad_batch([s[:cap] for s, _ in batch])
        labels = torch.tensor([y for _, y in batch])
        opt.zero_grad()
        loss_fn(clf.logits(ids), labels).backward()
        opt.step()
    clf.eval()
    return clf


# ---------------------------------------------------------------------------
# perplexity
# ---------------------------------------------------------------------------


def perplexity(lm: DecoderLm, encoded: list[list[int]], batch_size: int = 64) -> float:
    """Corpus perplexity: exp of the token-weighted mean negative log
    likelihood, teacher-forced, with the end-of-sentence token included."""
    if not encoded:
        raise DataError("cannot compute perplexity of an empty corpus")
    cap = lm.cfg.max_len - 1
    was_training = lm.training
    lm.eval()
    total_nll, total_tokens = 0.0, 0
    try:
        with torch.no_grad():
            for start in range(0, len(encoded), batch_size):
                chunk = [seq[:cap] + [EOS_ID] for seq in encoded[start:start + batch_size]]
                ids = pad_batch(chunk)
                logprobs = lm_token_logprobs(lm, ids).to(torch.float64)
                mask = (ids != PAD_ID).to(torch.float64)
                # float64 accumulation keeps the result order-invariant
                total_nll += float(-(logprobs * mask).sum().item())
                total_tokens += int(mask.sum().item())
    finally:
        lm.train(was_training)
    return math.exp(total_nll / total_tokens)


# ---------------------------------------------------------------------------
# lexical statistics
# ---------------------------------------------------------------------------


def _all_tokens(texts: list[str]) -> list[str]:
    return [tok for text in texts for tok in text.lower().split()]


def ttr(texts: list[str]) -> float:
    """Type-token ratio over the concatenated corpus, lowercased."""
    tokens = _all_tokens(texts)
    if not tokens:
        raise DataError("type-token ratio of zero tokens")
    return len(set(tokens)) / len(tokens)


def lexical_density(texts: list[str], function_words) -> float:
    """Share of tokens outside the closed-class function-word list."""
    tokens = _all_tokens(texts)
    if not tokens:
        raise DataError("lexical density of zero tokens")
    fw = set(function_words)
    content = sum(1 for t in tokens if t not in fw)
    return content / len(tokens)


def load_function_words() -> frozenset[str]:
    text = (
        importlib.resources.files("ogstyle")
        .joinpath("data/function_words.txt")
        .read_text(encoding="utf-8")
    )
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


# ---------------------------------------------------------------------------
# content preservation
# ---------------------------------------------------------------------------


def _normalize_ws(text: str) -> str:
    return " ".join(text.split())


def count_identical(inputs: list[str], outputs: list[str]) -> int:
    """Outputs that equal their inputs, after whitespace normalization."""
    if len(inputs) != len(outputs):
        raise DataError("inputs and outputs must be aligned")
    return sum(1 for a, b in zip(inputs, outputs) if _normalize_ws(a) == _normalize_ws(b))


def encoder_token_states(
    model: TransformerEncDec, seqs: list[list[int]], batch_size: int = 128
) -> list[np.ndarray]:
    """Contextual encoder states at each content position, per sentence."""
    was_training = model.training
    model.eval()
    out: list[np.ndarray] = []
    cap = model.cfg.max_len - 1
    try:
        with torch.no_grad():
            for start in range(0, len(seqs), batch_size):
                chunk = [s[:cap] for s in seqs[start:start + batch_size]]
                ids = pad_batch([s + [EOS_ID] for s in chunk])
                states = model.encode(ids).numpy()
                for i, s in enumerate(chunk):
                    out.append(states[i, : len(s)].astype(np.float64))
    finally:
        model.train(was_training)
    return out


def greedy_match_f1_pair(a_states: np.ndarray, b_states: np.ndarray) -> float:
    """Greedy maximal-cosine matching F1 between two token-state matrices.

    Zero when either side is empty; clamped into [0, 1].
    """
    if a_states.size == 0 or b_states.size == 0:
        return 0.0

    def unit(x):
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return x / norms

    sims = unit(a_states) @ unit(b_states).T
    recall = float(sims.max(axis=1).mean())      # each input token's best match
    precision = float(sims.max(axis=0).mean())   # each output token's best match
    if precision + recall <= 0:
        return 0.0
    f1 = 2 * precision * recall / (precision + recall)
    return min(max(f1, 0.0), 1.0)


def greedy_match_f1_pairs(
    ref_model: TransformerEncDec,
    inputs: list[list[int]],
    outputs: list[list[int]],
    batch_size: int = 128,
) -> float:
    """Mean pairwise greedy-match F1 under the frozen reference encoder."""
    if len(inputs) != len(outputs):
        raise DataError("inputs and outputs must be aligned")
    in_states = encoder_token_states(ref_model, inputs, batch_size)
    out_states = encoder_token_states(ref_model, outputs, batch_size)
    scores = [greedy_match_f1_pair(a, b) for a, b in zip(in_states, out_states)]
    return float(np.mean(scores))


def content_f1(
    frozen_ref_encoder: TransformerEncDec,
    inputs: list[list[int]],
    outputs: list[list[int]],
) -> float:
    """Content-preservation score between aligned encoded inputs and outputs."""
    return greedy_match_f1_pairs(frozen_ref_encoder, inputs, outputs)


# ---------------------------------------------------------------------------
# report assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    """One table row for one system variant."""

    setup: str
    acc_full: float
    acc_half: float
    og_like_count: int
    content_f1: float
    ppl_og: float
    ttr: float
    ld: float
    n_identical: int

    def __post_init__(self):
        if not (0.0 <= self.acc_full <= 100.0 and 0.0 <= self.acc_half <= 100.0):
            raise DataError("accuracies must lie in [0, 100]")
        if not (0.0 <= self.ttr <= 1.0 and 0.0 <= self.ld <= 1.0
                and 0.0 <= self.content_f1 <= 1.0):
            raise DataError("ratio metrics must lie in [0, 1]")
        if self.og_like_count < 0 or self.n_identical < 0:
            raise DataError("counts must be non-negative")

    def as_dict(self) -> dict:
        return {
            "setup": self.setup,
            "acc_full": self.acc_full,
            "acc_half": self.acc_half,
            "og_like_count": self.og_like_count,
            "content_f1": self.content_f1,
            "ppl_og": self.ppl_og,
            "ttr": self.ttr,
            "ld": self.ld,
            "n_identical": self.n_identical,
        }


def build_report(rows: list[EvalReport]) -> dict:
    """Assemble and schema-validate the multi-variant report."""
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "rows": [r.as_dict() for r in rows],
    }
    jsonschema.validate(report, REPORT_SCHEMA)
    return report


def report_tsv(report: dict) -> str:
    lines = ["\t".join(TSV_COLUMNS)]
    for row in report["rows"]:
        lines.append("\t".join([
            row["setup"],
            f"{row['acc_full']:.2f}",
            f"{row['acc_half']:.2f}",
            str(row["og_like_count"]),
            f"{row['content_f1']:.4f}",
            f"{row['ppl_og']:.2f}",
            f"{row['ttr']:.4f}",
            f"{row['ld']:.4f}",
            str(row["n_identical"]),
        ]))
    return "\n".join(lines) + "\n"


def write_report(report: dict, json_path: str | Path, tsv_path: str | Path) -> None:
    jsonschema.validate(report, REPORT_SCHEMA)
    Path(json_path).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    Path(tsv_path).write_text(report_tsv(report), encoding="utf-8")


def load_report(json_path: str | Path) -> dict:
    report = json.loads(Path(json_path).read_text(encoding="utf-8"))
    jsonschema.validate(report, REPORT_SCHEMA)
    return report
