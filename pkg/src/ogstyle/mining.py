"""Online extraction of pseudo-parallel sentence pairs from comparable
mono-stylistic corpora.

Every sentence gets two representations: the sum of its word embeddings and
the sum of its encoder output states.  Candidates retrieved from the ANN
index are re-ranked with a ratio margin (similarity over the mean similarity
of each side's k nearest neighbors), and a pair is accepted either when it is
margin-top-ranked under both representation kinds, or - with the threshold
filter - when its encoder-kind margin exceeds the threshold.

The margin neighborhoods come from the original-side index on both ends
(candidate lists are forward-only, translated -> original), and the threshold
applies to the margin score, whose natural scale sits near 1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .annindex import VecIndex, build_index, search
from .corpus import EOS_ID, PAD_ID, StyledCorpus
from .errors import DataError
from .models import TransformerEncDec, pad_batch

logger = logging.getLogger(__name__)

KIND_WORD_SUM = "word-embedding-sum"
KIND_ENCODER_SUM = "encoder-output-sum"
KINDS = (KIND_WORD_SUM, KIND_ENCODER_SUM)

RULE_MUTUAL = "mutual-top-1"
RULE_THRESHOLD = "threshold"

MODE_NO_THRESHOLD = 1
MODE_WITH_THRESHOLD = 2


@dataclass(frozen=True)
class SpeConfig:
    k: int = 4                      # margin neighborhood size
    retrieval_depth: int = 8        # candidates scored per query
    threshold: float = 1.01
    mode: int = MODE_NO_THRESHOLD
    num_clusters: int = 16
    nprobe: int = 16

    def __post_init__(self):
        if self.k < 1:
            raise DataError("margin neighborhood k must be >= 1")
        if self.retrieval_depth < 1:
            raise DataError("retrieval_depth must be >= 1")
        if self.mode not in (MODE_NO_THRESHOLD, MODE_WITH_THRESHOLD):
            raise DataError(f"unknown SPE filter mode: {self.mode}")
        if self.mode == MODE_WITH_THRESHOLD and self.threshold <= 0:
            raise DataError("threshold must be positive in with-threshold mode")


@dataclass(frozen=True)
class SentenceRep:
    vector: np.ndarray
    kind: str
    sentence_id: int


@dataclass(frozen=True)
class AcceptedPair:
    tr_id: int
    og_id: int
    w_score: float
    e_score: float
    rule: str


def represent(model: TransformerEncDec, seq: list[int], kind: str) -> SentenceRep:
    """Unnormalized sum representation of one sentence, gradient-free."""
    vec = _represent_many(model, [seq], kind)[0]
    return SentenceRep(vector=vec, kind=kind, sentence_id=-1)


def _represent_many(model: TransformerEncDec, seqs: list[list[int]], kind: str,
                    batch_size: int = 128) -> np.ndarray:
    if kind not in KINDS:
        raise DataError(f"unknown representation kind: {kind}")
    for s in seqs:
        if not s:
            raise DataError("cannot represent an empty sentence")
    was_training = model.training
    model.eval()
    out = np.zeros((len(seqs), model.cfg.dim), dtype=np.float32)
    try:
        with torch.no_grad():
            if kind == KIND_WORD_SUM:
                weight = model.embed_src.weight
                for i, s in enumerate(seqs):
                    out[i] = weight[torch.tensor(s, dtype=torch.long)].sum(dim=0).numpy()
            else:
                cap = model.cfg.max_len - 1
                for start in range(0, len(seqs), batch_size):
                    chunk = seqs[start:start + batch_size]
                    ids = pad_batch([s[:cap] + [EOS_ID] for s in chunk])
                    mask = ids != PAD_ID
                    states = model.encode(ids)
                    summed = (states * mask.unsqueeze(-1).to(states.dtype)).sum(dim=1)
                    out[start:start + len(chunk)] = summed.numpy()
    finally:
        model.train(was_training)
    return out


def margin_score(sim_xy: float, nn_x: np.ndarray, nn_y: np.ndarray) -> float:
    """Ratio margin: similarity over the mean neighborhood similarity.

    Raises ZeroDivisionError on a zero denominator; callers skip such pairs.
    """
    nn_x = np.asarray(nn_x, dtype=np.float64)
    nn_y = np.asarray(nn_y, dtype=np.float64)
    if len(nn_x) < 1 or len(nn_y) < 1 or len(nn_x) != len(nn_y):
        raise DataError("neighbor lists must be non-empty and of equal length")
    k = len(nn_x)
    denom = nn_x.sum() / (2 * k) + nn_y.sum() / (2 * k)
    if denom == 0.0:
        raise ZeroDivisionError("zero mean neighborhood similarity")
    return float(sim_xy / denom)


@dataclass
class SpeIndexes:
    """Per-kind index plus normalized original-side vectors and a neighbor
    cosine cache, valid for one (parameters, corpus) snapshot."""

    indexes: dict[str, VecIndex]
    og_unit: dict[str, np.ndarray]
    nprobe: int
    k: int
    _nn_cache: dict = field(default_factory=dict)

    def og_vector(self, kind: str, og_id: int) -> np.ndarray:
        return self.og_unit[kind][og_id]

    def neighbor_cosines(self, kind: str, og_id: int) -> np.ndarray:
        """Cosines of og_id's k nearest original-side neighbors, self excluded.

        A single-sentence corpus has no other neighbors; the self cosine is
        used so the margin denominator stays defined.
        """
        key = (kind, og_id)
        cached = self._nn_cache.get(key)
        if cached is None:
            hits = search(self.indexes[kind], self.og_unit[kind][og_id],
                          k=self.k + 1, nprobe=self.nprobe)
            cos = [c for i, c in hits if i != og_id][: self.k]
            if not cos:
                cos = [c for _, c in hits[: self.k]]
            cached = np.asarray(cos, dtype=np.float64)
            self._nn_cache[key] = cached
        return cached


def _unit_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return x / norms


def build_spe_indexes(
    model: TransformerEncDec,
    og_corpus: StyledCorpus,
    cfg: SpeConfig,
    seed: int = 0,
) -> SpeIndexes:
    """Index the original corpus under the current parameters, one index per
    representation kind."""
    if og_corpus.encoded is None:
        raise DataError("original corpus must be encoded before indexing")
    if len(og_corpus) == 0:
        raise DataError("empty original corpus")
    num_clusters = min(cfg.num_clusters, len(og_corpus))
    indexes, og_unit = {}, {}
    for kind in KINDS:
        reps = _represent_many(model, og_corpus.encoded, kind)
        indexes[kind] = build_index(list(enumerate(reps)), num_clusters, seed=seed)
        og_unit[kind] = _unit_rows(reps)
    nprobe = min(cfg.nprobe, num_clusters)
    k_eff = min(cfg.k, max(len(og_corpus) - 1, 1))
    return SpeIndexes(indexes=indexes, og_unit=og_unit, nprobe=nprobe, k=k_eff)


def _rank_candidates(
    state: SpeIndexes, kind: str, query: np.ndarray, cfg: SpeConfig
) -> tuple[list[tuple[int, float]], np.ndarray]:
    """Margin-score the retrieved candidates; returns (scored, nn_x cosines).

    `scored` is sorted by descending margin with ties broken by ascending id.
    """
    depth = max(cfg.retrieval_depth, state.k)
    hits = search(state.indexes[kind], query, k=depth, nprobe=state.nprobe)
    nn_x = np.asarray([c for _, c in hits[: state.k]], dtype=np.float64)
    scored = []
    for og_id, cos in hits[: cfg.retrieval_depth]:
        try:
            m = margin_score(cos, nn_x, state.neighbor_cosines(kind, og_id))
        except ZeroDivisionError:
            logger.warning("skipping pair with zero margin denominator (og %d)", og_id)
            continue
        scored.append((og_id, m))
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored, nn_x


def _pair_margin(state: SpeIndexes, kind: str, query: np.ndarray,
                 nn_x: np.ndarray, og_id: int) -> float:
    sim = float(query @ state.og_vector(kind, og_id))
    return margin_score(sim, nn_x, state.neighbor_cosines(kind, og_id))


def extract_pairs(
    model: TransformerEncDec,
    tr_items: list[tuple[int, list[int]]],
    og_corpus: StyledCorpus,
    state: SpeIndexes,
    cfg: SpeConfig,
) -> list[AcceptedPair]:
    """Apply the two filtering criteria to a batch of translated sentences.

    tr_items holds (sentence id, encoded ids) pairs.  Returns accepted pairs
    with the margin scores seen at acceptance time, duplicates removed.
    """
    if len(og_corpus) == 0:
        raise DataError("empty original corpus")
    accepted: dict[tuple[int, int], AcceptedPair] = {}
    seqs = [ids for _, ids in tr_items]
    queries = {kind: _unit_rows(_represent_many(model, seqs, kind)) for kind in KINDS}
    for row, (tr_id, _) in enumerate(tr_items):
        ranked, nn_x = {}, {}
        for kind in KINDS:
            ranked[kind], nn_x[kind] = _rank_candidates(state, kind, queries[kind][row], cfg)
        if not ranked[KIND_WORD_SUM] or not ranked[KIND_ENCODER_SUM]:
            continue
        top_w, top_w_margin = ranked[KIND_WORD_SUM][0]
        top_e, top_e_margin = ranked[KIND_ENCODER_SUM][0]

        pair = None
        if top_w == top_e:
            pair = AcceptedPair(tr_id=tr_id, og_id=top_e, w_score=top_w_margin,
                                e_score=top_e_margin, rule=RULE_MUTUAL)
        elif cfg.mode == MODE_WITH_THRESHOLD and top_e_margin > cfg.threshold:
            try:
                w_of_pair = _pair_margin(state, KIND_WORD_SUM,
                                         queries[KIND_WORD_SUM][row],
                                         nn_x[KIND_WORD_SUM], top_e)
            except ZeroDivisionError:
                logger.warning("skipping pair with zero margin denominator (og %d)", top_e)
                continue
            pair = AcceptedPair(tr_id=tr_id, og_id=top_e, w_score=w_of_pair,
                                e_score=top_e_margin, rule=RULE_THRESHOLD)
        if pair is not None:
            accepted.setdefault((pair.tr_id, pair.og_id), pair)
    return list(accepted.values())


def write_pairs_tsv(path: str | Path, epoch: int, pairs: list[AcceptedPair],
                    append: bool = False) -> None:
    """Bookkeeping log of accepted pairs, one row per pair."""
    mode = "a" if append else "w"
    with open(path, mode, encoding="utf-8") as fh:
        if not append:
            fh.write("epoch\ttr_id\tog_id\tw_score\te_score\trule\n")
        for p in sorted(pairs, key=lambda p: (p.tr_id, p.og_id)):
            fh.write(f"{epoch}\t{p.tr_id}\t{p.og_id}\t{p.w_score:.6f}\t{p.e_score:.6f}\t{p.rule}\n")
