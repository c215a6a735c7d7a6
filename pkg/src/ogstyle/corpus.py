"""Corpus ingestion, byte-pair encoding, and noising for denoising pretraining.

Text is pre-split on whitespace, then each word is segmented by a learned
byte-pair-encoding merge list.  The vocabulary lays out the five special
tokens at fixed ids 0..4 so every other module can refer to them without
threading a vocabulary object around.
"""

from __future__ import annotations

import hashlib
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError

WORD_END = "</w>"

PAD_TOKEN = "<pad>"
BOS_TOKEN = "<s>"
EOS_TOKEN = "</s>"
UNK_TOKEN = "<unk>"
MASK_TOKEN = "<mask>"

SPECIAL_TOKENS = (PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN, MASK_TOKEN)

PAD_ID = 0
BOS_ID = 1
EOS_ID = 2
UNK_ID = 3
MASK_ID = 4

STYLE_OG = "OG"
STYLE_TR = "TR"

PROVENANCE_NATURAL = "natural"
PROVENANCE_SYNTHETIC = "synthetic"
PROVENANCE_MTR = "mtr-surrogate"


class Vocabulary:
    """Bijective token <-> id map with the special tokens at ids 0..4."""

    def __init__(self, tokens: list[str]):
        for special in SPECIAL_TOKENS:
            if special in tokens:
                raise DataError(f"special token {special!r} may not appear in the token list")
        self.id_to_token: list[str] = list(SPECIAL_TOKENS) + list(tokens)
        self.token_to_id: dict[str, int] = {t: i for i, t in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise DataError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.id_to_token)

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def token(self, token_id: int) -> str:
        return self.id_to_token[token_id]

    def hash_hex(self) -> str:
        """Content hash used to bind checkpoints to the vocabulary they saw."""
        digest = hashlib.sha256("\n".join(self.id_to_token).encode("utf-8"))
        return digest.hexdigest()

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.id_to_token) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if lines[: len(SPECIAL_TOKENS)] != list(SPECIAL_TOKENS):
            raise DataError(f"vocabulary file {path} does not start with the special tokens")
        return cls(lines[len(SPECIAL_TOKENS):])


@dataclass
class StyledCorpus:
    """A mono-stylistic list of sentences, optionally with encoded token ids."""

    sentences: list[str]
    style: str
    provenance: str = PROVENANCE_NATURAL
    encoded: list[list[int]] | None = None

    def __post_init__(self):
        if self.style not in (STYLE_OG, STYLE_TR):
            raise DataError(f"unknown style {self.style!r}")

    def __len__(self) -> int:
        return len(self.sentences)


def load_corpus(path: str | Path, style: str) -> StyledCorpus:
    """Read a UTF-8, one-sentence-per-line file into a deduplicated corpus.

    Order of first occurrence is preserved; blank lines are dropped.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    try:
        raw = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"corpus file is not valid UTF-8: {path}") from exc
    sentences = dedupe([line.strip() for line in raw.splitlines() if line.strip()])
    if not sentences:
        raise DataError(f"empty corpus: {path}")
    return StyledCorpus(sentences=sentences, style=style)


def dedupe(sentences: list[str]) -> list[str]:
    seen: set[str] = set()
    out: list[str] = []
    for s in sentences:
        if s not in seen:
            seen.add(s)
            out.append(s)
    return out


def save_corpus(corpus: StyledCorpus, path: str | Path) -> None:
    Path(path).write_text("\n".join(corpus.sentences) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# byte-pair encoding
# ---------------------------------------------------------------------------


@dataclass
class BpeModel:
    """Ordered list of symbol-pair merges; list order is learning order."""

    merges: tuple[tuple[str, str], ...]
    _ranks: dict = field(init=False, repr=False, compare=False)
    _segment_cache: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.merges = tuple(tuple(m) for m in self.merges)
        self._ranks = {pair: i for i, pair in enumerate(self.merges)}
        self._segment_cache = {}

    @property
    def merge_count(self) -> int:
        return len(self.merges)

    def save(self, path: str | Path) -> None:
        lines = [f"{a} {b}" for a, b in self.merges]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "BpeModel":
        merges = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            a, b = line.split(" ")
            merges.append((a, b))
        return cls(merges=tuple(merges))


def _word_symbols(word: str) -> tuple[str, ...]:
    chars = list(word)
    chars[-1] = chars[-1] + WORD_END
    return tuple(chars)


def _merge_word(symbols: tuple[str, ...], pair: tuple[str, str]) -> tuple[str, ...]:
    merged = []
    i = 0
    while i < len(symbols):
        if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == pair:
            merged.append(symbols[i] + symbols[i + 1])
            i += 2
        else:
            merged.append(symbols[i])
            i += 1
    return tuple(merged)


def learn_bpe(corpora: list[StyledCorpus], merges: int) -> BpeModel:
    """Learn up to `merges` byte-pair merges over the whitespace-split words.

    At every step the most frequent adjacent symbol pair is merged; frequency
    ties break on the lexicographically smallest pair so learning is
    deterministic.
    """
    if merges < 0:
        raise DataError("merge count must be >= 0")
    if not corpora or all(len(c) == 0 for c in corpora):
        raise DataError("cannot learn BPE from empty corpora")
    word_freq: Counter[tuple[str, ...]] = Counter()
    for corpus in corpora:
        for sentence in corpus.sentences:
            for word in sentence.split():
                word_freq[_word_symbols(word)] += 1

    merge_list: list[tuple[str, str]] = []
    for _ in range(merges):
        pair_freq: Counter[tuple[str, str]] = Counter()
        for symbols, freq in word_freq.items():
            for a, b in zip(symbols, symbols[1:]):
                pair_freq[(a, b)] += freq
        if not pair_freq:
            break
        top = max(pair_freq.values())
        best = min(p for p, c in pair_freq.items() if c == top)
        merge_list.append(best)
        word_freq = Counter(
            {_merge_word(symbols, best): freq for symbols, freq in word_freq.items()}
        )
    return BpeModel(merges=tuple(merge_list))


def segment_word(bpe: BpeModel, word: str) -> tuple[str, ...]:
    """Apply the merge list to a single word, earliest-learned merge first."""
    cached = bpe._segment_cache.get(word)
    if cached is not None:
        return cached
    ranks = bpe._ranks
    symbols = _word_symbols(word)
    while len(symbols) > 1:
        candidates = [(ranks[p], p) for p in zip(symbols, symbols[1:]) if p in ranks]
        if not candidates:
            break
        _, pair = min(candidates)
        symbols = _merge_word(symbols, pair)
    bpe._segment_cache[word] = symbols
    return symbols


def build_vocab(corpora: list[StyledCorpus], bpe: BpeModel) -> Vocabulary:
    """Collect every BPE symbol the corpora produce, in sorted order."""
    symbols: set[str] = set()
    seen_words: set[str] = set()
    for corpus in corpora:
        for sentence in corpus.sentences:
            for word in sentence.split():
                if word not in seen_words:
                    seen_words.add(word)
                    symbols.update(segment_word(bpe, word))
    return Vocabulary(sorted(symbols))


def encode(vocab: Vocabulary, bpe: BpeModel, text: str) -> list[int]:
    """Whitespace-split, BPE-segment and map to ids; OOV symbols become unk."""
    ids: list[int] = []
    for word in text.split():
        for symbol in segment_word(bpe, word):
            ids.append(vocab.lookup(symbol))
    return ids


def decode(vocab: Vocabulary, ids: list[int]) -> str:
    """Inverse of encode on the vocabulary image, up to whitespace normalization.

    Special tokens other than unk are dropped; unk renders as its literal.
    """
    pieces: list[str] = []
    for i in ids:
        token = vocab.token(i)
        if i in (PAD_ID, BOS_ID, EOS_ID, MASK_ID):
            continue
        pieces.append(token)
    text = "".join(pieces).replace(WORD_END, " ")
    return text.strip()


def encode_corpus(corpus: StyledCorpus, vocab: Vocabulary, bpe: BpeModel) -> StyledCorpus:
    encoded = [encode(vocab, bpe, s) for s in corpus.sentences]
    return StyledCorpus(
        sentences=corpus.sentences,
        style=corpus.style,
        provenance=corpus.provenance,
        encoded=encoded,
    )


# ---------------------------------------------------------------------------
# noising for denoising-autoencoder pretraining
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseConfig:
    """Mask / delete / local-shuffle noise, fully determined by the seed.

    The default values stand in for the unstated upstream choices; override
    them freely via configuration.
    """

    mask_prob: float = 0.35
    delete_prob: float = 0.0
    window: int = 3
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.mask_prob <= 1.0):
            raise DataError(f"mask_prob out of range: {self.mask_prob}")
        if not (0.0 <= self.delete_prob <= 1.0):
            raise DataError(f"delete_prob out of range: {self.delete_prob}")
        if self.window < 0:
            raise DataError(f"window must be >= 0: {self.window}")


def make_noisy(seq: list[int], cfg: NoiseConfig) -> list[int]:
    """Apply deletion, masking, then window-limited local shuffling.

    Randomness protocol (fixed so traces can be replayed): for every input
    token one uniform draw decides deletion, then one decides masking for the
    kept token; afterwards, if window > 0, each surviving position i draws one
    uniform key in [0, window) and positions are stably sorted by i + key, so
    no token moves more than `window` places.
    """
    rng = random.Random(cfg.seed)
    kept: list[int] = []
    for token in seq:
        if rng.random() < cfg.delete_prob:
            continue
        if rng.random() < cfg.mask_prob:
            kept.append(MASK_ID)
        else:
            kept.append(token)
    if cfg.window > 0 and len(kept) > 1:
        keys = [i + rng.uniform(0, cfg.window) for i in range(len(kept))]
        order = sorted(range(len(kept)), key=lambda i: keys[i])
        kept = [kept[i] for i in order]
    return kept
