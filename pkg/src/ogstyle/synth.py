"""Synthetic paired corpora with a known alignment and a deterministic
"translated-style" transform.

The transform mimics the documented traits of translated text: a handful of
source words are swapped for marked synonyms, connectives are substituted,
and filler connectives are sprinkled in.  Fillers are closed-class words, so
the transformed side shows lower type-token ratio and lower lexical density
than the original side, and the markers give a style classifier real signal.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import (
    PROVENANCE_MTR,
    PROVENANCE_SYNTHETIC,
    STYLE_OG,
    STYLE_TR,
    StyledCorpus,
)
from .errors import DataError

DEFAULT_FILLERS = ("indeed", "moreover", "certainly", "naturally", "evidently")


@dataclass(frozen=True)
class StyleTransform:
    """Deterministic word-level rewrite applied to original sentences.

    Both tables must be injective and value-disjoint so the transform can be
    inverted exactly (fillers aside).
    """

    swap_table: dict[str, str] = field(default_factory=dict)
    filler_prob: float = 0.0
    connective_table: dict[str, str] = field(default_factory=dict)
    seed: int = 0
    fillers: tuple[str, ...] = DEFAULT_FILLERS

    def __post_init__(self):
        if not (0.0 <= self.filler_prob <= 1.0):
            raise DataError(f"filler_prob out of range: {self.filler_prob}")
        values = list(self.swap_table.values()) + list(self.connective_table.values())
        if len(set(values)) != len(values):
            raise DataError("swap/connective tables must be injective for invertibility")
        sources = set(self.swap_table) | set(self.connective_table)
        if sources & set(values):
            raise DataError("swap/connective values must not collide with sources")

    def inverse_tables(self) -> dict[str, str]:
        inverse = {v: k for k, v in self.swap_table.items()}
        inverse.update({v: k for k, v in self.connective_table.items()})
        return inverse


def apply_transform(transform: StyleTransform, sentence: str, rng: random.Random) -> str:
    """Swap marked words and insert fillers; rng drives filler placement only."""
    out: list[str] = []
    for token in sentence.split():
        if transform.filler_prob > 0 and rng.random() < transform.filler_prob:
            out.append(rng.choice(transform.fillers))
        if token in transform.swap_table:
            out.append(transform.swap_table[token])
        elif token in transform.connective_table:
            out.append(transform.connective_table[token])
        else:
            out.append(token)
    return " ".join(out)


def invert_transform(transform: StyleTransform, sentence: str) -> str:
    """Undo swaps and drop fillers; exact inverse when filler_prob was 0."""
    inverse = transform.inverse_tables()
    fillers = set(transform.fillers)
    out = [inverse.get(tok, tok) for tok in sentence.split() if tok not in fillers]
    return " ".join(out)


@dataclass
class OracleAlignment:
    """Ground-truth map from index in the TR corpus to its OG source index."""

    tr_to_og: dict[int, int]

    def __len__(self) -> int:
        return len(self.tr_to_og)

    def save(self, path: str | Path) -> None:
        lines = [f"{t} {o}" for t, o in sorted(self.tr_to_og.items())]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "OracleAlignment":
        mapping = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                t, o = line.split()
                mapping[int(t)] = int(o)
        return cls(tr_to_og=mapping)


# ---------------------------------------------------------------------------
# template grammar
# ---------------------------------------------------------------------------

NOUNS = [
    "engineer", "farmer", "teacher", "doctor", "student", "gardener", "painter",
    "writer", "sailor", "merchant", "baker", "tailor", "hunter", "miner",
    "driver", "singer", "dancer", "judge", "lawyer", "guard", "river",
    "mountain", "valley", "forest", "meadow", "harbor", "bridge", "tower",
    "castle", "village", "market", "garden", "library", "museum", "factory",
    "station", "orchard", "island", "desert", "canyon", "letter", "report",
    "ledger", "contract", "map", "journal", "poem", "recipe", "machine",
    "engine", "wagon", "vessel", "lantern", "compass", "barrel", "basket",
    "hammer", "needle", "mirror", "clock",
]

VERBS = [
    "examines", "repairs", "describes", "observes", "carries", "delivers",
    "paints", "measures", "collects", "arranges", "inspects", "records",
    "designs", "builds", "cleans", "borrows", "returns", "studies",
    "protects", "admires", "praises", "purchases", "sells", "transports",
    "assembles", "polishes", "sketches", "weighs", "stores", "restores",
]

ADJECTIVES = [
    "old", "new", "good", "large", "small", "bright", "dark", "heavy",
    "light", "narrow", "wide", "quiet", "noisy", "clean", "dusty", "modern",
    "ancient", "simple", "complex", "sturdy", "fragile", "distant", "nearby",
    "famous", "humble", "wooden", "iron", "spacious", "crowded", "elegant",
]

ADVERBS = [
    "carefully", "quickly", "slowly", "often", "rarely", "eagerly", "calmly",
    "precisely", "roughly", "gladly", "reluctantly", "thoroughly",
]

CONNECTIVES = ["because", "while", "although", "when", "since", "if"]

TEMPLATES = [
    ("the", "ADJ", "NOUN", "VERB", "the", "NOUN", "."),
    ("the", "NOUN", "VERB", "the", "ADJ", "NOUN", "ADV", "."),
    ("the", "ADJ", "NOUN", "VERB", "the", "ADJ", "NOUN", "."),
    ("the", "NOUN", "near", "the", "NOUN", "VERB", "the", "NOUN", "."),
    ("the", "NOUN", "VERB", "the", "NOUN", "and", "the", "NOUN", "ADV", "."),
]

ADJUNCT = ("CONN", "the", "NOUN", "VERB", "the", "NOUN")


@dataclass(frozen=True)
class Grammar:
    """Word pools and templates for the sentence sampler."""

    nouns: tuple[str, ...]
    verbs: tuple[str, ...]
    adjectives: tuple[str, ...]
    adverbs: tuple[str, ...]
    connectives: tuple[str, ...]
    templates: tuple[tuple[str, ...], ...]
    adjunct_prob: float = 0.5

    def __post_init__(self):
        if not self.templates:
            raise DataError("degenerate grammar: no templates")
        if not (self.nouns and self.verbs and self.adjectives and self.adverbs):
            raise DataError("degenerate grammar: an open-class pool is empty")


def default_grammar(
    n_nouns: int = 60,
    n_verbs: int = 30,
    n_adjectives: int = 30,
    n_adverbs: int = 12,
) -> Grammar:
    return Grammar(
        nouns=tuple(NOUNS[:n_nouns]),
        verbs=tuple(VERBS[:n_verbs]),
        adjectives=tuple(ADJECTIVES[:n_adjectives]),
        adverbs=tuple(ADVERBS[:n_adverbs]),
        connectives=tuple(CONNECTIVES),
        templates=tuple(TEMPLATES),
    )


def default_style_transform(filler_prob: float = 0.15, seed: int = 0) -> StyleTransform:
    """Marker transform whose swapped words never occur in the grammar."""
    swaps = {
        "old": "antiquated", "new": "novel", "good": "advantageous",
        "large": "considerable", "small": "diminutive", "bright": "luminous",
        "dark": "sombre", "heavy": "ponderous", "quiet": "tranquil",
        "clean": "immaculate", "famous": "renowned", "simple": "elementary",
        "examines": "scrutinizes", "repairs": "rehabilitates",
        "observes": "surveys", "carries": "conveys", "delivers": "dispatches",
        "collects": "accumulates", "builds": "constructs",
        "studies": "peruses", "purchases": "procures", "cleans": "scours",
    }
    connectives = {
        "because": "whereas", "while": "whilst", "although": "notwithstanding",
        "when": "whenever", "since": "seeing", "and": "furthermore",
    }
    return StyleTransform(
        swap_table=swaps,
        filler_prob=filler_prob,
        connective_table=connectives,
        seed=seed,
    )


def _sample_sentence(grammar: Grammar, rng: random.Random) -> str:
    slots = {
        "NOUN": grammar.nouns,
        "VERB": grammar.verbs,
        "ADJ": grammar.adjectives,
        "ADV": grammar.adverbs,
        "CONN": grammar.connectives,
    }
    template = list(rng.choice(grammar.templates))
    if rng.random() < grammar.adjunct_prob:
        template = template[:-1] + list(ADJUNCT) + [template[-1]]
    words = [rng.choice(slots[t]) if t in slots else t for t in template]
    return " ".join(words)


def sample_sentences(grammar: Grammar, n: int, seed: int = 0) -> list[str]:
    """Draw n unique sentences from the template grammar."""
    if n <= 0:
        raise DataError("sentence count must be positive")
    rng = random.Random(seed)
    sentences: list[str] = []
    seen: set[str] = set()
    attempts = 0
    while len(sentences) < n:
        s = _sample_sentence(grammar, rng)
        attempts += 1
        if s not in seen:
            seen.add(s)
            sentences.append(s)
        if attempts > 200 * n:
            raise DataError(
                f"grammar too small to produce {n} unique sentences (got {len(sentences)})"
            )
    return sentences


def transform_subset(
    sentences: list[str],
    n_tr: int,
    transform: StyleTransform,
    seed: int = 0,
) -> tuple[StyledCorpus, OracleAlignment]:
    """Transform a sampled subset of the sentences into a shuffled TR corpus."""
    if n_tr <= 0:
        raise DataError("n_tr must be positive")
    rng = random.Random(seed)
    n_og = len(sentences)
    if n_tr <= n_og:
        sources = rng.sample(range(n_og), n_tr)
    else:
        sources = rng.choices(range(n_og), k=n_tr)
    transform_rng = random.Random(transform.seed)
    pairs = [(apply_transform(transform, sentences[i], transform_rng), i) for i in sources]
    rng.shuffle(pairs)
    tr = StyledCorpus(
        sentences=[p[0] for p in pairs],
        style=STYLE_TR,
        provenance=PROVENANCE_SYNTHETIC,
    )
    alignment = OracleAlignment(tr_to_og={t: p[1] for t, p in enumerate(pairs)})
    return tr, alignment


def gen_synthetic(
    grammar: Grammar,
    n_og: int,
    n_tr: int,
    transform: StyleTransform,
    seed: int = 0,
) -> tuple[StyledCorpus, StyledCorpus, OracleAlignment]:
    """Sample unique OG sentences, transform a subset into the TR corpus.

    TR order is shuffled so the corpora are comparable but not aligned; the
    returned alignment maps TR index -> originating OG index.
    """
    if n_og <= 0 or n_tr <= 0:
        raise DataError("n_og and n_tr must be positive")
    sentences = sample_sentences(grammar, n_og, seed)
    og = StyledCorpus(sentences=sentences, style=STYLE_OG, provenance=PROVENANCE_SYNTHETIC)
    tr, alignment = transform_subset(sentences, n_tr, transform, seed=seed + 1)
    return og, tr, alignment


def gen_mtr(
    og: StyledCorpus,
    transform: StyleTransform,
    noise: float,
    seed: int | None = None,
) -> StyledCorpus:
    """Surrogate for round-trip machine translation of the originals.

    Applies the style transform, then replaces each token with probability
    `noise` by a different word drawn from the corpus word pool.  Output is
    aligned 1:1 with `og`, order preserved.
    """
    if not (0.0 <= noise <= 1.0):
        raise DataError(f"noise out of range: {noise}")
    rng = random.Random(transform.seed if seed is None else seed)
    pool = sorted({w for s in og.sentences for w in s.split()})
    out: list[str] = []
    for sentence in og.sentences:
        transformed = apply_transform(transform, sentence, rng)
        tokens = transformed.split()
        for i, tok in enumerate(tokens):
            if rng.random() < noise:
                substitute = rng.choice(pool)
                while substitute == tok and len(pool) > 1:
                    substitute = rng.choice(pool)
                tokens[i] = substitute
        out.append(" ".join(tokens))
    return StyledCorpus(sentences=out, style=STYLE_TR, provenance=PROVENANCE_MTR)
