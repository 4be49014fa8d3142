"""
Deterministic synthetic parallel corpora for desk-scale experiments

Source sentences alternate runs of function words (non-eligible POS) with
technical terms made of noun morphemes. The target side maps every function
word f<i> to F<i> and every term to its own idiosyncratic translation, in
monotone order, so each target is derivable from its source through the
lexicon. Part of the term inventory can be held out of training data.
"""

import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from TermNMT.corpus.corpus import Morpheme, ParallelPair, TaggedSentence
from TermNMT.logger.logging_config import get_logger
from TermNMT.smt.smt_bridge import NBestEntry
from TermNMT.terms.term_align import FIELD_SEPARATOR, PhraseTable

logger = get_logger("TermNMT.Synthetic")

FUNCTION_POS = ("particle", "verb", "adverb", "adjective")
TERM_POS = "noun"


@dataclass(frozen=True)
class SyntheticGrammar:
    """Shape of the generated language; the lexicon depends only on these fields"""

    num_function_words: int = 60
    num_morphemes: int = 90
    num_terms: int = 100
    max_term_len: int = 3
    single_morpheme_fraction: float = 0.2
    min_terms_per_sentence: int = 0
    max_terms_per_sentence: int = 3
    max_function_run: int = 3
    held_out_fraction: float = 0.0
    held_out_rate: float = 0.5
    compositional_prob: float = 0.25
    lexicon_seed: int = 0

    def __post_init__(self):
        if self.num_function_words < 1 or self.num_morphemes < 2 or self.num_terms < 1:
            raise ValueError("Grammar needs function words, at least two morphemes and one term")
        if not 1 <= self.max_term_len:
            raise ValueError(f"max_term_len must be >= 1, got {self.max_term_len}")
        if not 0 <= self.min_terms_per_sentence <= self.max_terms_per_sentence:
            raise ValueError("Need 0 <= min_terms_per_sentence <= max_terms_per_sentence")
        if self.max_function_run < 1:
            raise ValueError(f"max_function_run must be >= 1, got {self.max_function_run}")
        for name in ("single_morpheme_fraction", "held_out_fraction", "held_out_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if not 0.0 < self.compositional_prob < 1.0:
            raise ValueError(f"compositional_prob must be in (0, 1), got {self.compositional_prob}")

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticGrammar":
        return cls(**data)


@dataclass(frozen=True)
class TermEntry:
    source: Tuple[str, ...]
    target: Tuple[str, ...]
    held_out: bool = False

    @property
    def phrase(self) -> str:
        return " ".join(self.source)


@dataclass
class SyntheticLexicon:
    """Function word map, term inventory and morpheme glosses of one grammar"""

    function_words: Dict[str, Tuple[str, str]]  # source -> (pos, target)
    terms: List[TermEntry]
    morpheme_glosses: Dict[str, str]
    compositional_prob: float = 0.25
    _by_source: Dict[Tuple[str, ...], TermEntry] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        self._by_source = {term.source: term for term in self.terms}

    def term(self, morphemes: Sequence[str]) -> Optional[TermEntry]:
        return self._by_source.get(tuple(morphemes))

    def seen_terms(self) -> List[TermEntry]:
        return [t for t in self.terms if not t.held_out]

    def held_out_terms(self) -> List[TermEntry]:
        return [t for t in self.terms if t.held_out]

    def reference_translation(self, source: Sequence[str]) -> List[str]:
        """Apply the grammar map to source surfaces; term runs are looked up whole"""
        words: List[str] = []
        run: List[str] = []
        for surface in list(source) + [None]:
            if surface is not None and surface not in self.function_words:
                run.append(surface)
                continue
            if run:
                entry = self.term(run)
                if entry is None:
                    raise KeyError(f"Unknown term {' '.join(run)!r}")
                words.extend(entry.target)
                run = []
            if surface is not None:
                words.append(self.function_words[surface][1])
        return words

    def phrase_table(self) -> PhraseTable:
        """True term translations at 1.0 plus compositional and lexical distractors"""
        entries: Dict[str, Dict[str, float]] = {}
        for term in self.terms:
            entries.setdefault(term.phrase, {})[" ".join(term.target)] = 1.0
        for term in self.terms:
            if len(term.source) > 1:
                gloss = " ".join(self.morpheme_glosses[m] for m in term.source)
                entries[term.phrase].setdefault(gloss, self.compositional_prob)
        for morpheme, gloss in self.morpheme_glosses.items():
            entries.setdefault(morpheme, {}).setdefault(gloss, 1.0)
        names = sorted(self.function_words, key=lambda w: int(w[1:]))
        for k, word in enumerate(names):
            entries.setdefault(word, {})[self.function_words[word][1]] = 1.0
            other = self.function_words[names[(k + 1) % len(names)]][1]
            entries[word].setdefault(other, 0.05)
        return PhraseTable(entries)

    def to_text(self) -> str:
        """`source ||| target ||| seen|held_out` per term"""
        return "".join(
            FIELD_SEPARATOR.join([term.phrase, " ".join(term.target), "held_out" if term.held_out else "seen"]) + "\n"
            for term in self.terms
        )


def build_lexicon(grammar: SyntheticGrammar) -> SyntheticLexicon:
    """Draw the term inventory from grammar.lexicon_seed"""
    rng = random.Random(grammar.lexicon_seed)
    function_words = {
        f"f{i}": (FUNCTION_POS[i % len(FUNCTION_POS)], f"F{i}") for i in range(grammar.num_function_words)
    }
    morphemes = [f"n{k}" for k in range(grammar.num_morphemes)]
    rng.shuffle(morphemes)

    num_single = min(int(round(grammar.num_terms * grammar.single_morpheme_fraction)), grammar.num_morphemes - 2)
    if grammar.max_term_len == 1:
        num_single = min(grammar.num_terms, grammar.num_morphemes)
    single_pool = morphemes[:num_single]
    compound_pool = morphemes[num_single:]

    sources: List[Tuple[str, ...]] = [(m,) for m in single_pool]
    seen = set(sources)
    attempts = 0
    while len(sources) < grammar.num_terms and grammar.max_term_len > 1:
        attempts += 1
        if attempts > 100 * grammar.num_terms:
            raise ValueError("Grammar cannot produce the requested number of distinct terms")
        length = rng.randint(2, min(grammar.max_term_len, len(compound_pool)))
        candidate = tuple(rng.sample(compound_pool, length))
        if candidate not in seen:
            seen.add(candidate)
            sources.append(candidate)

    held_out = set(rng.sample(range(len(sources)), int(round(grammar.held_out_fraction * len(sources)))))
    terms = []
    for j, source in enumerate(sources):
        target_len = rng.randint(1, len(source))
        target = (f"t{j}",) + tuple(f"t{j}.{k}" for k in range(1, target_len))
        terms.append(TermEntry(source, target, j in held_out))

    single_glosses = {term.source[0]: term.target[0] for term in terms if len(term.source) == 1}
    glosses = {m: single_glosses.get(m, f"m{m[1:]}") for m in sorted(morphemes, key=lambda m: int(m[1:]))}
    return SyntheticLexicon(function_words, terms, glosses, grammar.compositional_prob)


def _generate_pair(rng: random.Random, grammar: SyntheticGrammar, lexicon: SyntheticLexicon, pools) -> ParallelPair:
    seen_pool, held_pool = pools
    function_names = list(lexicon.function_words)
    source: List[Morpheme] = []
    target: List[Morpheme] = []
    links = set()

    def function_run():
        for _ in range(rng.randint(1, grammar.max_function_run)):
            word = rng.choice(function_names)
            pos, translation = lexicon.function_words[word]
            links.add((len(source), len(target)))
            source.append(Morpheme(word, pos))
            target.append(Morpheme(translation, pos))

    function_run()
    for _ in range(rng.randint(grammar.min_terms_per_sentence, grammar.max_terms_per_sentence)):
        use_held = held_pool and (not seen_pool or rng.random() < grammar.held_out_rate)
        term = rng.choice(held_pool if use_held else seen_pool)
        source_start, target_start = len(source), len(target)
        n_src, n_tgt = len(term.source), len(term.target)
        for k, morpheme in enumerate(term.source):
            links.add((source_start + k, target_start + k * n_tgt // n_src))
        source.extend(Morpheme(m, TERM_POS) for m in term.source)
        target.extend(Morpheme(w, TERM_POS) for w in term.target)
        function_run()
    return ParallelPair(TaggedSentence(tuple(source)), TaggedSentence(tuple(target)), frozenset(links))


def generate_synthetic_corpus(
    seed: int, n_pairs: int, grammar: SyntheticGrammar = SyntheticGrammar(), include_held_out: bool = False
) -> Tuple[List[ParallelPair], PhraseTable, SyntheticLexicon]:
    """
    Generate a parallel corpus with planted technical terms

    Args:
        seed: Sentence seed; the lexicon comes from grammar.lexicon_seed
        n_pairs: Number of pairs
        grammar: Language shape
        include_held_out: Let term slots draw held-out terms (test data)

    Returns:
        Tuple of (pairs, phrase table, lexicon)

    Raises:
        ValueError: Negative n_pairs
    """
    if n_pairs < 0:
        raise ValueError(f"n_pairs must be >= 0, got {n_pairs}")
    lexicon = build_lexicon(grammar)
    seen_pool = lexicon.seen_terms()
    held_pool = lexicon.held_out_terms() if include_held_out else []
    if not seen_pool and not held_pool and grammar.max_terms_per_sentence > 0:
        raise ValueError("Every term is held out; no term is available for training data")
    rng = random.Random(seed)
    pairs = [_generate_pair(rng, grammar, lexicon, (seen_pool, held_pool)) for _ in range(n_pairs)]
    logger.info(
        f"Generated {n_pairs} synthetic pairs (seed {seed}, {len(lexicon.terms)} terms, "
        f"{len(lexicon.held_out_terms())} held out, held-out slots {'on' if include_held_out else 'off'})"
    )
    return pairs, lexicon.phrase_table(), lexicon


def make_nbest_fixture(
    pairs: Sequence[ParallelPair], lexicon: SyntheticLexicon, size: int, seed: int
) -> List[NBestEntry]:
    """
    SMT-style n-best lists for the source sides of `pairs`

    The correct translation is one candidate among corrupted variants
    (compositional term glosses, substituted or dropped function words);
    SMT scores are random, so the correct candidate is not always first.
    """
    rng = random.Random(seed)
    function_targets = sorted({t for _, t in lexicon.function_words.values()})
    entries: List[NBestEntry] = []
    for index, pair in enumerate(pairs):
        reference = tuple(pair.target.surfaces)
        candidates = [reference]
        attempts = 0
        while len(candidates) < size and attempts < 20 * size:
            attempts += 1
            variant = _corrupt(rng, pair, lexicon, function_targets)
            if variant and variant not in candidates:
                candidates.append(variant)
        scores = sorted((-rng.uniform(1.0, 20.0) for _ in candidates), reverse=True)
        rng.shuffle(candidates)
        for tokens, total in zip(candidates, scores):
            lm = round(total * 0.6, 4)
            tm = round(total - lm, 4)
            entries.append(NBestEntry(index, tokens, (lm, tm), round(lm + tm, 4), ("LM0=", "TM0=")))
    return entries


def _corrupt(rng: random.Random, pair: ParallelPair, lexicon: SyntheticLexicon, function_targets) -> Tuple[str, ...]:
    words = list(pair.target.surfaces)
    choice = rng.randrange(3)
    if choice == 0:
        # gloss one term morpheme by morpheme
        source = pair.source.surfaces
        runs, run = [], []
        for surface in source + [None]:
            if surface is not None and surface not in lexicon.function_words:
                run.append(surface)
            elif run:
                runs.append(tuple(run))
                run = []
        multi = [r for r in runs if len(r) > 1]
        if multi:
            term = lexicon.term(rng.choice(multi))
            gloss = [lexicon.morpheme_glosses[m] for m in term.source]
            n = len(term.target)
            for start in range(len(words) - n + 1):
                if tuple(words[start : start + n]) == term.target:
                    words[start : start + n] = gloss
                    break
            return tuple(words)
    if choice == 1 and len(words) > 1:
        del words[rng.randrange(len(words))]
        return tuple(words)
    position = rng.randrange(len(words))
    words[position] = rng.choice(function_targets)
    return tuple(words)
