"""Synthetic multilingual, multi-style parallel corpus generator.

Three toy languages with disjoint surface lexicons (per-language
consonant inventories), different word orders (SVO / SOV / VSO) and
suffix agreement. Each concept sentence is realized in every language
and in two styles (formal / informal), which makes output-language
identity and style shifts mechanically checkable. An error injector
produces corrupted sentences with gold span edits for GEC evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import SentencePair
from .metrics import levenshtein_edits

STYLES = ("fm", "inf")  # formal (parliament-like), informal (subtitles-like)

VOWELS = ("a", "e", "i", "o", "u")
CONSONANTS = (
    ("p", "t", "k", "s", "m"),
    ("b", "d", "g", "z", "n"),
    ("f", "v", "r", "l", "h"),
)
WORD_ORDERS = ("SVO", "SOV", "VSO")
LANG_IDS = ("aa", "bb", "cc")

N_NOUNS = 20
N_VERBS = 12
N_ADVERBS = 6

ERROR_KINDS = ("spelling", "lex", "grammar", "order")


@dataclass(frozen=True)
class ConceptSentence:
    subject: int  # noun concept, ignored when addressee != "none"
    verb: int
    object: int
    subject_num: str  # "sg" | "pl"
    object_num: str
    adverb: int = None  # optional adverb concept
    addressee: str = "none"  # "none" | "informal-you" | "formal-you"


@dataclass
class ToyLanguage:
    id: str
    word_order: str
    consonants: tuple
    nouns: list = field(default_factory=list)
    verbs: list = field(default_factory=list)
    adverbs: list = field(default_factory=list)

    def __post_init__(self):
        if not self.nouns:
            self.nouns = [self._stem(i) for i in range(N_NOUNS)]
            self.verbs = [self._stem(100 + i) for i in range(N_VERBS)]
            self.adverbs = [self._stem(200 + i) for i in range(N_ADVERBS)]

    def _stem(self, concept):
        c = self.consonants
        v = VOWELS
        return (
            c[concept % 5]
            + v[(concept // 5) % 5]
            + c[(concept // 25) % 5]
            + v[(concept // 125) % 5]
        )

    # suffixes are language-specific so morphology differs across languages
    @property
    def plural_suffix(self):
        return "o" + self.consonants[0]

    @property
    def formal_verb_suffix(self):
        return "e" + self.consonants[4] + "e"

    @property
    def informal_verb_suffix(self):
        return "u"

    @property
    def informal_pronoun(self):
        return self.consonants[1] + "u"

    @property
    def formal_pronoun(self):
        return self.consonants[1] + "io"

    def noun(self, concept, number):
        stem = self.nouns[concept]
        return stem + (self.plural_suffix if number == "pl" else "")

    def verb(self, concept, style, number):
        stem = self.verbs[concept]
        suffix = self.informal_verb_suffix if style == "inf" else self.formal_verb_suffix
        agr = self.plural_suffix if number == "pl" else ""
        return stem + suffix + agr

    def alphabet(self):
        return set(self.consonants) | set(VOWELS)

    def surface_lexicon(self):
        """Every surface form the language can produce (closure over suffixes)."""
        forms = set()
        for i in range(N_NOUNS):
            forms.add(self.noun(i, "sg"))
            forms.add(self.noun(i, "pl"))
        for i in range(N_VERBS):
            for style in STYLES:
                for num in ("sg", "pl"):
                    forms.add(self.verb(i, style, num))
        forms.update(self.adverbs)
        forms.add(self.informal_pronoun)
        forms.add(self.formal_pronoun)
        return forms


def make_languages(n_langs=3):
    if n_langs not in (2, 3):
        raise ValueError(f"n_langs must be 2 or 3, got {n_langs}")
    return [
        ToyLanguage(LANG_IDS[k], WORD_ORDERS[k], CONSONANTS[k]) for k in range(n_langs)
    ]


def constituents(cs, lang, style):
    """Realize the sentence as ordered constituents (lists of tokens)."""
    if cs.addressee != "none":
        if style == "inf":
            subj = [lang.informal_pronoun]
            verb_num = "sg"
        else:
            subj = [lang.formal_pronoun]
            verb_num = "pl"  # T-V distinction: formal address takes plural agreement
    else:
        subj = [lang.noun(cs.subject, cs.subject_num)]
        verb_num = cs.subject_num
    verb = [lang.verb(cs.verb, style, verb_num)]
    obj = [lang.noun(cs.object, cs.object_num)]
    order = {"SVO": [subj, verb, obj], "SOV": [subj, obj, verb], "VSO": [verb, subj, obj]}
    parts = order[lang.word_order]
    if cs.adverb is not None:
        parts = parts + [[lang.adverbs[cs.adverb]]]
    return parts


def realize(cs, lang, style):
    """Deterministic surface string for a concept sentence."""
    if style not in STYLES:
        raise ValueError(f"unknown style {style!r}")
    tokens = [tok for part in constituents(cs, lang, style) for tok in part]
    punct = "!" if style == "inf" else "."
    return " ".join(tokens) + " " + punct


def sample_concept(rng):
    return ConceptSentence(
        subject=int(rng.integers(N_NOUNS)),
        verb=int(rng.integers(N_VERBS)),
        object=int(rng.integers(N_NOUNS)),
        subject_num="pl" if rng.random() < 0.4 else "sg",
        object_num="pl" if rng.random() < 0.4 else "sg",
        adverb=int(rng.integers(N_ADVERBS)) if rng.random() < 0.5 else None,
        addressee=rng.choice(["none", "none", "informal-you", "formal-you"]),
    )


def generate_corpus(n_langs, n, seed):
    """Emit SentencePairs for every language pair x style over n concepts.

    Deterministic in seed; each concept sentence is realized in all
    languages and both styles.
    """
    if n < 1:
        raise ValueError("need at least one sentence")
    langs = make_languages(n_langs)
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(n):
        cs = sample_concept(rng)
        for style in STYLES:
            surfaces = {lang.id: realize(cs, lang, style) for lang in langs}
            for i in range(len(langs)):
                for j in range(i + 1, len(langs)):
                    a, b = langs[i].id, langs[j].id
                    pairs.append(SentencePair(surfaces[a], surfaces[b], a, b, style))
    return pairs


def flip_style_markers(sentence, lang):
    """Swap every formality marker in a realized sentence (involution).

    Verb style suffixes, pronoun choice and final punctuation flip;
    agreement is left as-is, so the result is register-mixed rather than
    a clean realization of the other style.
    """
    flips = {".": "!", "!": ".",
             lang.formal_pronoun: lang.informal_pronoun,
             lang.informal_pronoun: lang.formal_pronoun}
    for c in range(N_VERBS):
        for num in ("sg", "pl"):
            flips[lang.verb(c, "fm", num)] = lang.verb(c, "inf", num)
            flips[lang.verb(c, "inf", num)] = lang.verb(c, "fm", num)
    return " ".join(flips.get(tok, tok) for tok in sentence.split(" "))


def add_source_noise(pairs, fraction, seed, kinds=("order", "grammar")):
    """Corrupt the source side of a random subset of pairs, targets untouched.

    Mimics the noise found in natural parallel corpora: word-order and
    agreement slips that leave the translation unchanged, and (with the
    "style" kind) register markers that the translation does not
    preserve — which is what gives the output-style factor its training
    signal. Apply after direction duplication so corrupted text never
    appears as a target.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    langs = {lang.id: lang for lang in make_languages(3)}
    rng = np.random.default_rng(seed)
    out = []
    for p in pairs:
        if rng.random() < fraction:
            kind = kinds[int(rng.integers(len(kinds)))]
            if kind == "style":
                bad = flip_style_markers(p.src, langs[p.src_lang])
                skipped = bad == p.src
            else:
                bad, _gold, skipped = inject_errors(
                    p.src, langs[p.src_lang], [kind], int(rng.integers(2**31))
                )
            if not skipped:
                p = SentencePair(bad, p.tgt, p.src_lang, p.tgt_lang, p.domain)
        out.append(p)
    return out


def _content_token_indices(tokens, lang):
    """Indices of noun/verb/adverb tokens (not pronouns, not punctuation)."""
    pronouns = {lang.informal_pronoun, lang.formal_pronoun}
    out = []
    for i, tok in enumerate(tokens):
        if tok in (".", "!") or tok in pronouns:
            continue
        out.append(i)
    return out


def inject_errors(sentence, lang, kinds, seed):
    """Corrupt a realized sentence; returns (corrupted string, gold EditSet, report).

    Gold edits are token-span edits over the corrupted sentence that
    restore the clean one. Kinds that cannot apply are skipped and
    listed in the report.
    """
    rng = np.random.default_rng(seed)
    clean_tokens = sentence.split(" ")
    tokens = list(clean_tokens)
    skipped = []
    for kind in kinds:
        if kind not in ERROR_KINDS:
            raise ValueError(f"unknown error kind {kind!r}")
        ok = _apply_error(tokens, lang, kind, rng)
        if not ok:
            skipped.append(kind)
    gold = levenshtein_edits(tokens, clean_tokens)
    return " ".join(tokens), gold, skipped


def _apply_error(tokens, lang, kind, rng):
    content = _content_token_indices(tokens, lang)
    if kind == "spelling":
        if not content:
            return False
        i = int(rng.choice(content))
        tok = tokens[i]
        pos = int(rng.integers(len(tok)))
        alphabet = sorted(lang.alphabet() - {tok[pos]})
        tokens[i] = tok[:pos] + alphabet[int(rng.integers(len(alphabet)))] + tok[pos + 1 :]
        return True
    if kind == "lex":
        # replace a content word with a same-POS confusable of this language
        nouns_sg = {lang.noun(c, "sg"): c for c in range(N_NOUNS)}
        nouns_pl = {lang.noun(c, "pl"): c for c in range(N_NOUNS)}
        candidates = []
        for i in content:
            tok = tokens[i]
            if tok in nouns_sg:
                candidates.append((i, "noun", "sg", nouns_sg[tok]))
            elif tok in nouns_pl:
                candidates.append((i, "noun", "pl", nouns_pl[tok]))
        if not candidates:
            return False
        i, _, num, concept = candidates[int(rng.integers(len(candidates)))]
        other = (concept + 1 + int(rng.integers(N_NOUNS - 1))) % N_NOUNS
        tokens[i] = lang.noun(other, num)
        return True
    if kind == "grammar":
        # flip the verb's number agreement
        for i, tok in enumerate(tokens):
            for num, other in (("pl", "sg"), ("sg", "pl")):
                for c in range(N_VERBS):
                    for style in STYLES:
                        if tok == lang.verb(c, style, num):
                            tokens[i] = lang.verb(c, style, other)
                            return True
        return False
    if kind == "order":
        # swap two adjacent non-punctuation tokens
        if len(tokens) < 3:
            return False
        i = int(rng.integers(len(tokens) - 2))
        tokens[i], tokens[i + 1] = tokens[i + 1], tokens[i]
        return True
    return False


def write_corpus_tree(out_dir, n_langs, n, seed, valid_fraction=0.05, test_fraction=0.05):
    """Generate and split a toy corpus into train/valid/test TSV files."""
    from . import corpus as corpus_mod
    import os

    pairs = generate_corpus(n_langs, n, seed)
    rng = np.random.default_rng(seed + 1)
    # split at the concept level so no concept leaks across splits
    per_concept = len(pairs) // n
    order = rng.permutation(n)
    n_valid = max(1, int(n * valid_fraction))
    n_test = max(1, int(n * test_fraction))
    valid_ids = set(order[:n_valid].tolist())
    test_ids = set(order[n_valid : n_valid + n_test].tolist())
    train, valid, test = [], [], []
    for idx, pair in enumerate(pairs):
        concept = idx // (per_concept or 1)
        if concept in valid_ids:
            valid.append(pair)
        elif concept in test_ids:
            test.append(pair)
        else:
            train.append(pair)
    os.makedirs(out_dir, exist_ok=True)
    for name, rows in (("train", train), ("valid", valid), ("test", test)):
        corpus_mod.write_tsv(os.path.join(out_dir, f"{name}.tsv"), rows)
    return len(train), len(valid), len(test)
