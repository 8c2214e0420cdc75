"""Text preprocessing: rule-based tokenization, truecasing, subword segmentation.

The tokenizer is a small deterministic rule set (punctuation split,
apostrophe clitic split, number/URL protection) rather than a wrapper
around an external tool, so the whole pipeline is reproducible offline.
Subwords are greedy byte-pair merges with an explicit joiner marker.
"""

from __future__ import annotations

import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field

UNK_UNIT = "<unk>"
DEFAULT_JOINER = "@@"

_TOKEN_RE = re.compile(
    r"""
    (?:https?://\S+|www\.\S+)        # URLs stay whole
    | \d+(?:[.,]\d+)*                # numbers, incl. 3.14 and 1,000
    | ['’][^\W\d_]+             # apostrophe clitics: 't, 's, 'll
    | [^\W\d_]+(?:-[^\W\d_]+)*       # words, allowing internal hyphens
    | \S                             # any other single non-space char
    """,
    re.VERBOSE | re.UNICODE,
)

_NO_SPACE_BEFORE = set(".,!?;:%)]}’'”»")
_NO_SPACE_AFTER = set("([{“«")


def tokenize(text, lang=None):
    """Split text into tokens: punctuation separated, clitics split off."""
    return _TOKEN_RE.findall(text)


def detokenize(tokens, lang=None):
    """Inverse of tokenize up to whitespace normalization."""
    out = []
    for tok in tokens:
        if not out:
            out.append(tok)
            continue
        prev = out[-1]
        glue = (
            tok[0] in _NO_SPACE_BEFORE
            or (tok[0] in "'’" and len(tok) > 1 and tok[1:].isalpha())
            or prev[-1] in _NO_SPACE_AFTER
        )
        if glue:
            out[-1] = prev + tok
        else:
            out.append(tok)
    return " ".join(out)


def normalize_whitespace(text):
    return " ".join(text.split())


# -- truecasing ---------------------------------------------------------

@dataclass
class TruecaseModel:
    # lowercased form -> (winning surface form, count)
    table: dict = field(default_factory=dict)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            for surface, count in sorted(self.table.values()):
                f.write(f"{surface} {count}\n")

    @classmethod
    def load(cls, path):
        table = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if not line:
                    continue
                surface, count = line.rsplit(" ", 1)
                table[surface.lower()] = (surface, int(count))
        return cls(table)


def train_truecaser(sentences):
    """Learn the dominant casing of each word from tokenized sentences.

    Sentence-initial tokens are counted with their lowercased form, so
    positional capitalization does not pollute the statistics. Ties break
    lexicographically.
    """
    counts = Counter()
    empty = True
    for tokens in sentences:
        for i, tok in enumerate(tokens):
            if not any(c.isalpha() for c in tok):
                continue
            empty = False
            counts[tok.lower() if i == 0 else tok] += 1
    if empty:
        raise ValueError("cannot train a truecaser on an empty corpus")
    table = {}
    for surface, count in counts.items():
        key = surface.lower()
        best = table.get(key)
        if best is None or (count, _invert(surface)) > (best[1], _invert(best[0])):
            table[key] = (surface, count)
    return TruecaseModel(table)


def _invert(s):
    # for lexicographic tie-breaks we want the *smaller* string to win
    return tuple(-ord(c) for c in s)


def truecase(tokens, model):
    """Rewrite only the sentence-initial token to its dominant casing."""
    if not tokens:
        return []
    first = tokens[0]
    entry = model.table.get(first.lower())
    if entry is not None:
        first = entry[0]
    out = [first]
    out.extend(tokens[1:])
    return out


def detruecase(tokens):
    """Uppercase the first alphabetic character of the first token."""
    if not tokens:
        return []
    first = tokens[0]
    for i, c in enumerate(first):
        if c.isalpha():
            first = first[:i] + c.upper() + first[i + 1 :]
            break
    return [first] + list(tokens[1:])


# -- subwords (byte-pair merges) -----------------------------------------

@dataclass
class SubwordModel:
    merges: list  # ordered (left, right) symbol pairs
    vocab: set
    joiner: str = DEFAULT_JOINER
    charset: set = field(default_factory=set)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"bpe v1 {self.joiner}\n")
            for left, right in self.merges:
                f.write(f"{left} {right}\n")

    @classmethod
    def load(cls, path, charset=None):
        with open(path, encoding="utf-8") as f:
            header = f.readline().rstrip("\n")
            parts = header.split(" ")
            if len(parts) != 3 or parts[0] != "bpe" or parts[1] != "v1":
                raise ValueError(f"bad subword model header: {header!r}")
            joiner = parts[2]
            merges = []
            for line in f:
                line = line.rstrip("\n")
                if not line:
                    continue
                left, right = line.split(" ")
                merges.append((left, right))
        vocab = set()
        chars = set(charset) if charset else set()
        for left, right in merges:
            vocab.update((left, right, left + right))
            chars.update(c for c in (left, right) if len(c) == 1)
        vocab |= chars
        return cls(merges, vocab, joiner, chars)


def learn_subwords(tokens, vocab_size, joiner=DEFAULT_JOINER):
    """Greedy highest-frequency pair merges over a token stream.

    Stops at vocab_size units or when no pair occurs at least twice.
    Ties break lexicographically so the result is independent of map
    iteration order.
    """
    word_freq = Counter(tuple(tok) for tok in tokens)
    charset = set()
    for word in word_freq:
        charset.update(word)
    if vocab_size < len(charset):
        raise ValueError(
            f"vocab_size {vocab_size} below character inventory size {len(charset)}"
        )
    vocab = set(charset)
    merges = []
    words = {w: list(w) for w in word_freq}
    while len(vocab) < vocab_size:
        pairs = Counter()
        for w, syms in words.items():
            freq = word_freq[w]
            for a, b in zip(syms, syms[1:]):
                pairs[(a, b)] += freq
        if not pairs:
            break
        best = max(pairs, key=lambda p: (pairs[p], tuple(-ord(c) for c in p[0] + "\0" + p[1])))
        if pairs[best] < 2:
            break
        merges.append(best)
        merged = best[0] + best[1]
        vocab.add(merged)
        for w, syms in words.items():
            words[w] = _merge_once(syms, best, merged)
    return SubwordModel(merges, vocab, joiner, charset)


def _merge_once(syms, pair, merged):
    out = []
    i = 0
    while i < len(syms):
        if i + 1 < len(syms) and syms[i] == pair[0] and syms[i + 1] == pair[1]:
            out.append(merged)
            i += 2
        else:
            out.append(syms[i])
            i += 1
    return out


def apply_subwords(tokens, model):
    """Segment tokens into subword units; all units but a token's last carry the joiner."""
    units = []
    for tok in tokens:
        syms = list(tok)
        for pair in model.merges:
            syms = _merge_once(syms, pair, pair[0] + pair[1])
        for i, sym in enumerate(syms):
            known = all(c in model.charset for c in sym) if model.charset else True
            unit = sym if known else UNK_UNIT
            if i < len(syms) - 1:
                units.append(unit + model.joiner)
            else:
                units.append(unit)
    return units


def revert_subwords(units, joiner=DEFAULT_JOINER):
    """Re-join subword units into tokens (exact inverse for in-charset text)."""
    tokens = []
    buf = ""
    for unit in units:
        if unit.endswith(joiner) and len(unit) > len(joiner):
            buf += unit[: -len(joiner)]
        else:
            tokens.append(buf + unit)
            buf = ""
    if buf:
        tokens.append(buf)
    return tokens
