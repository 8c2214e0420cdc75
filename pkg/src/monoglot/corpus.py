"""Corpus handling: cleaning rules, bidirectional duplication, factor
annotation, corpus balancing and word-count batching.

Parallel corpus files are UTF-8 TSV with columns
``src<TAB>tgt<TAB>src_lang<TAB>tgt_lang<TAB>domain``.
"""

from __future__ import annotations

import os
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import textpipe

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"
SPECIALS = (PAD, BOS, EOS, UNK)

N_LENGTH_BUCKETS = 8


class ConfigurationError(ValueError):
    pass


@dataclass
class SentencePair:
    src: str
    tgt: str
    src_lang: str
    tgt_lang: str
    domain: str


@dataclass
class FactoredExample:
    src_units: list
    lang_factor: str  # e.g. "2lv": requested output language
    style_factor: str  # e.g. "2os": requested output domain/style
    tgt_units: list


@dataclass
class Batch:
    examples: list
    src_ids: np.ndarray  # [B, Ts]
    src_mask: np.ndarray  # [B, Ts] 1.0 on real tokens
    tgt_in_ids: np.ndarray  # [B, Tt] BOS-prefixed
    tgt_out_ids: np.ndarray  # [B, Tt] EOS-suffixed
    tgt_mask: np.ndarray
    lang_ids: np.ndarray  # [B]
    style_ids: np.ndarray  # [B]


def read_tsv(path):
    pairs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 columns, got {len(cols)}")
            pairs.append(SentencePair(*cols))
    return pairs


def write_tsv(path, pairs):
    with open(path, "w", encoding="utf-8") as f:
        for p in pairs:
            f.write(f"{p.src}\t{p.tgt}\t{p.src_lang}\t{p.tgt_lang}\t{p.domain}\n")


def clean(pairs, max_len=100, max_ratio=9.0):
    """Drop pairs violating any of the four cleaning rules.

    Rules: a side longer than max_len tokens; an empty side; a side with
    no alphabetic character; token length ratio strictly over max_ratio.
    """
    kept = []
    for p in pairs:
        src_toks = textpipe.tokenize(p.src, p.src_lang)
        tgt_toks = textpipe.tokenize(p.tgt, p.tgt_lang)
        ls, lt = len(src_toks), len(tgt_toks)
        if ls == 0 or lt == 0:
            continue
        if ls > max_len or lt > max_len:
            continue
        if not _has_alpha(p.src) or not _has_alpha(p.tgt):
            continue
        if max(ls, lt) / min(ls, lt) > max_ratio:
            continue
        kept.append(p)
    return kept


def _has_alpha(text):
    return any(c.isalpha() for c in text)


def duplicate_directions(pairs):
    """Each pair yields both translation directions with swapped tags."""
    out = []
    for p in pairs:
        out.append(p)
        out.append(SentencePair(p.tgt, p.src, p.tgt_lang, p.src_lang, p.domain))
    return out


def balance_corpora(streams, cap, seed=0):
    """Truncate each (language-pair, domain) stream to at most cap pairs.

    streams: dict key -> list of SentencePair. Subsets are seeded random
    draws, so the result is reproducible.
    """
    if cap <= 0:
        raise ValueError("cap must be positive")
    merged = []
    for key in sorted(streams):
        pairs = streams[key]
        if len(pairs) > cap:
            rng = np.random.default_rng([seed, zlib.crc32(str(key).encode("utf-8"))])
            idx = sorted(rng.choice(len(pairs), size=cap, replace=False).tolist())
            pairs = [pairs[i] for i in idx]
        merged.extend(pairs)
    return merged


# -- preprocessing pipeline ---------------------------------------------

@dataclass
class Pipeline:
    """Trained preprocessing models plus the tag and unit vocabularies."""

    truecasers: dict  # lang -> TruecaseModel
    subwords: textpipe.SubwordModel
    unit_vocab: list  # unit strings; index = id, starts with SPECIALS
    lang_tags: list
    style_tags: list
    unit_ids: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.unit_ids:
            self.unit_ids = {u: i for i, u in enumerate(self.unit_vocab)}

    def encode(self, text, lang):
        """text -> subword units (tokenize, truecase, segment)."""
        tokens = textpipe.tokenize(text, lang)
        if lang in self.truecasers:
            tokens = textpipe.truecase(tokens, self.truecasers[lang])
        return textpipe.apply_subwords(tokens, self.subwords)

    def decode(self, units, lang):
        """subword units -> text (revert, detruecase, detokenize)."""
        tokens = textpipe.revert_subwords(units, self.subwords.joiner)
        tokens = textpipe.detruecase(tokens)
        return textpipe.detokenize(tokens, lang)

    def unit_id(self, unit):
        return self.unit_ids.get(unit, self.unit_ids[UNK])

    def save(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        self.subwords.save(os.path.join(out_dir, "bpe.model"))
        for lang, model in self.truecasers.items():
            model.save(os.path.join(out_dir, f"truecase.{lang}.model"))
        with open(os.path.join(out_dir, "vocab.txt"), "w", encoding="utf-8") as f:
            for unit in self.unit_vocab:
                f.write(unit + "\n")
        with open(os.path.join(out_dir, "tags.txt"), "w", encoding="utf-8") as f:
            f.write("langs " + " ".join(self.lang_tags) + "\n")
            f.write("styles " + " ".join(self.style_tags) + "\n")

    @classmethod
    def load(cls, in_dir):
        with open(os.path.join(in_dir, "vocab.txt"), encoding="utf-8") as f:
            vocab = [line.rstrip("\n") for line in f if line.rstrip("\n")]
        charset = set()
        joiner = textpipe.DEFAULT_JOINER
        for u in vocab:
            if u in SPECIALS:
                continue
            base = u[: -len(joiner)] if u.endswith(joiner) and len(u) > len(joiner) else u
            charset.update(base)
        subwords = textpipe.SubwordModel.load(
            os.path.join(in_dir, "bpe.model"), charset=charset
        )
        truecasers = {}
        for name in sorted(os.listdir(in_dir)):
            if name.startswith("truecase.") and name.endswith(".model"):
                lang = name[len("truecase.") : -len(".model")]
                truecasers[lang] = textpipe.TruecaseModel.load(os.path.join(in_dir, name))
        with open(os.path.join(in_dir, "tags.txt"), encoding="utf-8") as f:
            langs = f.readline().split()[1:]
            styles = f.readline().split()[1:]
        return cls(truecasers, subwords, vocab, langs, styles)


def train_pipeline(pairs, vocab_size=512):
    """Fit truecasers (per language) and a joint subword model on the pairs."""
    langs = sorted({p.src_lang for p in pairs} | {p.tgt_lang for p in pairs})
    styles = sorted({p.domain for p in pairs})
    by_lang = {lang: [] for lang in langs}
    for p in pairs:
        by_lang[p.src_lang].append(textpipe.tokenize(p.src, p.src_lang))
        by_lang[p.tgt_lang].append(textpipe.tokenize(p.tgt, p.tgt_lang))
    truecasers = {
        lang: textpipe.train_truecaser(sents) for lang, sents in by_lang.items() if sents
    }
    all_tokens = []
    for lang in langs:
        for sent in by_lang[lang]:
            all_tokens.extend(textpipe.truecase(sent, truecasers[lang]))
    subwords = textpipe.learn_subwords(all_tokens, vocab_size)
    units = set()
    for tok in all_tokens:
        units.update(textpipe.apply_subwords([tok], subwords))
    vocab = list(SPECIALS) + sorted(units)
    return Pipeline(truecasers, subwords, vocab, langs, styles)


def annotate_factors(pair, pipeline):
    """Preprocess both sides and attach the target-language/style factors."""
    if pair.tgt_lang not in pipeline.lang_tags:
        raise ConfigurationError(
            f"unknown language tag {pair.tgt_lang!r}; known: {pipeline.lang_tags}"
        )
    if pair.domain not in pipeline.style_tags:
        raise ConfigurationError(
            f"unknown domain tag {pair.domain!r}; known: {pipeline.style_tags}"
        )
    return FactoredExample(
        src_units=pipeline.encode(pair.src, pair.src_lang),
        lang_factor="2" + pair.tgt_lang,
        style_factor="2" + pair.domain,
        tgt_units=pipeline.encode(pair.tgt, pair.tgt_lang),
    )


def make_batches(examples, pipeline, word_budget=2048, seed=0):
    """Shuffle, bucket by target length and pack greedily under the budget.

    Every example appears in exactly one batch. Deterministic in seed.
    """
    if not examples:
        return []
    longest = max(len(ex.tgt_units) for ex in examples)
    if longest + 1 > word_budget:
        bad = next(ex for ex in examples if len(ex.tgt_units) == longest)
        raise ValueError(
            f"example with {longest} target units exceeds word budget "
            f"{word_budget}: {' '.join(bad.tgt_units[:12])}..."
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(examples))
    lengths = np.array([len(examples[i].tgt_units) for i in order])
    lo, hi = lengths.min(), lengths.max()
    edges = np.linspace(lo, hi + 1, N_LENGTH_BUCKETS + 1)
    buckets = [[] for _ in range(N_LENGTH_BUCKETS)]
    for pos, idx in enumerate(order):
        b = int(np.searchsorted(edges, lengths[pos], side="right")) - 1
        b = min(max(b, 0), N_LENGTH_BUCKETS - 1)
        buckets[b].append(examples[idx])
    batches = []
    for bucket in buckets:
        cur = []
        cur_words = 0
        for ex in bucket:
            w = len(ex.tgt_units) + 1  # +1 for EOS
            if cur and cur_words + w > word_budget:
                batches.append(_pad_batch(cur, pipeline))
                cur, cur_words = [], 0
            cur.append(ex)
            cur_words += w
        if cur:
            batches.append(_pad_batch(cur, pipeline))
    return batches


def _pad_batch(examples, pipeline):
    bos = pipeline.unit_ids[BOS]
    eos = pipeline.unit_ids[EOS]
    pad = pipeline.unit_ids[PAD]
    b = len(examples)
    ts = max(len(ex.src_units) for ex in examples)
    tt = max(len(ex.tgt_units) for ex in examples) + 1
    src_ids = np.full((b, ts), pad, dtype=np.int64)
    src_mask = np.zeros((b, ts), dtype=np.float32)
    tgt_in = np.full((b, tt), pad, dtype=np.int64)
    tgt_out = np.full((b, tt), pad, dtype=np.int64)
    tgt_mask = np.zeros((b, tt), dtype=np.float32)
    lang_ids = np.zeros(b, dtype=np.int64)
    style_ids = np.zeros(b, dtype=np.int64)
    lang_index = {("2" + t): i for i, t in enumerate(pipeline.lang_tags)}
    style_index = {("2" + t): i for i, t in enumerate(pipeline.style_tags)}
    for k, ex in enumerate(examples):
        s = [pipeline.unit_id(u) for u in ex.src_units]
        t = [pipeline.unit_id(u) for u in ex.tgt_units]
        src_ids[k, : len(s)] = s
        src_mask[k, : len(s)] = 1.0
        tgt_in[k, 0] = bos
        tgt_in[k, 1 : len(t) + 1] = t
        tgt_out[k, : len(t)] = t
        tgt_out[k, len(t)] = eos
        tgt_mask[k, : len(t) + 1] = 1.0
        lang_ids[k] = lang_index[ex.lang_factor]
        style_ids[k] = style_index[ex.style_factor]
    return Batch(examples, src_ids, src_mask, tgt_in, tgt_out, tgt_mask, lang_ids, style_ids)
