"""Beam-search decoding and the user-facing rewrite/translate API.

The source language selects the preprocessing models only; the model
itself is conditioned purely on the requested target language and style
factors, which is what makes monolingual rewriting and code-switched
input work.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import corpus as corpus_mod
from . import transformer as tfm
from .corpus import BOS, EOS, PAD, Pipeline


@dataclass
class Hypothesis:
    ids: list  # unit ids, no BOS/EOS
    logprob: float
    finished: bool = False

    def score(self, alpha):
        length = max(len(self.ids), 1)
        return self.logprob / (length**alpha)


@dataclass
class RewriteRequest:
    text: str
    source_lang: str
    target_lang: str
    target_style: str
    beam: int = 5
    length_alpha: float = 1.0


class UnknownTagError(ValueError):
    def __init__(self, kind, tag, available):
        self.kind = kind
        self.tag = tag
        self.available = list(available)
        super().__init__(f"unknown {kind} tag {tag!r}; available: {self.available}")


@dataclass
class ModelBundle:
    """Frozen checkpoint plus preprocessing models; safe for concurrent reads."""

    config: tfm.ModelConfig
    params: dict
    pipeline: Pipeline

    @classmethod
    def load(cls, bundle_dir):
        cfg_json, params, _opt, _seed, _extra = tfm.load_checkpoint(
            os.path.join(bundle_dir, "best.ckpt")
        )
        pipeline = Pipeline.load(bundle_dir)
        return cls(tfm.ModelConfig.from_json(cfg_json), params, pipeline)

    def save(self, bundle_dir):
        os.makedirs(bundle_dir, exist_ok=True)
        tfm.save_checkpoint(
            os.path.join(bundle_dir, "best.ckpt"), self.config.to_json(), self.params
        )
        self.pipeline.save(bundle_dir)


def beam_search(encoder_out, src_mask, params, config, bos_id, eos_id,
                beam=5, length_alpha=1.0, max_len=None, input_len=None):
    """Length-normalized beam search over one encoded source.

    Returns finished hypotheses sorted by normalized score (best first);
    max output length defaults to 2 * input length + 8.
    """
    if beam < 1:
        raise ValueError("beam must be >= 1")
    if max_len is None:
        base = input_len if input_len is not None else encoder_out.shape[1]
        max_len = 2 * base + 8
    max_len = min(max_len, config.max_positions - 1)
    live = [Hypothesis([], 0.0)]
    finished = []
    for _ in range(max_len):
        if not live:
            break
        prefixes = np.array([[bos_id] + h.ids for h in live], dtype=np.int64)
        enc = _tile(encoder_out, len(live))
        mask = np.repeat(src_mask, len(live), axis=0)
        logits = tfm.decode_step(prefixes, enc, mask, params, config).data
        logp = _log_softmax(logits)
        candidates = []
        for k, h in enumerate(live):
            top = np.argsort(-logp[k])[: 2 * beam]
            for unit in top:
                candidates.append(
                    Hypothesis(h.ids + [int(unit)], h.logprob + float(logp[k, unit]))
                )
        candidates.sort(key=lambda h: -h.score(length_alpha))
        live = []
        for h in candidates:
            if h.ids[-1] == eos_id:
                finished.append(Hypothesis(h.ids[:-1], h.logprob, True))
            elif len(live) < beam:
                live.append(h)
        # sound pruning: stop once no live beam can still beat the kept set
        if len(finished) >= beam:
            finished.sort(key=lambda h: -h.score(length_alpha))
            floor = finished[beam - 1].score(length_alpha)
            live = [h for h in live if _optimistic(h, max_len, length_alpha) > floor]
    if not finished:
        # length cap hit: keep the best unfinished beams
        finished = [Hypothesis(h.ids, h.logprob, False) for h in live[:beam]]
    finished.sort(key=lambda h: -h.score(length_alpha))
    return finished[:beam]


def _optimistic(h, max_len, alpha):
    """Upper bound on any future normalized score of a live hypothesis."""
    if h.logprob >= 0:
        return h.logprob / (max(len(h.ids), 1) ** alpha)
    best_len = max(max_len, len(h.ids), 1)
    return h.logprob / (best_len**alpha)


def _tile(tensor_like, n):
    from . import tensor as T

    if n == 1:
        return tensor_like
    return T.Tensor(np.repeat(tensor_like.data, n, axis=0))


def _log_softmax(x):
    z = x - x.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def _validate_request(req, pipeline):
    if req.target_lang not in pipeline.lang_tags:
        raise UnknownTagError("language", req.target_lang, pipeline.lang_tags)
    if req.target_style not in pipeline.style_tags:
        raise UnknownTagError("style", req.target_style, pipeline.style_tags)


def rewrite(req, bundle):
    """Full rewrite pipeline; returns (output text, normalized score).

    Monolingual when target_lang == source_lang (error correction /
    style transfer), cross-lingual otherwise.
    """
    _validate_request(req, bundle.pipeline)
    pipeline = bundle.pipeline
    units = pipeline.encode(req.text, req.source_lang)
    src_ids = np.array([[pipeline.unit_id(u) for u in units]], dtype=np.int64)
    if src_ids.shape[1] == 0:
        return "", 0.0
    src_mask = np.ones_like(src_ids, dtype=np.float32)
    lang_id = np.array([pipeline.lang_tags.index(req.target_lang)], dtype=np.int64)
    style_id = np.array([pipeline.style_tags.index(req.target_style)], dtype=np.int64)
    src_emb = tfm.embed_source(src_ids, lang_id, style_id, bundle.params, bundle.config)
    enc = tfm.encode(src_emb, src_mask, bundle.params, bundle.config)
    hyps = beam_search(
        enc, src_mask, bundle.params, bundle.config,
        bos_id=pipeline.unit_ids[BOS], eos_id=pipeline.unit_ids[EOS],
        beam=req.beam, length_alpha=req.length_alpha, input_len=len(units),
    )
    best = hyps[0]
    id_to_unit = pipeline.unit_vocab
    out_units = [id_to_unit[i] for i in best.ids if id_to_unit[i] not in (PAD, BOS)]
    text = pipeline.decode(out_units, req.target_lang)
    return text, best.score(req.length_alpha)


def crosslingual(req, bundle):
    """Translate into a different language, style factor included."""
    return rewrite(req, bundle)
