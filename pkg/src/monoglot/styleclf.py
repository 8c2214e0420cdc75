"""Convolutional sentence classifier for automatic style evaluation.

Architecture: learned word embeddings, parallel 1-d convolutions of
several widths with ReLU, max-over-time pooling, one linear layer to the
class logits. Trained with Adam and early stopping on validation
accuracy. Transfer rate = share of sentences classified as the target
style.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, asdict, field
import json

import numpy as np

from . import tensor as T
from . import textpipe
from . import transformer as tfm

CLASSIFIER_MAGIC = b"MGCF"
PAD_ID = 0
UNK_ID = 1


@dataclass
class ClassifierConfig:
    embedding_dim: int = 300
    filter_widths: tuple = (3, 4, 5)
    filters_per_width: int = 256
    dropout: float = 0.5
    lr: float = 5e-4
    classes: int = 2
    batch_size: int = 64
    max_epochs: int = 20
    patience: int = 3
    valid_fraction: float = 0.2

    def to_json(self):
        d = asdict(self)
        d["filter_widths"] = list(self.filter_widths)
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, s):
        d = json.loads(s)
        d["filter_widths"] = tuple(d["filter_widths"])
        return cls(**d)


@dataclass
class Classifier:
    config: ClassifierConfig
    params: dict
    vocab: dict  # token -> id
    labels: list  # label strings, index = class id

    def save(self, path):
        extra = {"vocab": self.vocab, "labels": self.labels}
        tfm.save_checkpoint(
            path, self.config.to_json(), self.params, seed=0, extra=extra,
            magic=CLASSIFIER_MAGIC,
        )

    @classmethod
    def load(cls, path):
        cfg_json, params, _opt, _seed, extra = tfm.load_checkpoint(
            path, magic=CLASSIFIER_MAGIC
        )
        return cls(
            ClassifierConfig.from_json(cfg_json), params, extra["vocab"], extra["labels"]
        )


def _init_params(config, vocab_size, rng):
    params = {}
    params["emb"] = T.Tensor(
        rng.normal(0, 0.1, (vocab_size, config.embedding_dim)).astype(np.float32),
        requires_grad=True,
    )
    for w in config.filter_widths:
        fan_in = w * config.embedding_dim
        params[f"conv{w}.w"] = T.Tensor(
            rng.normal(0, (2.0 / fan_in) ** 0.5,
                       (fan_in, config.filters_per_width)).astype(np.float32),
            requires_grad=True,
        )
        params[f"conv{w}.b"] = T.Tensor(
            np.zeros(config.filters_per_width, dtype=np.float32), requires_grad=True
        )
    total = config.filters_per_width * len(config.filter_widths)
    params["out.w"] = T.Tensor(
        rng.normal(0, (2.0 / total) ** 0.5, (total, config.classes)).astype(np.float32),
        requires_grad=True,
    )
    params["out.b"] = T.Tensor(np.zeros(config.classes, dtype=np.float32), requires_grad=True)
    return params


def _encode_batch(token_lists, vocab, min_len):
    max_len = max(max((len(t) for t in token_lists), default=1), min_len)
    ids = np.zeros((len(token_lists), max_len), dtype=np.int64)
    for i, toks in enumerate(token_lists):
        for j, tok in enumerate(toks):
            ids[i, j] = vocab.get(tok, UNK_ID)
    return ids


def _forward(ids, params, config, train=False, rng=None):
    """Class logits [B, classes] for padded id matrix [B, T]."""
    b, t = ids.shape
    x = T.embedding(params["emb"], ids)  # [B, T, E]
    pooled = []
    for w in config.filter_widths:
        windows = T.concat([x[:, i : t - w + 1 + i, :] for i in range(w)], axis=-1)
        conv = T.relu(T.matmul(windows, params[f"conv{w}.w"]) + params[f"conv{w}.b"])
        pooled.append(T.tmax(conv, axis=1))  # [B, F]
    feats = T.concat(pooled, axis=-1)
    feats = T.dropout(feats, config.dropout, rng, train)
    return T.matmul(feats, params["out.w"]) + params["out.b"]


def train_classifier(sentences, labels, config=None, seed=0, log=None):
    """Train on (sentence, label) pairs; returns (Classifier, val accuracy).

    Sentences are tokenized with the shared word tokenizer. Validation
    split is a seeded 20% (configurable) sample.
    """
    config = config or ClassifierConfig()
    label_names = sorted(set(labels))
    if len(label_names) < 2:
        raise ValueError(f"need at least 2 classes, got {label_names}")
    rng = np.random.default_rng(seed)
    token_lists = [textpipe.tokenize(s) for s in sentences]
    vocab = {"<pad>": PAD_ID, "<unk>": UNK_ID}
    for toks in token_lists:
        for tok in toks:
            vocab.setdefault(tok, len(vocab))
    y = np.array([label_names.index(l) for l in labels], dtype=np.int64)
    order = rng.permutation(len(sentences))
    n_valid = max(1, int(len(sentences) * config.valid_fraction))
    valid_idx = order[:n_valid]
    train_idx = order[n_valid:]
    params = _init_params(config, len(vocab), rng)
    adam = T.AdamState(lr=config.lr)
    min_len = max(config.filter_widths)

    def accuracy(idx):
        correct = 0
        for start in range(0, len(idx), config.batch_size):
            chunk = idx[start : start + config.batch_size]
            ids = _encode_batch([token_lists[i] for i in chunk], vocab, min_len)
            logits = _forward(ids, params, config, train=False)
            correct += int((logits.data.argmax(axis=-1) == y[chunk]).sum())
        return correct / max(len(idx), 1)

    best_acc = -1.0
    best_params = None
    stale = 0
    for epoch in range(config.max_epochs):
        ep_rng = np.random.default_rng([seed, 13, epoch])
        perm = ep_rng.permutation(train_idx)
        for start in range(0, len(perm), config.batch_size):
            chunk = perm[start : start + config.batch_size]
            ids = _encode_batch([token_lists[i] for i in chunk], vocab, min_len)
            logits = _forward(ids, params, config, train=True, rng=ep_rng)
            loss = T.cross_entropy_logits(logits, y[chunk]) * (1.0 / len(chunk))
            T.backward(loss)
            grads = {n: p.grad for n, p in params.items() if p.grad is not None}
            T.adam_step(params, grads, adam)
            for p in params.values():
                p.zero_grad()
        acc = accuracy(valid_idx)
        if log:
            log(f"classifier epoch {epoch}: valid accuracy {acc:.4f}")
        if acc > best_acc:
            best_acc = acc
            best_params = {n: T.Tensor(p.data.copy(), requires_grad=True)
                           for n, p in params.items()}
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    clf = Classifier(config, best_params, vocab, label_names)
    return clf, best_acc


def predict(clf, sentence):
    """(label, probability) for one sentence; empty input falls back to the bias path."""
    tokens = textpipe.tokenize(sentence)
    min_len = max(clf.config.filter_widths)
    ids = _encode_batch([tokens], clf.vocab, min_len)
    logits = _forward(ids, clf.params, clf.config, train=False)
    z = logits.data[0] - logits.data[0].max()
    probs = np.exp(z) / np.exp(z).sum()
    cls = int(probs.argmax())
    return clf.labels[cls], float(probs[cls])


def transfer_rate(clf, sentences, target_style):
    """Percentage of sentences classified as the target style."""
    if not sentences:
        raise ValueError("transfer_rate needs a non-empty sentence list")
    if target_style not in clf.labels:
        raise ValueError(f"unknown style {target_style!r}; known: {clf.labels}")
    hits = sum(1 for s in sentences if predict(clf, s)[0] == target_style)
    return 100.0 * hits / len(sentences)
