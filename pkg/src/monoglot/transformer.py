"""Factored transformer encoder-decoder built on the tensor engine.

The source embedding concatenates the token embedding with small
target-language and target-style factor embeddings (broadcast to every
source position) and projects the result back to model_dim. The target
side carries no factors. Post-norm residual blocks, sinusoidal
positions, ReLU feed-forward.

Checkpoints use a binary container: magic ``MGLT``, version, JSON model
config, named parameter records (little-endian float32), an optional
optimizer-state section, the RNG seed and a JSON extras blob. Round
trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, asdict

import numpy as np

from . import tensor as T

MAGIC = b"MGLT"
CONTAINER_VERSION = 1
NEG_INF = -1e9


@dataclass
class ModelConfig:
    layers: int = 2
    heads: int = 4
    model_dim: int = 64
    ff_dim: int = 128
    max_positions: int = 512
    token_vocab: int = 512
    lang_factors: int = 3
    style_factors: int = 2
    factor_dim: int = 4
    dropout: float = 0.1
    label_smoothing: float = 0.1

    def __post_init__(self):
        if self.model_dim % self.heads != 0:
            raise ValueError(
                f"model_dim {self.model_dim} not divisible by heads {self.heads}"
            )

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, s):
        return cls(**json.loads(s))


def init_params(config, seed=0):
    """Create the named parameter store. Deterministic in seed."""
    rng = np.random.default_rng(seed)
    params = {}

    def add(name, shape, scale=None):
        if scale is None:
            scale = (2.0 / (shape[0] + shape[-1])) ** 0.5
        params[name] = T.Tensor(
            rng.normal(0.0, scale, size=shape).astype(np.float32), requires_grad=True
        )

    def add_zeros(name, shape):
        params[name] = T.Tensor(np.zeros(shape, dtype=np.float32), requires_grad=True)

    def add_ones(name, shape):
        params[name] = T.Tensor(np.ones(shape, dtype=np.float32), requires_grad=True)

    d = config.model_dim
    add("token_emb", (config.token_vocab, d), scale=0.02)
    add("lang_emb", (config.lang_factors, config.factor_dim), scale=0.02)
    add("style_emb", (config.style_factors, config.factor_dim), scale=0.02)
    add("src_proj", (d + 2 * config.factor_dim, d))
    for side, nlayers in (("enc", config.layers), ("dec", config.layers)):
        for i in range(nlayers):
            p = f"{side}.{i}"
            sublayers = ["self"] if side == "enc" else ["self", "cross"]
            for sub in sublayers:
                for mat in ("wq", "wk", "wv", "wo"):
                    add(f"{p}.{sub}.{mat}", (d, d))
                add_ones(f"{p}.{sub}.ln_g", (d,))
                add_zeros(f"{p}.{sub}.ln_b", (d,))
            add(f"{p}.ff.w1", (d, config.ff_dim))
            add_zeros(f"{p}.ff.b1", (config.ff_dim,))
            add(f"{p}.ff.w2", (config.ff_dim, d))
            add_zeros(f"{p}.ff.b2", (d,))
            add_ones(f"{p}.ff.ln_g", (d,))
            add_zeros(f"{p}.ff.ln_b", (d,))
    add("out_proj", (d, config.token_vocab))
    add_zeros("out_bias", (config.token_vocab,))
    return params


def positional_encoding(length, dim):
    pos = np.arange(length)[:, None]
    i = np.arange(dim // 2)[None, :]
    angle = pos / np.power(10000.0, 2.0 * i / dim)
    enc = np.zeros((length, dim), dtype=np.float32)
    enc[:, 0::2] = np.sin(angle)
    enc[:, 1::2] = np.cos(angle)
    return enc


def _heads_split(x, b, t, heads, dk):
    # [B, T, d] -> [B, h, T, dk]
    return T.transpose(T.reshape(x, (b, t, heads, dk)), (0, 2, 1, 3))


def _heads_join(x, b, t, d):
    return T.reshape(T.transpose(x, (0, 2, 1, 3)), (b, t, d))


def attention(q_in, k_in, v_in, bias, prefix, params, config, train, rng):
    """Multi-head attention block with residual and post layer norm.

    bias: additive mask broadcastable to [B, h, Tq, Tk] (NEG_INF on
    blocked keys) or None.
    """
    b, tq, d = q_in.shape
    tk = k_in.shape[1]
    heads = config.heads
    dk = d // heads
    q = _heads_split(q_in @ params[f"{prefix}.wq"], b, tq, heads, dk)
    k = _heads_split(k_in @ params[f"{prefix}.wk"], b, tk, heads, dk)
    v = _heads_split(v_in @ params[f"{prefix}.wv"], b, tk, heads, dk)
    scores = T.matmul(q, T.transpose(k, (0, 1, 3, 2))) * (1.0 / np.sqrt(dk))
    if bias is not None:
        scores = scores + bias
    weights = T.softmax(scores, axis=-1)
    weights = T.dropout(weights, config.dropout, rng, train)
    ctx = _heads_join(T.matmul(weights, v), b, tq, d)
    out = ctx @ params[f"{prefix}.wo"]
    out = T.dropout(out, config.dropout, rng, train)
    return T.layer_norm(q_in + out, params[f"{prefix}.ln_g"], params[f"{prefix}.ln_b"])


def feed_forward(x, prefix, params, config, train, rng):
    h = T.relu(x @ params[f"{prefix}.w1"] + params[f"{prefix}.b1"])
    h = h @ params[f"{prefix}.w2"] + params[f"{prefix}.b2"]
    h = T.dropout(h, config.dropout, rng, train)
    return T.layer_norm(x + h, params[f"{prefix}.ln_g"], params[f"{prefix}.ln_b"])


def pad_bias(src_mask):
    """[B, Ts] {0,1} mask -> additive attention bias [B, 1, 1, Ts]."""
    return T.Tensor((NEG_INF * (1.0 - src_mask)).astype(np.float32)[:, None, None, :])


def causal_bias(t):
    m = np.triu(np.full((t, t), NEG_INF, dtype=np.float32), k=1)
    return T.Tensor(m[None, None, :, :])


def embed_source(src_ids, lang_ids, style_ids, params, config):
    """Token + broadcast factor embeddings, projected to model_dim, plus positions."""
    src_ids = np.atleast_2d(np.asarray(src_ids))
    lang_ids = np.atleast_1d(np.asarray(lang_ids))
    style_ids = np.atleast_1d(np.asarray(style_ids))
    b, t = src_ids.shape
    if t > config.max_positions:
        raise ValueError(f"sequence length {t} exceeds max_positions {config.max_positions}")
    tok = T.embedding(params["token_emb"], src_ids)  # [B, T, d]
    lang = T.embedding(params["lang_emb"], lang_ids)  # [B, f]
    style = T.embedding(params["style_emb"], style_ids)
    lang = T.reshape(lang, (b, 1, config.factor_dim))
    style = T.reshape(style, (b, 1, config.factor_dim))
    ones = T.Tensor(np.ones((b, t, 1), dtype=np.float32))
    lang_b = T.matmul(ones, lang)  # broadcast factors over positions
    style_b = T.matmul(ones, style)
    x = T.concat([tok, lang_b, style_b], axis=-1) @ params["src_proj"]
    return x + T.Tensor(positional_encoding(t, config.model_dim)[None])


def embed_target(tgt_ids, params, config):
    tgt_ids = np.atleast_2d(np.asarray(tgt_ids))
    b, t = tgt_ids.shape
    if t > config.max_positions:
        raise ValueError(f"prefix length {t} exceeds max_positions {config.max_positions}")
    tok = T.embedding(params["token_emb"], tgt_ids)
    return tok + T.Tensor(positional_encoding(t, config.model_dim)[None])


def encode(src_emb, src_mask, params, config, train=False, rng=None):
    """Run the encoder stack over projected source embeddings."""
    bias = pad_bias(src_mask)
    x = T.dropout(src_emb, config.dropout, rng, train)
    for i in range(config.layers):
        x = attention(x, x, x, bias, f"enc.{i}.self", params, config, train, rng)
        x = feed_forward(x, f"enc.{i}.ff", params, config, train, rng)
    return x


def decode(tgt_in_ids, encoder_out, src_mask, params, config, train=False, rng=None):
    """Teacher-forced decoder pass; returns logits [B, Tt, V]."""
    x = embed_target(tgt_in_ids, params, config)
    x = T.dropout(x, config.dropout, rng, train)
    t = x.shape[1]
    self_bias = causal_bias(t)
    cross_bias = pad_bias(src_mask)
    for i in range(config.layers):
        x = attention(x, x, x, self_bias, f"dec.{i}.self", params, config, train, rng)
        x = attention(
            x, encoder_out, encoder_out, cross_bias, f"dec.{i}.cross", params, config, train, rng
        )
        x = feed_forward(x, f"dec.{i}.ff", params, config, train, rng)
    return x @ params["out_proj"] + params["out_bias"]


def decode_step(prefix_ids, encoder_out, src_mask, params, config):
    """Next-unit logits for a BOS-prefixed id sequence (eval mode)."""
    prefix_ids = np.atleast_2d(np.asarray(prefix_ids))
    if prefix_ids.shape[1] == 0:
        raise ValueError("decoder prefix must be non-empty (starts with BOS)")
    logits = decode(prefix_ids, encoder_out, src_mask, params, config, train=False)
    return logits[:, -1, :]


def forward_loss(batch, params, config, train_mode=True, rng=None):
    """(summed cross-entropy over non-pad tokens, token count).

    Label smoothing applies only in train mode; perplexity is
    exp(unsmoothed loss / tokens).
    """
    src_emb = embed_source(batch.src_ids, batch.lang_ids, batch.style_ids, params, config)
    enc = encode(src_emb, batch.src_mask, params, config, train_mode, rng)
    logits = decode(batch.tgt_in_ids, enc, batch.src_mask, params, config, train_mode, rng)
    b, t, v = logits.shape
    flat = T.reshape(logits, (b * t, v))
    smoothing = config.label_smoothing if train_mode else 0.0
    loss = T.cross_entropy_logits(
        flat, batch.tgt_out_ids.reshape(-1), batch.tgt_mask.reshape(-1), smoothing
    )
    return loss, float(batch.tgt_mask.sum())


# -- checkpoint container ------------------------------------------------

def _write_array(f, arr):
    arr = np.ascontiguousarray(arr, dtype="<f4")
    f.write(struct.pack("<I", arr.ndim))
    for dim in arr.shape:
        f.write(struct.pack("<I", dim))
    f.write(arr.tobytes())


def _read_array(f):
    (rank,) = struct.unpack("<I", f.read(4))
    shape = tuple(struct.unpack("<I", f.read(4))[0] for _ in range(rank))
    count = int(np.prod(shape)) if shape else 1
    data = np.frombuffer(f.read(4 * count), dtype="<f4").reshape(shape)
    return data.astype(np.float32)


def save_checkpoint(path, config_json, params, opt_state=None, seed=0, extra=None, magic=MAGIC):
    """Write the binary container. params: dict name -> Tensor."""
    with open(path, "wb") as f:
        f.write(magic)
        f.write(struct.pack("<I", CONTAINER_VERSION))
        cfg = config_json.encode("utf-8")
        f.write(struct.pack("<I", len(cfg)))
        f.write(cfg)
        names = list(params)
        f.write(struct.pack("<I", len(names)))
        for name in names:
            nb = name.encode("utf-8")
            f.write(struct.pack("<I", len(nb)))
            f.write(nb)
            _write_array(f, params[name].data)
        if opt_state is None:
            f.write(struct.pack("<B", 0))
        else:
            f.write(struct.pack("<B", 1))
            f.write(struct.pack("<ddddQ", opt_state.lr, opt_state.beta1,
                                opt_state.beta2, opt_state.eps, opt_state.step))
            for name in names:
                _write_array(f, opt_state.m.get(name, np.zeros_like(params[name].data)))
                _write_array(f, opt_state.v.get(name, np.zeros_like(params[name].data)))
        f.write(struct.pack("<Q", seed))
        blob = json.dumps(extra or {}, sort_keys=True).encode("utf-8")
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)


def load_checkpoint(path, magic=MAGIC):
    """Read the container back; returns (config_json, params, opt_state, seed, extra)."""
    from .tensor import AdamState

    with open(path, "rb") as f:
        got = f.read(4)
        if got != magic:
            raise ValueError(f"bad checkpoint magic {got!r} (expected {magic!r})")
        (version,) = struct.unpack("<I", f.read(4))
        if version != CONTAINER_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        (cfg_len,) = struct.unpack("<I", f.read(4))
        config_json = f.read(cfg_len).decode("utf-8")
        (n_params,) = struct.unpack("<I", f.read(4))
        params = {}
        names = []
        for _ in range(n_params):
            (name_len,) = struct.unpack("<I", f.read(4))
            name = f.read(name_len).decode("utf-8")
            names.append(name)
            params[name] = T.Tensor(_read_array(f), requires_grad=True)
        (has_opt,) = struct.unpack("<B", f.read(1))
        opt_state = None
        if has_opt:
            lr, b1, b2, eps, step = struct.unpack("<ddddQ", f.read(40))
            opt_state = AdamState(lr=lr, beta1=b1, beta2=b2, eps=eps, step=step)
            for name in names:
                opt_state.m[name] = _read_array(f)
                opt_state.v[name] = _read_array(f)
        (seed,) = struct.unpack("<Q", f.read(8))
        (blob_len,) = struct.unpack("<I", f.read(4))
        extra = json.loads(f.read(blob_len).decode("utf-8"))
    return config_json, params, opt_state, seed, extra
