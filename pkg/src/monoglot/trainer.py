"""Training loop: Adam updates, periodic validation checkpoints, plateau
learning-rate decay and early stopping.

Schedule: every `checkpoint_interval` updates, validation perplexity is
computed. No improvement for `plateau_patience` checkpoints multiplies
the learning rate by `lr_decay`; no improvement for `stop_patience`
checkpoints stops training. Ties count as non-improvement.

All stochastic draws (batch order, dropout) are keyed on
(seed, epoch/update index), so resuming from a checkpoint reproduces
the uninterrupted run bit-exactly.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from . import tensor as T
from . import corpus as corpus_mod
from . import transformer as tfm


class TrainingDataError(ValueError):
    pass


@dataclass
class TrainState:
    update_count: int = 0
    checkpoint_index: int = 0
    epoch: int = 0
    lr: float = 2e-4
    best_valid_ppl: float = math.inf
    best_checkpoint: int = -1
    checkpoints_since_best: int = 0
    plateau_counter: int = 0


@dataclass
class TrainSettings:
    lr: float = 2e-4
    lr_decay: float = 0.7
    plateau_patience: int = 8
    stop_patience: int = 32
    checkpoint_interval: int = 200
    word_budget: int = 2048
    max_epochs: int = 100
    grad_clip: float = 1.0
    seed: int = 1
    label_smoothing: float = None  # None: use the model config value
    require_crosslingual: bool = True


def schedule_update(state, settings, new_ppl):
    """Apply one validation result to the schedule state.

    Improvement resets the stale counters; otherwise both counters
    increment, and hitting plateau_patience decays lr and resets only
    the plateau counter.
    """
    if new_ppl < state.best_valid_ppl:
        state.best_valid_ppl = new_ppl
        state.checkpoints_since_best = 0
        state.plateau_counter = 0
        improved = True
    else:
        state.checkpoints_since_best += 1
        state.plateau_counter += 1
        improved = False
        if state.plateau_counter >= settings.plateau_patience:
            state.lr *= settings.lr_decay
            state.plateau_counter = 0
    return improved


def validate(params, config, valid_batches):
    """exp(mean unsmoothed token loss) over the validation batches."""
    if not valid_batches:
        raise ValueError("validation set is empty")
    total = 0.0
    count = 0.0
    for batch in valid_batches:
        loss, n = tfm.forward_loss(batch, params, config, train_mode=False)
        total += loss.item()
        count += n
    return math.exp(total / count)


def _epoch_batches(examples, pipeline, settings, epoch):
    return corpus_mod.make_batches(
        examples, pipeline, settings.word_budget, seed=settings.seed * 1000003 + epoch
    )


def _dropout_rng(settings, update):
    return np.random.default_rng([settings.seed, 7919, update])


def train(
    config,
    pipeline,
    train_pairs,
    valid_pairs,
    out_dir,
    settings=None,
    log=None,
    resume_from=None,
):
    """Train a model; returns (best checkpoint path, training log rows).

    train_pairs/valid_pairs: SentencePair lists. The training stream must
    be cross-lingual only (src_lang != tgt_lang); monolingual pairs are a
    configuration error unless settings.require_crosslingual is off.
    """
    settings = settings or TrainSettings()
    if not train_pairs or not valid_pairs:
        raise TrainingDataError("training and validation sets must be non-empty")
    if settings.require_crosslingual:
        for p in train_pairs:
            if p.src_lang == p.tgt_lang:
                raise TrainingDataError(
                    f"monolingual pair in training data ({p.src_lang}): {p.src!r}"
                )
    os.makedirs(out_dir, exist_ok=True)
    examples = [corpus_mod.annotate_factors(p, pipeline) for p in train_pairs]
    valid_examples = [corpus_mod.annotate_factors(p, pipeline) for p in valid_pairs]
    valid_batches = corpus_mod.make_batches(
        valid_examples, pipeline, settings.word_budget, seed=0
    )

    if resume_from is not None:
        cfg_json, params, adam, seed, extra = tfm.load_checkpoint(resume_from)
        config = tfm.ModelConfig.from_json(cfg_json)
        state = TrainState(**extra["train_state"])
    else:
        params = tfm.init_params(config, seed=settings.seed)
        adam = T.AdamState(lr=settings.lr)
        state = TrainState(lr=settings.lr)
    if settings.label_smoothing is not None:
        config.label_smoothing = settings.label_smoothing

    log_rows = []
    log_path = os.path.join(out_dir, "training_log.tsv")
    log_mode = "a" if resume_from is not None else "w"
    log_f = open(log_path, log_mode, encoding="utf-8")
    if resume_from is None:
        log_f.write("checkpoint\tupdates\tlr\ttrain_loss\tvalid_ppl\n")

    running_loss = 0.0
    running_tokens = 0.0
    stop = False
    last_good = resume_from

    # updates consumed before the resume epoch, for deterministic skip
    prior_updates = sum(
        len(_epoch_batches(examples, pipeline, settings, e)) for e in range(state.epoch)
    ) if resume_from is not None else 0

    try:
        for epoch in range(state.epoch, settings.max_epochs):
            state.epoch = epoch
            batches = _epoch_batches(examples, pipeline, settings, epoch)
            done_in_epoch = max(state.update_count - prior_updates, 0)
            prior_updates += len(batches)
            for bi, batch in enumerate(batches):
                if bi < done_in_epoch:
                    continue
                rng = _dropout_rng(settings, state.update_count)
                loss, ntok = tfm.forward_loss(batch, params, config, True, rng)
                loss_val = loss.item()
                if not math.isfinite(loss_val):
                    raise T.TensorError(
                        f"non-finite training loss at update {state.update_count}; "
                        f"last good checkpoint: {last_good}"
                    )
                mean_loss = loss * (1.0 / ntok)
                T.backward(mean_loss)
                grads = {n: p.grad for n, p in params.items() if p.grad is not None}
                T.clip_grads(grads, settings.grad_clip)
                adam.lr = state.lr
                T.adam_step(params, grads, adam)
                for p in params.values():
                    p.zero_grad()
                running_loss += loss_val
                running_tokens += ntok
                state.update_count += 1

                if state.update_count % settings.checkpoint_interval == 0:
                    ppl = validate(params, config, valid_batches)
                    state.checkpoint_index += 1
                    train_loss = running_loss / max(running_tokens, 1.0)
                    running_loss = running_tokens = 0.0
                    improved = schedule_update(state, settings, ppl)
                    if improved:
                        state.best_checkpoint = state.checkpoint_index
                    row = (state.checkpoint_index, state.update_count, state.lr, train_loss, ppl)
                    log_rows.append(row)
                    log_f.write(
                        f"{row[0]}\t{row[1]}\t{row[2]:.8g}\t{row[3]:.6f}\t{row[4]:.6f}\n"
                    )
                    log_f.flush()
                    if log:
                        log(f"checkpoint {row[0]}: updates={row[1]} lr={row[2]:.3g} "
                            f"loss={row[3]:.4f} ppl={row[4]:.4f}")
                    ckpt_path = os.path.join(out_dir, "last.ckpt")
                    _save(ckpt_path, config, params, adam, settings, state)
                    last_good = ckpt_path
                    if improved:
                        _save(os.path.join(out_dir, "best.ckpt"), config, params, adam,
                              settings, state)
                    if state.checkpoints_since_best >= settings.stop_patience:
                        stop = True
                        break
            if stop:
                break
    finally:
        log_f.close()

    best_path = os.path.join(out_dir, "best.ckpt")
    if not os.path.exists(best_path):
        _save(best_path, config, params, adam, settings, state)
    return best_path, log_rows


def _save(path, config, params, adam, settings, state):
    tfm.save_checkpoint(
        path,
        config.to_json(),
        params,
        opt_state=adam,
        seed=settings.seed,
        extra={"train_state": asdict(state)},
    )
