"""
NMT Training Module for TermNMT
Plain SGD over length-bucketed minibatches with clipping and perplexity-driven decay
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from TermNMT.errors import ModelError, TrainingDivergedError
from TermNMT.logger.logging_config import get_logger
from TermNMT.nmt.backprop import IdPair, loss_and_gradients, make_batch, score_batch
from TermNMT.nmt.config import NmtConfig
from TermNMT.nmt.model import NmtModel

logger = get_logger("TermNMT.Trainer")

EVAL_BATCH_SIZE = 64


def global_norm(grads: Dict[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def clip_gradients(grads: Dict[str, np.ndarray], max_norm: float) -> Dict[str, np.ndarray]:
    """Scale all gradients by max_norm/g when their global L2 norm g exceeds max_norm"""
    norm = global_norm(grads)
    if norm <= max_norm:
        return grads
    scale = max_norm / norm
    return {name: g * scale for name, g in grads.items()}


def make_minibatches(pairs: Sequence[IdPair], size: int, rng: np.random.Generator) -> List[List[int]]:
    """
    Group pair indices into minibatches of similar target length

    Pairs are sorted by (target length, source length, index), cut into
    consecutive groups of `size` and the group order is shuffled with rng.
    """
    order = sorted(range(len(pairs)), key=lambda i: (len(pairs[i][1]), len(pairs[i][0]), i))
    batches = [order[i : i + size] for i in range(0, len(order), size)]
    rng.shuffle(batches)
    return batches


def perplexity(model: NmtModel, pairs: Sequence[IdPair], batch_size: int = EVAL_BATCH_SIZE) -> float:
    """
    exp of the per-token negative log-likelihood over a dataset

    Raises:
        ModelError: Empty dataset
    """
    if not pairs:
        raise ModelError("Perplexity of an empty dataset is undefined")
    total_logprob = 0.0
    total_tokens = 0
    order = sorted(range(len(pairs)), key=lambda i: len(pairs[i][1]))
    for start in range(0, len(order), batch_size):
        chunk = [pairs[i] for i in order[start : start + batch_size]]
        batch = make_batch(chunk, model.config.reverse_source)
        total_logprob += float(score_batch(model, batch).sum())
        total_tokens += batch.num_target_tokens
    return math.exp(-total_logprob / total_tokens)


class LearningRateSchedule:
    """Multiplies the rate by lr_decay when dev perplexity stops improving on the last three"""

    def __init__(self, lr0: float, lr_decay: float, decay_rule: str = "min_of_last_three"):
        self.lr = lr0
        self.lr_decay = lr_decay
        self.decay_rule = decay_rule
        self.perplexities: List[float] = []

    def should_decay(self, current: float) -> bool:
        if len(self.perplexities) < 3:
            return False
        last_three = self.perplexities[-3:]
        if self.decay_rule == "all_of_last_three":
            return all(current >= p for p in last_three)
        return current >= min(last_three)

    def observe(self, current: float) -> float:
        """Record a dev perplexity and return the (possibly decayed) learning rate"""
        if self.should_decay(current):
            self.lr *= self.lr_decay
            logger.info(f"Dev perplexity {current:.4f} did not improve; learning rate now {self.lr:.6g}")
        self.perplexities.append(current)
        return self.lr


@dataclass
class TrainingHistory:
    evaluations: List[Tuple[int, float, float]] = field(default_factory=list)  # (batch, dev ppl, lr)
    epoch_losses: List[float] = field(default_factory=list)  # mean per-token training NLL
    batches: int = 0
    final_lr: float = 0.0
    cancelled: bool = False

    def to_dict(self) -> dict:
        return {
            "evaluations": [list(e) for e in self.evaluations],
            "epoch_losses": list(self.epoch_losses),
            "batches": self.batches,
            "final_lr": self.final_lr,
            "cancelled": self.cancelled,
        }


class NmtTrainer:
    """Class handling NMT model training"""

    def __init__(self, config: NmtConfig, progress_callback=None):
        """
        Initialize NMT trainer

        Args:
            config: Model and schedule configuration
            progress_callback: Function to call for progress updates (0-100)
        """
        self.config = config
        self.progress_callback = progress_callback
        self._cancel_requested = False
        self.logger = get_logger("TermNMT.Trainer")

    def update_progress(self, value):
        """Update progress if callback is available"""
        if self.progress_callback:
            self.progress_callback(value)

    def request_cancel(self):
        """Request cancellation after the current minibatch."""
        self._cancel_requested = True

    def _sgd_step(self, model: NmtModel, pairs: Sequence[IdPair], lr: float) -> Tuple[float, int]:
        batch = make_batch(pairs, model.config.reverse_source)
        loss, grads = loss_and_gradients(model, batch)
        if not math.isfinite(loss):
            raise TrainingDivergedError(f"Non-finite training loss {loss} on a batch of {batch.size} sentences")
        # normalize by sentences in the batch before clipping
        grads = {name: g / batch.size for name, g in grads.items()}
        grads = clip_gradients(grads, self.config.clip_norm)
        for name, g in grads.items():
            model.params[name] -= lr * g
        return loss, batch.num_target_tokens

    def train(
        self, model: NmtModel, train_pairs: Sequence[IdPair], dev_pairs: Sequence[IdPair]
    ) -> Tuple[NmtModel, TrainingHistory]:
        """
        Train the model in place for config.epochs epochs

        Args:
            model: Model to train; exclusively owned during training
            train_pairs: (source ids, target ids ending with EOS)
            dev_pairs: Development pairs for the perplexity schedule

        Returns:
            Tuple of (trained model, history)

        Raises:
            TrainingDivergedError: Non-finite loss or parameters
        """
        cfg = self.config
        if not train_pairs:
            raise ModelError("No training pairs")
        if not dev_pairs:
            self.logger.warning("No development pairs; learning rate will not decay")
        rng = np.random.default_rng(cfg.seed)
        schedule = LearningRateSchedule(cfg.lr0, cfg.lr_decay, cfg.decay_rule)
        history = TrainingHistory(final_lr=schedule.lr)
        batches_per_epoch = math.ceil(len(train_pairs) / cfg.minibatch)
        total_batches = max(1, batches_per_epoch * cfg.epochs)
        self._cancel_requested = False

        self.logger.info(
            f"Training on {len(train_pairs)} pairs for {cfg.epochs} epochs "
            f"({batches_per_epoch} batches/epoch, lr0 {cfg.lr0})"
        )
        for epoch in range(1, cfg.epochs + 1):
            epoch_loss = 0.0
            epoch_tokens = 0
            for indices in make_minibatches(train_pairs, cfg.minibatch, rng):
                if self._cancel_requested:
                    self.logger.info(f"Training cancelled after {history.batches} batches")
                    history.cancelled = True
                    history.final_lr = schedule.lr
                    return model, history
                loss, tokens = self._sgd_step(model, [train_pairs[i] for i in indices], schedule.lr)
                epoch_loss += loss
                epoch_tokens += tokens
                history.batches += 1
                if dev_pairs and history.batches % cfg.eval_every_batches == 0:
                    dev_ppl = perplexity(model, dev_pairs)
                    if not math.isfinite(dev_ppl):
                        raise TrainingDivergedError(f"Non-finite dev perplexity after batch {history.batches}")
                    lr = schedule.observe(dev_ppl)
                    history.evaluations.append((history.batches, dev_ppl, lr))
                    self.logger.info(f"Batch {history.batches}: dev perplexity {dev_ppl:.4f}, lr {lr:.6g}")
                self.update_progress(100.0 * history.batches / total_batches)
            if not model.is_finite():
                raise TrainingDivergedError(f"Non-finite parameters after epoch {epoch}")
            history.epoch_losses.append(epoch_loss / max(1, epoch_tokens))
            self.logger.info(f"Epoch {epoch}/{cfg.epochs}: mean token loss {history.epoch_losses[-1]:.4f}")
        history.final_lr = schedule.lr
        return model, history
