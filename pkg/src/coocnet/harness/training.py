"""Feature extraction, the training loop, and checkpoint-selecting evaluation."""

import dataclasses
import logging

import numpy as np

from .. import net
from ..cooc import CoOccConfig, batch_extract
from ..errors import EmptySplit
from .manifest import select_split
from .metrics import EpochStats, compute_metrics
from ..net.spec import copy_params

logger = logging.getLogger("coocnet.harness")

_SEED_MASK = 0xFFFFFFFFFFFFFFFF


@dataclasses.dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 40
    seed: int = 0
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    cooc: CoOccConfig = dataclasses.field(default_factory=CoOccConfig)
    workers: int = 1

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def label01(label):
    """gan is the positive class."""
    return 1.0 if label == "gan" else 0.0


def extract_features(records, cooc_cfg, workers=1, jpeg_quality=None, cache_dir=None):
    """Tensors plus aligned surviving records.

    Returns (kept_records, xs, ys, failures); failures are logged as a
    pre-run report, and the kept records stay in input order.
    """
    records = list(records)
    pairs, failures = batch_extract(records, cooc_cfg, workers=workers,
                                    jpeg_quality=jpeg_quality, cache_dir=cache_dir)
    for f in failures:
        logger.warning("skipping %s: %s", f.path, f.message)
    failed = {f.path for f in failures}
    kept = [r for r in records if r.path not in failed]
    xs = [tensor for tensor, _ in pairs]
    ys = [label01(label) for _, label in pairs]
    return kept, xs, ys, failures


def _validation_stats(params, spec, xs, ys, workers):
    probs = net.predict_batch(params, spec, xs, workers=workers)
    loss = float(np.mean([net.bce_loss(p, y) for p, y in zip(probs, ys)]))
    acc = float(np.mean([(p >= 0.5) == (y >= 0.5) for p, y in zip(probs, ys)]))
    return probs, loss, acc


def fit(spec, train_xs, train_ys, val_xs, val_ys, cfg):
    """Mini-batch Adam over precomputed tensors.

    The training split is reshuffled every epoch with a generator seeded
    from (seed, epoch). After each epoch the model is scored on the validation
    tensors; the parameters with the highest validation accuracy are
    retained (earliest epoch wins ties) and returned with the history.
    """
    n = len(train_xs)
    params = net.init_params(spec, cfg.seed)
    state = net.init_optimizer_state(params, cfg.learning_rate, cfg.beta1,
                                     cfg.beta2, cfg.epsilon)
    history = []
    best = None
    for epoch in range(cfg.epochs):
        perm = np.random.default_rng([cfg.seed & _SEED_MASK, epoch]).permutation(n)
        loss_sum = 0.0
        correct = 0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            batch_xs = [train_xs[i] for i in idx]
            batch_ys = [train_ys[i] for i in idx]
            loss, grads, ok = net.batch_gradients(params, spec, batch_xs, batch_ys,
                                                  workers=cfg.workers)
            params, state = net.adam_step(params, grads, state)
            loss_sum += loss * len(idx)
            correct += ok
        _, val_loss, val_acc = _validation_stats(params, spec, val_xs, val_ys, cfg.workers)
        stats = EpochStats(epoch=epoch, train_loss=loss_sum / n, train_acc=correct / n,
                           val_loss=val_loss, val_acc=val_acc)
        history.append(stats)
        logger.info("epoch %d: train loss %.4f acc %.4f | val loss %.4f acc %.4f",
                    epoch, stats.train_loss, stats.train_acc, val_loss, val_acc)
        if best is None or val_acc > best[0]:
            best = (val_acc, copy_params(params))
    return best[1], history


def train(manifest, spec, cfg, val_records=None, jpeg_quality=None, cache_dir=None):
    """Train on the manifest's train split, select by validation accuracy.

    val_records overrides the manifest's val split (the cross-dataset
    protocol validates on its own training data). Returns (best params,
    Metrics); the Metrics carry the full epoch history and describe the
    best model's validation performance.
    """
    train_records = select_split(manifest, "train")
    if val_records is None:
        val_records = select_split(manifest, "val")
    if not train_records:
        raise EmptySplit("train split is empty")
    if not val_records:
        raise EmptySplit("val split is empty")

    kept_tr, train_xs, train_ys, _ = extract_features(
        train_records, cfg.cooc, cfg.workers, jpeg_quality, cache_dir)
    if val_records is train_records:
        kept_val, val_xs, val_ys = kept_tr, train_xs, train_ys
    else:
        kept_val, val_xs, val_ys, _ = extract_features(
            val_records, cfg.cooc, cfg.workers, jpeg_quality, cache_dir)
    if not train_xs:
        raise EmptySplit("no train images survived extraction")
    if not val_xs:
        raise EmptySplit("no val images survived extraction")

    best_params, history = fit(spec, train_xs, train_ys, val_xs, val_ys, cfg)

    probs, _, _ = _validation_stats(best_params, spec, val_xs, val_ys, cfg.workers)
    losses = [net.bce_loss(p, y) for p, y in zip(probs, val_ys)]
    metrics = compute_metrics(probs, [r.label for r in kept_val],
                              [r.category for r in kept_val], losses, history)
    return best_params, metrics


def evaluate(params, spec, manifest, split="test", cooc_cfg=None, workers=1,
             jpeg_quality=None, cache_dir=None):
    """Threshold-0.5 metrics over one split ("all" evaluates every record)."""
    if cooc_cfg is None:
        cooc_cfg = CoOccConfig()
    records = select_split(manifest, split)
    if not records:
        raise EmptySplit(f"split {split!r} has no records")
    kept, xs, ys, _ = extract_features(records, cooc_cfg, workers, jpeg_quality, cache_dir)
    if not xs:
        raise EmptySplit(f"no images in split {split!r} survived extraction")
    probs = net.predict_batch(params, spec, xs, workers=workers)
    losses = [net.bce_loss(p, y) for p, y in zip(probs, ys)]
    return compute_metrics(probs, [r.label for r in kept],
                           [r.category for r in kept], losses)
