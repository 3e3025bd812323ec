"""The three experiment protocols: cross-dataset transfer, leave-one-
category-out, and the JPEG recompression sweep."""

import dataclasses
import logging

import numpy as np

from ..errors import EmptyManifest, SingleCategory
from .training import evaluate, train

logger = logging.getLogger("coocnet.harness")

_SEED_MASK = 0xFFFFFFFFFFFFFFFF


def cross_dataset(train_manifest, test_manifest, spec, cfg, cache_dir=None):
    """Train on every record of one manifest, evaluate on every record of
    the other. With no held-out data to select on, the best checkpoint is
    the one with the highest training-set accuracy."""
    if not train_manifest:
        raise EmptyManifest("train manifest is empty")
    if not test_manifest:
        raise EmptyManifest("test manifest is empty")
    train_records = [dataclasses.replace(r, split="train") for r in train_manifest]
    params, train_metrics = train(train_records, spec, cfg,
                                  val_records=train_records, cache_dir=cache_dir)
    metrics = evaluate(params, spec, test_manifest, split="all", cooc_cfg=cfg.cooc,
                       workers=cfg.workers, cache_dir=cache_dir)
    metrics.history = train_metrics.history
    return metrics


@dataclasses.dataclass
class CategoryTable:
    rows: dict          # category -> Metrics, insertion-ordered
    average: float      # arithmetic mean of the row accuracies


def leave_one_category_out(manifest, spec, cfg, cache_dir=None):
    """Hold out each gan category in turn, train on everything else.

    The held-out gan records are paired with an equal-size seeded sample of
    real records, which is likewise excluded from that run's training set;
    accuracy is then defined over both classes. The held-out pair set
    doubles as the validation set for checkpoint selection.
    """
    gan_records = [r for r in manifest if r.label == "gan"]
    categories = sorted({r.category for r in gan_records})
    if len(categories) < 2:
        raise SingleCategory(f"need >= 2 gan categories, found {categories}")
    real_pool = sorted((r for r in manifest if r.label == "real"), key=lambda r: r.path)

    rows = {}
    for ci, cat in enumerate(categories):
        held_gan = [r for r in gan_records if r.category == cat]
        rng = np.random.default_rng([cfg.seed & _SEED_MASK, ci])
        k = min(len(held_gan), len(real_pool))
        picked = rng.choice(len(real_pool), size=k, replace=False) if k else []
        held_real = [real_pool[i] for i in sorted(picked)]
        held_paths = {r.path for r in held_gan} | {r.path for r in held_real}

        train_records = [dataclasses.replace(r, split="train")
                         for r in manifest if r.path not in held_paths]
        test_records = [dataclasses.replace(r, split="test")
                        for r in held_gan + held_real]
        logger.info("holding out %s: %d gan + %d real test images, %d train",
                    cat, len(held_gan), len(held_real), len(train_records))
        params, _ = train(train_records, spec, cfg, val_records=test_records,
                          cache_dir=cache_dir)
        rows[cat] = evaluate(params, spec, test_records, split="all",
                             cooc_cfg=cfg.cooc, workers=cfg.workers,
                             cache_dir=cache_dir)
    average = float(np.mean([m.accuracy for m in rows.values()]))
    return CategoryTable(rows=rows, average=average)


def jpeg_robustness(manifest, spec, cfg, qualities=(95, 85, 75), cache_dir=None):
    """Recompression sweep; returns ({qf: accuracy}, {qf: accuracy}).

    Scenario A trains once on the original train split and tests on the
    test split recompressed at each quality factor. Scenario B retrains at
    each quality factor, recompressing train, val and test alike.
    """
    qualities = [int(q) for q in qualities]
    params_a, _ = train(manifest, spec, cfg, cache_dir=cache_dir)
    scenario_a = {}
    for qf in qualities:
        m = evaluate(params_a, spec, manifest, split="test", cooc_cfg=cfg.cooc,
                     workers=cfg.workers, jpeg_quality=qf, cache_dir=cache_dir)
        scenario_a[qf] = m.accuracy
        logger.info("scenario A, QF %d: accuracy %.4f", qf, m.accuracy)

    scenario_b = {}
    for qf in qualities:
        params_b, _ = train(manifest, spec, cfg, jpeg_quality=qf, cache_dir=cache_dir)
        m = evaluate(params_b, spec, manifest, split="test", cooc_cfg=cfg.cooc,
                     workers=cfg.workers, jpeg_quality=qf, cache_dir=cache_dir)
        scenario_b[qf] = m.accuracy
        logger.info("scenario B, QF %d: accuracy %.4f", qf, m.accuracy)
    return scenario_a, scenario_b
