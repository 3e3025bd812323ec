import dataclasses
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coocnet import imaging, net
from coocnet.cooc import CoOccConfig
from coocnet.errors import (
    AmbiguousLabel,
    EmptyDirectory,
    EmptyManifest,
    EmptySplit,
    SingleCategory,
)
from coocnet.harness import (
    ImageRecord,
    TrainConfig,
    build_manifest,
    compute_metrics,
    cross_dataset,
    evaluate,
    leave_one_category_out,
    load_manifest,
    save_manifest,
    split_dataset,
    split_sizes,
    train,
)
from coocnet.net.spec import zero_params


def tiny_cfg(epochs=2, seed=1, **kw):
    return TrainConfig(epochs=epochs, batch_size=40, seed=seed,
                       cooc=CoOccConfig(bins=16), **kw)


def records_for(n, real_frac=0.5):
    n_real = round(n * real_frac)
    return [ImageRecord(f"img{i:05d}.png", "real" if i < n_real else "gan", "c")
            for i in range(n)]


# --- manifest building and persistence -------------------------------------------

def test_build_manifest_counts_and_labels(tmp_path, rng):
    for sub, n in (("real/forest", 3), ("gan/seagan", 2)):
        d = tmp_path / sub
        d.mkdir(parents=True)
        for i in range(n):
            imaging.save_image(d / f"i{i}.png",
                               rng.integers(0, 256, (8, 8, 3), dtype=np.uint8))
    records = build_manifest(str(tmp_path))
    assert len(records) == 5
    assert Counter(r.label for r in records) == {"real": 3, "gan": 2}
    assert Counter(r.category for r in records) == {"forest": 3, "seagan": 2}
    assert all(r.split == "unassigned" for r in records)
    assert records == sorted(records, key=lambda r: r.path)


def test_build_manifest_empty_and_ambiguous(tmp_path):
    with pytest.raises(EmptyDirectory):
        build_manifest(str(tmp_path / "missing"))
    (tmp_path / "real" / "x").mkdir(parents=True)
    with pytest.raises(EmptyDirectory):  # no images anywhere
        build_manifest(str(tmp_path))
    (tmp_path / "synthetic" / "y").mkdir(parents=True)
    with pytest.raises(AmbiguousLabel):
        build_manifest(str(tmp_path))


def test_manifest_rerun_is_byte_identical(synth_tree, tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save_manifest(build_manifest(str(synth_tree)), a)
    save_manifest(build_manifest(str(synth_tree)), b)
    assert a.read_bytes() == b.read_bytes()


def test_manifest_roundtrip(tmp_path):
    records = records_for(7, real_frac=0.4)
    records[0].split = "train"
    p = tmp_path / "m.jsonl"
    save_manifest(records, p)
    assert load_manifest(p) == records


def test_manifest_rejects_duplicates_and_bad_labels(tmp_path):
    p = tmp_path / "m.jsonl"
    save_manifest([ImageRecord("a.png", "real", "c")] * 2, p)
    with pytest.raises(AmbiguousLabel):
        load_manifest(p)
    p.write_text('{"path":"a.png","label":"fake","category":"c","split":"unassigned"}\n')
    with pytest.raises(AmbiguousLabel):
        load_manifest(p)


# --- splitting --------------------------------------------------------------------

def test_split_100_balanced():
    out = split_dataset(records_for(100), seed=5)
    sizes = Counter(r.split for r in out)
    assert sizes == {"train": 50, "val": 25, "test": 25}
    for split in ("train", "val", "test"):
        n_real = sum(1 for r in out if r.split == split and r.label == "real")
        assert abs(n_real - sizes[split] / 2) <= 0.5 + 1e-9


def test_split_rounding_rule_9076():
    assert split_sizes(36302) == (18151, 9075, 9076)
    assert split_sizes(100) == (50, 25, 25)
    assert split_sizes(7) == (3, 1, 3)


def test_split_partitions_and_is_deterministic():
    records = records_for(83, real_frac=0.3)
    a = split_dataset(records, seed=9)
    b = split_dataset(records, seed=9)
    assert [r.split for r in a] == [r.split for r in b]
    assert all(r.split in ("train", "val", "test") for r in a)
    assert [r.path for r in a] == [r.path for r in records]  # order kept
    assert all(r.split == "unassigned" for r in records)      # input untouched


@settings(max_examples=60, deadline=None)
@given(n=st.integers(4, 600), n_real=st.integers(0, 600), seed=st.integers(0, 2**40))
def test_split_stratification_property(n, n_real, seed):
    n_real = min(n_real, n)
    records = [ImageRecord(f"p{i}.png", "real" if i < n_real else "gan", "c")
               for i in range(n)]
    out = split_dataset(records, seed=seed)
    sizes = Counter(r.split for r in out)
    assert sum(sizes.values()) == n
    global_frac = n_real / n
    for split in ("train", "val", "test"):
        if sizes[split] == 0:
            continue
        frac = sum(1 for r in out if r.split == split and r.label == "real") / sizes[split]
        assert abs(frac - global_frac) * sizes[split] <= 1.0 + 1e-9


def test_split_empty_manifest():
    with pytest.raises(EmptyManifest):
        split_dataset([], seed=0)


# --- metrics ----------------------------------------------------------------------

def test_metrics_arithmetic_identity():
    probs = [0.9, 0.2, 0.7, 0.4, 0.5]
    labels = ["gan", "real", "real", "gan", "gan"]
    cats = ["a", "a", "b", "b", "b"]
    m = compute_metrics(probs, labels, cats)
    c = m.confusion
    assert c.tp + c.tn + c.fp + c.fn == 5
    assert m.accuracy * c.total == c.tp + c.tn
    # ties predict gan: the 0.5 sample is a gan label, so it counts correct
    assert (c.tp, c.tn, c.fp, c.fn) == (2, 1, 1, 1)
    assert m.per_category == {"a": 1.0, "b": pytest.approx(1 / 3)}


def test_single_example_confusion():
    m = compute_metrics([0.8], ["gan"], ["x"])
    assert m.accuracy == 1.0
    assert (m.confusion.tp, m.confusion.tn, m.confusion.fp, m.confusion.fn) == (1, 0, 0, 0)


def test_zero_model_accuracy_equals_gan_fraction(synth_manifest):
    spec = net.default_network_spec(bins=16)
    zp = zero_params(spec)
    records = [dataclasses.replace(r, split="test") for r in synth_manifest]
    m = evaluate(zp, spec, records, "test", CoOccConfig(bins=16))
    gan_frac = sum(1 for r in records if r.label == "gan") / len(records)
    assert m.accuracy == gan_frac
    assert m.confusion.tn == 0 and m.confusion.fn == 0  # everything predicted gan


# --- training ---------------------------------------------------------------------

def test_train_two_images_one_epoch(synth_manifest):
    records = [dataclasses.replace(synth_manifest[0], split="train"),
               dataclasses.replace(synth_manifest[-1], split="train")]
    val = [dataclasses.replace(synth_manifest[1], split="val")]
    params, metrics = train(records + val, net.default_network_spec(bins=16),
                            tiny_cfg(epochs=1))
    assert len(metrics.history) == 1
    assert metrics.history[0].epoch == 0


def test_train_best_retention_and_repeatability(synth_manifest):
    spec = net.default_network_spec(bins=16)
    manifest = split_dataset(synth_manifest, seed=4)
    params_a, ma = train(manifest, spec, tiny_cfg(epochs=3))
    assert ma.accuracy == max(h.val_acc for h in ma.history)
    params_b, mb = train(manifest, spec, tiny_cfg(epochs=3))
    rel = abs(ma.history[0].train_loss - mb.history[0].train_loss)
    rel /= max(abs(ma.history[0].train_loss), 1e-12)
    assert rel < 1e-5
    for a, b in zip(params_a, params_b):
        for k in a:
            assert np.array_equal(a[k], b[k])


def test_train_requires_splits(synth_manifest):
    spec = net.default_network_spec(bins=16)
    with pytest.raises(EmptySplit):
        train(list(synth_manifest), spec, tiny_cfg())


def test_evaluate_empty_split(synth_manifest):
    spec = net.default_network_spec(bins=16)
    with pytest.raises(EmptySplit):
        evaluate(zero_params(spec), spec, list(synth_manifest), "test",
                 CoOccConfig(bins=16))


def test_evaluate_is_pure(synth_manifest):
    spec = net.default_network_spec(bins=16)
    params = net.init_params(spec, seed=8)
    records = split_dataset(synth_manifest, seed=2)
    m1 = evaluate(params, spec, records, "test", CoOccConfig(bins=16))
    m2 = evaluate(params, spec, records, "test", CoOccConfig(bins=16))
    assert m1 == m2


# --- protocols --------------------------------------------------------------------

def test_cross_dataset_self_consistency(synth_manifest):
    spec = net.default_network_spec(bins=16)
    manifest = list(synth_manifest)
    metrics = cross_dataset(manifest, manifest, spec, tiny_cfg(epochs=2))
    best_train_acc = max(h.val_acc for h in metrics.history)
    assert metrics.accuracy >= best_train_acc - 1e-9


def test_cross_dataset_size_transfer(tmp_path):
    spec = net.default_network_spec(bins=16)
    imaging.synth_dataset(tmp_path / "big", count=16, size=(64, 64), seed=3)
    imaging.synth_dataset(tmp_path / "small", count=8, size=(48, 48), seed=4)
    m = cross_dataset(build_manifest(str(tmp_path / "big")),
                      build_manifest(str(tmp_path / "small")),
                      spec, tiny_cfg(epochs=6))
    assert m.accuracy >= 0.90


def _two_category_tree(tmp_path):
    rng_base = 500
    for ci, cat in enumerate(("smoothA", "smoothB")):
        d = tmp_path / "gan" / cat
        d.mkdir(parents=True)
        for i in range(4):
            img = imaging.synth_sample("smooth", rng_base + ci * 97 + i, (64, 64))
            imaging.save_image(d / f"g{i}.png", img)
    d = tmp_path / "real" / "noise"
    d.mkdir(parents=True)
    for i in range(8):
        imaging.save_image(d / f"r{i}.png",
                           imaging.synth_sample("noisy", 900 + i, (64, 64)))
    return build_manifest(str(tmp_path))


def test_loco_partition_and_average(tmp_path):
    manifest = _two_category_tree(tmp_path)
    spec = net.default_network_spec(bins=16)
    table = leave_one_category_out(manifest, spec, tiny_cfg(epochs=2))
    assert sorted(table.rows) == ["smoothA", "smoothB"]
    accs = [m.accuracy for m in table.rows.values()]
    assert abs(table.average - float(np.mean(accs))) < 1e-9
    for cat, m in table.rows.items():
        # each row evaluates as many gan images as the held-out category has,
        # paired with an equal number of reals
        assert m.confusion.total == 8


def test_loco_single_category(synth_manifest):
    spec = net.default_network_spec(bins=16)
    with pytest.raises(SingleCategory):
        leave_one_category_out(list(synth_manifest), spec, tiny_cfg())
