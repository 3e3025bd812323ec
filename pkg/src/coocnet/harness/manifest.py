"""Dataset manifests: building, JSONL persistence, deterministic splitting."""

import dataclasses
import json
import math
import os

import numpy as np

from ..errors import AmbiguousLabel, EmptyDirectory, EmptyManifest

LABELS = ("real", "gan")
SPLITS = ("train", "val", "test", "unassigned")
_IMAGE_EXTS = (".png", ".jpg", ".jpeg")


@dataclasses.dataclass
class ImageRecord:
    path: str
    label: str
    category: str
    split: str = "unassigned"


def _validate(rec):
    if rec.label not in LABELS:
        raise AmbiguousLabel(f"label {rec.label!r} for {rec.path} (expected real or gan)")
    if not rec.category:
        raise AmbiguousLabel(f"empty category for {rec.path}")
    if rec.split not in SPLITS:
        raise AmbiguousLabel(f"unknown split {rec.split!r} for {rec.path}")
    return rec


def build_manifest(root_dir, labeling_rule=None):
    """Walk <root>/<label>/<category>/*.png|jpg into a record list.

    labeling_rule maps first-level directory names to labels; by default the
    directories must literally be named "real" and "gan". Records come back
    sorted by path so re-runs on an unchanged tree are byte-identical.
    """
    if labeling_rule is None:
        labeling_rule = {"real": "real", "gan": "gan"}
    if not os.path.isdir(root_dir):
        raise EmptyDirectory(f"{root_dir} is not a directory")
    records = []
    for entry in sorted(os.listdir(root_dir)):
        top = os.path.join(root_dir, entry)
        if not os.path.isdir(top):
            continue
        if entry not in labeling_rule:
            raise AmbiguousLabel(
                f"directory {entry!r} under {root_dir} has no label rule"
            )
        label = labeling_rule[entry]
        for category in sorted(os.listdir(top)):
            cat_dir = os.path.join(top, category)
            if not os.path.isdir(cat_dir):
                continue
            for fname in sorted(os.listdir(cat_dir)):
                if os.path.splitext(fname)[1].lower() in _IMAGE_EXTS:
                    records.append(
                        ImageRecord(os.path.join(cat_dir, fname), label, category)
                    )
    if not records:
        raise EmptyDirectory(f"no labeled images found under {root_dir}")
    records.sort(key=lambda r: r.path)
    return [_validate(r) for r in records]


def save_manifest(records, path):
    """One compact JSON object per line; key order fixed for reproducibility."""
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(dataclasses.asdict(r), sort_keys=True,
                                separators=(",", ":")) + "\n")


def load_manifest(path):
    records = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            rec = _validate(ImageRecord(d["path"], d["label"], d["category"],
                                        d.get("split", "unassigned")))
            if rec.path in seen:
                raise AmbiguousLabel(f"duplicate path in manifest: {rec.path}")
            seen.add(rec.path)
            records.append(rec)
    return records


def _real_quota(split_sizes, n_real, n_total):
    """Largest-remainder allocation of the real-label count to each split.

    Every split ends within one example of its exact proportional share,
    which is what keeps per-split label fractions within +-1/split_size of
    the global fraction. Ties in the fractional parts resolve in split
    order (train, val, test).
    """
    exact = [s * n_real / n_total for s in split_sizes]
    quota = [math.floor(e) for e in exact]
    short = n_real - sum(quota)
    order = sorted(range(len(split_sizes)), key=lambda i: (-(exact[i] - quota[i]), i))
    for i in order[:short]:
        quota[i] += 1
    return quota


def split_sizes(n, ratios=(0.50, 0.25, 0.25)):
    """Rounding rule: train and val take floors, test takes the remainder."""
    t = math.floor(n * ratios[0])
    v = math.floor(n * ratios[1])
    return t, v, n - t - v


def split_dataset(records, ratios=(0.50, 0.25, 0.25), seed=0):
    """Assign train/val/test splits, stratified by label.

    Shuffling is seeded and operates on the records grouped by label and
    sorted by path, so the assignment depends only on (paths, labels, seed).
    Returns a new record list in the original order; the input is untouched.
    """
    if not records:
        raise EmptyManifest("cannot split an empty manifest")
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) < 0:
        raise ValueError(f"ratios must be three non-negative values summing to 1, got {ratios}")
    n = len(records)
    sizes = split_sizes(n, ratios)
    n_real = sum(1 for r in records if r.label == "real")
    real_quota = _real_quota(sizes, n_real, n)
    gan_quota = [s - q for s, q in zip(sizes, real_quota)]

    order = sorted(range(n), key=lambda i: records[i].path)
    rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF])
    assignment = {}
    for label, quota in (("real", real_quota), ("gan", gan_quota)):
        group = [i for i in order if records[i].label == label]
        group = [group[j] for j in rng.permutation(len(group))]
        pos = 0
        for split, q in zip(("train", "val", "test"), quota):
            for i in group[pos:pos + q]:
                assignment[i] = split
            pos += q
    return [dataclasses.replace(r, split=assignment[i]) for i, r in enumerate(records)]


def select_split(records, split):
    """Records of one split; split="all" selects everything."""
    if split == "all":
        return list(records)
    if split not in ("train", "val", "test", "unassigned"):
        raise ValueError(f"unknown split {split!r}")
    return [r for r in records if r.split == split]
