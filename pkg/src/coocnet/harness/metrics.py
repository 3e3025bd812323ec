"""Accuracy/confusion bookkeeping and report serialization.

The positive class is "gan" throughout: a probability p >= 0.5 predicts
gan (ties deliberately fall to gan so the all-0.5 degenerate model behaves
deterministically).
"""

import csv
import dataclasses
import json

POSITIVE_LABEL = "gan"


def classify(prob):
    return "gan" if prob >= 0.5 else "real"


@dataclasses.dataclass
class Confusion:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn


@dataclasses.dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


@dataclasses.dataclass
class Metrics:
    accuracy: float
    confusion: Confusion
    mean_loss: float
    per_category: dict
    history: list


def compute_metrics(probs, labels, categories, losses=None, history=None):
    """Threshold-0.5 metrics over aligned (prob, label, category) triples."""
    conf = Confusion()
    cat_hit = {}
    cat_n = {}
    for p, label, cat in zip(probs, labels, categories):
        pred = classify(p)
        if pred == "gan":
            if label == "gan":
                conf.tp += 1
            else:
                conf.fp += 1
        else:
            if label == "real":
                conf.tn += 1
            else:
                conf.fn += 1
        cat_n[cat] = cat_n.get(cat, 0) + 1
        cat_hit[cat] = cat_hit.get(cat, 0) + int(pred == label)
    total = conf.total
    accuracy = (conf.tp + conf.tn) / total if total else 0.0
    mean_loss = float(sum(losses) / len(losses)) if losses else 0.0
    per_category = {c: cat_hit[c] / cat_n[c] for c in sorted(cat_n)}
    return Metrics(accuracy=accuracy, confusion=conf, mean_loss=mean_loss,
                   per_category=per_category, history=list(history or []))


def metrics_to_dict(metrics):
    return {
        "accuracy": metrics.accuracy,
        "confusion": dataclasses.asdict(metrics.confusion),
        "mean_loss": metrics.mean_loss,
        "per_category": dict(metrics.per_category),
        "history": [dataclasses.asdict(h) for h in metrics.history],
    }


def save_metrics_json(metrics, path, metadata=None):
    doc = metrics_to_dict(metrics)
    if metadata:
        doc["run"] = dict(metadata)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_history_csv(history, path):
    """Per-epoch curve data for accuracy/loss plots."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])
        for h in history:
            writer.writerow([h.epoch, f"{h.train_loss:.10g}", f"{h.train_acc:.10g}",
                             f"{h.val_loss:.10g}", f"{h.val_acc:.10g}"])
