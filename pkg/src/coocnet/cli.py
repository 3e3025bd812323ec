"""Command-line front end.

Subcommands wire the library into the full pipeline: manifest building,
synthetic data generation, tensor extraction/caching, training, evaluation,
per-image prediction, and the three experiment protocols.

Exit codes: 0 success, 1 usage/config error, 2 data error (bad images,
manifests, checkpoints, I/O), 3 numerical failure (non-finite activations
or gradients).

Configuration comes from an optional flat key=value file (--config) plus
flags; flags win. Every command emits a run-metadata block (resolved
config, seed, package version, config hash, JPEG codec identity, active
backend) alongside its results so runs are attributable.
"""

import argparse
import dataclasses
import hashlib
import json
import logging
import sys

from . import __version__, backend, imaging, net
from .cooc import CoOccConfig, batch_extract, cooccur_tensor
from .errors import CoocnetError, NonFiniteActivation, NonFiniteGradient
from .harness import (
    TrainConfig,
    build_manifest,
    classify,
    cross_dataset,
    evaluate,
    jpeg_robustness,
    leave_one_category_out,
    load_manifest,
    metrics_to_dict,
    save_history_csv,
    save_manifest,
    split_dataset,
    train,
)

logger = logging.getLogger("coocnet.cli")

DEFAULT_BINS = 256


# --- configuration ------------------------------------------------------------

@dataclasses.dataclass
class RunConfig:
    seed: int = 0
    workers: int = 1
    bins: int = None  # None = take from checkpoint, else DEFAULT_BINS
    offset: tuple = (0, 1)
    symmetric: bool = False
    epochs: int = 50
    batch_size: int = 40
    lr: float = 1e-4
    qualities: tuple = (95, 85, 75)


def _parse_offset(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"offset must be 'dy,dx', got {text!r}")
    return (int(parts[0]), int(parts[1]))


def _parse_qualities(text):
    vals = tuple(int(p) for p in text.split(",") if p.strip())
    if not vals or not all(1 <= q <= 100 for q in vals):
        raise ValueError(f"qualities must be integers in 1..100, got {text!r}")
    return vals


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_size(text):
    if "x" in text:
        w, h = text.split("x", 1)
        return (int(w), int(h))
    side = int(text)
    return (side, side)


_CONFIG_PARSERS = {
    "seed": int,
    "workers": int,
    "bins": int,
    "offset": _parse_offset,
    "symmetric": _parse_bool,
    "epochs": int,
    "batch_size": int,
    "lr": float,
    "qualities": _parse_qualities,
}


def _read_config_file(path):
    """Flat key=value lines; blank lines and #-comments ignored."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            if key not in _CONFIG_PARSERS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _CONFIG_PARSERS[key](val.strip())
    return values


def resolve_config(args):
    """Merge defaults < config file < explicit flags."""
    file_values = _read_config_file(args.config) if getattr(args, "config", None) else {}
    cfg = RunConfig()
    for key in _CONFIG_PARSERS:
        flag = getattr(args, key, None)
        if flag is not None:
            setattr(cfg, key, flag)
        elif key in file_values:
            setattr(cfg, key, file_values[key])
    return cfg


def run_metadata(cfg):
    doc = dataclasses.asdict(cfg)
    doc["offset"] = list(doc["offset"])
    doc["qualities"] = list(doc["qualities"])
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return {
        "config": doc,
        "seed": cfg.seed,
        "version": __version__,
        "config_sha256": hashlib.sha256(blob.encode()).hexdigest(),
        "codec": imaging.jpeg_codec_identity(),
        "backend": backend.active_backend(),
    }


def _cooc_config(cfg, bins):
    return CoOccConfig(offset=cfg.offset, symmetric=cfg.symmetric, bins=bins)


def _train_config(cfg, bins):
    return TrainConfig(epochs=cfg.epochs, batch_size=cfg.batch_size, seed=cfg.seed,
                       learning_rate=cfg.lr, cooc=_cooc_config(cfg, bins),
                       workers=cfg.workers)


def _ensure_split(records, seed):
    """Split the manifest unless the file already carries assignments."""
    if all(r.split == "unassigned" for r in records):
        return split_dataset(records, seed=seed)
    return records


def _load_params(path, cfg):
    """Checkpoint + its spec; a --bins flag that disagrees is an error."""
    params, spec = net.load_checkpoint(path, expect_bins=cfg.bins)
    return params, spec, spec.input_shape[1]


def _emit_json(doc, out_path):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_meta(path, cfg):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(run_metadata(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


# --- subcommands ---------------------------------------------------------------

def cmd_manifest(args, cfg):
    records = build_manifest(args.root)
    save_manifest(records, args.out)
    _write_meta(args.out + ".meta.json", cfg)
    logger.info("wrote %d records to %s", len(records), args.out)
    return 0


def cmd_synth(args, cfg):
    imaging.synth_dataset(args.out_dir, args.count, args.size, cfg.seed)
    _write_meta(str(args.out_dir) + "/meta.json", cfg)
    logger.info("wrote %d images per class under %s", args.count, args.out_dir)
    return 0


def cmd_extract(args, cfg):
    records = load_manifest(args.manifest)
    bins = cfg.bins or DEFAULT_BINS
    pairs, failures = batch_extract(records, _cooc_config(cfg, bins),
                                    workers=cfg.workers, cache_dir=args.out_dir)
    for f in failures:
        logger.warning("failed %s: %s", f.path, f.message)
    _write_meta(str(args.out_dir) + "/extract.meta.json", cfg)
    logger.info("cached %d tensors (%d failures) under %s",
                len(pairs), len(failures), args.out_dir)
    return 0


def cmd_train(args, cfg):
    records = _ensure_split(load_manifest(args.manifest), cfg.seed)
    bins = cfg.bins or DEFAULT_BINS
    spec = net.default_network_spec(bins=bins)
    params, metrics = train(records, spec, _train_config(cfg, bins),
                            cache_dir=args.cache_dir)
    net.save_checkpoint(params, spec, args.out_checkpoint)
    save_history_csv(metrics.history, args.out_checkpoint + ".history.csv")
    _write_meta(args.out_checkpoint + ".meta.json", cfg)
    doc = metrics_to_dict(metrics)
    doc["run"] = run_metadata(cfg)
    _emit_json(doc, args.out)
    return 0


def cmd_eval(args, cfg):
    params, spec, bins = _load_params(args.checkpoint, cfg)
    records = _ensure_split(load_manifest(args.manifest), cfg.seed)
    metrics = evaluate(params, spec, records, split=args.split,
                       cooc_cfg=_cooc_config(cfg, bins), workers=cfg.workers,
                       cache_dir=args.cache_dir)
    doc = metrics_to_dict(metrics)
    doc["run"] = run_metadata(cfg)
    _emit_json(doc, args.out)
    return 0


def cmd_predict(args, cfg):
    params, spec, bins = _load_params(args.checkpoint, cfg)
    cooc_cfg = _cooc_config(cfg, bins)
    sys.stderr.write(json.dumps(run_metadata(cfg), sort_keys=True,
                                separators=(",", ":")) + "\n")
    failures = 0
    for path in args.images:
        try:
            tensor = cooccur_tensor(imaging.load_image(path), cooc_cfg)
            prob = net.forward(params, spec, tensor)
            sys.stdout.write(f"{path}\t{prob:.6f}\t{classify(prob)}\n")
        except (CoocnetError, OSError) as exc:
            failures += 1
            logger.error("failed %s: %s", path, exc)
    return 2 if failures else 0


def cmd_xdataset(args, cfg):
    train_records = load_manifest(args.train_manifest)
    test_records = load_manifest(args.test_manifest)
    bins = cfg.bins or DEFAULT_BINS
    spec = net.default_network_spec(bins=bins)
    metrics = cross_dataset(train_records, test_records, spec,
                            _train_config(cfg, bins), cache_dir=args.cache_dir)
    doc = metrics_to_dict(metrics)
    doc["run"] = run_metadata(cfg)
    _emit_json(doc, args.out)
    return 0


def cmd_loco(args, cfg):
    records = load_manifest(args.manifest)
    bins = cfg.bins or DEFAULT_BINS
    spec = net.default_network_spec(bins=bins)
    table = leave_one_category_out(records, spec, _train_config(cfg, bins),
                                   cache_dir=args.cache_dir)
    doc = {
        "categories": {cat: metrics_to_dict(m) for cat, m in table.rows.items()},
        "average_accuracy": table.average,
        "run": run_metadata(cfg),
    }
    _emit_json(doc, args.out)
    return 0


def cmd_jpeg(args, cfg):
    records = _ensure_split(load_manifest(args.manifest), cfg.seed)
    bins = cfg.bins or DEFAULT_BINS
    spec = net.default_network_spec(bins=bins)
    scenario_a, scenario_b = jpeg_robustness(records, spec, _train_config(cfg, bins),
                                             qualities=cfg.qualities,
                                             cache_dir=args.cache_dir)
    doc = {
        "scenario_a": {str(q): a for q, a in scenario_a.items()},
        "scenario_b": {str(q): a for q, a in scenario_b.items()},
        "run": run_metadata(cfg),
    }
    _emit_json(doc, args.out)
    return 0


# --- argument parsing ----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(1)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--bins", type=int)
    common.add_argument("--offset", type=_parse_offset, metavar="DY,DX")
    common.add_argument("--symmetric", action="store_const", const=True)
    common.add_argument("--epochs", type=int)
    common.add_argument("--batch-size", dest="batch_size", type=int)
    common.add_argument("--lr", type=float)
    common.add_argument("--qualities", type=_parse_qualities, metavar="Q,Q,...")
    common.add_argument("--out", help="write the result JSON here instead of stdout")
    common.add_argument("--cache-dir", dest="cache_dir",
                        help="directory for cached co-occurrence tensors")

    parser = _Parser(prog="coocnet", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("manifest", parents=[common], help="index a labeled image tree")
    p.add_argument("root")
    p.add_argument("out")
    p.set_defaults(func=cmd_manifest)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    p.add_argument("out_dir")
    p.add_argument("--count", type=int, default=100, help="images per class")
    p.add_argument("--size", type=_parse_size, default=(128, 128), metavar="N|WxH")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", parents=[common], help="precompute tensors into a cache")
    p.add_argument("manifest")
    p.add_argument("out_dir")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", parents=[common], help="split, train, save best checkpoint")
    p.add_argument("manifest")
    p.add_argument("out_checkpoint")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint on a split")
    p.add_argument("checkpoint")
    p.add_argument("manifest")
    p.add_argument("--split", default="test",
                   choices=["train", "val", "test", "all"])
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", parents=[common], help="classify individual images")
    p.add_argument("checkpoint")
    p.add_argument("images", nargs="+")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("xdataset", parents=[common],
                       help="train on one manifest, test on another")
    p.add_argument("train_manifest")
    p.add_argument("test_manifest")
    p.set_defaults(func=cmd_xdataset)

    p = sub.add_parser("loco", parents=[common],
                       help="leave-one-category-out evaluation table")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_loco)

    p = sub.add_parser("jpeg", parents=[common],
                       help="JPEG recompression robustness sweep")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_jpeg)
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        cfg = resolve_config(args)
    except (ValueError, OSError) as exc:
        logger.error("config error: %s", exc)
        return 1
    try:
        return args.func(args, cfg)
    except (NonFiniteActivation, NonFiniteGradient) as exc:
        logger.error("numerical failure: %s", exc)
        return 3
    except ValueError as exc:
        logger.error("usage error: %s", exc)
        return 1
    except (CoocnetError, OSError) as exc:
        logger.error("error: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
