"""Operator command line for the full lifecycle.

Subcommands: synth, ingest, split, train-gan, train-matcher, generate,
build-index, query, evaluate, serve. Exit codes: 0 on success, 1 for
usage and input problems, 2 for runtime failures. Training and report
commands write delimited outputs (CSV/TSV/JSONL) with rendered PNG
figures beside them; `--json` switches stdout to a single JSON object.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

from .data.augment import augment_product, load_image, tensor_to_image
from .data.manifest import (
    DatasetManifest,
    ManifestRecord,
    SplitSpec,
    load_manifest,
    save_manifest,
    split_street_views,
    split_train_test,
)
from .data.synthetic import generate_synthetic_paired_dataset
from .errors import (
    CheckpointFormatError,
    EmptyIndexError,
    FingerprintMismatchError,
    ImageDecodeError,
    IndexFormatError,
    ManifestFormatError,
    ManifestValidationError,
    StratificationError,
    TargetSamplingError,
    TrainingDivergedError,
)
from .evaluation import evaluate
from .gan.training import GanCheckpoint, GanTrainConfig, generate_garment, train_gan
from .index import build_index, load_index, query, save_index
from .matcher.networks import embed
from .matcher.training import EmbedderCheckpoint, MatcherTrainConfig, fine_tune

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

_INPUT_ERRORS = (
    ManifestFormatError,
    ManifestValidationError,
    StratificationError,
    ImageDecodeError,
    CheckpointFormatError,
    IndexFormatError,
    EmptyIndexError,
    TargetSamplingError,
    FingerprintMismatchError,
    FileNotFoundError,
    NotADirectoryError,
    ValueError,
    KeyError,
    json.JSONDecodeError,
)


class _Parser(argparse.ArgumentParser):
    """argparse with the documented usage exit code (1, not 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(args, payload: dict, human: str):
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    elif human:
        print(human)


def _write_csv(path: Path, header: list, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _load_any_manifest(path):
    return load_manifest(path)


def cmd_synth(args) -> int:
    manifest = generate_synthetic_paired_dataset(
        n_products=args.products,
        seed=args.seed,
        out_dir=args.out,
        streets_per_product=args.streets,
    )
    manifest_path = Path(args.out) / "paired_manifest.jsonl"
    payload = {
        "manifest": str(manifest_path),
        "products": len(manifest.product_ids()),
        "images": len(manifest.records),
        "categories": list(manifest.categories),
    }
    _emit(args, payload, f"wrote {payload['images']} images for {payload['products']} products -> {manifest_path}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    source = _load_any_manifest(args.manifest)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.augment_count < 1:
        raise ValueError(f"--augment-count must be >= 1, got {args.augment_count}")

    records = []
    n_products = 0
    for product in source.products():
        primary = source.resolve(product.image_paths[0])
        image = load_image(primary)
        pid = product.product_id
        original_rel = f"images/{pid}.png"
        (out_dir / "images").mkdir(exist_ok=True)
        image.save(out_dir / original_rel)
        records.append(ManifestRecord(pid, product.category, "product", original_rel))
        variants = augment_product(image, count=args.augment_count - 1, seed=args.seed + n_products) if args.augment_count > 1 else []
        for i, variant in enumerate(variants, start=1):
            rel = f"images/{pid}_a{i:02d}.png"
            variant.save(out_dir / rel)
            records.append(ManifestRecord(pid, product.category, "augmented", rel))
        n_products += 1

    manifest = DatasetManifest("shopping", source.categories, records, base_dir=out_dir)
    manifest_path = save_manifest(manifest, out_dir / "shopping_manifest.jsonl")
    payload = {
        "manifest": str(manifest_path),
        "products": n_products,
        "images": len(records),
        "per_product": args.augment_count,
    }
    _emit(args, payload, f"ingested {n_products} products -> {payload['images']} image references ({manifest_path})")
    return EXIT_OK


def cmd_split(args) -> int:
    manifest = _load_any_manifest(args.manifest)
    out_dir = Path(args.out)
    if args.mode == "product":
        train, test = split_train_test(manifest, SplitSpec(args.train_fraction, args.seed))
    else:
        train, test = split_street_views(manifest, holdout_per_product=args.holdout, seed=args.seed)
    train_path = save_manifest(train, out_dir / "train_manifest.jsonl")
    test_path = save_manifest(test, out_dir / "test_manifest.jsonl")
    payload = {
        "train_manifest": str(train_path),
        "test_manifest": str(test_path),
        "train_products": len(train.product_ids()),
        "test_products": len(test.product_ids()),
        "train_images": len(train.records),
        "test_images": len(test.records),
    }
    _emit(
        args,
        payload,
        f"train: {payload['train_products']} products / {payload['train_images']} images\n"
        f"test:  {payload['test_products']} products / {payload['test_images']} images",
    )
    return EXIT_OK


def cmd_train_gan(args) -> int:
    from .figures import plot_gan_losses

    config = GanTrainConfig.from_json(args.config) if args.config else GanTrainConfig()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    manifest = _load_any_manifest(args.manifest)
    if config.steps == 0:
        print("warning: steps = 0, writing an untrained checkpoint", file=sys.stderr)

    checkpoint = train_gan(manifest, config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = checkpoint.save(out_dir / "gan_checkpoint.bin")
    csv_path = _write_csv(out_dir / "gan_losses.csv", ["step", "loss_r", "loss_a", "loss_c"], checkpoint.loss_history)
    figure_path = plot_gan_losses(checkpoint.loss_history, out_dir / "gan_losses.png") if checkpoint.loss_history else None
    payload = {
        "checkpoint": str(ckpt_path),
        "loss_csv": str(csv_path),
        "figure": str(figure_path) if figure_path else None,
        "steps": checkpoint.step_count,
        "final_losses": list(checkpoint.loss_history[-1][1:]) if checkpoint.loss_history else None,
    }
    _emit(args, payload, f"trained {checkpoint.step_count} steps -> {ckpt_path}")
    return EXIT_OK


def cmd_train_matcher(args) -> int:
    from .figures import plot_matcher_losses

    config = MatcherTrainConfig.from_json(args.config) if args.config else MatcherTrainConfig()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    manifest = _load_any_manifest(args.manifest)
    if config.epochs == 0:
        print("warning: epochs = 0, writing an untrained checkpoint", file=sys.stderr)

    checkpoint = fine_tune(manifest, config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = checkpoint.save(out_dir / "embedder_checkpoint.bin")
    csv_path = _write_csv(out_dir / "matcher_losses.csv", ["epoch", "step", "l_s", "l_c", "joint"], checkpoint.loss_history)
    figure_path = plot_matcher_losses(checkpoint.loss_history, out_dir / "matcher_losses.png") if checkpoint.loss_history else None
    payload = {
        "checkpoint": str(ckpt_path),
        "loss_csv": str(csv_path),
        "figure": str(figure_path) if figure_path else None,
        "epochs": checkpoint.epochs,
        "classes": len(checkpoint.class_table),
    }
    _emit(args, payload, f"fine-tuned {checkpoint.epochs} epochs over {payload['classes']} classes -> {ckpt_path}")
    return EXIT_OK


def cmd_generate(args) -> int:
    checkpoint = GanCheckpoint.load(args.checkpoint)
    photo = load_image(args.photo)
    garment = generate_garment(photo, checkpoint)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tensor_to_image(garment).save(out, format="PNG")
    payload = {"garment": str(out), "size": list(garment.shape[:2])}
    _emit(args, payload, f"wrote {out}")
    return EXIT_OK


def cmd_build_index(args) -> int:
    manifest = _load_any_manifest(args.manifest)
    checkpoint = EmbedderCheckpoint.load(args.checkpoint)
    index = build_index(manifest, checkpoint)
    out = save_index(index, args.out)
    payload = {
        "index": str(out),
        "entries": len(index),
        "products": len(index.categories_by_product()),
    }
    _emit(args, payload, f"indexed {payload['entries']} images across {payload['products']} products -> {out}")
    return EXIT_OK


def _query_photo(args):
    """Shared pipeline of cmd_query and the HTTP service: photo to matches."""
    from .data.augment import preprocess

    index = load_index(args.index)
    embedder_ckpt = EmbedderCheckpoint.load(args.checkpoint)
    embedder = embedder_ckpt.build_embedder()
    photo = load_image(args.photo)
    if args.gan_checkpoint:
        gan = GanCheckpoint.load(args.gan_checkpoint)
        image = generate_garment(photo, gan)
    else:
        image = preprocess(photo, embedder_ckpt.arch.input_size)
    vector = embed(image, embedder).numpy()
    return query(index, vector, args.k)


def cmd_query(args) -> int:
    if not 1 <= args.k <= 1000:
        raise ValueError(f"--k must be in [1, 1000], got {args.k}")
    matches = _query_photo(args)
    payload = {
        "k": args.k,
        "matches": [
            {"rank": m.rank, "product_id": m.product_id, "score": m.score} for m in matches
        ],
    }
    human = "\n".join(f"{m.rank}\t{m.product_id}\t{m.score:.6f}" for m in matches)
    _emit(args, payload, human)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .figures import plot_precision_curve

    index = load_index(args.index)
    checkpoint = EmbedderCheckpoint.load(args.checkpoint)
    manifest = _load_any_manifest(args.manifest)
    report = evaluate(
        index,
        manifest,
        checkpoint,
        ks=range(1, args.k + 1),
        allow_fingerprint_mismatch=args.allow_fingerprint_mismatch,
    )
    payload = report.to_dict()
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "precision.tsv").write_text(report.to_tsv())
        (out_dir / "per_query.jsonl").write_text(report.per_query_jsonl())
        figure = plot_precision_curve(report, out_dir / "precision.png")
        payload["report_dir"] = str(out_dir)
        payload["figure"] = str(figure)
    _emit(args, payload, report.table_text())
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import ServiceConfig, run_service

    config = ServiceConfig.from_json(args.config).with_env_overrides()
    config.validate_paths()
    run_service(config)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="streetshop", description="Street-to-shop garment search pipeline.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--json", action="store_true", help="emit a JSON object instead of text")
        return p

    p = add("synth", cmd_synth, "generate a synthetic paired dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--products", type=int, default=20)
    p.add_argument("--streets", type=int, default=6, help="street views per product")
    p.add_argument("--seed", type=int, default=0)

    p = add("ingest", cmd_ingest, "validate a manifest and augment the catalog")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output directory for images and manifest")
    p.add_argument("--augment-count", type=int, default=8, help="total image references per product")
    p.add_argument("--seed", type=int, default=0)

    p = add("split", cmd_split, "stratified train/test split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="directory for train/test manifests")
    p.add_argument("--mode", choices=("product", "street"), default="product")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--holdout", type=int, default=1, help="street views held out per product")
    p.add_argument("--seed", type=int, default=0)

    p = add("train-gan", cmd_train_gan, "train the domain transfer networks")
    p.add_argument("--manifest", required=True, help="paired manifest")
    p.add_argument("--config", help="JSON training config")
    p.add_argument("--out", required=True, help="directory for checkpoint, CSV and figure")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")

    p = add("train-matcher", cmd_train_matcher, "fine-tune the embedding network")
    p.add_argument("--manifest", required=True, help="shopping manifest")
    p.add_argument("--config", help="JSON training config")
    p.add_argument("--out", required=True, help="directory for checkpoint, CSV and figure")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")

    p = add("generate", cmd_generate, "convert one street photo to a garment image")
    p.add_argument("--photo", required=True)
    p.add_argument("--checkpoint", required=True, help="domain transfer checkpoint")
    p.add_argument("--out", required=True, help="output PNG path")

    p = add("build-index", cmd_build_index, "embed a catalog manifest into an index file")
    p.add_argument("--manifest", required=True)
    p.add_argument("--checkpoint", required=True, help="embedder checkpoint")
    p.add_argument("--out", required=True, help="index file path")

    p = add("query", cmd_query, "rank catalog products for a photo")
    p.add_argument("--photo", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--checkpoint", required=True, help="embedder checkpoint")
    p.add_argument("--gan-checkpoint", help="run the converter first when given")
    p.add_argument("--k", type=int, default=5)

    p = add("evaluate", cmd_evaluate, "precision@k over a test manifest")
    p.add_argument("--manifest", required=True, help="test manifest of query images")
    p.add_argument("--index", required=True)
    p.add_argument("--checkpoint", required=True, help="embedder checkpoint")
    p.add_argument("--k", type=int, default=15, help="evaluate k = 1..K")
    p.add_argument("--out", help="directory for TSV, per-query JSONL and figure")
    p.add_argument("--allow-fingerprint-mismatch", action="store_true")

    p = add("serve", cmd_serve, "run the HTTP query service")
    p.add_argument("--config", required=True, help="JSON service config")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrainingDivergedError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except _INPUT_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # anything else is a runtime failure
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
