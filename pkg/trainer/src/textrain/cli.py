"""Command-line entry points: prepare datasets, train, export weights."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .datasets import concat, prepare_nontexture_patches, prepare_texture_patches
from .export import ExportError, export_texw1
from .synth import synthetic_corpus
from .train import TrainConfig, train


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="textrain", description="Texture classifier training")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("prepare", help="extract patches from image directories")
    sp.add_argument("--textures", help="directory of texture images (>= 512x512)")
    sp.add_argument("--scenes", help="directory of scene images")
    sp.add_argument("--synthetic", type=int, metavar="N",
                    help="generate N patches per class procedurally instead")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, help="output .npz dataset")

    sp = sub.add_parser("train", help="train on a prepared dataset and export TEXW1")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--epochs", type=int, default=100)
    sp.add_argument("--batch", type=int, default=512)
    sp.add_argument("--lr", type=float, default=0.01)
    sp.add_argument("--momentum", type=float, default=0.9)
    sp.add_argument("--weight-decay", type=float, default=0.00005)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, help="output .texw1 weights file")
    sp.add_argument("--log", help="JSONL training log path")
    return p


def cmd_prepare(args) -> int:
    from .datasets import PatchDataset
    if args.synthetic:
        data = synthetic_corpus(args.synthetic, args.synthetic, seed=args.seed)
    else:
        if not args.textures or not args.scenes:
            print("error: need --textures and --scenes (or --synthetic N)", file=sys.stderr)
            return 2
        tex = prepare_texture_patches(args.textures)
        non = prepare_nontexture_patches(args.scenes)
        data = concat(tex, non)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(out, patches=data.patches, labels=data.labels)
    manifest = out.with_suffix(".manifest.csv")
    with open(manifest, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["class", "count"])
        n_non, n_tex = data.class_counts
        w.writerow(["texture", n_tex])
        w.writerow(["non-texture", n_non])
        w.writerow(["skipped", data.skipped])
    print(f"wrote {out} ({len(data.patches)} patches, {data.skipped} skipped)")
    return 0


def cmd_train(args) -> int:
    from .datasets import PatchDataset
    raw = np.load(args.dataset)
    data = PatchDataset(raw["patches"], raw["labels"]).split(seed=args.seed)
    config = TrainConfig(lr=args.lr, momentum=args.momentum,
                         weight_decay=args.weight_decay, epochs=args.epochs,
                         batch=args.batch, seed=args.seed)
    try:
        result = train(data, config)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    meta = {
        "epochs": config.epochs, "lr": config.lr, "momentum": config.momentum,
        "weight_decay": config.weight_decay, "batch": config.batch,
        "seed": config.seed, "class_counts": list(result.class_counts),
        "final_val_accuracy": result.final_val_accuracy,
    }
    try:
        export_texw1(result.model, result.channel_means, args.out, meta)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    if args.log:
        result.write_log(args.log)
    print(json.dumps(meta, indent=2))
    print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return {"prepare": cmd_prepare, "train": cmd_train}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
