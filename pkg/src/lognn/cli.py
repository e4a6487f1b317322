"""Experiment runner: train / eval / convert-dataset / table-gen / summarize.

Presets name the configurations from the study this reproduces, e.g.
``mnist-log16-lut`` or ``fmnist-lin12``; word-width presets are
lin16 = Q4.11, lin12 = Q4.7, log16 = q_i=4/q_f=10, log12 = q_i=4/q_f=6.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from .data import Dataset, convert, load_idx, split_validation
from .delta import DeltaApproximator, build_table
from .fixedpoint import FixedFormat
from .lnsformat import LnsFormat, SENTINEL
from .nn import TrainConfig, build_model
from .train import train

DATASETS = {
    # name: (train images, train labels, test images, test labels, label offset)
    "mnist": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte",
              "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte", 0),
    "fmnist": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte",
               "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte", 0),
    "emnistd": ("emnist-digits-train-images-idx3-ubyte",
                "emnist-digits-train-labels-idx1-ubyte",
                "emnist-digits-test-images-idx3-ubyte",
                "emnist-digits-test-labels-idx1-ubyte", 0),
    "emnistl": ("emnist-letters-train-images-idx3-ubyte",
                "emnist-letters-train-labels-idx1-ubyte",
                "emnist-letters-test-images-idx3-ubyte",
                "emnist-letters-test-labels-idx1-ubyte", 1),
}

BITS_PRESETS = {
    ("fixed", 16): FixedFormat(4, 11),
    ("fixed", 12): FixedFormat(4, 7),
    ("lns", 16): LnsFormat(4, 10),
    ("lns", 12): LnsFormat(4, 6),
}


def parse_preset(name: str) -> dict:
    """'mnist-log16-lut' -> flag overrides."""
    parts = name.split("-")
    if len(parts) < 2:
        raise ValueError(f"bad preset {name!r}")
    dataset, arith = parts[0], parts[1]
    if dataset not in DATASETS:
        raise ValueError(f"unknown dataset {dataset!r} in preset")
    out = {"dataset": dataset}
    if arith == "float":
        out["backend"] = "float"
    elif arith.startswith("lin"):
        out["backend"] = "fixed"
        out["bits"] = int(arith[3:])
    elif arith.startswith("log"):
        out["backend"] = "lns"
        out["bits"] = int(arith[3:])
        out["approx"] = parts[2] if len(parts) > 2 else "lut"
    else:
        raise ValueError(f"bad arithmetic spec {arith!r} in preset")
    return out


def _resolve_file(data_dir: Path, dataset: str, base: str) -> Path:
    for cand in (data_dir / dataset / base, data_dir / base,
                 data_dir / dataset / (base + ".gz"), data_dir / (base + ".gz")):
        if cand.exists():
            return cand
    sys.stderr.write(f"error: dataset file not found: {data_dir / dataset / base}"
                     f" (also tried .gz and {data_dir / base})\n")
    sys.exit(2)


def load_dataset(data_dir, dataset: str, split: str) -> Dataset:
    files = DATASETS[dataset]
    imgs, labs = (files[0], files[1]) if split == "train" else (files[2], files[3])
    data_dir = Path(data_dir)
    return load_idx(_resolve_file(data_dir, dataset, imgs),
                    _resolve_file(data_dir, dataset, labs),
                    label_offset=files[4])


def config_from_args(args) -> TrainConfig:
    cfg = TrainConfig(
        learning_rate=args.lr, batch_size=args.batch, epochs=args.epochs,
        weight_decay=args.decay, seed=args.seed, beta=args.beta,
        hidden=args.hidden, backend=args.backend,
        approx=args.approx if args.backend == "lns" else "lut",
        dmax=args.dmax, res=args.res,
        softmax_dmax=args.dmax, softmax_res=args.softmax_res,
    )
    if args.backend == "fixed":
        cfg.fixed_fmt = BITS_PRESETS[("fixed", args.bits)]
    elif args.backend == "lns":
        cfg.lns_fmt = BITS_PRESETS[("lns", args.bits)]
    return cfg


def add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", help="dataset-arith[-approx], e.g. mnist-log16-lut")
    p.add_argument("--dataset", choices=sorted(DATASETS), default="mnist")
    p.add_argument("--backend", choices=["float", "fixed", "lns"], default="lns")
    p.add_argument("--bits", type=int, choices=[12, 16], default=16)
    p.add_argument("--approx", choices=["exact", "lut", "bitshift"], default="lut")
    p.add_argument("--dmax", type=float, default=10.0)
    p.add_argument("--res", type=float, default=0.5)
    p.add_argument("--softmax-res", type=float, default=1.0 / 64.0)
    p.add_argument("--beta", type=float, default=-7.0)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--batch", type=int, default=5)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--decay", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--hidden", type=int, default=100)
    p.add_argument("--data-dir", default="data")
    p.add_argument("--out", default="runs")
    p.add_argument("--limit", type=int, default=None,
                   help="cap the number of training samples (smoke runs)")
    p.add_argument("--val-fraction", type=float, default=0.2)


def _apply_preset(args) -> None:
    if not args.preset:
        return
    for key, val in parse_preset(args.preset).items():
        setattr(args, key, val)


def cmd_train(args) -> int:
    _apply_preset(args)
    cfg = config_from_args(args)
    full = load_dataset(args.data_dir, args.dataset, "train")
    if args.limit:
        full = full.subset(np.arange(min(args.limit, full.n)))
    train_ds, val_ds = split_validation(full, args.val_fraction, cfg.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tag = args.preset or f"{args.dataset}-{args.backend}{args.bits}"
    model = build_model([784, cfg.hidden, full.n_classes], cfg)
    csv_path = out_dir / f"{tag}-metrics.csv"

    def progress(row):
        print(f"epoch {row['epoch']:3d}  train {row['train_accuracy']*100:5.1f}%"
              f"  val {row['val_accuracy']*100:5.1f}%  {row['seconds']:.1f}s",
              flush=True)

    train(model, train_ds, val_ds, csv_path=csv_path, progress=progress)
    ckpt_path = out_dir / f"{tag}.ckpt"
    ckpt.save_model(ckpt_path, model)
    print(f"metrics: {csv_path}")
    print(f"checkpoint: {ckpt_path}")
    return 0


def cmd_eval(args) -> int:
    _apply_preset(args)
    model = ckpt.load_model(args.checkpoint)
    ds = load_dataset(args.data_dir, args.dataset, args.split)
    from .train import accuracy, encode_for
    enc = encode_for(model, ds)
    acc = accuracy(model, enc, ds.labels)
    print(f"{args.dataset} {args.split} accuracy: {acc*100:.1f}%")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"eval-{Path(args.checkpoint).stem}-{args.dataset}-{args.split}.csv"
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["checkpoint", "dataset", "split", "accuracy"])
        w.writerow([args.checkpoint, args.dataset, args.split, f"{acc:.6f}"])
    print(f"wrote {path}")
    return 0


def cmd_convert_dataset(args) -> int:
    _apply_preset(args)
    cfg = config_from_args(args)
    ds = load_dataset(args.data_dir, args.dataset, args.split)
    fmt = {"lns": cfg.lns_fmt, "fixed": cfg.fixed_fmt, "float": None}[args.backend]
    enc = convert(ds, args.backend, fmt)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{args.dataset}-{args.split}-{args.backend}{args.bits}.lnnd"
    ckpt.save_encoded_dataset(path, args.backend, fmt, ds.labels, ds.n_classes, enc)
    print(f"wrote {path} ({ds.n} samples)")
    return 0


def cmd_table_gen(args) -> int:
    fmt = BITS_PRESETS[("lns", args.bits)]
    table = build_table(args.dmax, args.res, fmt)
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="")
    try:
        w = csv.writer(out)
        w.writerow(["k", "d", "delta_plus", "delta_minus"])
        scale = fmt.scale
        for k in range(table.size):
            minus = table.entries_minus[k]
            minus_str = "-inf" if minus <= SENTINEL else f"{minus / scale:.10g}"
            w.writerow([k, k * table.r, f"{table.entries_plus[k] / scale:.10g}",
                        minus_str])
    finally:
        if out is not sys.stdout:
            out.close()
            print(f"wrote {args.out}")
    return 0


def cmd_summarize(args) -> int:
    rows = []
    for path in args.runs:
        with open(path, newline="") as f:
            r = list(csv.DictReader(f))
        if not r:
            continue
        last = r[-1]
        name = Path(path).stem.replace("-metrics", "")
        if "accuracy" in last:  # eval output
            rows.append([name, f"{float(last['accuracy'])*100:.1f}"])
        else:
            rows.append([name, f"{float(last['val_accuracy'])*100:.1f}"])
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="")
    try:
        w = csv.writer(out)
        w.writerow(["run", "accuracy_pct"])
        w.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lognn",
                                description="Multiplier-free log-domain MLP training")
    sub = p.add_subparsers(dest="command", required=True)

    pt = sub.add_parser("train", help="train a model, emit metrics CSV + checkpoint")
    add_common_flags(pt)
    pt.set_defaults(fn=cmd_train)

    pe = sub.add_parser("eval", help="evaluate a checkpoint on a dataset split")
    pe.add_argument("checkpoint")
    pe.add_argument("--split", choices=["train", "test"], default="test")
    add_common_flags(pe)
    pe.set_defaults(fn=cmd_eval)

    pc = sub.add_parser("convert-dataset", help="persist a pre-encoded dataset")
    pc.add_argument("--split", choices=["train", "test"], default="train")
    add_common_flags(pc)
    pc.set_defaults(fn=cmd_convert_dataset)

    pg = sub.add_parser("table-gen", help="emit a correction table as CSV")
    pg.add_argument("--bits", type=int, choices=[12, 16], default=16)
    pg.add_argument("--dmax", type=float, default=10.0)
    pg.add_argument("--res", type=float, default=0.5)
    pg.add_argument("--out", default="-")
    pg.set_defaults(fn=cmd_table_gen)

    ps = sub.add_parser("summarize", help="combine run CSVs into a summary table")
    ps.add_argument("runs", nargs="*")
    ps.add_argument("--out", default="-")
    ps.set_defaults(fn=cmd_summarize)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
