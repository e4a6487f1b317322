"""Epoch loop: deterministic shuffling, mini-batch SGD, per-epoch metrics."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset, convert
from .nn import TrainConfig, build_model
from .rng import Xoshiro256StarStar

METRIC_COLUMNS = ("epoch", "train_accuracy", "val_accuracy", "seconds")


def encode_for(model, ds: Dataset):
    if model.backend == "lns":
        return convert(ds, "lns", model.fmt)
    if model.backend == "fixed":
        return convert(ds, "fixed", model.fmt)
    return convert(ds, "float")


def _batch_view(enc, idx):
    if isinstance(enc, tuple):
        return enc[0][idx], enc[1][idx]
    return (enc[idx],)


def accuracy(model, enc, labels: np.ndarray, limit: int | None = None) -> float:
    if limit is not None and labels.size > limit:
        enc = _batch_view(enc, np.arange(limit))
        labels = labels[:limit]
    elif not isinstance(enc, tuple):
        enc = (enc,)
    pred = model.predict(*enc)
    return float(np.mean(pred == labels))


def train(model, train_ds: Dataset, val_ds: Dataset | None,
          csv_path=None, progress=None) -> list[dict]:
    cfg: TrainConfig = model.cfg
    enc_train = encode_for(model, train_ds)
    enc_val = encode_for(model, val_ds) if val_ds is not None else None
    # shuffle stream is separate from the init stream but derived from the
    # same seed, so a run is reproducible from (config, seed) alone
    shuffle_rng = Xoshiro256StarStar(cfg.seed ^ 0x5DEECE66D)
    n = train_ds.n
    bs = cfg.batch_size
    rows = []
    writer = None
    fh = None
    if csv_path is not None:
        fh = open(csv_path, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(METRIC_COLUMNS)
    try:
        for epoch in range(1, cfg.epochs + 1):
            t0 = time.perf_counter()
            order = shuffle_rng.permutation(n)
            for start in range(0, n, bs):
                idx = order[start:start + bs]
                batch = _batch_view(enc_train, idx)
                model.train_batch(*batch, train_ds.labels[idx])
            train_acc = accuracy(model, enc_train, train_ds.labels)
            val_acc = (accuracy(model, enc_val, val_ds.labels)
                       if val_ds is not None else float("nan"))
            dt = time.perf_counter() - t0
            row = {"epoch": epoch, "train_accuracy": train_acc,
                   "val_accuracy": val_acc, "seconds": dt}
            rows.append(row)
            if writer is not None:
                writer.writerow([epoch, f"{train_acc:.6f}", f"{val_acc:.6f}",
                                 f"{dt:.3f}"])
                fh.flush()
            if progress is not None:
                progress(row)
    finally:
        if fh is not None:
            fh.close()
    return rows
