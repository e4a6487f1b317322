"""Versioned binary files for model checkpoints and pre-encoded datasets.

Log-domain scalars are serialized one per little-endian word: the low
(q_i + q_f + 1) bits hold the two's-complement log-magnitude code (the
most negative value is the zero sentinel) and the next bit holds the
linear sign.  Words are 2 bytes when the format fits in 16 bits, else 4.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .fixedpoint import FixedFormat
from .lnsformat import LnsFormat
from .nn import TrainConfig, build_model
from .rng import Xoshiro256StarStar

MODEL_MAGIC = b"LNNC"
DATASET_MAGIC = b"LNND"
VERSION = 1


def _word_dtype(width_bits: int) -> np.dtype:
    return np.dtype("<u2") if width_bits <= 16 else np.dtype("<u4")


def pack_lns(codes: np.ndarray, signs: np.ndarray, fmt: LnsFormat) -> bytes:
    field_bits = fmt.q_i + fmt.q_f + 1
    mask = (1 << field_bits) - 1
    words = (codes & mask) | (signs.astype(np.int64) << field_bits)
    return words.astype(_word_dtype(fmt.width)).tobytes()


def unpack_lns(buf: bytes, fmt: LnsFormat, shape) -> tuple[np.ndarray, np.ndarray]:
    field_bits = fmt.q_i + fmt.q_f + 1
    words = np.frombuffer(buf, dtype=_word_dtype(fmt.width)).astype(np.int64)
    codes = words & ((1 << field_bits) - 1)
    codes = np.where(codes >= (1 << (field_bits - 1)), codes - (1 << field_bits), codes)
    signs = ((words >> field_bits) & 1).astype(np.uint8)
    return codes.reshape(shape), signs.reshape(shape)


def pack_fixed(codes: np.ndarray, fmt: FixedFormat) -> bytes:
    mask = (1 << fmt.width) - 1
    return (codes & mask).astype(_word_dtype(fmt.width)).tobytes()


def unpack_fixed(buf: bytes, fmt: FixedFormat, shape) -> np.ndarray:
    words = np.frombuffer(buf, dtype=_word_dtype(fmt.width)).astype(np.int64)
    codes = words & ((1 << fmt.width) - 1)
    codes = np.where(codes >= (1 << (fmt.width - 1)), codes - (1 << fmt.width), codes)
    return codes.reshape(shape)


def config_to_dict(cfg: TrainConfig) -> dict:
    d = asdict(cfg)
    d["lns_fmt"] = [cfg.lns_fmt.q_i, cfg.lns_fmt.q_f]
    d["fixed_fmt"] = [cfg.fixed_fmt.b_i, cfg.fixed_fmt.b_f]
    return d


def config_from_dict(d: dict) -> TrainConfig:
    d = dict(d)
    d["lns_fmt"] = LnsFormat(*d["lns_fmt"])
    d["fixed_fmt"] = FixedFormat(*d["fixed_fmt"])
    return TrainConfig(**d)


def _write_sections(path, magic: bytes, header: dict, payloads: list[bytes]):
    blob = json.dumps(header).encode()
    with open(path, "wb") as f:
        f.write(magic)
        f.write(struct.pack("<HI", VERSION, len(blob)))
        f.write(blob)
        for p in payloads:
            f.write(struct.pack("<Q", len(p)))
            f.write(p)


def _read_sections(path, magic: bytes) -> tuple[dict, list[bytes]]:
    raw = Path(path).read_bytes()
    if raw[:4] != magic:
        raise ValueError(f"{path}: bad magic {raw[:4]!r}, expected {magic!r}")
    version, hlen = struct.unpack("<HI", raw[4:10])
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    header = json.loads(raw[10:10 + hlen].decode())
    payloads = []
    off = 10 + hlen
    while off < len(raw):
        (plen,) = struct.unpack("<Q", raw[off:off + 8])
        off += 8
        payloads.append(raw[off:off + plen])
        off += plen
    return header, payloads


def save_model(path, model) -> None:
    header = {
        "kind": "model",
        "backend": model.backend,
        "dims": model.dims,
        "config": config_to_dict(model.cfg),
    }
    payloads = []
    if model.backend == "lns":
        for w, b in zip(model.weights, model.biases):
            payloads.append(pack_lns(w.codes, w.signs, model.fmt))
            payloads.append(pack_lns(b.codes, b.signs, model.fmt))
    elif model.backend == "fixed":
        for w, b in zip(model.weights, model.biases):
            payloads.append(pack_fixed(w, model.fmt))
            payloads.append(pack_fixed(b, model.fmt))
    else:
        for w, b in zip(model.weights, model.biases):
            payloads.append(w.astype("<f8").tobytes())
            payloads.append(b.astype("<f8").tobytes())
    _write_sections(path, MODEL_MAGIC, header, payloads)


def load_model(path):
    header, payloads = _read_sections(path, MODEL_MAGIC)
    cfg = config_from_dict(header["config"])
    dims = header["dims"]
    model = build_model(dims, cfg, Xoshiro256StarStar(cfg.seed))
    shapes = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        shapes.append((fan_out, fan_in))
        shapes.append((fan_out,))
    tensors = []
    for shape, buf in zip(shapes, payloads):
        if model.backend == "lns":
            tensors.append(unpack_lns(buf, model.fmt, shape))
        elif model.backend == "fixed":
            tensors.append(unpack_fixed(buf, model.fmt, shape))
        else:
            tensors.append(np.frombuffer(buf, dtype="<f8").reshape(shape).copy())
    for li in range(len(model.weights)):
        if model.backend == "lns":
            model.weights[li].codes[...], model.weights[li].signs[...] = tensors[2 * li]
            model.biases[li].codes[...], model.biases[li].signs[...] = tensors[2 * li + 1]
        else:
            model.weights[li][...] = tensors[2 * li]
            model.biases[li][...] = tensors[2 * li + 1]
    return model


def save_encoded_dataset(path, backend: str, fmt, labels: np.ndarray,
                         n_classes: int, enc) -> None:
    header = {"kind": "dataset", "backend": backend, "n": int(labels.size),
              "n_classes": int(n_classes)}
    payloads = [labels.astype(np.uint8).tobytes()]
    if backend == "lns":
        header["lns_fmt"] = [fmt.q_i, fmt.q_f]
        payloads.append(pack_lns(enc[0], enc[1], fmt))
    elif backend == "fixed":
        header["fixed_fmt"] = [fmt.b_i, fmt.b_f]
        payloads.append(pack_fixed(enc, fmt))
    else:
        payloads.append(np.asarray(enc, dtype="<f8").tobytes())
    _write_sections(path, DATASET_MAGIC, header, payloads)


def load_encoded_dataset(path):
    header, payloads = _read_sections(path, DATASET_MAGIC)
    n = header["n"]
    labels = np.frombuffer(payloads[0], dtype=np.uint8).astype(np.int64)
    backend = header["backend"]
    if backend == "lns":
        fmt = LnsFormat(*header["lns_fmt"])
        enc = unpack_lns(payloads[1], fmt, (n, 784))
    elif backend == "fixed":
        fmt = FixedFormat(*header["fixed_fmt"])
        enc = unpack_fixed(payloads[1], fmt, (n, 784))
    else:
        fmt = None
        enc = np.frombuffer(payloads[1], dtype="<f8").reshape(n, 784).copy()
    return header, fmt, labels, enc
