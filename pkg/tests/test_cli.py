import csv
import struct

import numpy as np
import pytest

from lognn.checkpoint import load_encoded_dataset, load_model
from lognn.cli import main, parse_preset


def _write_idx(dirpath, images, labels, train=True):
    dirpath.mkdir(parents=True, exist_ok=True)
    stem = "train" if train else "t10k"
    n = images.shape[0]
    img = struct.pack(">IIII", 0x803, n, 28, 28) + images.tobytes()
    lab = struct.pack(">II", 0x801, n) + labels.astype(np.uint8).tobytes()
    (dirpath / f"{stem}-images-idx3-ubyte").write_bytes(img)
    (dirpath / f"{stem}-labels-idx1-ubyte").write_bytes(lab)


@pytest.fixture()
def data_dir(tmp_path):
    """A tiny MNIST-shaped corpus: one bright row per class."""
    rng = np.random.default_rng(0)
    root = tmp_path / "data"
    for train, n in ((True, 60), (False, 20)):
        labels = np.arange(n) % 10
        images = np.zeros((n, 28, 28), dtype=np.uint8)
        for i, lab in enumerate(labels):
            images[i, 2 * lab + 4, :] = rng.integers(180, 256)
        _write_idx(root / "mnist", images.reshape(n, 784),
                   labels.astype(np.uint8), train)
    return root


def _train_args(data_dir, out, **kw):
    args = ["train", "--data-dir", str(data_dir), "--out", str(out),
            "--epochs", "1", "--hidden", "8", "--seed", "3"]
    for k, v in kw.items():
        args += [f"--{k}", str(v)]
    return args


class TestTrain:
    def test_writes_metrics_and_checkpoint(self, data_dir, tmp_path, capsys):
        out = tmp_path / "runs"
        assert main(_train_args(data_dir, out)) == 0
        csv_path = out / "mnist-lns16-metrics.csv"
        assert csv_path.exists()
        with open(csv_path, newline="") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 1
        assert set(rows[0]) == {"epoch", "train_accuracy", "val_accuracy",
                                "seconds"}
        model = load_model(out / "mnist-lns16.ckpt")
        assert model.backend == "lns"
        assert "epoch   1" in capsys.readouterr().out

    def test_same_seed_same_metrics(self, data_dir, tmp_path):
        runs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(_train_args(data_dir, out, epochs=2)) == 0
            with open(out / "mnist-lns16-metrics.csv", newline="") as f:
                runs.append(list(csv.DictReader(f)))
        for r1, r2 in zip(*runs):
            # everything but the wall-clock column must match bit for bit
            assert {k: v for k, v in r1.items() if k != "seconds"} \
                == {k: v for k, v in r2.items() if k != "seconds"}

    def test_backends_run(self, data_dir, tmp_path):
        for backend in ("float", "fixed"):
            out = tmp_path / backend
            assert main(_train_args(data_dir, out, backend=backend)) == 0
            assert (out / f"mnist-{backend}16.ckpt").exists()

    def test_limit_flag(self, data_dir, tmp_path):
        out = tmp_path / "runs"
        assert main(_train_args(data_dir, out, limit=20)) == 0

    def test_missing_data_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(_train_args(tmp_path / "nowhere", tmp_path / "runs"))
        assert exc.value.code == 2


class TestEval:
    def test_eval_checkpoint(self, data_dir, tmp_path, capsys):
        out = tmp_path / "runs"
        main(_train_args(data_dir, out, epochs=3))
        rc = main(["eval", str(out / "mnist-lns16.ckpt"),
                   "--data-dir", str(data_dir), "--out", str(out)])
        assert rc == 0
        assert "test accuracy" in capsys.readouterr().out
        evals = list(out.glob("eval-*.csv"))
        assert len(evals) == 1
        with open(evals[0], newline="") as f:
            row = list(csv.DictReader(f))[0]
        assert 0.0 <= float(row["accuracy"]) <= 1.0

    def test_missing_checkpoint_returns_2(self, data_dir, tmp_path):
        rc = main(["eval", str(tmp_path / "none.ckpt"),
                   "--data-dir", str(data_dir)])
        assert rc == 2


class TestConvertDataset:
    def test_roundtrip(self, data_dir, tmp_path):
        out = tmp_path / "enc"
        rc = main(["convert-dataset", "--data-dir", str(data_dir),
                   "--out", str(out), "--split", "test"])
        assert rc == 0
        header, fmt, labels, enc = load_encoded_dataset(
            out / "mnist-test-lns16.lnnd")
        assert header["backend"] == "lns"
        assert labels.size == 20
        assert enc[0].shape == (20, 784)


class TestTableGen:
    def test_stdout(self, capsys):
        assert main(["table-gen", "--dmax", "10", "--res", "0.5"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "k,d,delta_plus,delta_minus"
        assert len(lines) == 21  # header + 20 entries
        first = lines[1].split(",")
        assert first[2] == "1" and first[3] == "-inf"

    def test_file_output(self, tmp_path):
        path = tmp_path / "table.csv"
        assert main(["table-gen", "--dmax", "10", "--res", "0.015625",
                     "--out", str(path)]) == 0
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 640

    def test_bad_resolution_returns_2(self):
        assert main(["table-gen", "--dmax", "10", "--res", "0.3"]) == 2


class TestSummarize:
    def test_combines_runs(self, tmp_path, capsys):
        p = tmp_path / "x-metrics.csv"
        with open(p, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["epoch", "train_accuracy", "val_accuracy", "seconds"])
            w.writerow([1, "0.5", "0.4", "1.0"])
            w.writerow([2, "0.9", "0.85", "1.0"])
        assert main(["summarize", str(p)]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert out[0] == "run,accuracy_pct"
        assert out[1] == "x,85.0"

    def test_empty_is_header_only(self, capsys):
        assert main(["summarize"]) == 0
        assert capsys.readouterr().out.strip() == "run,accuracy_pct"


class TestPresets:
    def test_log_preset(self):
        assert parse_preset("mnist-log16-lut") == {
            "dataset": "mnist", "backend": "lns", "bits": 16, "approx": "lut"}

    def test_bitshift_preset(self):
        assert parse_preset("fmnist-log12-bitshift")["approx"] == "bitshift"

    def test_linear_and_float(self):
        assert parse_preset("mnist-lin12") == {
            "dataset": "mnist", "backend": "fixed", "bits": 12}
        assert parse_preset("emnistd-float")["backend"] == "float"

    def test_bad_presets(self):
        for bad in ("mnist", "nodata-log16", "mnist-ana16"):
            with pytest.raises(ValueError):
                parse_preset(bad)

    def test_preset_flag_applies(self, data_dir, tmp_path):
        out = tmp_path / "runs"
        rc = main(_train_args(data_dir, out) + ["--preset", "mnist-log16-bitshift"])
        assert rc == 0
        model = load_model(out / "mnist-log16-bitshift.ckpt")
        assert model.cfg.approx == "bitshift"
