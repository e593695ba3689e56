import csv
import io
import json

import numpy as np
import pytest
from PIL import Image

from wfmeasure import cli, images
from wfmeasure.errors import ImageFormatError
from wfmeasure.verify import random_instance


def save_u8(path, arr):
    Image.fromarray(np.asarray(arr, dtype=np.uint8)).save(path)


def make_dataset(tmp_path, n=3, size=24, seed=0):
    rng = np.random.default_rng(seed)
    pred, gt = tmp_path / "pred", tmp_path / "gt"
    pred.mkdir()
    gt.mkdir()
    for i in range(n):
        y, yhat = random_instance(rng, size)
        save_u8(gt / f"im{i}.png", y * 255)
        save_u8(pred / f"im{i}.png", np.rint(yhat * 255))
    return pred, gt


class TestIngest:
    def test_prediction_values(self, tmp_path):
        p = tmp_path / "p.png"
        save_u8(p, [[255, 0, 51]])
        np.testing.assert_array_equal(images.ingest_prediction(p), [[1.0, 0.0, 0.2]])

    def test_mask_threshold_inclusive(self, tmp_path):
        p = tmp_path / "m.pgm"
        save_u8(p, [[127, 128, 255, 0]])
        np.testing.assert_array_equal(images.ingest_mask(p), [[0, 1, 1, 0]])
        np.testing.assert_array_equal(images.ingest_mask(p, 200), [[0, 0, 1, 0]])

    def test_all_levels(self, tmp_path):
        p = tmp_path / "ramp.png"
        save_u8(p, np.arange(256).reshape(16, 16))
        np.testing.assert_array_equal(images.ingest_prediction(p).ravel(), np.arange(256) / 255.0)

    @pytest.mark.parametrize("mode", ["RGB", "I;16", "1"])
    def test_rejects_non_gray8(self, tmp_path, mode):
        p = tmp_path / "c.png"
        Image.new(mode, (4, 4)).save(p)
        with pytest.raises(ImageFormatError):
            images.read_gray8(p)

    def test_unreadable(self, tmp_path):
        p = tmp_path / "junk.png"
        p.write_bytes(b"not an image")
        with pytest.raises(ImageFormatError):
            images.ingest_prediction(p)
        with pytest.raises(ImageFormatError):
            images.ingest_prediction(tmp_path / "missing.png")


class TestGradientDump:
    def test_round_trip(self, tmp_path, rng):
        grad = rng.normal(scale=1e-3, size=(20, 30))
        sidecar = images.write_gradient(tmp_path / "g.png", grad)
        meta = json.loads(sidecar.read_text())
        assert meta["min"] == grad.min() and meta["max"] == grad.max()
        back, _ = images.read_gradient(tmp_path / "g.png")
        span = grad.max() - grad.min()
        assert np.abs(back - grad).max() <= span / 255
        assert np.abs(back - grad).max() <= span / 65535

    def test_constant(self, tmp_path):
        images.write_gradient(tmp_path / "z.png", np.zeros((3, 3)))
        back, _ = images.read_gradient(tmp_path / "z.png")
        np.testing.assert_array_equal(back, 0.0)


class TestEval:
    def test_csv_three_pairs(self, tmp_path, capsys):
        pred, gt = make_dataset(tmp_path)
        status = cli.main(["eval", "--pred", str(pred), "--gt", str(gt), "--format", "csv"])
        assert status == 0
        rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
        assert rows[0] == ["id", "mae", "auroc", "fbeta_max", "best_threshold", "iou_at_half", "fw1"]
        assert [r[0] for r in rows[1:]] == ["im0", "im1", "im2", "mean"]

    def test_json_is_byte_identical(self, tmp_path):
        pred, gt = make_dataset(tmp_path)
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        assert cli.main(["eval", "--pred", str(pred), "--gt", str(gt), "-o", str(out1)]) == 0
        assert cli.main(["eval", "--pred", str(pred), "--gt", str(gt), "-o", str(out2), "--jobs", "3"]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        doc = json.loads(out1.read_text())
        assert doc["schema_version"] == 1
        assert list(doc) == sorted(doc)

    def test_listing_order_does_not_matter(self, tmp_path, monkeypatch):
        pred, gt = make_dataset(tmp_path, n=5)
        cfg = cli.RunConfig("eval", pred=pred, gt=gt)
        base = cli.run(cfg)
        real = images.list_images
        monkeypatch.setattr(images, "list_images", lambda p: dict(reversed(list(real(p).items()))))
        assert cli.run(cfg) == base

    def test_missing_partner(self, tmp_path, capsys, caplog):
        pred, gt = make_dataset(tmp_path)
        (pred / "im1.png").unlink()
        out = tmp_path / "report.json"
        assert cli.main(["eval", "--pred", str(pred), "--gt", str(gt), "-o", str(out)]) == 2
        assert capsys.readouterr().out == ""
        assert not out.exists()
        assert "im1 (no prediction)" in caplog.text

    def test_partial_failure(self, tmp_path):
        pred, gt = make_dataset(tmp_path)
        save_u8(gt / "im2.png", np.zeros((24, 24)))  # no foreground
        status, text = cli.run(cli.RunConfig("eval", pred=pred, gt=gt))
        assert status == 1
        doc = json.loads(text)
        assert [m["image_id"] for m in doc["per_image"]] == ["im0", "im1"]
        assert [e["id"] for e in doc["errors"]] == ["im2"]

    def test_size_mismatch_is_per_image(self, tmp_path):
        pred, gt = make_dataset(tmp_path)
        save_u8(pred / "im0.png", np.zeros((5, 5)))
        status, text = cli.run(cli.RunConfig("eval", pred=pred, gt=gt, fmt="csv"))
        assert status == 1
        lines = text.splitlines()
        assert len(lines) == 5
        assert "im0,,,,,," in lines


class TestOtherCommands:
    def test_oracle_cap(self, tmp_path, caplog):
        pred, gt = tmp_path / "p.png", tmp_path / "g.png"
        y = np.zeros((256, 256))
        y[100:150, 100:150] = 255
        save_u8(gt, y)
        save_u8(pred, y)
        assert cli.main(["oracle", "--pred", str(pred), "--gt", str(gt)]) == 2
        assert "exceeds the oracle cap" in caplog.text

    def test_oracle_small(self, tmp_path):
        pred, gt = make_dataset(tmp_path, n=2, size=16)
        status, text = cli.run(cli.RunConfig("oracle", pred=pred, gt=gt))
        assert status == 0
        rows = json.loads(text)["per_image"]
        assert [r["id"] for r in rows] == ["im0", "im1"]
        assert all(0 <= r["f_w"] <= 1 for r in rows)

    def test_loss_writes_gradients(self, tmp_path):
        pred, gt = make_dataset(tmp_path, n=2)
        gdir = tmp_path / "grads"
        status, text = cli.run(cli.RunConfig("loss", pred=pred, gt=gt, grad_dir=gdir))
        assert status == 0
        assert sorted(p.name for p in gdir.iterdir()) == ["im0_grad.json", "im0_grad.png", "im1_grad.json", "im1_grad.png"]
        rows = json.loads(text)["per_image"]
        assert rows[0]["gradient"] == "im0_grad.png"
        with Image.open(gdir / "im0_grad.png") as img:
            assert img.size == (24, 24)

    def test_compare_and_optimize(self, tmp_path):
        status, text = cli.run(cli.RunConfig("compare", sizes=(8,), trials=3, seed=4))
        assert status == 0 and json.loads(text)["kind"] == "deviation"
        status, text = cli.run(cli.RunConfig("optimize", size=16, steps=5, fmt="csv", save_map=tmp_path / "m.png"))
        assert status == 0
        assert len(text.splitlines()) == 6
        assert images.read_gray8(tmp_path / "m.png").shape == (16, 16)

    def test_bench_needs_override(self):
        status, text = cli.run(cli.RunConfig("bench", size=224, reps=1))
        assert status == 2 and "allow_large_oracle" in text

    @pytest.mark.parametrize(
        "argv",
        [
            ["compare", "--theta", "0"],
            ["compare", "--beta", "-1"],
            ["compare", "--gt-threshold", "300"],
            ["compare", "--jobs", "0"],
        ],
    )
    def test_bad_overrides(self, argv):
        assert cli.main(argv) == 2

    def test_module_entry(self, tmp_path):
        import subprocess
        import sys

        out = subprocess.run(
            [sys.executable, "-m", "wfmeasure", "compare", "--sizes", "8", "--trials", "2"],
            capture_output=True,
            text=True,
        )
        assert out.returncode == 0
        assert json.loads(out.stdout)["schema_version"] == 1
