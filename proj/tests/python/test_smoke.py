import math

import numpy as np
import pytest

import planet


def test_signature_of_solid_red():
    img = np.zeros((16, 16, 3), dtype=np.uint8)
    img[..., 0] = 255
    sig = planet.mine_signature(img)
    assert sig["combined"].shape == (82,)
    assert sig["color"][15] == 1.0
    assert sig["color"][16] == 1.0
    assert sig["color"][32] == 1.0
    assert np.allclose(sig["structure"], 1.0 / 18)
    assert sig["texture"][0] == 1.0


def test_ppm_round_trip():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(5, 7, 3), dtype=np.uint8)
    back = planet.decode_ppm(planet.encode_ppm(img))
    assert np.array_equal(back, img)


def test_losses_closed_forms():
    assert planet.info_nce(np.full((4, 4), 0.2), 0.07) == pytest.approx(math.log(4), abs=1e-9)
    assert planet.info_nce(np.eye(2), 1.0) == pytest.approx(math.log(1 + math.exp(-1)), abs=1e-9)
    assert planet.total_loss(1.0, 0.6, 0.0) == 1.0
    with pytest.raises(planet.PlanetError):
        planet.info_nce(np.eye(2), 0.0)


def test_retrieval():
    scores = np.array([[0.9, 0.1], [0.8, 0.2]])
    assert planet.recall_at_k(scores, [0, 1], 1) == 0.5
    assert planet.haversine(0, 0, 0, 1) == pytest.approx(111194.93, abs=1.0)


def test_pipeline(tmp_path):
    data = tmp_path / "data"
    code, out, err = planet.run_cli(["synth", "--n", "40", "--seed", "3", "--out", str(data)])
    assert code == 0, err
    code, _, err = planet.run_cli(["extract", "--manifest", str(data / "manifest.jsonl"), "--out", str(tmp_path / "sig.bin")])
    assert code == 0, err
    code, out, err = planet.run_cli([
        "train", "--manifest", str(data / "manifest.jsonl"), "--cache", str(tmp_path / "sig.bin"),
        "--out", str(tmp_path / "run"), "--epochs", "2", "--batch-size", "8", "--set", "dim=16",
    ])
    assert code == 0, err
    assert "hash" in out

    model = planet.load_checkpoint(str(tmp_path / "run" / "checkpoint.plnt"))
    assert model.tau > 0
    samples = planet.make_synthetic(2, 3)
    v = model.encode_image(samples[0]["image"])
    assert v.shape == (16,)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-9)
    phys = model.project_physical(samples[0]["text"])
    assert phys["color"].shape == (48,)
    assert phys["attention_struc"].sum() == pytest.approx(1.0, abs=1e-9)

    code, _, _ = planet.run_cli(["eval", "--checkpoint", str(tmp_path / "missing.plnt"), "--manifest", str(data / "manifest.jsonl")])
    assert code == 2
