import math
import os

import pytest

import tangentconv as tc

SCENE = """
density = 1200
noise_sigma = 0.003
plane class=0 origin=0,0,0 u=1.5,0,0 v=0,1.5,0
sphere class=1 center=0.7,0.7,0.3 radius=0.25
"""


def test_receptive_field():
    assert math.isclose(tc.receptive_field(0.05), 2.0, abs_tol=1e-12)
    assert math.isclose(tc.receptive_field(0.10), 4.0, abs_tol=1e-12)


def test_generate_scene_deterministic():
    a = tc.generate_scene(SCENE, seed=3)
    b = tc.generate_scene(SCENE, seed=3)
    assert a["positions"] == b["positions"]
    assert set(a["labels"]) == {0, 1}
    assert len(a["positions"]) == len(a["labels"])


def test_ply_round_trip(tmp_path):
    scene = tc.generate_scene(SCENE, seed=5)
    path = os.fspath(tmp_path / "scan.ply")
    tc.write_ply(path, scene["positions"], scene["labels"])
    back = tc.read_ply(path)
    assert back["labels"] == scene["labels"]
    assert len(back["positions"]) == len(scene["positions"])
    # positions pass through a float32 encoding
    for (ax, ay, az), (bx, by, bz) in zip(scene["positions"][:50], back["positions"][:50]):
        assert abs(ax - bx) < 1e-6 and abs(ay - by) < 1e-6 and abs(az - bz) < 1e-6


def test_precompute_counts(tmp_path):
    scene = tc.generate_scene(SCENE, seed=7)
    ply = os.fspath(tmp_path / "scan.ply")
    tc.write_ply(ply, scene["positions"], scene["labels"])
    counts = tc.precompute(ply, os.fspath(tmp_path / "plans.bin"))
    assert len(counts) == 3
    assert counts[0] > counts[1] > counts[2] > 0


def test_train_segment_evaluate(tmp_path):
    scene = tc.generate_scene(SCENE, seed=9)
    ply = os.fspath(tmp_path / "scan.ply")
    ckpt = os.fspath(tmp_path / "model.ckpt")
    tc.write_ply(ply, scene["positions"], scene["labels"])

    losses = tc.train([ply], ckpt, classes=2, epochs=25, lr=2e-3, seed=1, threads=4)
    assert len(losses) == 25
    assert losses[-1] < losses[0]

    pred = tc.segment(ply, ckpt, classes=2, threads=4)
    assert len(pred) == len(scene["labels"])
    metrics = tc.evaluate(pred, scene["labels"], classes=2)
    assert metrics["overall_accuracy"] > 0.8
    assert 0.0 <= metrics["miou"] <= 1.0


def test_evaluate_hand_case():
    metrics = tc.evaluate([0, 1, 1, 0, 1, 0], [0, 0, 1, 1, 1, 0], classes=2)
    assert math.isclose(metrics["overall_accuracy"], 4 / 6)
    assert math.isclose(metrics["miou"], 0.5)


def test_bad_spec_raises():
    with pytest.raises(Exception):
        tc.generate_scene("torus class=1\n", seed=0)
