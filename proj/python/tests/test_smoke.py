import math

import numpy as np
import pytest

import liddense


def test_hand_metric_case():
    r = liddense.evaluate(np.array([[2.5]]), np.array([[2.0]]))
    assert r["rmse"] == pytest.approx(500.0, abs=1e-12)
    assert r["imae"] == pytest.approx(100.0, abs=1e-12)
    assert r["abs_error_rel"] == pytest.approx(25.0, abs=1e-12)
    assert r["sq_error_rel"] == pytest.approx(12.5, abs=1e-12)
    assert r["n_valid"] == 1


def test_metrics_match_oracle():
    rng = np.random.default_rng(0)
    gt = np.where(rng.random((16, 16)) < 0.5, rng.uniform(1, 80, (16, 16)), 0.0)
    pred = rng.uniform(1, 80, (16, 16))
    a = liddense.evaluate(pred, gt)
    b = liddense.evaluate_oracle(pred, gt)
    for key in ("rmse", "mae", "irmse", "imae", "sq_error_rel", "abs_error_rel"):
        assert a[key] == pytest.approx(b[key], rel=1e-12)


def test_png_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    depth = rng.integers(0, 65536, (7, 9)) / 256.0
    liddense.save_depth_png(tmp_path / "d.png", depth)
    assert np.array_equal(liddense.load_depth_png(tmp_path / "d.png"), depth)
    with pytest.raises(liddense.RangeError):
        liddense.save_depth_png(tmp_path / "bad.png", np.full((2, 2), 300.0))


def test_scene_and_scan_lines():
    sc = liddense.synthetic_scene(3, 32, 32)
    assert sc["rgb"].shape == (3, 32, 32)
    assert (sc["gt"] > 0).all()
    lines = liddense.scan_lines(sc["gt"], sc["k"], theta_top=None,
                                interval=math.degrees(math.atan(1.0 / sc["k"].fy)))
    mask = sc["sparse"] > 0
    assert mask.any()
    assert (lines[mask] == sc["scan_line"]).all()
    assert np.array_equal(sc["sparse"][mask], sc["gt"][mask])


def test_convert_frame_partitions():
    sc = liddense.synthetic_scene(4, 32, 32)
    k = sc["k"]
    parts = [liddense.convert_frame(sc["gt"], k, mode=f"lines={i}", theta_top=None,
                                    interval=1.0) for i in range(64)]
    stacked = np.stack([p > 0 for p in parts])
    assert (stacked.sum(axis=0) == 1).all()


def test_fuse_examples():
    out = liddense.fuse(np.array([3.0]), np.array([math.log(2.0)]), np.array([0.0]), np.array([0.0]))
    assert out[0] == 2.0
    with pytest.raises(liddense.ShapeError):
        liddense.fuse(np.zeros(2), np.zeros(2), np.zeros(3), np.zeros(2))


def test_short_training_is_deterministic():
    a = liddense.train_toy(steps=3, seed=5, size=16, vnl_groups=10, eval_every=2)
    b = liddense.train_toy(steps=3, seed=5, size=16, vnl_groups=10, eval_every=2)
    assert [s["l_total"] for s in a["steps"]] == [s["l_total"] for s in b["steps"]]
    assert [e["step"] for e in a["evals"]] == [0, 2, 3]
    assert all(s["recomposition_error"] <= 1e-12 for s in a["steps"])
