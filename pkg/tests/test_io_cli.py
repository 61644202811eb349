import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import pytest
import yaml

from videodeg.cli import main
from videodeg.config import PipelineConfig
from videodeg.core import Clip
from videodeg.io import discover_clips, read_png, read_png_dir, read_y4m, to_uint8, write_png, write_png_dir, write_y4m
from videodeg.rng import SeededRng


def test_to_uint8_rounds_half_to_even():
    x = np.array([0.5, 1.5, 2.5, 254.5]) / 255.0
    assert to_uint8(x).tolist() == [0, 2, 2, 254]
    assert to_uint8(np.array([-0.1, 1.2])).tolist() == [0, 255]


def test_png_round_trip(tmp_path):
    frame = to_uint8(SeededRng(0).random((9, 7, 3))) / 255.0
    write_png(frame, tmp_path / "a.png")
    assert np.array_equal(read_png(tmp_path / "a.png"), frame)


def test_png_dir_and_discovery(tmp_path):
    clip = Clip(to_uint8(SeededRng(1).random((3, 8, 8, 3))) / 255.0)
    write_png_dir(clip, tmp_path / "root" / "b")
    write_png_dir(clip, tmp_path / "root" / "a", ["x0.png", "x1.png", "x2.png"])
    (tmp_path / "root" / "empty").mkdir()
    entries = discover_clips(tmp_path / "root")
    assert [e.name for e in entries] == ["a", "b"]
    assert np.array_equal(entries[0].load().frames, clip.frames)
    assert entries[0].frame_names(3) == ["x0.png", "x1.png", "x2.png"]
    # a directory of frames is itself one clip
    assert [e.name for e in discover_clips(tmp_path / "root" / "a")] == ["a"]
    with pytest.raises(FileNotFoundError):
        read_png_dir(tmp_path / "root" / "empty")
    with pytest.raises(ValueError):
        write_png_dir(clip, tmp_path / "c", ["one.png"])


def test_y4m_round_trip(tmp_path):
    gray = Clip(np.full((2, 6, 8, 3), 0.5))
    write_y4m(gray, tmp_path / "g.y4m")
    back = read_y4m(tmp_path / "g.y4m")
    assert back.frames.shape == (2, 6, 8, 3) and back.fps == 24
    assert np.allclose(back.frames, 0.5, atol=1 / 255)
    assert [e.name for e in discover_clips(tmp_path)] == ["g"]
    with pytest.raises(ValueError):
        write_y4m(Clip(np.zeros((1, 5, 8, 3))), tmp_path / "odd.y4m")
    (tmp_path / "bad.y4m").write_bytes(b"YUV4MPEG2 W4 H4 C444\n")
    with pytest.raises(ValueError):
        read_y4m(tmp_path / "bad.y4m")


def make_tree(root: Path, n_clips=3, n_frames=3, size=32, value=None, seed=0):
    rng = SeededRng(seed)
    for i in range(n_clips):
        if value is None:
            frames = rng.random((n_frames, size, size, 3))
        else:
            frames = np.full((n_frames, size, size, 3), value)
        write_png_dir(Clip(frames), root / f"clip{i:02d}")
    return root


def write_config(path: Path, cfg: PipelineConfig) -> str:
    path.write_text(yaml.safe_dump(cfg.to_dict()))
    return str(path)


def tree_bytes(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_degrade_requires_config(tmp_path, capsys):
    make_tree(tmp_path / "in", 1)
    assert main(["degrade", str(tmp_path / "in"), str(tmp_path / "out")]) == 2
    assert "--config" in capsys.readouterr().err


def test_degrade_bad_config_is_usage_error(tmp_path):
    make_tree(tmp_path / "in", 1)
    (tmp_path / "c.yaml").write_text("version: 1\nbogus: 1\n")
    assert main(["degrade", str(tmp_path / "in"), str(tmp_path / "out"), "--config", str(tmp_path / "c.yaml")]) == 2


def test_identity_config_round_trips_bytes(tmp_path):
    src = make_tree(tmp_path / "in", 2)
    cfg = PipelineConfig.only("gaussian", gaussian={"sigma": [0, 0]})
    assert main(["degrade", str(src), str(tmp_path / "out"), "--config", write_config(tmp_path / "c.yaml", cfg)]) == 0
    for name in ("clip00", "clip01"):
        for f in sorted((src / name).iterdir()):
            assert np.array_equal(read_png(f), read_png(tmp_path / "out" / name / f.name))


def test_degrade_deterministic_and_manifest(tmp_path):
    src = make_tree(tmp_path / "in", 10)
    conf = write_config(tmp_path / "c.yaml", PipelineConfig.only("blur", "resize", "gaussian", "poisson", "speckle", "isp", "jpeg", "video", blur={"sizes": [7]}))
    assert main(["degrade", str(src), str(tmp_path / "o1"), "--config", conf, "--seed", "7"]) == 0
    assert main(["degrade", str(src), str(tmp_path / "o2"), "--config", conf, "--seed", "7", "--jobs", "4"]) == 0
    assert tree_bytes(tmp_path / "o1") == tree_bytes(tmp_path / "o2")
    manifest = json.loads((tmp_path / "o1" / "manifest.json").read_text())
    assert manifest["seed"] == 7 and manifest["schema"] == "videodeg.manifest"
    orders = [tuple(c["plan"]["order"]) for c in manifest["clips"]]
    assert len(orders) == 10 and len(set(orders)) == 10
    assert main(["degrade", str(src), str(tmp_path / "o3"), "--config", conf, "--seed", "8"]) == 0
    assert tree_bytes(tmp_path / "o1") != tree_bytes(tmp_path / "o3")


def test_unreadable_frame_exits_1(tmp_path):
    src = make_tree(tmp_path / "in", 2)
    (src / "clip01" / "00001.png").write_bytes(b"not a png")
    conf = write_config(tmp_path / "c.yaml", PipelineConfig.only("gaussian"))
    assert main(["degrade", str(src), str(tmp_path / "out"), "--config", conf]) == 1
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["failures"] == ["clip01"]
    assert (tmp_path / "out" / "clip00" / "00000.png").exists()


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_stats_identity_and_histogram(tmp_path, capsys):
    src = make_tree(tmp_path / "in", 2)
    assert main(["stats", str(src), str(src)]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert [r["clip"] for r in rows] == ["clip00", "clip01", "__aggregate__"]
    for r in rows:
        assert float(r["std"]) == 0.0
        assert sum(map(int, r["histogram"].split())) == int(r["sample_count"])
    assert int(rows[-1]["sample_count"]) == 2 * 3 * 32 * 32 * 3


def test_degrade_then_stats_recovers_strength(tmp_path, capsys):
    src = make_tree(tmp_path / "in", 4, n_frames=2, size=96, value=0.5)
    conf = write_config(tmp_path / "c.yaml", PipelineConfig.only("gaussian", gaussian={"sigma": [5, 20], "grayscale_prob": 0.0}))
    assert main(["degrade", str(src), str(tmp_path / "out"), "--config", conf, "--seed", "3"]) == 0
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert main(["stats", str(src), str(tmp_path / "out")]) == 0
    rows = {r["clip"]: r for r in read_csv(capsys.readouterr().out)}
    for entry in manifest["clips"]:
        sigma = entry["plan"]["stages"][0]["params"][0]["sigma_255"] / 255
        measured = float(rows[entry["name"]]["std"])
        # 8-bit storage adds 1/12 LSB^2 of quantization variance
        expected = math.sqrt(sigma**2 + 1 / 12 / 255**2)
        assert abs(measured / expected - 1) < 0.03


def test_stats_awgn_aggregate(tmp_path, capsys):
    src = make_tree(tmp_path / "in", 3, n_frames=2, size=128, value=0.5)
    conf = write_config(tmp_path / "c.yaml", PipelineConfig.only("gaussian", gaussian={"sigma": [25, 25]}))
    assert main(["degrade", str(src), str(tmp_path / "out"), "--config", conf]) == 0
    assert main(["stats", str(src), str(tmp_path / "out"), "--out", str(tmp_path / "s.csv")]) == 0
    agg = read_csv((tmp_path / "s.csv").read_text())[-1]
    assert abs(float(agg["std"]) / 0.098 - 1) < 0.02


def test_stats_misaligned_trees(tmp_path):
    make_tree(tmp_path / "a", 2)
    make_tree(tmp_path / "b", 3)
    assert main(["stats", str(tmp_path / "a"), str(tmp_path / "b")]) == 2


def test_downscale_report_cli(tmp_path, capsys):
    src = make_tree(tmp_path / "in", 2, size=64)
    assert main(["downscale-report", str(src), str(src), "--scales", "1,0.5"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert len(rows) == 6 and all(r["psnr_db"] == "inf" for r in rows)
    assert rows[-1]["clip"] == "__aggregate__"


def test_shuffle_variance_cli(tmp_path, capsys):
    src = make_tree(tmp_path / "in", 1, n_frames=2, size=32)
    args = ["shuffle-variance", str(src), "--n-pipelines", "3", "--seed", "4"]
    assert main(args) == 0
    first = capsys.readouterr()
    assert main(args) == 0
    second = capsys.readouterr()
    assert first.out == second.out and len(read_csv(first.out)) == 3
    assert json.loads(first.err)["n_pipelines"] == 3


def test_verify_theorem_cli(capsys):
    assert main(["verify-theorem", "--model", "cubic", "--n-mc", "20000"]) == 0
    out = capsys.readouterr()
    assert len(read_csv(out.out)) == 3 and "slope" in out.err
    assert main(["verify-theorem", "--model", "linear", "--n-mc", "20000", "--sampler", "plain", "--seed", "3"]) == 0


def test_verify_theorem_unknown_model():
    with pytest.raises(SystemExit) as info:
        main(["verify-theorem", "--model", "resnet"])
    assert info.value.code == 2
