"""CLI contract: flags, run-config merging, exit codes."""

import json
from pathlib import Path

import pytest
from PIL import Image

from texlab.cli import main
from conftest import FIXTURES, make_clip

WEIGHTS = str(FIXTURES / "fixture.texw1")


@pytest.fixture(scope="module")
def clip_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("clipcli")
    for i, rgb in enumerate(make_clip(6, 96, 96, pan=1.0, seed=88)):
        Image.fromarray(rgb).save(path / f"f{i:02d}.png")
    return path


@pytest.fixture(scope="module")
def yuv_clip(tmp_path_factory):
    path = tmp_path_factory.mktemp("yuvcli") / "clip.yuv"
    from texlab.core import rgb_to_yuv420
    blobs = []
    for rgb in make_clip(4, 96, 96, seed=89):
        f = rgb_to_yuv420(rgb)
        blobs.append(f.y.tobytes() + f.u.tobytes() + f.v.tobytes())
    path.write_bytes(b"".join(blobs))
    return path


def test_analyze_writes_masks_and_summary(clip_dir, tmp_path):
    out = tmp_path / "an"
    rc = main(["analyze", "--input", str(clip_dir), "--weights", WEIGHTS,
               "--out", str(out)])
    assert rc == 0
    assert len(list(out.glob("mask_*.pgm"))) == 6
    assert len(list(out.glob("overlay_*.png"))) == 6
    summary = json.loads((out / "analysis.json").read_text())
    assert summary["coverage_mean"] > 0.3


def test_analyze_matches_committed_goldens(clip_dir, tmp_path):
    out = tmp_path / "golden_check"
    rc = main(["analyze", "--input", str(clip_dir), "--weights", WEIGHTS,
               "--out", str(out), "--no-overlays"])
    assert rc == 0
    golden_dir = FIXTURES / "golden_masks"
    goldens = sorted(golden_dir.glob("mask_*.pgm"))
    assert len(goldens) == 6
    for golden in goldens:
        produced = out / golden.name
        assert produced.read_bytes() == golden.read_bytes(), golden.name


def test_encode_writes_model_csv(clip_dir, tmp_path):
    out = tmp_path / "mcsv"
    rc = main(["encode", "--input", str(clip_dir), "--config", "tex-cp",
               "--qp", "40", "--weights", WEIGHTS, "--out", str(out),
               "--video-id", "mdl"])
    assert rc == 0
    csv_path = out / "mdl_tex-cp_qp40.models.csv"
    assert csv_path.exists()
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "frame,ref,a,b,c,d,tx,ty,inlier_count"
    assert len(lines) > 1
    assert all(int(l.split(",")[-1]) >= 3 for l in lines[1:])


def test_analyze_deterministic_masks(clip_dir, tmp_path):
    out1, out2 = tmp_path / "a1", tmp_path / "a2"
    assert main(["analyze", "--input", str(clip_dir), "--weights", WEIGHTS,
                 "--out", str(out1), "--no-overlays"]) == 0
    assert main(["analyze", "--input", str(clip_dir), "--weights", WEIGHTS,
                 "--out", str(out2), "--no-overlays"]) == 0
    for a, b in zip(sorted(out1.glob("*.pgm")), sorted(out2.glob("*.pgm"))):
        assert a.read_bytes() == b.read_bytes()


def test_missing_weights_exit_2(clip_dir, tmp_path):
    rc = main(["analyze", "--input", str(clip_dir), "--weights", "/no/such.texw1",
               "--out", str(tmp_path / "x")])
    assert rc == 2


def test_encode_deterministic_and_yuv_input(yuv_clip, tmp_path):
    out1, out2 = tmp_path / "e1", tmp_path / "e2"
    args = ["encode", "--input", str(yuv_clip), "--format", "yuv420", "--size", "96x96",
            "--config", "baseline", "--qp", "40", "--seed", "3", "--video-id", "v"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    b1 = (out1 / "v_baseline_qp40.texc1").read_bytes()
    b2 = (out2 / "v_baseline_qp40.texc1").read_bytes()
    assert b1 == b2


def test_yuv_without_size_exit_2(yuv_clip, tmp_path):
    rc = main(["encode", "--input", str(yuv_clip), "--format", "yuv420",
               "--config", "baseline", "--qp", "40", "--out", str(tmp_path / "e")])
    assert rc == 2


def test_full_pipeline_with_compare_and_roundtrip(clip_dir, tmp_path):
    out = tmp_path / "full"
    assert main(["encode", "--input", str(clip_dir), "--config", "baseline",
                 "--qp", "32", "--qp", "40", "--out", str(out), "--video-id", "demo"]) == 0
    assert main(["encode", "--input", str(clip_dir), "--config", "tex-cp",
                 "--qp", "32", "--qp", "40", "--weights", WEIGHTS,
                 "--out", str(out), "--video-id", "demo"]) == 0
    reports = sorted(str(p) for p in out.glob("demo_baseline_*.report.json"))
    tex_reports = sorted(str(p) for p in out.glob("demo_tex-cp_*.report.json"))
    assert len(reports) == 2 and len(tex_reports) == 2

    cmp_out = tmp_path / "cmp"
    rc = main(["compare", "--baseline", reports[0], "--baseline", reports[1],
               "--texture", tex_reports[0], "--texture", tex_reports[1],
               "--out", str(cmp_out)])
    assert rc == 0
    assert (cmp_out / "comparison.csv").exists()

    stream = next(out.glob("demo_tex-cp_qp32.texc1"))
    assert main(["roundtrip", "--bitstream", str(stream)]) == 0


def test_compare_single_side_exit_4(clip_dir, tmp_path):
    out = tmp_path / "zz"
    main(["encode", "--input", str(clip_dir), "--config", "baseline", "--qp", "40",
          "--out", str(out), "--video-id", "solo"])
    report = str(next(out.glob("*.report.json")))
    # a single report (no texture side) is not comparable
    assert main(["compare", "--baseline", report]) == 4
    # mismatched (video, qp) keys are not comparable either
    other = tmp_path / "zz2"
    main(["encode", "--input", str(clip_dir), "--config", "baseline", "--qp", "32",
          "--out", str(other), "--video-id", "different"])
    rc = main(["compare", "--baseline", report,
               "--texture", str(next(other.glob("*.report.json")))])
    assert rc == 4


def test_roundtrip_corrupted_exit_5(clip_dir, tmp_path):
    out = tmp_path / "rt"
    main(["encode", "--input", str(clip_dir), "--config", "baseline", "--qp", "40",
          "--out", str(out), "--video-id", "r"])
    stream = next(out.glob("*.texc1"))
    data = bytearray(stream.read_bytes())
    data[-25] ^= 0x08
    bad = tmp_path / "bad.texc1"
    bad.write_bytes(bytes(data))
    rc = main(["roundtrip", "--bitstream", str(bad)])
    assert rc == 5


def test_run_config_file_with_flag_override(clip_dir, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({
        "input": str(clip_dir), "config": "baseline", "qps": [40],
        "out": str(tmp_path / "cfg_out"), "video_id": "fromfile", "seed": 1}))
    # flag --video-id overrides the file's value
    rc = main(["encode", "--run-config", str(cfg), "--input", str(clip_dir),
               "--video-id", "flagged", "--out", str(tmp_path / "cfg_out")])
    assert rc == 0
    assert (tmp_path / "cfg_out" / "flagged_baseline_qp40.texc1").exists()


def test_run_config_unknown_key_exit_2(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"inptu": "typo"}))
    rc = main(["encode", "--run-config", str(cfg), "--input", "x",
               "--out", str(tmp_path / "o")])
    assert rc == 2
