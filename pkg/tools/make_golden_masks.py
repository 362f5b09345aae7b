#!/usr/bin/env python3
"""Generate the committed golden mask PGMs for the analyze command.

Runs the analysis pipeline once over the deterministic 6-frame fixture clip
(96x96, pan 1.0, seed 88) with the committed fixture weights and freezes the
resulting PGMs under tests/fixtures/golden_masks/. The regression test
re-runs the same command and compares bytes.
"""

import shutil
import sys
import tempfile
from pathlib import Path

from PIL import Image

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from conftest import make_clip  # noqa: E402
from texlab.service import models as m  # noqa: E402
from texlab.service.ops import run_analyze  # noqa: E402

GOLDEN_DIR = ROOT / "tests" / "fixtures" / "golden_masks"


def main():
    with tempfile.TemporaryDirectory() as tmp:
        clip_dir = Path(tmp) / "clip"
        clip_dir.mkdir()
        for i, rgb in enumerate(make_clip(6, 96, 96, pan=1.0, seed=88)):
            Image.fromarray(rgb).save(clip_dir / f"f{i:02d}.png")
        out = Path(tmp) / "out"
        resp = run_analyze(m.AnalyzeRequest(
            input=str(clip_dir), weights=str(ROOT / "tests/fixtures/fixture.texw1"),
            out=str(out), overlays=False))
        if GOLDEN_DIR.exists():
            shutil.rmtree(GOLDEN_DIR)
        GOLDEN_DIR.mkdir(parents=True)
        for f in resp.mask_files:
            shutil.copy(f, GOLDEN_DIR / Path(f).name)
            print(f"froze {Path(f).name}")


if __name__ == "__main__":
    main()
