"""Rate, fidelity, coverage and temporal-flicker measurement.

Sign convention for rate savings follows the comparison tables this module
emits: rate_saving_percent = (bits_tex - bits_base) / bits_base * 100, so
negative numbers are savings.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from .core import Frame
from .refine import MaskSequence

# PSNR of identical frames: a distinguished sentinel, not a float infinity,
# so CSV and JSON stay sortable. Rendered as "inf" in text output.
PSNR_INF = None


class MetricsError(ValueError):
    pass


@dataclass
class FrameStats:
    display_index: int
    kind: str
    bits: int
    texture_coverage: float
    psnr_full: float | None
    psnr_nontexture: float | None
    ssim: float
    texture_enabled: bool = False
    degraded: tuple[str, ...] = ()
    # model-rate accounting of residual coefficients, split by leaf type;
    # texture leaves carry no residual syntax so their share is exactly 0
    coef_bits_estimate: float = 0.0
    texture_coef_bits: float = 0.0
    texture_leaf_count: int = 0


@dataclass
class EncodeReport:
    video_id: str
    config: str
    qp: int
    seed: int
    n_frames: int
    frames: list[FrameStats] = field(default_factory=list)
    total_bytes: int = 0
    flicker: float | None = None
    flicker_region_empty: bool = False

    @property
    def bits_per_frame(self) -> float:
        return data_rate(self.total_bytes, self.n_frames)

    @property
    def avg_coverage(self) -> float:
        if not self.frames:
            return 0.0
        return float(np.mean([f.texture_coverage for f in self.frames]))

    def avg_psnr_full(self) -> float | None:
        vals = [f.psnr_full for f in self.frames if f.psnr_full is not None]
        return float(np.mean(vals)) if vals else PSNR_INF

    def avg_psnr_nontexture(self) -> float | None:
        vals = [f.psnr_nontexture for f in self.frames if f.psnr_nontexture is not None]
        return float(np.mean(vals)) if vals else PSNR_INF

    def avg_ssim(self) -> float:
        return float(np.mean([f.ssim for f in self.frames])) if self.frames else 1.0

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "EncodeReport":
        frames = [FrameStats(**{**f, "degraded": tuple(f.get("degraded", ()))}) for f in d.pop("frames")]
        return EncodeReport(frames=frames, **d)


def data_rate(total_bytes: int, n_frames: int) -> float:
    """Average bits per frame: stream size in bits over the frame count."""
    if n_frames < 1:
        raise MetricsError(f"n_frames must be >= 1, got {n_frames}")
    return total_bytes * 8.0 / n_frames


def psnr(a: np.ndarray, b: np.ndarray, region: np.ndarray | None = None) -> float | None:
    """Luma PSNR in dB, optionally restricted to a boolean pixel region.

    Identical content returns the PSNR_INF sentinel. An empty region is an
    error: the caller must decide what an undefined measurement means.
    """
    if a.shape != b.shape:
        raise MetricsError(f"shape mismatch {a.shape} vs {b.shape}")
    da = a.astype(np.float64)
    db = b.astype(np.float64)
    if region is not None:
        if region.shape != a.shape:
            raise MetricsError(f"region shape {region.shape} != frame {a.shape}")
        if not region.any():
            raise MetricsError("empty region for PSNR")
        diff = da[region] - db[region]
    else:
        diff = (da - db).ravel()
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_INF
    return 10.0 * math.log10(255.0 * 255.0 / mse)


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean SSIM over all 8x8 windows (uniform weights, standard constants)."""
    if a.shape != b.shape:
        raise MetricsError(f"shape mismatch {a.shape} vs {b.shape}")
    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    x = a.astype(np.float64)
    y = b.astype(np.float64)
    n = 8
    mu_x = _window_mean(x, n)
    mu_y = _window_mean(y, n)
    xx = _window_mean(x * x, n) - mu_x * mu_x
    yy = _window_mean(y * y, n) - mu_y * mu_y
    xy = _window_mean(x * y, n) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * xy + c2)
    den = (mu_x ** 2 + mu_y ** 2 + c1) * (xx + yy + c2)
    return float(np.mean(num / den))


def _window_mean(x: np.ndarray, n: int) -> np.ndarray:
    c = np.cumsum(np.cumsum(x, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    s = c[n:, n:] - c[:-n, n:] - c[n:, :-n] + c[:-n, :-n]
    return s / (n * n)


def flicker_score(recons: Sequence[Frame], masks: MaskSequence,
                  sources: Sequence[Frame]) -> tuple[float, bool]:
    """Added temporal flicker inside texture regions, in gray levels.

    Mean absolute luma difference between consecutive reconstructed frames
    inside the texture blocks of the later frame's mask, minus the same
    statistic on the source frames. Returns (score, region_empty_flag).
    """
    if len(recons) < 2:
        raise MetricsError("flicker needs at least 2 frames")
    if len(recons) != len(masks) or len(recons) != len(sources):
        raise MetricsError("recons, masks and sources must have equal length")
    diffs_recon = []
    diffs_src = []
    for t in range(1, len(recons)):
        region = _mask_pixels(masks[t], recons[t].height, recons[t].width)
        if not region.any():
            continue
        dr = np.abs(recons[t].y.astype(np.float64) - recons[t - 1].y.astype(np.float64))
        ds = np.abs(sources[t].y.astype(np.float64) - sources[t - 1].y.astype(np.float64))
        diffs_recon.append(float(dr[region].mean()))
        diffs_src.append(float(ds[region].mean()))
    if not diffs_recon:
        return 0.0, True
    return float(np.mean(diffs_recon) - np.mean(diffs_src)), False


def _mask_pixels(mask, height: int, width: int) -> np.ndarray:
    region = np.zeros((height, width), bool)
    s = mask.grid.block_size
    tex = mask.texture
    for r in range(mask.grid.rows):
        for c in range(mask.grid.cols):
            if tex[r, c]:
                region[r * s:(r + 1) * s, c * s:(c + 1) * s] = True
    return region


# ---------------------------------------------------------------------------
# Comparison tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    video_id: str
    qp: int
    config: str
    bits_per_frame: float
    rate_saving_percent: float
    psnr_full: float | None
    psnr_nontexture: float | None
    ssim: float
    coverage_percent: float
    flicker: float | None


CSV_FIELDS = ["video", "qp", "config", "bits_per_frame", "rate_saving_pct",
              "psnr_full", "psnr_nontex", "ssim", "coverage_pct", "flicker"]


def build_comparison(base_reports: Sequence[EncodeReport],
                     tex_reports: Sequence[EncodeReport]) -> list[ComparisonRow]:
    """Pair reports by (video, qp) and compute rate savings against baseline."""
    base_by_key = {(r.video_id, r.qp): r for r in base_reports}
    rows = []
    for tex in sorted(tex_reports, key=lambda r: (r.video_id, r.qp, r.config)):
        key = (tex.video_id, tex.qp)
        if key not in base_by_key:
            raise MetricsError(f"no baseline report for video={key[0]} qp={key[1]}")
        base = base_by_key[key]
        saving = (tex.bits_per_frame - base.bits_per_frame) / base.bits_per_frame * 100.0
        rows.append(ComparisonRow(
            video_id=tex.video_id,
            qp=tex.qp,
            config=tex.config,
            bits_per_frame=tex.bits_per_frame,
            rate_saving_percent=saving,
            psnr_full=tex.avg_psnr_full(),
            psnr_nontexture=tex.avg_psnr_nontexture(),
            ssim=tex.avg_ssim(),
            coverage_percent=tex.avg_coverage * 100.0,
            flicker=tex.flicker,
        ))
    return rows


def _fmt(v: float | None, pattern: str = "{:.2f}") -> str:
    if v is None:
        return "inf"
    return pattern.format(v)


def rows_to_csv(rows: Sequence[ComparisonRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CSV_FIELDS)
    for r in rows:
        writer.writerow([
            r.video_id, r.qp, r.config,
            f"{r.bits_per_frame:.2f}",
            f"{r.rate_saving_percent:.2f}",
            "" if r.psnr_full is None else f"{r.psnr_full:.4f}",
            "" if r.psnr_nontexture is None else f"{r.psnr_nontexture:.4f}",
            f"{r.ssim:.6f}",
            f"{r.coverage_percent:.2f}",
            "" if r.flicker is None else f"{r.flicker:.4f}",
        ])
    return buf.getvalue()


def rows_to_table(rows: Sequence[ComparisonRow]) -> str:
    header = f"{'video':<16}{'qp':>4}{'config':>9}{'bits/frame':>12}{'saving%':>9}{'cover%':>8}{'flicker':>9}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r.video_id:<16}{r.qp:>4}{r.config:>9}{r.bits_per_frame:>12.1f}"
            f"{r.rate_saving_percent:>9.2f}{r.coverage_percent:>8.2f}"
            f"{_fmt(r.flicker, '{:.3f}'):>9}"
        )
    return "\n".join(lines)


def saving_trend_summary(rows: Sequence[ComparisonRow]) -> str:
    """One-line monotonicity summary of savings vs QP for a single video."""
    by_qp = sorted(rows, key=lambda r: r.qp)
    savings = [r.rate_saving_percent for r in by_qp]
    shrinking = all(savings[i] <= savings[i + 1] + 1.0 for i in range(len(savings) - 1))
    verdict = "savings shrink as qp increases" if shrinking else "savings NOT monotone in qp"
    seq = ", ".join(f"qp{r.qp}: {r.rate_saving_percent:+.2f}%" for r in by_qp)
    return f"{verdict} ({seq})"
