"""Service operations: the single implementation behind HTTP and the CLI.

Raises typed faults that the HTTP layer maps to status codes and the CLI
maps to its stable exit codes (2 input, 3 codec, 4 comparison, 5 verify).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..analyzer import ModelError, load_weights, segment_frame
from ..codec.decoder import decode_sequence
from ..codec.encoder import CodecError, encode_sequence
from ..codec.entropy import BitstreamError
from ..config import PipelineParams
from ..core import yuv420_to_rgb
from ..io_utils import (IngestError, atomic_write_bytes, atomic_write_json,
                        atomic_write_text, ingest, save_mask_pgm, save_overlay_png)
from ..metrics import MetricsError, EncodeReport, build_comparison, rows_to_csv, rows_to_table, saving_trend_summary
from ..motion import models_to_csv
from ..refine import refine_sequence
from . import models as m


class InputFault(Exception):
    pass


class CodecFault(Exception):
    pass


class ComparisonFault(Exception):
    pass


class VerificationFault(Exception):
    pass


def _params(options: m.PipelineOptions) -> PipelineParams:
    return PipelineParams(**options.model_dump()).validate()


def _load_clip(req) -> tuple[list, list | None]:
    size = m.parse_size(req.size) if req.size else None
    try:
        return ingest(req.input, req.format, size)
    except (IngestError, OSError, ValueError) as exc:
        raise InputFault(str(exc)) from exc


def run_analyze(req: m.AnalyzeRequest) -> m.AnalyzeResponse:
    frames, rgbs = _load_clip(req)
    try:
        weights = load_weights(req.weights)
    except (OSError, ModelError) as exc:
        raise InputFault(f"cannot load weights: {exc}") from exc
    params = _params(req.options)
    if rgbs is None:
        rgbs = [yuv420_to_rgb(f) for f in frames]
    raw = [segment_frame(rgbs[i], weights, params.threshold, frame_index=i)
           for i in range(len(frames))]
    masks = refine_sequence(frames, raw, params.min_blocks, params.tau_split, params.k_max)

    out = Path(req.out)
    out.mkdir(parents=True, exist_ok=True)
    mask_files, overlay_files, coverage = [], [], []
    for i, mask in enumerate(masks.masks):
        mpath = out / f"mask_{i:04d}.pgm"
        save_mask_pgm(mask, mpath)
        mask_files.append(str(mpath))
        if req.overlays:
            opath = out / f"overlay_{i:04d}.png"
            save_overlay_png(rgbs[i], mask, opath)
            overlay_files.append(str(opath))
        tex_pixels = mask.texture_block_count() * mask.grid.block_size ** 2
        coverage.append(tex_pixels / float(frames[i].width * frames[i].height))
    summary = {
        "n_frames": len(frames),
        "coverage_mean": float(np.mean(coverage)) if coverage else 0.0,
        "coverage_per_frame": coverage,
        "mask_files": mask_files,
    }
    spath = out / "analysis.json"
    atomic_write_json(spath, summary)
    return m.AnalyzeResponse(n_frames=len(frames), mask_files=mask_files,
                             overlay_files=overlay_files, summary_file=str(spath),
                             coverage_mean=summary["coverage_mean"],
                             coverage_per_frame=coverage)


def run_encode(req: m.EncodeRequest) -> m.EncodeResponse:
    frames, rgbs = _load_clip(req)
    params = _params(req.options)
    weights = None
    if req.config != "baseline":
        if not req.weights:
            raise InputFault(f"config {req.config} requires --weights")
        try:
            weights = load_weights(req.weights)
        except (OSError, ModelError) as exc:
            raise InputFault(f"cannot load weights: {exc}") from exc

    out = Path(req.out)
    out.mkdir(parents=True, exist_ok=True)
    streams = []
    masks = None
    models = None
    inliers: dict = {}
    try:
        for qp in req.qps:
            result = encode_sequence(frames, req.config, qp, weights, req.seed,
                                     masks=masks, models=models, rgb_sources=rgbs,
                                     params=params, video_id=req.video_id)
            # analysis and motion are QP independent: reuse across the sweep
            masks = result.masks
            models = result.models
            inliers.update(result.model_inliers)
            stem = f"{req.video_id}_{req.config}_qp{qp}"
            bpath = out / f"{stem}.texc1"
            rpath = out / f"{stem}.report.json"
            atomic_write_bytes(bpath, result.bitstream)
            atomic_write_json(rpath, result.report.to_dict())
            if result.models:
                rows = [(d, ref, result.models[(d, ref)], inliers.get((d, ref), -1))
                        for (d, ref) in sorted(result.models)]
                atomic_write_text(out / f"{stem}.models.csv", models_to_csv(rows))
            streams.append(m.StreamInfo(
                qp=qp,
                bitstream_file=str(bpath),
                report_file=str(rpath),
                bits_per_frame=result.report.bits_per_frame,
                coverage_percent=result.report.avg_coverage * 100.0,
                flicker=result.report.flicker,
                degraded_frames=sum(1 for f in result.report.frames if f.degraded),
            ))
    except CodecError as exc:
        raise CodecFault(str(exc)) from exc
    return m.EncodeResponse(video_id=req.video_id, config=req.config,
                            n_frames=len(frames), streams=streams)


def _load_reports(paths: list[str]) -> list[EncodeReport]:
    reports = []
    for p in paths:
        try:
            reports.append(EncodeReport.from_dict(json.loads(Path(p).read_text())))
        except (OSError, json.JSONDecodeError, TypeError, KeyError) as exc:
            raise ComparisonFault(f"cannot load report {p}: {exc}") from exc
    return reports


def run_compare(req: m.CompareRequest) -> m.CompareResponse:
    if not req.baseline_reports or not req.texture_reports:
        raise ComparisonFault("need at least one baseline and one texture report")
    base = _load_reports(req.baseline_reports)
    tex = _load_reports(req.texture_reports)
    try:
        rows = build_comparison(base, tex)
    except MetricsError as exc:
        raise ComparisonFault(str(exc)) from exc
    csv_text = rows_to_csv(rows)
    table = rows_to_table(rows)
    trends = []
    for video in sorted({r.video_id for r in rows}):
        per_video = [r for r in rows if r.video_id == video]
        if len(per_video) >= 2:
            trends.append(f"{video}: {saving_trend_summary(per_video)}")
    csv_file = None
    if req.out:
        outdir = Path(req.out)
        outdir.mkdir(parents=True, exist_ok=True)
        csv_file = str(outdir / "comparison.csv")
        atomic_write_text(csv_file, csv_text)
        atomic_write_text(outdir / "comparison.txt", table + "\n")
        # saving-vs-qp plot data, one series per (video, config)
        plot_lines = ["video,config,qp,rate_saving_pct"]
        for r in sorted(rows, key=lambda r: (r.video_id, r.config, r.qp)):
            plot_lines.append(f"{r.video_id},{r.config},{r.qp},{r.rate_saving_percent:.4f}")
        atomic_write_text(outdir / "saving_vs_qp.csv", "\n".join(plot_lines) + "\n")
    return m.CompareResponse(
        rows=[r.__dict__ for r in rows], csv_text=csv_text, table=table,
        trend_lines=trends, csv_file=csv_file)


def run_roundtrip(req: m.RoundtripRequest) -> m.RoundtripResponse:
    try:
        data = Path(req.bitstream).read_bytes()
    except OSError as exc:
        raise InputFault(str(exc)) from exc
    try:
        result = decode_sequence(data)
    except BitstreamError as exc:
        raise VerificationFault(str(exc)) from exc
    return m.RoundtripResponse(
        ok=result.all_crc_ok,
        n_frames=len(result.frames),
        frames=[m.FrameVerdict(display_index=f.display_index, crc_ok=f.crc_ok)
                for f in result.frame_info])
