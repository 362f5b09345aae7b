"""Request/response models for the lab service.

The service runs next to its data: requests reference filesystem paths
rather than uploading frames, since clips and bitstreams are large and the
lab shares a disk with its clients.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator

InputFormat = Literal["png-dir", "yuv420"]
ConfigName = Literal["baseline", "tex-all", "tex-sp", "tex-cp"]


class PipelineOptions(BaseModel):
    threshold: float = 0.5
    tau_split: float = 1.0
    k_max: int = 4
    min_blocks: int = 5
    fast_threshold: int = 20
    ransac_iters: int = 2000
    ransac_tol: float = 1.5


class AnalyzeRequest(BaseModel):
    input: str
    format: InputFormat = "png-dir"
    size: Optional[str] = None         # "WxH", required for yuv420
    weights: str
    out: str
    options: PipelineOptions = Field(default_factory=PipelineOptions)
    overlays: bool = True

    @field_validator("size")
    @classmethod
    def _check_size(cls, v):
        if v is not None:
            parse_size(v)
        return v


class AnalyzeResponse(BaseModel):
    n_frames: int
    mask_files: list[str]
    overlay_files: list[str]
    summary_file: str
    coverage_mean: float
    coverage_per_frame: list[float]


class EncodeRequest(BaseModel):
    input: str
    format: InputFormat = "png-dir"
    size: Optional[str] = None
    config: ConfigName = "tex-cp"
    qps: list[int] = Field(default_factory=lambda: [16, 24, 32, 40])
    weights: Optional[str] = None      # unused by baseline
    seed: int = 0
    out: str
    video_id: str = "clip"
    options: PipelineOptions = Field(default_factory=PipelineOptions)

    @field_validator("qps")
    @classmethod
    def _check_qps(cls, v):
        if not v:
            raise ValueError("at least one qp required")
        for qp in v:
            if not (0 <= qp <= 63):
                raise ValueError(f"qp {qp} out of range [0, 63]")
        return v


class StreamInfo(BaseModel):
    qp: int
    bitstream_file: str
    report_file: str
    bits_per_frame: float
    coverage_percent: float
    flicker: Optional[float] = None
    degraded_frames: int = 0


class EncodeResponse(BaseModel):
    video_id: str
    config: ConfigName
    n_frames: int
    streams: list[StreamInfo]


class CompareRequest(BaseModel):
    baseline_reports: list[str]
    texture_reports: list[str]
    out: Optional[str] = None


class CompareResponse(BaseModel):
    rows: list[dict]
    csv_text: str
    table: str
    trend_lines: list[str]
    csv_file: Optional[str] = None


class RoundtripRequest(BaseModel):
    bitstream: str


class FrameVerdict(BaseModel):
    display_index: int
    crc_ok: bool


class RoundtripResponse(BaseModel):
    ok: bool
    n_frames: int
    frames: list[FrameVerdict]


def parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError as exc:
        raise ValueError(f"size must look like 352x288, got {text!r}") from exc
