"""Hybrid encoder/decoder with the zero-residual texture mode."""

from .plan import CodingConfig, FrameKind, GfGroupPlan, PlanEntry, plan_gf_groups
from .encoder import EncodeResult, encode_sequence
from .decoder import DecodeResult, decode_sequence, verify_bitstream
from .warp import warp_block, warp_frame_region

__all__ = [
    "CodingConfig",
    "FrameKind",
    "GfGroupPlan",
    "PlanEntry",
    "plan_gf_groups",
    "EncodeResult",
    "encode_sequence",
    "DecodeResult",
    "decode_sequence",
    "verify_bitstream",
    "warp_block",
    "warp_frame_region",
]
