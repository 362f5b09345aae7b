"""Golden-frame group planning for the four coding configurations.

baseline, tex-sp and tex-cp share a fixed 8-frame group with a hierarchical
binary pyramid (ALTREF coded right after the GOLDEN anchor, then recursive
bisection); they differ only in which frames enable texture mode and how
many references texture reconstruction uses. tex-all uses a single-layer
group where every non-anchor frame is forward predicted and texture enabled.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


GF_INTERVAL = 8


class CodingConfig(str, Enum):
    BASELINE = "baseline"
    TEX_ALL = "tex-all"
    TEX_SP = "tex-sp"
    TEX_CP = "tex-cp"

    @property
    def uses_texture(self) -> bool:
        return self is not CodingConfig.BASELINE

    @property
    def pyramid(self) -> bool:
        return self is not CodingConfig.TEX_ALL


class FrameKind(str, Enum):
    GOLDEN = "GOLDEN"
    ALTREF = "ALTREF"
    INTER = "INTER"


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class PlanEntry:
    display_index: int
    coding_order: int
    kind: FrameKind
    layer: int
    texture_enabled: bool
    refs: tuple[int, ...]       # conventional prediction references (display order)
    tex_refs: tuple[int, ...]   # references used for texture warping


@dataclass(frozen=True)
class GfGroupPlan:
    golden_display: int
    altref_display: int
    entries: tuple[PlanEntry, ...]

    @property
    def interval(self) -> int:
        return self.altref_display - self.golden_display


def plan_gf_groups(n_frames: int, config: CodingConfig | str) -> list[GfGroupPlan]:
    """Plan all GF groups for a sequence.

    Groups span GOLDEN..ALTREF inclusive; consecutive groups share their
    boundary frame (an ALTREF anchors the next group as its GOLDEN), so each
    frame is coded exactly once. The final group is truncated when fewer
    than GF_INTERVAL frames remain.
    """
    config = CodingConfig(config)
    if n_frames < 2:
        raise PlanError(f"need at least 2 frames, got {n_frames}")
    groups = []
    order = 0
    golden = 0
    first = True
    while golden < n_frames - 1:
        altref = min(golden + GF_INTERVAL, n_frames - 1)
        entries = []
        if first:
            entries.append(PlanEntry(golden, order, FrameKind.GOLDEN, 0, False, (), ()))
            order += 1
            first = False
        if config.pyramid:
            entries.append(PlanEntry(altref, order, FrameKind.ALTREF, 1, False, (golden,), ()))
            order += 1
            order = _bisect(entries, golden, altref, 2, order, config)
        else:
            for d in range(golden + 1, altref):
                entries.append(PlanEntry(d, order, FrameKind.INTER, 1, True, (d - 1,), (d - 1,)))
                order += 1
            entries.append(PlanEntry(altref, order, FrameKind.ALTREF, 1, False, (golden,), ()))
            order += 1
        groups.append(GfGroupPlan(golden, altref, tuple(entries)))
        golden = altref
    return groups


def _bisect(entries: list, lo: int, hi: int, layer: int, order: int, config: CodingConfig) -> int:
    """Emit the binary pyramid between two coded anchors, pre-order."""
    if hi - lo < 2:
        return order
    mid = (lo + hi) // 2
    refs = (lo, hi)
    # Texture mode needs display-adjacent references: the previous frame
    # (and, for compound prediction, the next frame). In full groups this
    # selects exactly display offsets 1, 3, 5, 7.
    if config is CodingConfig.TEX_CP and refs == (mid - 1, mid + 1):
        tex_refs: tuple[int, ...] = (mid - 1, mid + 1)
    elif config is CodingConfig.TEX_SP and refs[0] == mid - 1 and refs == (mid - 1, mid + 1):
        tex_refs = (mid - 1,)
    else:
        tex_refs = ()
    entries.append(PlanEntry(mid, order, FrameKind.INTER, layer, bool(tex_refs), refs, tex_refs))
    order += 1
    order = _bisect(entries, lo, mid, layer + 1, order, config)
    order = _bisect(entries, mid, hi, layer + 1, order, config)
    return order


def flatten_plan(groups: list[GfGroupPlan]) -> list[PlanEntry]:
    """All entries of all groups in global coding order."""
    entries = [e for g in groups for e in g.entries]
    return sorted(entries, key=lambda e: e.coding_order)
