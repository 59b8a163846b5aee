"""Turn validated key moments into an executable, cue-aligned cut plan.

Cut points only ever live on the cue-boundary lattice (cue edges plus 0 and
the transcript duration). Moments snap outward so no selected content is
lost; duration bounds are enforced by extending or contracting along the
lattice; overlaps displace the later segment. Conflicts that cannot be
resolved raise typed errors instead of silently dropping a reel.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

from .errors import InfeasibleSegment, PlanError
from .llm import KeyMoment, ReelSpec
from .transcript import Transcript, boundary_set


@dataclass(frozen=True)
class ReelSegment:
    order: int
    cut_start_ms: int
    cut_end_ms: int
    label: str
    summary: str
    source_moment_rank: int

    @property
    def duration_ms(self) -> int:
        return self.cut_end_ms - self.cut_start_ms


@dataclass(frozen=True)
class CutPlan:
    source_id: str
    spec: ReelSpec
    segments: tuple[ReelSegment, ...]


def snap_to_cues(m: KeyMoment, t: Transcript) -> tuple[int, int]:
    """Snap outward to the boundary lattice: start down, end up. Never shrinks."""
    bounds = boundary_set(t)
    start = bounds[bisect.bisect_right(bounds, m.start_ms) - 1]
    end = bounds[bisect.bisect_left(bounds, m.end_ms)]
    return start, end


def _search_fallback(bounds: list[int], snapped: tuple[int, int],
                     min_ms: int, max_ms: int) -> tuple[int, int] | None:
    """Exhaustive scan for a duration-valid lattice window still touching the
    snapped moment; only reached when the greedy walks fail (giant cues)."""
    s, e = snapped
    best = None
    best_key = None
    for i, bs in enumerate(bounds):
        for be in bounds[i + 1:]:
            dur = be - bs
            if dur < min_ms:
                continue
            if dur > max_ms:
                break
            if be <= s or bs >= e:
                continue  # no longer around the moment
            key = (abs(bs - s) + abs(be - e), bs)
            if best_key is None or key < best_key:
                best_key = key
                best = (bs, be)
    return best


def enforce_duration(seg_bounds: tuple[int, int], spec: ReelSpec,
                     t: Transcript) -> tuple[int, int]:
    """Grow or shrink snapped bounds along the lattice until the duration
    lands in [min, max].

    Too short: extend the end forward boundary by boundary; if the end hits
    the transcript duration first, extend the start backward. Too long:
    contract the end backward (openings carry the labeled concept, so the
    start is preserved whenever possible).
    """
    bounds = boundary_set(t)
    min_ms = spec.min_duration_s * 1000
    max_ms = spec.max_duration_s * 1000
    s, e = seg_bounds

    if min_ms <= e - s <= max_ms:
        return s, e

    if e - s < min_ms:
        j = bisect.bisect_right(bounds, e)
        while j < len(bounds) and bounds[j] - s < min_ms:
            j += 1
        if j < len(bounds):
            if bounds[j] - s <= max_ms:
                return s, bounds[j]
        else:
            e = bounds[-1]
            i = bisect.bisect_left(bounds, s) - 1
            while i >= 0 and e - bounds[i] < min_ms:
                i -= 1
            if i >= 0 and e - bounds[i] <= max_ms:
                return bounds[i], e
    else:
        j = bisect.bisect_left(bounds, e) - 1
        while j >= 0 and bounds[j] - s > max_ms:
            j -= 1
        if j >= 0 and bounds[j] > s and bounds[j] - s >= min_ms:
            return s, bounds[j]

    found = _search_fallback(bounds, seg_bounds, min_ms, max_ms)
    if found is None:
        raise InfeasibleSegment(
            f"no cue-aligned window of {spec.min_duration_s}-"
            f"{spec.max_duration_s} s exists around [{s}, {e}] ms")
    return found


def resolve_overlaps(segments: list[ReelSegment], spec: ReelSpec) -> list[ReelSegment]:
    """Push each overlapping segment's start to its predecessor's end.

    Input must be sorted by cut_start_ms. Cut points stay on the lattice
    because the predecessor's end already is. Raises PlanError (with the
    offending pair) when a push would drop a segment below the minimum
    duration.
    """
    min_ms = spec.min_duration_s * 1000
    out: list[ReelSegment] = []
    for i, seg in enumerate(segments):
        if out and seg.cut_start_ms < out[-1].cut_end_ms:
            new_start = out[-1].cut_end_ms
            if seg.cut_end_ms - new_start < min_ms:
                raise PlanError(
                    f"segments {i - 1} and {i} overlap and displacement would "
                    f"leave segment {i} shorter than {spec.min_duration_s} s",
                    pair=(i - 1, i))
            seg = ReelSegment(order=seg.order, cut_start_ms=new_start,
                              cut_end_ms=seg.cut_end_ms, label=seg.label,
                              summary=seg.summary,
                              source_moment_rank=seg.source_moment_rank)
        out.append(seg)
    return out


def plan(t: Transcript, moments: list[KeyMoment], spec: ReelSpec) -> CutPlan:
    """snap -> enforce duration -> sort -> resolve overlaps."""
    if len(moments) != spec.reel_count:
        raise PlanError(
            f"expected {spec.reel_count} moments, got {len(moments)}")
    drafts = []
    for m in moments:
        snapped = snap_to_cues(m, t)
        try:
            start, end = enforce_duration(snapped, spec, t)
        except InfeasibleSegment as e:
            raise InfeasibleSegment(f"moment {m.rank}: {e}", moment_rank=m.rank) from e
        drafts.append(ReelSegment(order=0, cut_start_ms=start, cut_end_ms=end,
                                  label=m.label, summary=m.summary,
                                  source_moment_rank=m.rank))
    drafts.sort(key=lambda s: (s.cut_start_ms, s.cut_end_ms, s.source_moment_rank))
    try:
        resolved = resolve_overlaps(drafts, spec)
    except PlanError as e:
        ranks = None
        if e.pair is not None:
            ranks = (drafts[e.pair[0]].source_moment_rank,
                     drafts[e.pair[1]].source_moment_rank)
        raise PlanError(f"{e} (moment ranks {ranks})", pair=e.pair) from e
    segments = tuple(
        ReelSegment(order=i, cut_start_ms=s.cut_start_ms, cut_end_ms=s.cut_end_ms,
                    label=s.label, summary=s.summary,
                    source_moment_rank=s.source_moment_rank)
        for i, s in enumerate(resolved))
    return CutPlan(source_id=t.source_id, spec=spec, segments=segments)


def plan_to_manifest(p: CutPlan) -> dict:
    """The wire/manifest form of a cut plan."""
    return {
        "source_id": p.source_id,
        "spec": {
            "reel_count": p.spec.reel_count,
            "min_s": p.spec.min_duration_s,
            "max_s": p.spec.max_duration_s,
            "target_s": p.spec.target_duration_s,
        },
        "segments": [
            {"order": s.order, "start_ms": s.cut_start_ms, "end_ms": s.cut_end_ms,
             "label": s.label, "summary": s.summary}
            for s in p.segments
        ],
    }


def plan_from_manifest(d: dict) -> CutPlan:
    spec = ReelSpec(reel_count=d["spec"]["reel_count"],
                    min_duration_s=d["spec"]["min_s"],
                    max_duration_s=d["spec"]["max_s"],
                    target_duration_s=d["spec"]["target_s"])
    segments = tuple(
        ReelSegment(order=s["order"], cut_start_ms=s["start_ms"],
                    cut_end_ms=s["end_ms"], label=s["label"],
                    summary=s["summary"], source_moment_rank=s.get("order", i))
        for i, s in enumerate(d["segments"]))
    return CutPlan(source_id=d["source_id"], spec=spec, segments=segments)
