"""Independent brute-force oracles.

Each oracle re-derives an expected result through a different route than the
implementation under test: reference mini-parsers for caption files, direct
scans for slicing/snapping/window selection, a full validity checker for cut
plans, pairwise-comparison enumeration for the exact Mann-Whitney p, and a
standalone revisit recount. Nothing here imports the production algorithms.
"""

from __future__ import annotations

import itertools
import re

# --- reference caption parsing (independent of reeled.transcript) -----------

_REF_TIME = re.compile(r"(\d+):(\d{2}):(\d{2})[,.](\d{3})")


def ref_parse_timestamps(text: str) -> list[tuple[int, int]]:
    """All (start_ms, end_ms) pairs on '-->' lines, straight off the file."""
    out = []
    for line in text.splitlines():
        if "-->" not in line:
            continue
        stamps = _REF_TIME.findall(line)
        if len(stamps) >= 2:
            vals = []
            for h, m, s, ms in stamps[:2]:
                vals.append(((int(h) * 60 + int(m)) * 60 + int(s)) * 1000 + int(ms))
            out.append((vals[0], vals[1]))
    return out


# --- transcript oracles -------------------------------------------------------

def normalize_oracle(cues: list[tuple[int, int, str]]) -> list[tuple[int, int, str]]:
    """Sort by start then truncate each cue at its successor's start."""
    ordered = sorted(enumerate(cues), key=lambda p: (p[1][0], p[1][1], p[0]))
    result = []
    for pos, (_, (start, end, text)) in enumerate(ordered):
        if pos + 1 < len(ordered):
            nxt_start = ordered[pos + 1][1][0]
            end = min(end, nxt_start)
        if end > start:
            result.append((start, end, text))
    return result


def slice_oracle(cues, start_ms: int, end_ms: int):
    return [c for c in cues if c.start_ms < end_ms and c.end_ms > start_ms]


# --- planner oracles ----------------------------------------------------------

def boundary_oracle(t) -> set[int]:
    points = {0, t.duration_ms}
    for c in t.cues:
        points.update((c.start_ms, c.end_ms))
    return points


def check_plan_validity(plan, t, spec) -> list[str]:
    """Every cut-plan invariant, checked directly. Returns violations."""
    problems = []
    segs = list(plan.segments)
    if len(segs) != spec.reel_count:
        problems.append(f"count {len(segs)} != {spec.reel_count}")
    if [s.order for s in segs] != list(range(len(segs))):
        problems.append("orders are not 0..K-1")
    starts = [s.cut_start_ms for s in segs]
    if starts != sorted(starts):
        problems.append("segments not sorted by start")
    for a, b in zip(segs, segs[1:]):
        if b.cut_start_ms < a.cut_end_ms:
            problems.append(f"segments {a.order},{b.order} overlap")
    lattice = boundary_oracle(t)
    min_ms = spec.min_duration_s * 1000
    max_ms = spec.max_duration_s * 1000
    for s in segs:
        dur = s.cut_end_ms - s.cut_start_ms
        if not (min_ms <= dur <= max_ms):
            problems.append(f"segment {s.order} duration {dur} outside bounds")
        if not (0 <= s.cut_start_ms < s.cut_end_ms <= t.duration_ms):
            problems.append(f"segment {s.order} outside transcript")
        if s.cut_start_ms not in lattice or s.cut_end_ms not in lattice:
            problems.append(f"segment {s.order} cut point off the lattice")
    return problems


def best_window_oracle(t, spec) -> list[tuple[int, int]]:
    """Full O(n^2)-per-band scan mirroring the stated selection rule."""
    duration, k = t.duration_ms, spec.reel_count
    target_ms = spec.target_duration_s * 1000
    cues = list(t.cues)
    words = [len(c.text.split()) for c in cues]
    picks = []
    for band in range(k):
        band_start = duration * band // k
        band_end = duration * (band + 1) // k
        starts = [i for i, c in enumerate(cues) if band_start <= c.start_ms < band_end]
        if not starts:
            centre = (band_start + band_end) // 2
            starts = [min(range(len(cues)),
                          key=lambda i: (abs(cues[i].start_ms - centre),
                                         cues[i].start_ms))]
        candidates = []
        for i in starts:
            for j in range(i, len(cues)):
                dur = cues[j].end_ms - cues[i].start_ms
                wc = sum(words[i:j + 1])
                candidates.append(((abs(dur - target_ms), -wc, cues[i].start_ms),
                                   (cues[i].start_ms, cues[j].end_ms)))
        picks.append(min(candidates)[1])
    return sorted(picks)


# --- Mann-Whitney enumeration oracle ---------------------------------------

def mw_u_pairwise(g1, g2) -> float:
    """U for g1 by direct pairwise comparison (ties count half)."""
    u = 0.0
    for a in g1:
        for b in g2:
            if a > b:
                u += 1.0
            elif a == b:
                u += 0.5
    return u


def mw_exact_p_oracle(g1, g2) -> float:
    """Two-sided exact p by enumerating every group relabeling of the pooled
    values and comparing pairwise U statistics."""
    pooled = list(g1) + list(g2)
    n1 = len(g1)
    u_obs = mw_u_pairwise(g1, g2)
    c_le = c_ge = total = 0
    for idx in itertools.combinations(range(len(pooled)), n1):
        chosen = set(idx)
        a = [pooled[i] for i in idx]
        b = [pooled[i] for i in range(len(pooled)) if i not in chosen]
        u = mw_u_pairwise(a, b)
        total += 1
        if u <= u_obs:
            c_le += 1
        if u >= u_obs:
            c_ge += 1
    return min(1.0, 2.0 * min(c_le, c_ge) / total)


# --- revisit recount ----------------------------------------------------------

def recount_revisits(events, debounce_s: float = 2.0) -> int:
    """Standalone reimplementation of the revisit definition."""
    seen_open = False
    total = 0
    prev = None  # (subject, wall_time) of last qualifying event
    for e in events:
        if e["kind"] == "quiz_open" and not seen_open:
            seen_open = True
            continue
        if not seen_open or e["kind"] not in ("play", "seek"):
            continue
        is_continuation = (prev is not None and prev[0] == e["subject_id"]
                           and float(e["wall_time"]) - prev[1] <= debounce_s)
        if not is_continuation:
            total += 1
        prev = (e["subject_id"], float(e["wall_time"]))
    return total
