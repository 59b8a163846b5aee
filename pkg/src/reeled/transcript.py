"""Caption ingestion: parse SRT/WebVTT files into a canonical timestamped transcript.

All timestamps are integer milliseconds. Parsing preserves source cue order;
`normalize` is the separate step that sorts, resolves overlaps and reindexes.
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass, replace

from .errors import DecodeError, EmptyTranscript, FormatError, RangeError

_TAG_RE = re.compile(r"<[^>]*>")
# SRT uses a comma before milliseconds, VTT a dot; hours are optional in VTT.
_SRT_TIME_RE = re.compile(r"^(\d{1,2}):(\d{2}):(\d{2})[,.](\d{3})$")
_VTT_TIME_RE = re.compile(r"^(?:(\d{1,4}):)?(\d{2}):(\d{2})\.(\d{3})$")
_ARROW = "-->"


@dataclass(frozen=True)
class TranscriptCue:
    index: int
    start_ms: int
    end_ms: int
    text: str


@dataclass(frozen=True)
class Transcript:
    source_id: str
    language: str
    cues: tuple[TranscriptCue, ...]
    duration_ms: int

    def with_duration(self, duration_ms: int) -> "Transcript":
        """Raise the transcript duration (e.g. to the probed media duration)."""
        return replace(self, duration_ms=max(self.duration_ms, duration_ms))


def _clean_text(raw: str) -> str:
    """Strip markup tags and entities, collapse whitespace."""
    text = _TAG_RE.sub("", raw)
    text = html.unescape(text)
    return " ".join(text.split())


def _parse_srt_time(token: str, line_no: int) -> int:
    m = _SRT_TIME_RE.match(token)
    if not m:
        raise FormatError(f"bad SRT timestamp {token!r}", line_no)
    h, mi, s, ms = (int(g) for g in m.groups())
    return ((h * 60 + mi) * 60 + s) * 1000 + ms


def _parse_vtt_time(token: str, line_no: int) -> int:
    m = _VTT_TIME_RE.match(token)
    if not m:
        raise FormatError(f"bad VTT timestamp {token!r}", line_no)
    h = int(m.group(1)) if m.group(1) else 0
    mi, s, ms = int(m.group(2)), int(m.group(3)), int(m.group(4))
    return ((h * 60 + mi) * 60 + s) * 1000 + ms


def _parse_srt(lines: list[str]) -> list[tuple[int, int, str]]:
    cues: list[tuple[int, int, str]] = []
    i = 0
    n = len(lines)
    while i < n:
        if not lines[i].strip():
            i += 1
            continue
        # counter line; tolerate its absence when a timing line comes first
        if _ARROW not in lines[i]:
            if not lines[i].strip().isdigit():
                raise FormatError(f"expected cue counter, got {lines[i]!r}", i + 1)
            i += 1
            if i >= n:
                raise FormatError("cue counter at end of file", i)
        if _ARROW not in lines[i]:
            raise FormatError(f"expected timing line, got {lines[i]!r}", i + 1)
        left, _, right = lines[i].partition(_ARROW)
        start = _parse_srt_time(left.strip(), i + 1)
        end = _parse_srt_time(right.strip().split()[0], i + 1)
        i += 1
        text_lines = []
        while i < n and lines[i].strip():
            text_lines.append(lines[i])
            i += 1
        cues.append((start, end, _clean_text(" ".join(text_lines))))
    return cues


def _parse_vtt(lines: list[str]) -> list[tuple[int, int, str]]:
    if not lines or not lines[0].strip().startswith("WEBVTT"):
        raise FormatError("missing WEBVTT header", 1)
    cues: list[tuple[int, int, str]] = []
    i = 1
    n = len(lines)
    while i < n:
        line = lines[i].strip()
        if not line:
            i += 1
            continue
        # skip NOTE/STYLE/REGION blocks wholesale
        if line.startswith(("NOTE", "STYLE", "REGION")):
            i += 1
            while i < n and lines[i].strip():
                i += 1
            continue
        if _ARROW not in line:
            # cue identifier line; the timing line must follow
            i += 1
            if i >= n or _ARROW not in lines[i]:
                raise FormatError(f"expected timing line after cue id {line!r}", i + 1)
            line = lines[i].strip()
        left, _, right = line.partition(_ARROW)
        start = _parse_vtt_time(left.strip(), i + 1)
        end = _parse_vtt_time(right.strip().split()[0], i + 1)  # drop cue settings
        i += 1
        text_lines = []
        while i < n and lines[i].strip():
            text_lines.append(lines[i])
            i += 1
        cues.append((start, end, _clean_text(" ".join(text_lines))))
    return cues


def _detect_format(lines: list[str]) -> str:
    for line in lines:
        if not line.strip():
            continue
        if line.strip().startswith("WEBVTT"):
            return "vtt"
        if line.strip().isdigit():
            return "srt"
        break
    raise FormatError("neither WEBVTT header nor SRT counter block found", 1)


def parse_captions(raw: bytes, format_hint: str = "auto",
                   source_id: str = "", language: str = "und") -> Transcript:
    """Parse SRT or WebVTT bytes into a Transcript.

    Cue order is preserved as found in the source; run `normalize` before
    feeding the transcript to anything that assumes sorted, disjoint cues.
    """
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as e:
        raise DecodeError(f"input is not UTF-8: {e}") from e

    lines = text.splitlines()
    fmt = format_hint if format_hint != "auto" else _detect_format(lines)
    if fmt == "srt":
        triples = _parse_srt(lines)
    elif fmt == "vtt":
        triples = _parse_vtt(lines)
    else:
        raise FormatError(f"unknown format hint {fmt!r}", None)

    cues = []
    for idx, (start, end, cue_text) in enumerate(triples):
        if start >= end:
            raise FormatError(f"cue {idx}: start {start} ms not before end {end} ms", None)
        if not cue_text:
            continue  # styling-only cue; nothing to prompt or snap on
        cues.append(TranscriptCue(index=len(cues), start_ms=start, end_ms=end, text=cue_text))
    if not cues:
        raise EmptyTranscript("no cues with text found")
    duration = max(c.end_ms for c in cues)
    return Transcript(source_id=source_id, language=language,
                      cues=tuple(cues), duration_ms=duration)


def normalize(t: Transcript) -> Transcript:
    """Sort cues, truncate overlaps (earlier cue yields), drop emptied cues, reindex."""
    if not t.cues:
        raise EmptyTranscript("transcript has no cues")
    ordered = sorted(t.cues, key=lambda c: (c.start_ms, c.end_ms, c.index))
    kept: list[TranscriptCue] = []
    for i, cue in enumerate(ordered):
        end = cue.end_ms
        if i + 1 < len(ordered) and end > ordered[i + 1].start_ms:
            end = ordered[i + 1].start_ms
        if end > cue.start_ms:
            kept.append(TranscriptCue(index=len(kept), start_ms=cue.start_ms,
                                      end_ms=end, text=cue.text))
    if not kept:
        raise EmptyTranscript("all cues eliminated by overlap truncation")
    duration = max(t.duration_ms, kept[-1].end_ms)
    return Transcript(source_id=t.source_id, language=t.language,
                      cues=tuple(kept), duration_ms=duration)


def slice_cues(t: Transcript, start_ms: int, end_ms: int) -> list[TranscriptCue]:
    """All cues intersecting [start_ms, end_ms), untrimmed, in order."""
    if not (0 <= start_ms < end_ms <= t.duration_ms):
        raise RangeError(
            f"window [{start_ms}, {end_ms}) outside [0, {t.duration_ms}]")
    return [c for c in t.cues if c.start_ms < end_ms and c.end_ms > start_ms]


def boundary_set(t: Transcript) -> list[int]:
    """Sorted legal cut points: every cue edge plus 0 and the duration."""
    points = {0, t.duration_ms}
    for c in t.cues:
        points.add(c.start_ms)
        points.add(c.end_ms)
    return sorted(points)


def transcript_to_dict(t: Transcript) -> dict:
    return {
        "source_id": t.source_id,
        "language": t.language,
        "duration_ms": t.duration_ms,
        "cues": [
            {"index": c.index, "start_ms": c.start_ms, "end_ms": c.end_ms, "text": c.text}
            for c in t.cues
        ],
    }


def transcript_from_dict(d: dict) -> Transcript:
    cues = tuple(
        TranscriptCue(index=c["index"], start_ms=c["start_ms"],
                      end_ms=c["end_ms"], text=c["text"])
        for c in d["cues"]
    )
    return Transcript(source_id=d["source_id"], language=d["language"],
                      cues=cues, duration_ms=d["duration_ms"])
