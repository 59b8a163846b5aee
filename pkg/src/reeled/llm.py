"""Key-moment identification and enrichment through a pluggable LLM provider.

Stage one asks the model for K timestamped moments; stage two asks for a
label and summary per moment. Responses are strict JSON, validated and
repaired through a bounded retry loop. The mock provider is deterministic
and fully offline: it parses the prompt it receives and applies a band/
window selection rule, so the whole pipeline runs without network access.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, replace
from typing import Protocol

from .errors import (
    CountError,
    EmptyTranscript,
    ExhaustedRetries,
    InfeasibleSpec,
    MissingWindow,
    ParseError,
    ProviderError,
    RangeError,
    SchemaError,
    SpecError,
)
from .transcript import Transcript, TranscriptCue, slice_cues

MAX_LABEL_CHARS = 80
MAX_SUMMARY_CHARS = 400
DEFAULT_MAX_RETRIES = 2

IDENTIFY_SCHEMA_ID = "key_moments.v1"
ENRICH_SCHEMA_ID = "moment_enrichment.v1"

_WIRE_TIME_RE = re.compile(r"^(\d{2}):(\d{2}):(\d{2})\.(\d{3})$")
_CUE_LINE_RE = re.compile(r"^\[(\d{2,}):(\d{2})–(\d{2,}):(\d{2})\] (.*)$")
_CONSTRAINT_RE = re.compile(
    r"^Select exactly (\d+) moments, each (\d+)–(\d+) seconds long\.$")
_TARGET_RE = re.compile(r"^Aim for about (\d+) seconds per moment\.$")


@dataclass(frozen=True)
class ReelSpec:
    reel_count: int = 5
    min_duration_s: int = 30
    max_duration_s: int = 60
    target_duration_s: int = 45

    def __post_init__(self):
        if self.reel_count < 1:
            raise SpecError(f"reel_count must be >= 1, got {self.reel_count}")
        if not (0 < self.min_duration_s <= self.target_duration_s <= self.max_duration_s):
            raise SpecError(
                "need 0 < min <= target <= max, got "
                f"min={self.min_duration_s} target={self.target_duration_s} "
                f"max={self.max_duration_s}")


@dataclass(frozen=True)
class KeyMoment:
    rank: int
    start_ms: int
    end_ms: int
    label: str
    summary: str


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    user_text: str
    response_schema_id: str
    provider_params: tuple[tuple[str, object], ...] = (
        ("temperature", 0.0),
        ("max_output_tokens", 2048),
    )


class LLMProvider(Protocol):
    def complete(self, bundle: PromptBundle) -> str: ...


def format_wire_time(ms: int) -> str:
    """HH:MM:SS.mmm — the only timestamp grammar accepted on the wire."""
    s, msec = divmod(ms, 1000)
    m, sec = divmod(s, 60)
    h, m = divmod(m, 60)
    return f"{h:02d}:{m:02d}:{sec:02d}.{msec:03d}"


def parse_wire_time(token: str) -> int:
    m = _WIRE_TIME_RE.match(token)
    if m is None:
        raise ValueError(f"not an HH:MM:SS.mmm timestamp: {token!r}")
    h, mi, s, ms = (int(g) for g in m.groups())
    return ((h * 60 + mi) * 60 + s) * 1000 + ms


def _format_mmss(ms: int) -> str:
    total_s = ms // 1000
    return f"{total_s // 60:02d}:{total_s % 60:02d}"


def cue_line(c: TranscriptCue) -> str:
    return f"[{_format_mmss(c.start_ms)}–{_format_mmss(c.end_ms)}] {c.text}"


def truncate_words(text: str, limit: int) -> str:
    """Cut at the last word boundary that fits; hard cut if one word overflows."""
    text = text.strip()
    if len(text) <= limit:
        return text
    cut = text[:limit]
    if " " in cut:
        cut = cut[:cut.rfind(" ")]
    return cut.rstrip() or text[:limit]


def build_prompt(t: Transcript, spec: ReelSpec | None, stage: str,
                 window: list[TranscriptCue] | None = None) -> PromptBundle:
    """Render the deterministic prompt for a stage.

    identify embeds the whole transcript plus the moment-count and duration
    constraints; enrich embeds only the given cue window. Identical inputs
    produce byte-identical bundles.
    """
    if stage == "identify":
        if spec is None:
            raise SpecError("identify stage requires a ReelSpec")
        if not t.cues:
            raise EmptyTranscript("cannot build a prompt from an empty transcript")
        lines = [
            "You are given a lecture transcript with timestamped captions.",
            "Pick the moments that best cover the lecture's core concepts.",
            "",
            "Transcript:",
        ]
        lines.extend(cue_line(c) for c in t.cues)
        lines += [
            "",
            f"Select exactly {spec.reel_count} moments, "
            f"each {spec.min_duration_s}–{spec.max_duration_s} seconds long.",
            f"Aim for about {spec.target_duration_s} seconds per moment.",
            "",
            "Respond with only a JSON array of objects, each with keys "
            "\"start\", \"end\", \"label\", \"summary\".",
            "\"start\" and \"end\" must be HH:MM:SS.mmm timestamps within the "
            "transcript. Keep labels at most "
            f"{MAX_LABEL_CHARS} characters and summaries at most "
            f"{MAX_SUMMARY_CHARS} characters.",
        ]
        return PromptBundle(
            system_text=("You identify the key teaching moments in lecture "
                         "transcripts and answer in strict JSON."),
            user_text="\n".join(lines),
            response_schema_id=IDENTIFY_SCHEMA_ID,
        )
    if stage == "enrich":
        if not window:
            raise MissingWindow("enrich stage requires a non-empty cue window")
        lines = ["Segment captions:"]
        lines.extend(cue_line(c) for c in window)
        lines += [
            "",
            "Respond with only a JSON object with keys \"label\" (at most "
            f"{MAX_LABEL_CHARS} characters) and \"summary\" (at most "
            f"{MAX_SUMMARY_CHARS} characters) describing this segment.",
        ]
        return PromptBundle(
            system_text=("You write concise titles and summaries for lecture "
                         "video segments and answer in strict JSON."),
            user_text="\n".join(lines),
            response_schema_id=ENRICH_SCHEMA_ID,
        )
    raise ValueError(f"unknown prompt stage {stage!r}")


def _require_str(item: dict, i: int, key: str) -> str:
    if key not in item:
        raise SchemaError("missing field", f"[{i}].{key}")
    value = item[key]
    if not isinstance(value, str):
        raise SchemaError(f"expected string, got {type(value).__name__}", f"[{i}].{key}")
    return value


def validate_response(raw: str, t: Transcript, spec: ReelSpec) -> list[KeyMoment]:
    """Parse and check a stage-one response; returns moments sorted by start."""
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ParseError(f"response is not JSON: {e}") from e
    if not isinstance(data, list):
        raise SchemaError(f"expected array, got {type(data).__name__}", "$")

    parsed: list[tuple[int, int, str, str]] = []
    for i, item in enumerate(data):
        if not isinstance(item, dict):
            raise SchemaError(f"expected object, got {type(item).__name__}", f"[{i}]")
        start_raw = _require_str(item, i, "start")
        end_raw = _require_str(item, i, "end")
        label = _require_str(item, i, "label").strip()
        summary = _require_str(item, i, "summary").strip()
        try:
            start_ms = parse_wire_time(start_raw)
        except ValueError as e:
            raise SchemaError(str(e), f"[{i}].start") from e
        try:
            end_ms = parse_wire_time(end_raw)
        except ValueError as e:
            raise SchemaError(str(e), f"[{i}].end") from e
        if not label:
            raise SchemaError("label is empty", f"[{i}].label")
        if not summary:
            raise SchemaError("summary is empty", f"[{i}].summary")
        if start_ms >= end_ms:
            raise RangeError(f"moment {i}: start {start_raw} not before end {end_raw}")
        if start_ms < 0 or end_ms > t.duration_ms:
            raise RangeError(
                f"moment {i}: [{start_raw}, {end_raw}] outside transcript "
                f"duration {format_wire_time(t.duration_ms)}")
        parsed.append((start_ms, end_ms,
                       truncate_words(label, MAX_LABEL_CHARS),
                       truncate_words(summary, MAX_SUMMARY_CHARS)))

    if len(parsed) != spec.reel_count:
        raise CountError(f"expected {spec.reel_count} moments, got {len(parsed)}")

    parsed.sort(key=lambda p: (p[0], p[1]))
    return [KeyMoment(rank=r, start_ms=s, end_ms=e, label=lb, summary=sm)
            for r, (s, e, lb, sm) in enumerate(parsed)]


def _validate_enrichment(raw: str) -> tuple[str, str]:
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ParseError(f"response is not JSON: {e}") from e
    if not isinstance(data, dict):
        raise SchemaError(f"expected object, got {type(data).__name__}", "$")
    for key in ("label", "summary"):
        if key not in data:
            raise SchemaError("missing field", f"$.{key}")
        if not isinstance(data[key], str) or not data[key].strip():
            raise SchemaError("expected non-empty string", f"$.{key}")
    return (truncate_words(data["label"], MAX_LABEL_CHARS),
            truncate_words(data["summary"], MAX_SUMMARY_CHARS))


def _repair_bundle(bundle: PromptBundle, error: Exception) -> PromptBundle:
    note = (f"\n\nYour previous response was invalid: {error}. "
            "Return only the corrected JSON.")
    return replace(bundle, user_text=bundle.user_text + note)


def identify_key_moments(provider: LLMProvider, t: Transcript, spec: ReelSpec,
                         max_retries: int = DEFAULT_MAX_RETRIES,
                         ) -> tuple[list[KeyMoment], int]:
    """Run stage one with a validation/repair loop; returns (moments, retries used)."""
    bundle = build_prompt(t, spec, "identify")
    attempt_bundle = bundle
    last_error: Exception | None = None
    for attempt in range(max_retries + 1):
        raw = provider.complete(attempt_bundle)
        try:
            return validate_response(raw, t, spec), attempt
        except (ParseError, SchemaError, RangeError, CountError) as e:
            last_error = e
            attempt_bundle = _repair_bundle(bundle, e)
    raise ExhaustedRetries(
        f"stage-one validation failed after {max_retries} retries: {last_error}",
        last_error=last_error)


def enrich_moments(provider: LLMProvider, t: Transcript, moments: list[KeyMoment],
                   max_retries: int = DEFAULT_MAX_RETRIES) -> list[KeyMoment]:
    """Run stage two, one provider call per moment; timestamps never change."""
    enriched: list[KeyMoment] = []
    for m in moments:
        window = slice_cues(t, m.start_ms, m.end_ms)
        if not window:
            enriched.append(replace(
                m, label=f"Segment {m.rank + 1}",
                summary="No caption text covers this segment."))
            continue
        bundle = build_prompt(t, None, "enrich", window)
        attempt_bundle = bundle
        last_error: Exception | None = None
        for _ in range(max_retries + 1):
            raw = provider.complete(attempt_bundle)
            try:
                label, summary = _validate_enrichment(raw)
            except (ParseError, SchemaError) as e:
                last_error = e
                attempt_bundle = _repair_bundle(bundle, e)
                continue
            enriched.append(replace(m, label=label, summary=summary))
            break
        else:
            raise ExhaustedRetries(
                f"enrichment of moment {m.rank} failed after {max_retries} "
                f"retries: {last_error}", last_error=last_error)
    return enriched


def _window_text(window: list[TranscriptCue]) -> tuple[str, str]:
    first_words = window[0].text.split()[:5]
    label = truncate_words(" ".join(first_words), MAX_LABEL_CHARS)
    summary = truncate_words(" ".join(c.text for c in window), MAX_SUMMARY_CHARS)
    return label, summary


def mock_select(t: Transcript, spec: ReelSpec) -> list[KeyMoment]:
    """Deterministic offline moment selection.

    Splits [0, duration] into K equal bands. In each band, candidate windows
    are contiguous cue runs starting at a cue whose start lies in the band
    (if no cue starts there, the cue nearest the band centre seeds the
    candidates). The window closest to the target duration wins; ties go to
    the higher word count, then the earlier start.
    """
    duration = t.duration_ms
    k = spec.reel_count
    if duration < k * spec.min_duration_s * 1000:
        raise InfeasibleSpec(
            f"duration {duration} ms cannot fit {k} reels of at least "
            f"{spec.min_duration_s} s")
    cues = list(t.cues)
    words = [len(c.text.split()) for c in cues]
    target_ms = spec.target_duration_s * 1000

    moments: list[KeyMoment] = []
    for band in range(k):
        band_start = duration * band // k
        band_end = duration * (band + 1) // k
        starts = [i for i, c in enumerate(cues) if band_start <= c.start_ms < band_end]
        if not starts:
            centre = (band_start + band_end) // 2
            nearest = min(range(len(cues)),
                          key=lambda i: (abs(cues[i].start_ms - centre), cues[i].start_ms))
            starts = [nearest]
        best: tuple[int, int, int] | None = None
        best_window: tuple[int, int] | None = None
        for i in starts:
            count = 0
            for j in range(i, len(cues)):
                count += words[j]
                dur = cues[j].end_ms - cues[i].start_ms
                key = (abs(dur - target_ms), -count, cues[i].start_ms)
                if best is None or key < best:
                    best = key
                    best_window = (i, j)
                if dur >= target_ms:
                    break  # longer windows from i only move further from target
        i, j = best_window  # type: ignore[misc]
        window = cues[i:j + 1]
        label, summary = _window_text(window)
        moments.append(KeyMoment(rank=0, start_ms=window[0].start_ms,
                                 end_ms=window[-1].end_ms, label=label, summary=summary))
    moments.sort(key=lambda m: (m.start_ms, m.end_ms))
    return [replace(m, rank=r) for r, m in enumerate(moments)]


class MockProvider:
    """Offline provider: reconstructs the transcript from the prompt text.

    Cue lines carry second precision, so reconstruction is exact only for
    second-aligned cues; zero-length reconstructed cues are dropped.
    """

    def complete(self, bundle: PromptBundle) -> str:
        if bundle.response_schema_id == ENRICH_SCHEMA_ID:
            return self._enrich(bundle.user_text)
        if bundle.response_schema_id == IDENTIFY_SCHEMA_ID:
            return self._identify(bundle.user_text)
        raise ProviderError(f"mock cannot serve schema {bundle.response_schema_id!r}")

    @staticmethod
    def _parse_cues(user_text: str) -> list[TranscriptCue]:
        cues = []
        for line in user_text.splitlines():
            m = _CUE_LINE_RE.match(line)
            if not m:
                continue
            start = (int(m.group(1)) * 60 + int(m.group(2))) * 1000
            end = (int(m.group(3)) * 60 + int(m.group(4))) * 1000
            if start < end:
                cues.append(TranscriptCue(index=len(cues), start_ms=start,
                                          end_ms=end, text=m.group(5)))
        return cues

    def _identify(self, user_text: str) -> str:
        spec = None
        target = None
        for line in user_text.splitlines():
            m = _CONSTRAINT_RE.match(line)
            if m:
                spec = (int(m.group(1)), int(m.group(2)), int(m.group(3)))
            m = _TARGET_RE.match(line)
            if m:
                target = int(m.group(1))
        cues = self._parse_cues(user_text)
        if spec is None or target is None or not cues:
            return json.dumps({"error": "prompt not understood"})
        k, min_s, max_s = spec
        t = Transcript(source_id="mock", language="und", cues=tuple(cues),
                       duration_ms=cues[-1].end_ms)
        try:
            moments = mock_select(t, ReelSpec(reel_count=k, min_duration_s=min_s,
                                              max_duration_s=max_s, target_duration_s=target))
        except (InfeasibleSpec, SpecError) as e:
            return json.dumps({"error": str(e)})
        return json.dumps([
            {"start": format_wire_time(m.start_ms), "end": format_wire_time(m.end_ms),
             "label": m.label, "summary": m.summary}
            for m in moments
        ])

    def _enrich(self, user_text: str) -> str:
        window = self._parse_cues(user_text)
        if not window:
            return json.dumps({"error": "no captions in prompt"})
        label, summary = _window_text(window)
        return json.dumps({"label": label, "summary": summary})


class OpenAICompatProvider:
    """Adapter for any OpenAI-compatible chat-completions endpoint.

    Base URL and key come from REELED_LLM_BASE_URL / REELED_LLM_API_KEY
    unless given explicitly; the model name is configuration.
    """

    def __init__(self, model: str, base_url: str | None = None,
                 api_key: str | None = None, timeout: float = 120.0,
                 transport=None):
        self.model = model
        self.base_url = base_url or os.environ.get("REELED_LLM_BASE_URL", "")
        self.api_key = api_key or os.environ.get("REELED_LLM_API_KEY", "")
        self.timeout = timeout
        self._transport = transport
        if not self.base_url:
            raise ProviderError("REELED_LLM_BASE_URL is not set")

    def complete(self, bundle: PromptBundle) -> str:
        import httpx

        params = dict(bundle.provider_params)
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": bundle.system_text},
                {"role": "user", "content": bundle.user_text},
            ],
            "temperature": params.get("temperature", 0.0),
            "max_tokens": params.get("max_output_tokens", 2048),
        }
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            with httpx.Client(timeout=self.timeout, transport=self._transport) as client:
                resp = client.post(self.base_url.rstrip("/") + "/chat/completions",
                                   json=body, headers=headers)
        except httpx.HTTPError as e:
            raise ProviderError(f"transport failure: {e}") from e
        if resp.status_code != 200:
            raise ProviderError(f"provider returned HTTP {resp.status_code}: {resp.text[:300]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as e:
            raise ProviderError(f"malformed provider response: {e}") from e


def get_provider(provider_id: str, model: str | None = None) -> LLMProvider:
    if provider_id == "mock":
        return MockProvider()
    if provider_id == "openai":
        name = model or os.environ.get("REELED_LLM_MODEL", "")
        if not name:
            raise ProviderError("openai provider needs a model name "
                                "(--model or REELED_LLM_MODEL)")
        return OpenAICompatProvider(model=name)
    raise ProviderError(f"unknown provider id {provider_id!r}")
