"""Synchronous end-to-end generation: captions in, reels + manifest out.

This is the offline path the CLI uses; the service runs the same steps as
separate job stages.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .assembler import ReelArtifact, assemble, probe, write_manifest
from .llm import KeyMoment, LLMProvider, ReelSpec, enrich_moments, identify_key_moments
from .planner import CutPlan, plan
from .transcript import Transcript, normalize, parse_captions


@dataclass(frozen=True)
class GenerateResult:
    transcript: Transcript
    moments: tuple[KeyMoment, ...]
    retries: int
    plan: CutPlan
    artifacts: tuple[ReelArtifact, ...]
    manifest_path: str


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def read_captions_ref(ref: str) -> bytes:
    """Load caption bytes from a local path or, for http(s) refs, the optional
    remote adapter (a GET returning an SRT/VTT document)."""
    if ref.startswith(("http://", "https://")):
        import httpx

        resp = httpx.get(ref, follow_redirects=True, timeout=60.0)
        resp.raise_for_status()
        return resp.content
    return Path(ref).read_bytes()


def load_transcript(captions_ref: str, source_id: str | None = None,
                    source_path: str | None = None) -> Transcript:
    """Parse + normalize a caption source; extend duration to the probed media."""
    raw = read_captions_ref(captions_ref)
    t = normalize(parse_captions(raw, source_id=source_id or Path(captions_ref).stem))
    if source_path:
        t = t.with_duration(probe(source_path)["duration_ms"])
    return t


def generate(captions_ref: str, out_dir: str, provider: LLMProvider,
             spec: ReelSpec | None = None, source_path: str | None = None,
             layout: str = "per_reel", mode: str = "reencode",
             source_id: str | None = None, now: str | None = None) -> GenerateResult:
    """Run identify -> enrich -> plan (-> trim) and write the manifest.

    Without a source video the result is a plan-only manifest; with one,
    segments are trimmed and the manifest gains the artifacts block.
    """
    spec = spec or ReelSpec()
    generated_at = now or utc_now_iso()
    t = load_transcript(captions_ref, source_id=source_id, source_path=source_path)
    moments, retries = identify_key_moments(provider, t, spec)
    moments = enrich_moments(provider, t, moments)
    cut_plan = plan(t, moments, spec)

    if source_path:
        artifacts, manifest_path = assemble(source_path, cut_plan, layout=layout,
                                            out_dir=out_dir, mode=mode,
                                            generated_at=generated_at)
    else:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        artifacts = []
        manifest_path = write_manifest(cut_plan, out_dir, generated_at=generated_at)
    return GenerateResult(transcript=t, moments=tuple(moments), retries=retries,
                          plan=cut_plan, artifacts=tuple(artifacts),
                          manifest_path=manifest_path)
