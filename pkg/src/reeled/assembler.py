"""Execute a cut plan against the source video through a subprocess tool pair.

The reference pair is ffmpeg/ffprobe; any tool honoring the same argument
contract substitutes (REELED_MEDIA_TOOL_DIR overrides discovery, and the
bundled `reeled.mediatool` serves as the built-in fallback). The manifest
is written only after every emitted file passes a probe.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    ConcatFailure,
    DurationMismatch,
    NotMedia,
    ToolFailure,
    ToolNotFound,
)
from .planner import CutPlan, ReelSegment, plan_to_manifest

REENCODE_TOLERANCE_MS = 200
# copy mode cuts on keyframes; allow one typical GOP of slack
COPY_TOLERANCE_MS = 5000


@dataclass(frozen=True)
class MediaTool:
    ffmpeg: tuple[str, ...]
    ffprobe: tuple[str, ...]
    flavor: str  # "ffmpeg" | "fallback"


@dataclass(frozen=True)
class ReelArtifact:
    segment_order: int
    file_path: str
    measured_duration_ms: int
    checksum: str


def resolve_tool() -> MediaTool:
    """Locate the trim/probe pair: env dir override, then PATH, then bundled."""
    tool_dir = os.environ.get("REELED_MEDIA_TOOL_DIR")
    if tool_dir:
        ffmpeg = Path(tool_dir) / "ffmpeg"
        ffprobe = Path(tool_dir) / "ffprobe"
        if not ffmpeg.exists() or not ffprobe.exists():
            raise ToolNotFound(
                f"REELED_MEDIA_TOOL_DIR={tool_dir} lacks ffmpeg/ffprobe")
        return MediaTool((str(ffmpeg),), (str(ffprobe),), "ffmpeg")
    ffmpeg_path = shutil.which("ffmpeg")
    ffprobe_path = shutil.which("ffprobe")
    if ffmpeg_path and ffprobe_path:
        return MediaTool((ffmpeg_path,), (ffprobe_path,), "ffmpeg")
    return MediaTool((sys.executable, "-m", "reeled.mediatool", "ffmpeg"),
                     (sys.executable, "-m", "reeled.mediatool", "ffprobe"),
                     "fallback")


def _run(argv: list[str]) -> subprocess.CompletedProcess:
    try:
        return subprocess.run(argv, capture_output=True, text=True)
    except FileNotFoundError as e:
        raise ToolNotFound(f"media tool not executable: {argv[0]}") from e


def probe(file_path: str, tool: MediaTool | None = None) -> dict:
    """Container duration (ms) and stream presence for a media file."""
    tool = tool or resolve_tool()
    if not os.path.exists(file_path):
        raise ToolFailure(f"cannot probe missing file: {file_path}")
    argv = [*tool.ffprobe, "-v", "error", "-print_format", "json",
            "-show_format", "-show_streams", file_path]
    proc = _run(argv)
    if proc.returncode != 0:
        if "Invalid data" in proc.stderr:
            raise NotMedia(f"{file_path} is not a media file")
        raise ToolFailure(f"probe of {file_path} failed", stderr=proc.stderr)
    try:
        report = json.loads(proc.stdout)
        duration_ms = round(float(report["format"]["duration"]) * 1000)
        kinds = {s.get("codec_type") for s in report.get("streams", [])}
    except (ValueError, KeyError) as e:
        raise ToolFailure(f"unparseable probe output for {file_path}: {e}",
                          stderr=proc.stderr) from e
    return {"duration_ms": duration_ms,
            "has_video": "video" in kinds,
            "has_audio": "audio" in kinds}


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _trim_argv(tool: MediaTool, source: str, seg: ReelSegment,
               mode: str, out_path: str) -> list[str]:
    start_s = seg.cut_start_ms / 1000.0
    dur_s = seg.duration_ms / 1000.0
    if mode == "copy":
        return [*tool.ffmpeg, "-hide_banner", "-nostdin", "-y",
                "-ss", f"{start_s:.3f}", "-i", source, "-t", f"{dur_s:.3f}",
                "-c", "copy", out_path]
    # fixed encoder settings keep reencode output reproducible
    return [*tool.ffmpeg, "-hide_banner", "-nostdin", "-y",
            "-ss", f"{start_s:.3f}", "-t", f"{dur_s:.3f}", "-i", source,
            "-c:v", "libx264", "-preset", "veryfast", "-crf", "23",
            "-pix_fmt", "yuv420p", "-c:a", "aac", "-b:a", "128k",
            "-movflags", "+faststart", out_path]


def trim_segment(source_path: str, seg: ReelSegment, mode: str = "reencode",
                 out_dir: str = ".", tool: MediaTool | None = None) -> ReelArtifact:
    """Cut one segment to out_dir/reel_<order>.mp4 and verify its duration."""
    tool = tool or resolve_tool()
    if seg.duration_ms <= 0:
        raise ToolFailure(f"segment {seg.order} has non-positive duration",
                          segment_order=seg.order)
    os.makedirs(out_dir, exist_ok=True)
    out_path = os.path.join(out_dir, f"reel_{seg.order}.mp4")
    proc = _run(_trim_argv(tool, source_path, seg, mode, out_path))
    if proc.returncode != 0:
        raise ToolFailure(f"trim of segment {seg.order} from {source_path} failed",
                          stderr=proc.stderr, segment_order=seg.order)
    measured = probe(out_path, tool)["duration_ms"]
    tolerance = REENCODE_TOLERANCE_MS if mode == "reencode" else COPY_TOLERANCE_MS
    if abs(measured - seg.duration_ms) > tolerance:
        raise DurationMismatch(
            f"segment {seg.order}: measured {measured} ms vs planned "
            f"{seg.duration_ms} ms (tolerance {tolerance} ms)",
            segment_order=seg.order)
    return ReelArtifact(segment_order=seg.order, file_path=out_path,
                        measured_duration_ms=measured, checksum=_sha256(out_path))


def _concat(tool: MediaTool, artifacts: list[ReelArtifact], plan_obj: CutPlan,
            out_dir: str) -> ReelArtifact:
    list_path = os.path.join(out_dir, "concat_list.txt")
    with open(list_path, "w", encoding="utf-8") as fh:
        for art in artifacts:
            fh.write(f"file '{os.path.abspath(art.file_path)}'\n")
    out_path = os.path.join(out_dir, "reel_all.mp4")
    proc = _run([*tool.ffmpeg, "-hide_banner", "-nostdin", "-y",
                 "-f", "concat", "-safe", "0", "-i", list_path,
                 "-c", "copy", out_path])
    if proc.returncode != 0:
        raise ConcatFailure(f"concat failed: {proc.stderr[:500]}")
    measured = probe(out_path, tool)["duration_ms"]
    expected = sum(a.measured_duration_ms for a in artifacts)
    budget = len(artifacts) * REENCODE_TOLERANCE_MS
    if abs(measured - expected) > budget:
        raise ConcatFailure(
            f"concat duration {measured} ms vs segment sum {expected} ms "
            f"(budget {budget} ms)")
    return ReelArtifact(segment_order=-1, file_path=out_path,
                        measured_duration_ms=measured, checksum=_sha256(out_path))


def write_manifest(plan_obj: CutPlan, out_dir: str,
                   artifacts: list[ReelArtifact] | None = None,
                   concat_artifact: ReelArtifact | None = None,
                   generated_at: str | None = None) -> str:
    manifest = plan_to_manifest(plan_obj)
    if generated_at is not None:
        manifest["generated_at"] = generated_at
    if artifacts is not None:
        for art in artifacts:
            if not (os.path.exists(art.file_path) and os.path.getsize(art.file_path) > 0):
                raise ToolFailure(f"artifact missing or empty: {art.file_path}",
                                  segment_order=art.segment_order)
        manifest["artifacts"] = [
            {"order": a.segment_order,
             "file": os.path.basename(a.file_path),
             "duration_ms": a.measured_duration_ms,
             "checksum": a.checksum}
            for a in artifacts
        ]
    if concat_artifact is not None:
        manifest["concat"] = {
            "file": os.path.basename(concat_artifact.file_path),
            "duration_ms": concat_artifact.measured_duration_ms,
            "checksum": concat_artifact.checksum,
        }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def assemble(source_path: str, plan_obj: CutPlan, layout: str = "per_reel",
             out_dir: str = ".", mode: str = "reencode",
             max_workers: int | None = None, tool: MediaTool | None = None,
             generated_at: str | None = None) -> tuple[list[ReelArtifact], str]:
    """Trim every segment (bounded worker pool), optionally concatenate,
    then write the manifest. Fails fast with the first segment's error."""
    tool = tool or resolve_tool()
    if not os.path.exists(source_path):
        raise ToolFailure(f"source file not found: {source_path}")
    os.makedirs(out_dir, exist_ok=True)
    workers = max_workers or min(len(plan_obj.segments), os.cpu_count() or 1)
    artifacts: list[ReelArtifact] = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(trim_segment, source_path, seg, mode, out_dir, tool)
                   for seg in plan_obj.segments]
        for fut in futures:
            artifacts.append(fut.result())  # first failing order raises here

    concat_artifact = None
    if layout == "single_concat":
        concat_artifact = _concat(tool, artifacts, plan_obj, out_dir)
    manifest_path = write_manifest(plan_obj, out_dir, artifacts,
                                   concat_artifact, generated_at)
    return artifacts, manifest_path
