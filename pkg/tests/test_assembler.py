from __future__ import annotations

import json
import os
import stat
import sys

import pytest

from reeled.assembler import (
    MediaTool,
    ReelArtifact,
    assemble,
    probe,
    resolve_tool,
    trim_segment,
    write_manifest,
)
from reeled.errors import NotMedia, ToolFailure, ToolNotFound
from reeled.llm import MockProvider, ReelSpec, identify_key_moments
from reeled.planner import ReelSegment, plan


@pytest.fixture(scope="module")
def tool() -> MediaTool:
    return resolve_tool()


@pytest.fixture(scope="session")
def fixture_plan(fixture_transcript, fixture_video_path):
    spec = ReelSpec(reel_count=5, min_duration_s=30, max_duration_s=60,
                    target_duration_s=45)
    t = fixture_transcript.with_duration(720000)
    moments, _ = identify_key_moments(MockProvider(), t, spec)
    return plan(t, moments, spec)


def _segment(order=0, start=10000, end=55000):
    return ReelSegment(order=order, cut_start_ms=start, cut_end_ms=end,
                       label="l", summary="s", source_moment_rank=order)


class TestProbe:
    def test_source_fixture(self, fixture_video_path, tool):
        info = probe(fixture_video_path, tool)
        assert info["has_video"] is True
        assert abs(info["duration_ms"] - 720000) <= 200

    def test_text_file_is_not_media(self, tmp_path, tool):
        path = tmp_path / "notes.txt"
        path.write_text("just words")
        with pytest.raises(NotMedia):
            probe(str(path), tool)

    def test_missing_file(self, tool):
        with pytest.raises(ToolFailure) as err:
            probe("/nonexistent/clip.mp4", tool)
        assert "/nonexistent/clip.mp4" in str(err.value)


class TestTrimSegment:
    def test_sixty_second_segment_within_tolerance(self, fixture_video_path,
                                                   tmp_path, tool):
        seg = _segment(order=0, start=30000, end=90000)
        art = trim_segment(fixture_video_path, seg, out_dir=str(tmp_path), tool=tool)
        assert abs(art.measured_duration_ms - 60000) <= 200
        assert os.path.basename(art.file_path) == "reel_0.mp4"
        assert len(art.checksum) == 64

    def test_missing_source_names_path(self, tmp_path, tool):
        with pytest.raises(ToolFailure) as err:
            trim_segment("/gone/source.mp4", _segment(), out_dir=str(tmp_path),
                         tool=tool)
        assert "/gone/source.mp4" in str(err.value)

    def test_zero_length_segment_rejected_defensively(self, fixture_video_path,
                                                      tmp_path, tool):
        seg = ReelSegment(order=0, cut_start_ms=5000, cut_end_ms=5000,
                          label="l", summary="s", source_moment_rank=0)
        with pytest.raises(ToolFailure):
            trim_segment(fixture_video_path, seg, out_dir=str(tmp_path), tool=tool)


class TestAssemble:
    def test_per_reel_layout(self, fixture_video_path, fixture_plan, tmp_path, tool):
        artifacts, manifest_path = assemble(fixture_video_path, fixture_plan,
                                            out_dir=str(tmp_path), tool=tool)
        assert [a.segment_order for a in artifacts] == [0, 1, 2, 3, 4]
        for art, seg in zip(artifacts, fixture_plan.segments):
            assert abs(art.measured_duration_ms - seg.duration_ms) <= 200
            assert os.path.exists(art.file_path)
        manifest = json.loads(open(manifest_path).read())
        assert [a["order"] for a in manifest["artifacts"]] == [0, 1, 2, 3, 4]
        assert all(set(a) == {"order", "file", "duration_ms", "checksum"}
                   for a in manifest["artifacts"])

    def test_single_concat_layout(self, fixture_video_path, fixture_plan,
                                  tmp_path, tool):
        artifacts, manifest_path = assemble(fixture_video_path, fixture_plan,
                                            layout="single_concat",
                                            out_dir=str(tmp_path), tool=tool)
        concat_path = tmp_path / "reel_all.mp4"
        assert concat_path.exists()
        total = sum(a.measured_duration_ms for a in artifacts)
        measured = probe(str(concat_path), tool)["duration_ms"]
        assert abs(measured - total) <= len(artifacts) * 200
        manifest = json.loads(open(manifest_path).read())
        assert manifest["concat"]["file"] == "reel_all.mp4"

    def test_reruns_are_deterministic(self, fixture_video_path, fixture_plan,
                                      tmp_path, tool):
        first, _ = assemble(fixture_video_path, fixture_plan,
                            out_dir=str(tmp_path), tool=tool)
        second, _ = assemble(fixture_video_path, fixture_plan,
                             out_dir=str(tmp_path), tool=tool)
        assert [a.checksum for a in first] == [a.checksum for a in second]

    def test_failure_keeps_earlier_files_and_names_order(self, fixture_video_path,
                                                         fixture_plan, tmp_path, tool):
        # segment 3 reaches past the end of the media: probing its trim fails
        bad_segments = list(fixture_plan.segments)
        bad_segments[3] = ReelSegment(order=3, cut_start_ms=700000, cut_end_ms=745000,
                                      label="l", summary="s", source_moment_rank=3)
        bad_plan = type(fixture_plan)(source_id=fixture_plan.source_id,
                                      spec=fixture_plan.spec,
                                      segments=tuple(bad_segments))
        with pytest.raises((ToolFailure, Exception)) as err:
            assemble(fixture_video_path, bad_plan, out_dir=str(tmp_path),
                     tool=tool, max_workers=1)
        assert getattr(err.value, "segment_order", 3) == 3
        for order in (0, 1, 2):
            assert (tmp_path / f"reel_{order}.mp4").exists()
        assert not (tmp_path / "manifest.json").exists()  # no partial manifest

    def test_manifest_requires_existing_artifacts(self, fixture_plan, tmp_path):
        ghost = ReelArtifact(segment_order=0, file_path=str(tmp_path / "ghost.mp4"),
                             measured_duration_ms=1000, checksum="0" * 64)
        with pytest.raises(ToolFailure):
            write_manifest(fixture_plan, str(tmp_path), [ghost])


class TestToolResolution:
    def test_fallback_used_when_nothing_installed(self, monkeypatch):
        monkeypatch.delenv("REELED_MEDIA_TOOL_DIR", raising=False)
        monkeypatch.setattr("shutil.which", lambda name: None)
        tool = resolve_tool()
        assert tool.flavor == "fallback"
        assert "mediatool" in " ".join(tool.ffmpeg)

    def test_env_dir_override(self, tmp_path, monkeypatch):
        # wrapper scripts delegating to the bundled tool exercise the
        # REELED_MEDIA_TOOL_DIR contract end to end
        for name in ("ffmpeg", "ffprobe"):
            script = tmp_path / name
            script.write_text(
                f"#!/bin/sh\nexec {sys.executable} -m reeled.mediatool {name} \"$@\"\n")
            script.chmod(script.stat().st_mode | stat.S_IEXEC)
        monkeypatch.setenv("REELED_MEDIA_TOOL_DIR", str(tmp_path))
        tool = resolve_tool()
        assert tool.flavor == "ffmpeg"
        assert tool.ffmpeg[0] == str(tmp_path / "ffmpeg")

    def test_env_dir_missing_binaries(self, tmp_path, monkeypatch):
        monkeypatch.setenv("REELED_MEDIA_TOOL_DIR", str(tmp_path))
        with pytest.raises(ToolNotFound):
            resolve_tool()

    def test_override_tool_trims(self, tmp_path, monkeypatch, fixture_video_path):
        for name in ("ffmpeg", "ffprobe"):
            script = tmp_path / name
            script.write_text(
                f"#!/bin/sh\nexec {sys.executable} -m reeled.mediatool {name} \"$@\"\n")
            script.chmod(script.stat().st_mode | stat.S_IEXEC)
        monkeypatch.setenv("REELED_MEDIA_TOOL_DIR", str(tmp_path))
        art = trim_segment(fixture_video_path, _segment(start=0, end=35000),
                           out_dir=str(tmp_path / "out"))
        assert abs(art.measured_duration_ms - 35000) <= 200
