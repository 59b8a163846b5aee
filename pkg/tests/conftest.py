from __future__ import annotations

import random
import subprocess
import sys

import pytest

from reeled.llm import ReelSpec
from reeled.transcript import normalize, parse_captions

WORDS = ["variables", "loops", "functions", "classes", "lists", "tuples",
         "recursion", "syntax", "modules", "errors", "testing", "typing",
         "objects", "strings", "numbers", "logic"]


def ts_vtt(ms: int) -> str:
    s, mm = divmod(ms, 1000)
    m, sec = divmod(s, 60)
    h, m = divmod(m, 60)
    return f"{h:02d}:{m:02d}:{sec:02d}.{mm:03d}"


def ts_srt(ms: int) -> str:
    return ts_vtt(ms).replace(".", ",")


def make_vtt(cues: list[tuple[int, int, str]]) -> bytes:
    lines = ["WEBVTT", ""]
    for start, end, text in cues:
        lines += [f"{ts_vtt(start)} --> {ts_vtt(end)}", text, ""]
    return "\n".join(lines).encode()


def make_srt(cues: list[tuple[int, int, str]]) -> bytes:
    lines = []
    for i, (start, end, text) in enumerate(cues, start=1):
        lines += [str(i), f"{ts_srt(start)} --> {ts_srt(end)}", text, ""]
    return "\n".join(lines).encode()


def lecture_cues(n: int = 144, cue_ms: int = 5000, seed: int = 7,
                 words_per_cue: int = 8) -> list[tuple[int, int, str]]:
    """Uniform-density synthetic lecture: n cues of cue_ms each."""
    rng = random.Random(seed)
    cues = []
    for i in range(n):
        text = " ".join(rng.choice(WORDS) for _ in range(words_per_cue))
        cues.append((i * cue_ms, (i + 1) * cue_ms, f"Lesson point {i}: {text}"))
    return cues


@pytest.fixture(scope="session")
def fixture_vtt_bytes() -> bytes:
    return make_vtt(lecture_cues())


@pytest.fixture(scope="session")
def fixture_transcript(fixture_vtt_bytes):
    return normalize(parse_captions(fixture_vtt_bytes, source_id="lecture-fixture"))


@pytest.fixture
def default_spec() -> ReelSpec:
    return ReelSpec(reel_count=5, min_duration_s=30, max_duration_s=60,
                    target_duration_s=45)


@pytest.fixture(scope="session")
def fixture_captions_path(tmp_path_factory, fixture_vtt_bytes) -> str:
    path = tmp_path_factory.mktemp("captions") / "lecture.vtt"
    path.write_bytes(fixture_vtt_bytes)
    return str(path)


@pytest.fixture(scope="session")
def fixture_video_path(tmp_path_factory) -> str:
    """Low-resolution 12-minute test-pattern video, built once per session."""
    path = tmp_path_factory.mktemp("media") / "lecture.mp4"
    proc = subprocess.run(
        [sys.executable, "-m", "reeled.mediatool", "synth", "--out", str(path),
         "--duration-s", "720", "--fps", "10", "--width", "64", "--height", "48"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return str(path)
