from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reeled.errors import DecodeError, EmptyTranscript, FormatError, RangeError
from reeled.transcript import (
    Transcript,
    TranscriptCue,
    normalize,
    parse_captions,
    slice_cues,
)

from .conftest import lecture_cues, make_srt, make_vtt
from .oracles import normalize_oracle, ref_parse_timestamps, slice_oracle


def _t(cues, duration=None):
    tcs = tuple(TranscriptCue(i, s, e, x) for i, (s, e, x) in enumerate(cues))
    return Transcript(source_id="t", language="und", cues=tcs,
                      duration_ms=duration or max(e for _, e, _ in cues))


class TestParseCaptions:
    def test_single_srt_block(self):
        raw = b"1\n00:00:00,000 --> 00:00:05,000\nHello\n"
        t = parse_captions(raw)
        assert len(t.cues) == 1
        cue = t.cues[0]
        assert (cue.start_ms, cue.end_ms, cue.text) == (0, 5000, "Hello")

    def test_vtt_header_only_is_empty(self):
        with pytest.raises(EmptyTranscript):
            parse_captions(b"WEBVTT\n")

    def test_fixture_lecture_vtt_against_reference_parser(self, fixture_vtt_bytes):
        t = parse_captions(fixture_vtt_bytes)
        assert len(t.cues) == 144
        expected = ref_parse_timestamps(fixture_vtt_bytes.decode())
        assert [(c.start_ms, c.end_ms) for c in t.cues] == expected
        # uniform 5 s grid by construction
        assert [(c.start_ms, c.end_ms) for c in t.cues] == \
            [(i * 5000, (i + 1) * 5000) for i in range(144)]

    def test_srt_fixture_against_reference_parser(self):
        raw = make_srt(lecture_cues(n=30))
        t = parse_captions(raw)
        assert [(c.start_ms, c.end_ms) for c in t.cues] == \
            ref_parse_timestamps(raw.decode())

    def test_bom_is_tolerated(self):
        raw = b"\xef\xbb\xbfWEBVTT\n\n00:00:01.000 --> 00:00:02.000\nhi\n"
        t = parse_captions(raw)
        assert t.cues[0].text == "hi"

    def test_not_utf8_raises_decode_error(self):
        with pytest.raises(DecodeError):
            parse_captions(b"\xff\xfe\x00\x00garbage")

    def test_unrecognized_format_raises_with_line(self):
        with pytest.raises(FormatError):
            parse_captions(b"this is not a caption file\nat all\n")

    def test_markup_is_stripped(self):
        raw = make_vtt([(0, 1000, "<v Speaker><b>Bold</b> &amp; plain</v>")])
        t = parse_captions(raw)
        assert t.cues[0].text == "Bold & plain"

    def test_vtt_cue_identifiers_and_notes_are_skipped(self):
        raw = (b"WEBVTT\n\nNOTE a comment\nspanning lines\n\nintro\n"
               b"00:00:00.000 --> 00:00:02.000\nfirst\n\n"
               b"00:00:02.000 --> 00:00:04.000 align:start\nsecond\n")
        t = parse_captions(raw)
        assert [c.text for c in t.cues] == ["first", "second"]

    def test_explicit_format_hint(self):
        raw = make_srt([(0, 1000, "x")])
        assert parse_captions(raw, format_hint="srt").cues[0].text == "x"

    def test_source_order_preserved_before_normalization(self):
        raw = make_vtt([(5000, 6000, "b"), (0, 1000, "a")])
        t = parse_captions(raw)
        assert [c.text for c in t.cues] == ["b", "a"]


class TestNormalize:
    def test_overlap_truncates_earlier_cue(self):
        t = normalize(_t([(0, 6000, "a"), (5000, 10000, "b")]))
        assert [(c.start_ms, c.end_ms) for c in t.cues] == [(0, 5000), (5000, 10000)]

    def test_idempotent(self):
        t = normalize(_t([(0, 6000, "a"), (5000, 10000, "b"), (9000, 12000, "c")]))
        assert normalize(t) == t

    def test_shuffled_fixture_matches_oracle(self):
        rng = random.Random(11)
        cues = []
        cursor = 0
        for i in range(50):
            start = cursor + rng.randint(0, 2000)
            end = start + rng.randint(500, 4000)
            cues.append((start, end, f"c{i}"))
            cursor = start + rng.randint(200, 3000)  # may overlap the next cue
        rng.shuffle(cues)
        t = normalize(_t(cues))
        expected = normalize_oracle(cues)
        assert [(c.start_ms, c.end_ms, c.text) for c in t.cues] == expected

    def test_fully_swallowed_cue_is_dropped(self):
        t = normalize(_t([(0, 10000, "a"), (0, 2000, "b")]))
        # equal starts: earlier-sorted cue truncates to zero and is dropped
        assert len(t.cues) == 1

    def test_empty_transcript_rejected(self):
        empty = Transcript(source_id="t", language="und", cues=(), duration_ms=0)
        with pytest.raises(EmptyTranscript):
            normalize(empty)

    def test_last_cue_always_survives_truncation(self):
        t = normalize(_t([(5000, 7000, "a"), (5000, 6000, "b"), (5000, 5500, "c"),
                          (5000, 5200, "d")], duration=7000))
        assert [(c.start_ms, c.end_ms, c.text) for c in t.cues] == [(5000, 7000, "a")]

    def test_indices_reassigned(self):
        t = normalize(_t([(5000, 6000, "b"), (0, 1000, "a")]))
        assert [c.index for c in t.cues] == [0, 1]


class TestSlice:
    def test_full_window_returns_all(self, fixture_transcript):
        assert slice_cues(fixture_transcript, 0, fixture_transcript.duration_ms) == \
            list(fixture_transcript.cues)

    def test_window_between_cues_is_empty(self):
        t = _t([(0, 1000, "a"), (5000, 6000, "b")])
        assert slice_cues(t, 2000, 4000) == []

    def test_window_on_five_second_grid(self, fixture_transcript):
        cues = slice_cues(fixture_transcript, 12000, 41000)
        assert [c.index for c in cues] == list(range(2, 9))

    def test_matches_bruteforce_on_random_windows(self, fixture_transcript):
        rng = random.Random(3)
        for _ in range(200):
            a = rng.randrange(0, fixture_transcript.duration_ms)
            b = rng.randrange(a + 1, fixture_transcript.duration_ms + 1)
            assert slice_cues(fixture_transcript, a, b) == \
                slice_oracle(fixture_transcript.cues, a, b)

    def test_out_of_bounds_raises(self, fixture_transcript):
        with pytest.raises(RangeError):
            slice_cues(fixture_transcript, -1, 1000)
        with pytest.raises(RangeError):
            slice_cues(fixture_transcript, 0, fixture_transcript.duration_ms + 1)
        with pytest.raises(RangeError):
            slice_cues(fixture_transcript, 5000, 5000)


# strategy: blocks of plausible cue timings, any overlap structure
_cue_blocks = st.lists(
    st.tuples(st.integers(0, 3_600_000), st.integers(1, 60_000),
              st.sampled_from(["alpha beta", "gamma", "delta epsilon zeta"])),
    min_size=1, max_size=30,
).map(lambda items: [(s, s + d, text) for s, d, text in items])


@settings(max_examples=150, deadline=None)
@given(_cue_blocks, st.sampled_from(["srt", "vtt"]))
def test_parse_then_normalize_satisfies_invariants(blocks, fmt):
    raw = make_srt(blocks) if fmt == "srt" else make_vtt(blocks)
    t = normalize(parse_captions(raw))
    assert t.cues
    for cue in t.cues:
        assert cue.start_ms < cue.end_ms
        assert cue.text.strip()
    for a, b in zip(t.cues, t.cues[1:]):
        assert a.start_ms < b.start_ms
        assert a.end_ms <= b.start_ms
    assert t.duration_ms >= t.cues[-1].end_ms
    assert [c.index for c in t.cues] == list(range(len(t.cues)))


@settings(max_examples=100, deadline=None)
@given(_cue_blocks)
def test_normalize_idempotent_property(blocks):
    t = normalize(parse_captions(make_vtt(blocks)))
    assert normalize(t) == t
