"""Fallback media tool: an OpenCV-backed CLI honoring the trim/probe contract.

The assembler shells out to an ffmpeg/ffprobe pair when one is installed.
This module is the bundled substitute for environments without them:

    python -m reeled.mediatool ffmpeg  -y -ss 10.0 -t 45.0 -i in.mp4 ... out.mp4
    python -m reeled.mediatool ffmpeg  -y -f concat -safe 0 -i list.txt -c copy out.mp4
    python -m reeled.mediatool ffprobe -v error -print_format json \
        -show_format -show_streams in.mp4
    python -m reeled.mediatool synth   --out fixture.mp4 --duration-s 720

It accepts the exact argument layout the assembler emits and ignores codec
selection flags: output is always MPEG-4 Part 2 video without audio (the
only encoder OpenCV ships headless). Trims are frame-accurate and writes
are deterministic, so re-runs produce identical checksums.
"""

from __future__ import annotations

import argparse
import json
import re
import sys


def _open_capture(path: str):
    import cv2

    cap = cv2.VideoCapture(path)
    if not cap.isOpened():
        print(f"{path}: Invalid data found when processing input", file=sys.stderr)
        raise SystemExit(1)
    return cap


def _writer(path: str, fps: float, size: tuple[int, int]):
    import cv2

    out = cv2.VideoWriter(path, cv2.VideoWriter_fourcc(*"mp4v"), fps, size)
    if not out.isOpened():
        print(f"{path}: cannot open output for writing", file=sys.stderr)
        raise SystemExit(1)
    return out


def _parse_ffmpeg_args(argv: list[str]) -> dict:
    """Pull -ss/-t/-i/-f out of an ffmpeg-style command line; the output file
    is the final positional argument. Unknown flags are skipped."""
    opts = {"ss": 0.0, "t": None, "inputs": [], "format": None, "output": None}
    flags_with_value = {"-ss", "-t", "-i", "-f", "-c", "-c:v", "-c:a", "-b:a",
                        "-preset", "-crf", "-pix_fmt", "-movflags", "-safe",
                        "-v", "-r", "-map"}
    i = 0
    positional = []
    while i < len(argv):
        arg = argv[i]
        if arg in ("-y", "-n", "-hide_banner", "-nostdin"):
            i += 1
            continue
        if arg in flags_with_value:
            if i + 1 >= len(argv):
                print(f"missing value for {arg}", file=sys.stderr)
                raise SystemExit(1)
            value = argv[i + 1]
            if arg == "-ss":
                opts["ss"] = float(value)
            elif arg == "-t":
                opts["t"] = float(value)
            elif arg == "-i":
                opts["inputs"].append(value)
            elif arg == "-f":
                opts["format"] = value
            i += 2
            continue
        positional.append(arg)
        i += 1
    if positional:
        opts["output"] = positional[-1]
    return opts


def _run_trim(src: str, out_path: str, start_s: float, dur_s: float | None) -> None:
    import cv2

    cap = _open_capture(src)
    fps = cap.get(cv2.CAP_PROP_FPS) or 25.0
    size = (int(cap.get(cv2.CAP_PROP_FRAME_WIDTH)),
            int(cap.get(cv2.CAP_PROP_FRAME_HEIGHT)))
    total = int(cap.get(cv2.CAP_PROP_FRAME_COUNT))
    first = round(start_s * fps)
    count = total - first if dur_s is None else round(dur_s * fps)

    # sequential skip: always frame-exact, and cheap at lecture resolutions
    for _ in range(min(first, total)):
        if not cap.grab():
            break
    writer = _writer(out_path, fps, size)
    written = 0
    while written < count:
        ok, frame = cap.read()
        if not ok:
            break
        writer.write(frame)
        written += 1
    writer.release()
    cap.release()
    if written == 0:
        print(f"{src}: no frames in requested range", file=sys.stderr)
        raise SystemExit(1)


def _run_concat(list_path: str, out_path: str) -> None:
    import cv2

    file_re = re.compile(r"^file\s+'(.*)'\s*$")
    sources = []
    with open(list_path, encoding="utf-8") as fh:
        for line in fh:
            m = file_re.match(line.strip())
            if m:
                sources.append(m.group(1))
    if not sources:
        print(f"{list_path}: no file entries", file=sys.stderr)
        raise SystemExit(1)

    writer = None
    for src in sources:
        cap = _open_capture(src)
        if writer is None:
            fps = cap.get(cv2.CAP_PROP_FPS) or 25.0
            size = (int(cap.get(cv2.CAP_PROP_FRAME_WIDTH)),
                    int(cap.get(cv2.CAP_PROP_FRAME_HEIGHT)))
            writer = _writer(out_path, fps, size)
        while True:
            ok, frame = cap.read()
            if not ok:
                break
            writer.write(frame)
        cap.release()
    writer.release()


def _cmd_ffmpeg(argv: list[str]) -> None:
    opts = _parse_ffmpeg_args(argv)
    if not opts["inputs"] or not opts["output"]:
        print("need -i input and an output path", file=sys.stderr)
        raise SystemExit(1)
    if opts["format"] == "concat":
        _run_concat(opts["inputs"][0], opts["output"])
    else:
        _run_trim(opts["inputs"][0], opts["output"], opts["ss"], opts["t"])


def _cmd_ffprobe(argv: list[str]) -> None:
    import cv2

    paths = [a for a in argv if not a.startswith("-")
             and a not in ("error", "json", "quiet")]
    if not paths:
        print("no input path", file=sys.stderr)
        raise SystemExit(1)
    path = paths[-1]
    cap = _open_capture(path)
    fps = cap.get(cv2.CAP_PROP_FPS) or 0.0
    frames = int(cap.get(cv2.CAP_PROP_FRAME_COUNT))
    width = int(cap.get(cv2.CAP_PROP_FRAME_WIDTH))
    height = int(cap.get(cv2.CAP_PROP_FRAME_HEIGHT))
    cap.release()
    if fps <= 0 or frames <= 0:
        print(f"{path}: Invalid data found when processing input", file=sys.stderr)
        raise SystemExit(1)
    duration = frames / fps
    report = {
        "format": {"filename": path, "duration": f"{duration:.6f}"},
        "streams": [{
            "codec_type": "video",
            "codec_name": "mpeg4",
            "width": width,
            "height": height,
            "nb_frames": str(frames),
            "avg_frame_rate": f"{fps:g}/1" if fps == int(fps) else f"{fps:.6f}",
        }],
    }
    print(json.dumps(report))


def _cmd_synth(argv: list[str]) -> None:
    """Deterministic test-pattern video: a frame counter over shifting bars."""
    import cv2
    import numpy as np

    ap = argparse.ArgumentParser(prog="reeled.mediatool synth")
    ap.add_argument("--out", required=True)
    ap.add_argument("--duration-s", type=float, default=30.0)
    ap.add_argument("--fps", type=float, default=10.0)
    ap.add_argument("--width", type=int, default=64)
    ap.add_argument("--height", type=int, default=48)
    args = ap.parse_args(argv)

    writer = _writer(args.out, args.fps, (args.width, args.height))
    total = round(args.duration_s * args.fps)
    for n in range(total):
        frame = np.zeros((args.height, args.width, 3), dtype=np.uint8)
        frame[:, :, 0] = (n * 3) % 256
        band = (n // 10) % args.height
        frame[band:band + 4, :, 2] = 255
        cv2.putText(frame, str(n), (2, args.height - 4),
                    cv2.FONT_HERSHEY_PLAIN, 0.8, (255, 255, 255), 1)
        writer.write(frame)
    writer.release()


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        print("usage: reeled.mediatool {ffmpeg|ffprobe|synth} ...", file=sys.stderr)
        return 2
    cmd, rest = argv[0], argv[1:]
    try:
        if cmd == "ffmpeg":
            _cmd_ffmpeg(rest)
        elif cmd == "ffprobe":
            _cmd_ffprobe(rest)
        elif cmd == "synth":
            _cmd_synth(rest)
        else:
            print(f"unknown mode {cmd!r}", file=sys.stderr)
            return 2
    except SystemExit as e:
        return int(e.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
