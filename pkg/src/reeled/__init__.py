"""reeled: lecture videos in, short educational reels and study analytics out."""

from .llm import KeyMoment, ReelSpec
from .planner import CutPlan, ReelSegment
from .transcript import Transcript, TranscriptCue

__version__ = "0.1.0"

__all__ = ["KeyMoment", "ReelSpec", "CutPlan", "ReelSegment",
           "Transcript", "TranscriptCue", "__version__"]
