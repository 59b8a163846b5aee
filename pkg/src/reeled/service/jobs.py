"""Generation job state machine.

Statuses advance strictly forward along STAGE_ORDER; any non-terminal stage
may drop to `failed` (the failure records which stage broke). Each advance
call executes exactly one stage; a per-job lock serializes concurrent
advances so the persisted history can never interleave.
"""

from __future__ import annotations

import os
import threading
from concurrent.futures import ThreadPoolExecutor

from ..assembler import assemble, probe, resolve_tool, write_manifest
from ..errors import JobTerminal, ReeledError, SourceUnresolvable
from ..llm import KeyMoment, ReelSpec, enrich_moments, get_provider, identify_key_moments
from ..pipeline import read_captions_ref
from ..planner import plan, plan_to_manifest
from ..transcript import (
    normalize,
    parse_captions,
    transcript_from_dict,
    transcript_to_dict,
)
from .storage import JobRecord, Storage

STAGE_ORDER = ("queued", "downloading", "transcribing", "llm_processing",
               "planning", "trimming", "complete")
TERMINAL = ("complete", "failed")
PROGRESS = {"queued": 0, "downloading": 10, "transcribing": 25,
            "llm_processing": 55, "planning": 70, "trimming": 90, "complete": 100}


def spec_from_dict(d: dict) -> ReelSpec:
    return ReelSpec(reel_count=d["reel_count"], min_duration_s=d["min_s"],
                    max_duration_s=d["max_s"], target_duration_s=d["target_s"])


class JobRunner:
    def __init__(self, storage: Storage, media_root: str, provider_id: str = "mock",
                 worker_count: int = 4):
        self.storage = storage
        self.media_root = media_root
        self.provider_id = provider_id
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._pool: ThreadPoolExecutor | None = None
        self._worker_count = worker_count

    def _job_lock(self, job_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(job_id, threading.Lock())

    def advance(self, job_id: str) -> JobRecord:
        """Execute the job's next stage; failures are persisted, not raised."""
        with self._job_lock(job_id):
            job = self.storage.get_job(job_id)
            if job.status in TERMINAL:
                raise JobTerminal(f"job {job_id} is already {job.status}")
            next_status = STAGE_ORDER[STAGE_ORDER.index(job.status) + 1]
            try:
                moments = self._execute(job, next_status)
            except Exception as e:  # persist any stage failure on the job
                self.storage.update_job(
                    job_id, status="failed", progress=job.progress,
                    failure={"stage": next_status, "message": str(e)})
            else:
                self.storage.update_job(job_id, status=next_status,
                                        progress=PROGRESS[next_status],
                                        moments=moments)
        return self.storage.get_job(job_id)

    def run_to_completion(self, job_id: str) -> JobRecord:
        while True:
            job = self.advance(job_id)
            if job.status in TERMINAL:
                return job

    def submit(self, job_id: str) -> None:
        """Hand the job to the background worker pool."""
        if self._pool is None:
            self._pool = ThreadPoolExecutor(max_workers=self._worker_count,
                                            thread_name_prefix="reeled-job")
        self._pool.submit(self._run_quietly, job_id)

    def _run_quietly(self, job_id: str) -> None:
        try:
            self.run_to_completion(job_id)
        except ReeledError:
            pass  # already persisted on the job

    def shutdown(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    # --- stage bodies -----------------------------------------------------

    def _execute(self, job: JobRecord, stage: str) -> list | None:
        if stage == "downloading":
            if job.source_uri and not os.path.exists(job.source_uri):
                raise SourceUnresolvable(f"source not found: {job.source_uri}")
            return None
        if stage == "transcribing":
            raw = read_captions_ref(job.captions_ref)
            t = normalize(parse_captions(raw, source_id=job.job_id))
            if job.source_uri:
                t = t.with_duration(probe(job.source_uri)["duration_ms"])
            self.storage.save_transcript(job.job_id, transcript_to_dict(t))
            return None
        if stage == "llm_processing":
            t = transcript_from_dict(self.storage.get_transcript(job.job_id))
            spec = spec_from_dict(job.spec)
            provider = get_provider(self.provider_id)
            moments, _retries = identify_key_moments(provider, t, spec)
            moments = enrich_moments(provider, t, moments)
            return [{"rank": m.rank, "start_ms": m.start_ms, "end_ms": m.end_ms,
                     "label": m.label, "summary": m.summary} for m in moments]
        if stage == "planning":
            t = transcript_from_dict(self.storage.get_transcript(job.job_id))
            spec = spec_from_dict(job.spec)
            moments = [KeyMoment(**m) for m in (job.moments or [])]
            cut_plan = plan(t, moments, spec)
            self.storage.put_reels(job.job_id, plan_to_manifest(cut_plan)["segments"])
            return None
        if stage == "trimming":
            return self._trim_stage(job)
        if stage == "complete":
            return None  # all work already done by the trimming stage
        raise ReeledError(f"unknown stage {stage}")

    def _trim_stage(self, job: JobRecord) -> None:
        t = transcript_from_dict(self.storage.get_transcript(job.job_id))
        spec = spec_from_dict(job.spec)
        moments = [KeyMoment(**m) for m in (job.moments or [])]
        cut_plan = plan(t, moments, spec)
        out_dir = os.path.join(self.media_root, job.job_id)
        if job.source_uri:
            artifacts, _manifest = assemble(job.source_uri, cut_plan,
                                            out_dir=out_dir, tool=resolve_tool())
            reels = self.storage.reels_for_job(job.job_id)
            by_order = {r["order"]: r for r in reels}
            for art in artifacts:
                self.storage.set_reel_artifact(by_order[art.segment_order]["reel_id"], {
                    "file": f"{job.job_id}/{os.path.basename(art.file_path)}",
                    "duration_ms": art.measured_duration_ms,
                    "checksum": art.checksum,
                })
        else:
            os.makedirs(out_dir, exist_ok=True)
            write_manifest(cut_plan, out_dir)
        return None
