"""HTTP service: instructor generation/editing/assignment workflows, student
playback telemetry, quiz scoring, and the researcher dataset export."""

from __future__ import annotations

import os
import time
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from typing import Literal, Optional

from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .. import assembler
from ..analytics import UEQ_S_ITEMS, INSTRUMENTS, LikertResponse, count_revisits, score_quiz
from ..errors import (
    AlreadySubmitted,
    EmptyFilter,
    Forbidden,
    InfeasibleSegment,
    JobTerminal,
    NotFound,
    OrderViolation,
    PlanError,
    RangeError,
    ReeledError,
    SessionUnknown,
    SourceUnresolvable,
    SpecError,
    UnknownItem,
)
from ..llm import KeyMoment, ReelSpec
from ..planner import enforce_duration, snap_to_cues
from ..transcript import transcript_from_dict
from .jobs import JobRunner, spec_from_dict
from .storage import Storage

DEMO_TOKENS = {
    "instructor-demo": ("instructor1", "instructor"),
    "student-demo": ("student1", "student"),
    "researcher-demo": ("researcher1", "researcher"),
}

_STATUS_FOR_ERROR = {
    NotFound: 404,
    SessionUnknown: 404,
    EmptyFilter: 404,
    Forbidden: 403,
    SpecError: 422,
    SourceUnresolvable: 422,
    UnknownItem: 422,
    RangeError: 422,
    PlanError: 409,
    InfeasibleSegment: 409,
    AlreadySubmitted: 409,
    OrderViolation: 409,
    JobTerminal: 409,
}


@dataclass
class ServiceConfig:
    db_path: str = ":memory:"
    media_root: str = "media"
    provider_id: str = "mock"
    tokens: dict[str, tuple[str, str]] | None = None
    autorun_jobs: bool = True
    worker_count: int = 4
    extra: dict = field(default_factory=dict)


class SpecIn(BaseModel):
    reel_count: int = 5
    min_s: int = 30
    max_s: int = 60
    target_s: Optional[int] = None


class JobCreate(BaseModel):
    source_uri: Optional[str] = None
    captions_ref: str
    spec: SpecIn = SpecIn()


class ReelPatch(BaseModel):
    start_ms: Optional[int] = None
    end_ms: Optional[int] = None
    published: Optional[bool] = None


class AssignmentCreate(BaseModel):
    reel_set_id: str  # job id of the generated reel set
    student_id: str
    quiz_id: str
    condition: Literal["long_form", "reels"]
    quiz_key: Optional[dict[str, str]] = None  # inline quiz definition


class EventIn(BaseModel):
    session_id: str
    subject_id: str
    kind: Literal["play", "pause", "seek", "reel_change", "quiz_open", "quiz_submit", "rate"]
    at_ms: int = 0
    wall_time: float
    value: Optional[float] = None


class QuizSubmit(BaseModel):
    session_id: Optional[str] = None
    answers: dict[str, str]


class RatingIn(BaseModel):
    value: int


class SurveyItemIn(BaseModel):
    instrument: str
    item_id: str
    value: int
    reversed: bool = False


class SurveyIn(BaseModel):
    items: list[SurveyItemIn]


def _job_view(job) -> dict:
    return {
        "job_id": job.job_id, "source_uri": job.source_uri,
        "captions_ref": job.captions_ref, "spec": job.spec,
        "status": job.status, "progress_pct": job.progress,
        "failure": job.failure, "created_at": job.created_at,
        "updated_at": job.updated_at,
    }


def _reel_view(reel: dict) -> dict:
    view = dict(reel)
    art = reel.get("artifact")
    view["media_url"] = f"/media/{art['file']}" if art else None
    return view


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    storage = Storage(config.db_path)
    for token, (user_id, role) in (config.tokens or DEMO_TOKENS).items():
        storage.put_token(token, user_id, role)
    os.makedirs(config.media_root, exist_ok=True)
    runner = JobRunner(storage, config.media_root, provider_id=config.provider_id,
                       worker_count=config.worker_count)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        runner.shutdown()
        storage.close()

    app = FastAPI(title="reeled", version="0.1.0", lifespan=lifespan)
    app.state.storage = storage
    app.state.runner = runner
    app.state.config = config
    app.mount("/media", StaticFiles(directory=config.media_root), name="media")

    @app.exception_handler(ReeledError)
    async def _reeled_error(_request: Request, exc: ReeledError):
        status = 400
        for klass, code in _STATUS_FOR_ERROR.items():
            if isinstance(exc, klass):
                status = code
                break
        return JSONResponse(status_code=status,
                            content={"error": exc.code, "detail": str(exc)})

    def identity(authorization: str = Header(default="")) -> tuple[str, str]:
        if not authorization.startswith("Bearer "):
            raise Forbidden("missing bearer token")
        found = storage.identity_for_token(authorization[len("Bearer "):])
        if found is None:
            raise Forbidden("unknown token")
        return found

    def require(*roles: str):
        def check(user: tuple[str, str] = Depends(identity)) -> tuple[str, str]:
            if user[1] not in roles:
                raise Forbidden(f"requires role in {roles}, token has {user[1]!r}")
            return user
        return check

    # --- jobs -------------------------------------------------------------

    @app.post("/api/jobs", status_code=201)
    def create_job(body: JobCreate, user=Depends(require("instructor"))):
        target = body.spec.target_s
        if target is None:
            target = (body.spec.min_s + body.spec.max_s) // 2
        spec = ReelSpec(reel_count=body.spec.reel_count, min_duration_s=body.spec.min_s,
                        max_duration_s=body.spec.max_s, target_duration_s=target)
        is_remote = body.captions_ref.startswith(("http://", "https://"))
        if not is_remote and not os.path.exists(body.captions_ref):
            raise SourceUnresolvable(f"captions not found: {body.captions_ref}")
        if body.source_uri and not os.path.exists(body.source_uri):
            raise SourceUnresolvable(f"source not found: {body.source_uri}")
        job = storage.create_job(body.source_uri, body.captions_ref, {
            "reel_count": spec.reel_count, "min_s": spec.min_duration_s,
            "max_s": spec.max_duration_s, "target_s": spec.target_duration_s,
        })
        if config.autorun_jobs:
            runner.submit(job.job_id)
        return _job_view(job)

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str, user=Depends(require("instructor", "researcher"))):
        return _job_view(storage.get_job(job_id))

    # --- reels ------------------------------------------------------------

    @app.get("/api/reels")
    def reels_for_job(job: str = Query(...),
                      user=Depends(require("instructor", "researcher"))):
        storage.get_job(job)
        return [_reel_view(r) for r in storage.reels_for_job(job)]

    @app.patch("/api/reels/{reel_id}")
    def patch_reel(reel_id: str, body: ReelPatch, user=Depends(require("instructor"))):
        reel = storage.get_reel(reel_id)
        retrimmed = False
        if body.start_ms is not None or body.end_ms is not None:
            if body.start_ms is None or body.end_ms is None:
                raise RangeError("segment edits need both start_ms and end_ms")
            reel = _apply_segment_edit(storage, config, reel, body.start_ms, body.end_ms)
            retrimmed = reel.pop("_retrimmed", False)
        if body.published is not None:
            storage.set_reel_published(reel_id, body.published)
            reel = storage.get_reel(reel_id)
        view = _reel_view(reel)
        view["retrimmed"] = retrimmed
        return view

    # --- assignments --------------------------------------------------------

    @app.post("/api/assignments", status_code=201)
    def create_assignment(body: AssignmentCreate, user=Depends(require("instructor"))):
        storage.get_job(body.reel_set_id)
        if body.quiz_key is not None:
            storage.put_quiz(body.quiz_id, body.quiz_key)
        else:
            storage.get_quiz(body.quiz_id)
        assignment = storage.create_assignment(body.reel_set_id, body.student_id,
                                               body.quiz_id, body.condition)
        for reel in storage.reels_for_job(body.reel_set_id):
            storage.set_reel_published(reel["reel_id"], True)  # assigning publishes
        return assignment

    @app.get("/api/assignments/{assignment_id}/reels")
    def assignment_reels(assignment_id: str, user=Depends(identity)):
        user_id, role = user
        assignment = storage.get_assignment(assignment_id)
        session_id = None
        if role == "student":
            if assignment["student_id"] != user_id:
                raise Forbidden("assignment belongs to another student")
            session_id = storage.get_or_create_session(assignment_id, user_id)
        reels = [_reel_view(r) for r in storage.reels_for_job(assignment["reel_set_id"])
                 if r["published"]]
        return {"assignment": assignment, "session_id": session_id, "reels": reels}

    # --- telemetry ----------------------------------------------------------

    @app.post("/api/events", status_code=201)
    def record_event(body: EventIn, user=Depends(require("student"))):
        user_id, _role = user
        try:
            session = storage.get_session(body.session_id)
        except NotFound as e:
            raise SessionUnknown(str(e)) from e
        if session["student_id"] != user_id:
            raise Forbidden("session belongs to another student")
        if body.kind == "rate":
            if body.value is None or not 1 <= body.value <= 5:
                raise RangeError("rate events need value in [1, 5]")
        elif body.value is not None:
            raise RangeError(f"{body.kind} events must not carry a value")
        seq = storage.append_event(body.session_id, body.subject_id, body.kind,
                                   body.at_ms, body.wall_time, body.value)
        return {"session_id": body.session_id, "seq": seq}

    @app.post("/api/assignments/{assignment_id}/quiz")
    def submit_quiz(assignment_id: str, body: QuizSubmit,
                    user=Depends(require("student"))):
        user_id, _role = user
        assignment = storage.get_assignment(assignment_id)
        if assignment["student_id"] != user_id:
            raise Forbidden("assignment belongs to another student")
        if storage.quiz_result(assignment_id) is not None:
            raise AlreadySubmitted(f"assignment {assignment_id} already has a result")
        key = storage.get_quiz(assignment["quiz_id"])
        score = score_quiz(body.answers, key)

        session_id = body.session_id
        if session_id is None:
            sessions = storage.sessions_for_assignment(assignment_id)
            session_id = sessions[0] if sessions else None
        duration_s = None
        revisits = 0
        if session_id is not None:
            session = storage.get_session(session_id)
            if session["student_id"] != user_id:
                raise Forbidden("session belongs to another student")
            events = storage.events_for_session(session_id)
            opens = [e for e in events if e["kind"] == "quiz_open"]
            submits = [e for e in events if e["kind"] == "quiz_submit"]
            if opens and not submits:
                # client did not stamp the submit event; stamp it server-side
                wall = max(time.time(), events[-1]["wall_time"]) if events else time.time()
                storage.append_event(session_id, assignment["quiz_id"], "quiz_submit",
                                     0, wall, None)
                events = storage.events_for_session(session_id)
                submits = [e for e in events if e["kind"] == "quiz_submit"]
            if opens and submits:
                duration_s = submits[-1]["wall_time"] - opens[0]["wall_time"]
            revisits = count_revisits(events)
        storage.put_quiz_result(assignment_id, user_id, score, duration_s,
                                revisits, body.answers)
        return {"assignment_id": assignment_id, "score_pct": score,
                "duration_s": duration_s, "revisits": revisits}

    @app.post("/api/reels/{reel_id}/rating", status_code=201)
    def rate_reel(reel_id: str, body: RatingIn, user=Depends(require("student"))):
        user_id, _role = user
        storage.get_reel(reel_id)
        if not 1 <= body.value <= 5:
            raise RangeError(f"rating {body.value} outside [1, 5]")
        storage.put_rating(reel_id, user_id, body.value)
        return {"reel_id": reel_id, "value": body.value}

    @app.post("/api/assignments/{assignment_id}/survey", status_code=201)
    def submit_survey(assignment_id: str, body: SurveyIn,
                      user=Depends(require("student"))):
        user_id, _role = user
        assignment = storage.get_assignment(assignment_id)
        if assignment["student_id"] != user_id:
            raise Forbidden("assignment belongs to another student")
        for item in body.items:
            # LikertResponse holds the validation rules (range, instrument)
            checked = LikertResponse(instrument=item.instrument, item_id=item.item_id,
                                     value=item.value, reversed=item.reversed)
            storage.put_likert(assignment_id, checked.instrument, checked.item_id,
                               checked.value, checked.reversed)
        return {"assignment_id": assignment_id, "stored": len(body.items)}

    # --- export ---------------------------------------------------------------

    @app.get("/api/export.csv")
    def export_csv(condition: Optional[str] = None, quiz_id: Optional[str] = None,
                   user=Depends(require("researcher"))):
        text = build_export_csv(storage, condition=condition, quiz_id=quiz_id)
        return PlainTextResponse(content=text, media_type="text/csv")

    return app


def _apply_segment_edit(storage: Storage, config: ServiceConfig, reel: dict,
                        start_ms: int, end_ms: int) -> dict:
    """Re-snap and re-validate edited bounds, keep the reel set disjoint,
    and re-trim when the job has source media."""
    job = storage.get_job(reel["job_id"])
    t = transcript_from_dict(storage.get_transcript(job.job_id))
    spec = spec_from_dict(job.spec)
    if not (0 <= start_ms < end_ms <= t.duration_ms):
        raise RangeError(f"bounds [{start_ms}, {end_ms}) outside [0, {t.duration_ms}]")
    moment = KeyMoment(rank=reel["order"], start_ms=start_ms, end_ms=end_ms,
                       label=reel["label"], summary=reel["summary"])
    snapped = snap_to_cues(moment, t)
    new_start, new_end = enforce_duration(snapped, spec, t)
    for sibling in storage.reels_for_job(job.job_id):
        if sibling["reel_id"] == reel["reel_id"]:
            continue
        if new_start < sibling["end_ms"] and new_end > sibling["start_ms"]:
            raise PlanError(
                f"edited bounds overlap reel {sibling['order']} "
                f"({sibling['reel_id']})", pair=(reel["order"], sibling["order"]))
    storage.update_reel_bounds(reel["reel_id"], new_start, new_end)
    updated = storage.get_reel(reel["reel_id"])

    if job.source_uri and reel.get("artifact"):
        updated["_retrimmed"] = _retrim(storage, config, job, updated)
    return updated


def _retrim(storage: Storage, config: ServiceConfig, job, reel: dict) -> bool:
    """Trim the edited segment to a staging dir; swap in only after the probe
    passes so the previous artifact survives a failed re-trim."""
    from ..planner import ReelSegment

    seg = ReelSegment(order=reel["order"], cut_start_ms=reel["start_ms"],
                      cut_end_ms=reel["end_ms"], label=reel["label"],
                      summary=reel["summary"], source_moment_rank=reel["order"])
    job_dir = os.path.join(config.media_root, job.job_id)
    staging = os.path.join(job_dir, "staging")
    artifact = assembler.trim_segment(job.source_uri, seg, out_dir=staging)
    final_path = os.path.join(job_dir, os.path.basename(artifact.file_path))
    os.replace(artifact.file_path, final_path)
    storage.set_reel_artifact(reel["reel_id"], {
        "file": f"{job.job_id}/{os.path.basename(final_path)}",
        "duration_ms": artifact.measured_duration_ms,
        "checksum": artifact.checksum,
    })
    return True


def export_columns(storage: Storage, assignments: list[dict]) -> list[str]:
    """Fixed column order: ids and metrics, then instrument items (UEQ-S in
    canonical order, other instruments sorted by item id)."""
    per_instrument: dict[str, set[str]] = {name: set() for name in INSTRUMENTS}
    for assignment in assignments:
        for row in storage.likert_for_assignment(assignment["assignment_id"]):
            per_instrument.setdefault(row["instrument"], set()).add(row["item_id"])
    columns = ["participant_id", "assignment_id", "condition",
               "quiz_score_pct", "quiz_duration_s", "revisits"]
    for instrument in INSTRUMENTS:
        items = per_instrument.get(instrument, set())
        if instrument == "ueq_s":
            ordered = [i for i in UEQ_S_ITEMS if i in items]
            ordered += sorted(items - set(UEQ_S_ITEMS))
        else:
            ordered = sorted(items)
        columns.extend(f"{instrument}:{item}" for item in ordered)
    return columns


def build_export_csv(storage: Storage, condition: str | None = None,
                     quiz_id: str | None = None) -> str:
    """One row per participant-assignment; revisits are recounted from the
    raw event stream at export time."""
    import csv
    import io

    assignments = storage.list_assignments(condition=condition, quiz_id=quiz_id)
    if not assignments:
        raise EmptyFilter("no assignments match the export filter")
    columns = export_columns(storage, assignments)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for assignment in assignments:
        aid = assignment["assignment_id"]
        row: dict[str, object] = {
            "participant_id": assignment["student_id"],
            "assignment_id": aid,
            "condition": assignment["condition"],
        }
        result = storage.quiz_result(aid)
        if result:
            row["quiz_score_pct"] = result["score_pct"]
            if result["duration_s"] is not None:
                row["quiz_duration_s"] = round(result["duration_s"], 3)
            revisits = 0
            for session_id in storage.sessions_for_assignment(aid):
                revisits += count_revisits(storage.events_for_session(session_id))
            row["revisits"] = revisits
        for item in storage.likert_for_assignment(aid):
            row[f"{item['instrument']}:{item['item_id']}"] = item["value"]
        writer.writerow([row.get(c, "") for c in columns])
    return buf.getvalue()
