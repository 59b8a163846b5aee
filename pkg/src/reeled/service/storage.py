"""Relational persistence behind a small storage interface.

SQLite backs both deployment (file database) and tests (in-memory database)
through the same class. One connection guarded by a re-entrant lock keeps
access safe from the service's worker threads; per-session event appends are
serialized by that lock, which also enforces the wall-clock ordering rule.
"""

from __future__ import annotations

import json
import sqlite3
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone

from ..errors import NotFound, OrderViolation

_SCHEMA = """
CREATE TABLE IF NOT EXISTS jobs (
    job_id TEXT PRIMARY KEY,
    source_uri TEXT,
    captions_ref TEXT NOT NULL,
    spec TEXT NOT NULL,
    status TEXT NOT NULL,
    progress INTEGER NOT NULL,
    failure TEXT,
    moments TEXT,
    created_at TEXT NOT NULL,
    updated_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS job_history (
    job_id TEXT NOT NULL,
    seq INTEGER NOT NULL,
    status TEXT NOT NULL,
    at TEXT NOT NULL,
    PRIMARY KEY (job_id, seq)
);
CREATE TABLE IF NOT EXISTS transcripts (
    job_id TEXT PRIMARY KEY,
    body TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS reels (
    reel_id TEXT PRIMARY KEY,
    job_id TEXT NOT NULL,
    ord INTEGER NOT NULL,
    start_ms INTEGER NOT NULL,
    end_ms INTEGER NOT NULL,
    label TEXT NOT NULL,
    summary TEXT NOT NULL,
    published INTEGER NOT NULL DEFAULT 0,
    artifact TEXT
);
CREATE TABLE IF NOT EXISTS quizzes (
    quiz_id TEXT PRIMARY KEY,
    answer_key TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS assignments (
    assignment_id TEXT PRIMARY KEY,
    reel_set_id TEXT NOT NULL,
    student_id TEXT NOT NULL,
    quiz_id TEXT NOT NULL,
    condition TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS sessions (
    session_id TEXT PRIMARY KEY,
    assignment_id TEXT NOT NULL,
    student_id TEXT NOT NULL,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS events (
    session_id TEXT NOT NULL,
    seq INTEGER NOT NULL,
    subject_id TEXT NOT NULL,
    kind TEXT NOT NULL,
    at_ms INTEGER NOT NULL,
    wall_time REAL NOT NULL,
    value REAL,
    PRIMARY KEY (session_id, seq)
);
CREATE TABLE IF NOT EXISTS quiz_results (
    assignment_id TEXT PRIMARY KEY,
    student_id TEXT NOT NULL,
    score_pct REAL NOT NULL,
    duration_s REAL,
    revisits INTEGER NOT NULL,
    submitted_at TEXT NOT NULL,
    answers TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS likert_responses (
    assignment_id TEXT NOT NULL,
    instrument TEXT NOT NULL,
    item_id TEXT NOT NULL,
    value INTEGER NOT NULL,
    reversed INTEGER NOT NULL DEFAULT 0,
    PRIMARY KEY (assignment_id, instrument, item_id)
);
CREATE TABLE IF NOT EXISTS ratings (
    reel_id TEXT NOT NULL,
    student_id TEXT NOT NULL,
    value INTEGER NOT NULL,
    at TEXT NOT NULL,
    PRIMARY KEY (reel_id, student_id)
);
CREATE TABLE IF NOT EXISTS tokens (
    token TEXT PRIMARY KEY,
    user_id TEXT NOT NULL,
    role TEXT NOT NULL
);
"""


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def new_id(prefix: str) -> str:
    return f"{prefix}_{uuid.uuid4().hex[:12]}"


@dataclass(frozen=True)
class JobRecord:
    job_id: str
    source_uri: str | None
    captions_ref: str
    spec: dict
    status: str
    progress: int
    failure: dict | None
    moments: list | None
    created_at: str
    updated_at: str


class Storage:
    """SQLite-backed store; pass ':memory:' for the embedded test database."""

    def __init__(self, db_path: str = ":memory:"):
        self._conn = sqlite3.connect(db_path, check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._lock = threading.RLock()
        with self._lock, self._conn:
            self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # --- tokens ---------------------------------------------------------

    def put_token(self, token: str, user_id: str, role: str) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT OR REPLACE INTO tokens (token, user_id, role) VALUES (?,?,?)",
                (token, user_id, role))

    def identity_for_token(self, token: str) -> tuple[str, str] | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT user_id, role FROM tokens WHERE token = ?", (token,)).fetchone()
        return (row["user_id"], row["role"]) if row else None

    # --- jobs -----------------------------------------------------------

    def create_job(self, source_uri: str | None, captions_ref: str, spec: dict) -> JobRecord:
        job_id = new_id("job")
        ts = now_iso()
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO jobs (job_id, source_uri, captions_ref, spec, status,"
                " progress, failure, moments, created_at, updated_at)"
                " VALUES (?,?,?,?,?,?,NULL,NULL,?,?)",
                (job_id, source_uri, captions_ref, json.dumps(spec), "queued", 0, ts, ts))
            self._conn.execute(
                "INSERT INTO job_history (job_id, seq, status, at) VALUES (?,0,?,?)",
                (job_id, "queued", ts))
        return self.get_job(job_id)

    def get_job(self, job_id: str) -> JobRecord:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM jobs WHERE job_id = ?", (job_id,)).fetchone()
        if row is None:
            raise NotFound(f"job {job_id} not found")
        return JobRecord(
            job_id=row["job_id"], source_uri=row["source_uri"],
            captions_ref=row["captions_ref"], spec=json.loads(row["spec"]),
            status=row["status"], progress=row["progress"],
            failure=json.loads(row["failure"]) if row["failure"] else None,
            moments=json.loads(row["moments"]) if row["moments"] else None,
            created_at=row["created_at"], updated_at=row["updated_at"])

    def list_job_ids(self) -> list[str]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT job_id FROM jobs ORDER BY created_at").fetchall()
        return [r["job_id"] for r in rows]

    def update_job(self, job_id: str, status: str, progress: int,
                   failure: dict | None = None, moments: list | None = None) -> None:
        ts = now_iso()
        with self._lock, self._conn:
            cur = self._conn.execute(
                "UPDATE jobs SET status = ?, progress = ?, failure = ?,"
                " moments = COALESCE(?, moments), updated_at = ? WHERE job_id = ?",
                (status, progress, json.dumps(failure) if failure else None,
                 json.dumps(moments) if moments is not None else None, ts, job_id))
            if cur.rowcount == 0:
                raise NotFound(f"job {job_id} not found")
            seq = self._conn.execute(
                "SELECT COALESCE(MAX(seq), -1) + 1 AS s FROM job_history"
                " WHERE job_id = ?", (job_id,)).fetchone()["s"]
            self._conn.execute(
                "INSERT INTO job_history (job_id, seq, status, at) VALUES (?,?,?,?)",
                (job_id, seq, status, ts))

    def job_history(self, job_id: str) -> list[str]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT status FROM job_history WHERE job_id = ? ORDER BY seq",
                (job_id,)).fetchall()
        return [r["status"] for r in rows]

    # --- transcripts / reels ---------------------------------------------

    def save_transcript(self, job_id: str, body: dict) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT OR REPLACE INTO transcripts (job_id, body) VALUES (?,?)",
                (job_id, json.dumps(body)))

    def get_transcript(self, job_id: str) -> dict:
        with self._lock:
            row = self._conn.execute(
                "SELECT body FROM transcripts WHERE job_id = ?", (job_id,)).fetchone()
        if row is None:
            raise NotFound(f"no transcript stored for job {job_id}")
        return json.loads(row["body"])

    def put_reels(self, job_id: str, segments: list[dict]) -> list[dict]:
        with self._lock, self._conn:
            self._conn.execute("DELETE FROM reels WHERE job_id = ?", (job_id,))
            out = []
            for seg in segments:
                reel_id = new_id("reel")
                self._conn.execute(
                    "INSERT INTO reels (reel_id, job_id, ord, start_ms, end_ms,"
                    " label, summary, published, artifact)"
                    " VALUES (?,?,?,?,?,?,?,0,NULL)",
                    (reel_id, job_id, seg["order"], seg["start_ms"], seg["end_ms"],
                     seg["label"], seg["summary"]))
                out.append({**seg, "reel_id": reel_id})
        return out

    def _reel_from_row(self, row: sqlite3.Row) -> dict:
        return {
            "reel_id": row["reel_id"], "job_id": row["job_id"], "order": row["ord"],
            "start_ms": row["start_ms"], "end_ms": row["end_ms"],
            "label": row["label"], "summary": row["summary"],
            "published": bool(row["published"]),
            "artifact": json.loads(row["artifact"]) if row["artifact"] else None,
        }

    def get_reel(self, reel_id: str) -> dict:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM reels WHERE reel_id = ?", (reel_id,)).fetchone()
        if row is None:
            raise NotFound(f"reel {reel_id} not found")
        return self._reel_from_row(row)

    def reels_for_job(self, job_id: str) -> list[dict]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT * FROM reels WHERE job_id = ? ORDER BY ord", (job_id,)).fetchall()
        return [self._reel_from_row(r) for r in rows]

    def update_reel_bounds(self, reel_id: str, start_ms: int, end_ms: int) -> None:
        with self._lock, self._conn:
            cur = self._conn.execute(
                "UPDATE reels SET start_ms = ?, end_ms = ? WHERE reel_id = ?",
                (start_ms, end_ms, reel_id))
            if cur.rowcount == 0:
                raise NotFound(f"reel {reel_id} not found")

    def set_reel_artifact(self, reel_id: str, artifact: dict | None) -> None:
        with self._lock, self._conn:
            self._conn.execute("UPDATE reels SET artifact = ? WHERE reel_id = ?",
                               (json.dumps(artifact) if artifact else None, reel_id))

    def set_reel_published(self, reel_id: str, published: bool) -> None:
        with self._lock, self._conn:
            self._conn.execute("UPDATE reels SET published = ? WHERE reel_id = ?",
                               (1 if published else 0, reel_id))

    # --- quizzes / assignments -------------------------------------------

    def put_quiz(self, quiz_id: str, answer_key: dict) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT OR REPLACE INTO quizzes (quiz_id, answer_key) VALUES (?,?)",
                (quiz_id, json.dumps(answer_key)))

    def get_quiz(self, quiz_id: str) -> dict:
        with self._lock:
            row = self._conn.execute(
                "SELECT answer_key FROM quizzes WHERE quiz_id = ?", (quiz_id,)).fetchone()
        if row is None:
            raise NotFound(f"quiz {quiz_id} not found")
        return json.loads(row["answer_key"])

    def create_assignment(self, reel_set_id: str, student_id: str, quiz_id: str,
                          condition: str) -> dict:
        assignment_id = new_id("asg")
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO assignments (assignment_id, reel_set_id, student_id,"
                " quiz_id, condition) VALUES (?,?,?,?,?)",
                (assignment_id, reel_set_id, student_id, quiz_id, condition))
        return self.get_assignment(assignment_id)

    def get_assignment(self, assignment_id: str) -> dict:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM assignments WHERE assignment_id = ?",
                (assignment_id,)).fetchone()
        if row is None:
            raise NotFound(f"assignment {assignment_id} not found")
        return dict(row)

    def list_assignments(self, condition: str | None = None,
                         quiz_id: str | None = None) -> list[dict]:
        query = "SELECT * FROM assignments"
        clauses, params = [], []
        if condition:
            clauses.append("condition = ?")
            params.append(condition)
        if quiz_id:
            clauses.append("quiz_id = ?")
            params.append(quiz_id)
        if clauses:
            query += " WHERE " + " AND ".join(clauses)
        query += " ORDER BY assignment_id"
        with self._lock:
            rows = self._conn.execute(query, params).fetchall()
        return [dict(r) for r in rows]

    # --- sessions / events -------------------------------------------------

    def get_or_create_session(self, assignment_id: str, student_id: str) -> str:
        with self._lock, self._conn:
            row = self._conn.execute(
                "SELECT session_id FROM sessions WHERE assignment_id = ?"
                " AND student_id = ? ORDER BY created_at LIMIT 1",
                (assignment_id, student_id)).fetchone()
            if row:
                return row["session_id"]
            session_id = new_id("ses")
            self._conn.execute(
                "INSERT INTO sessions (session_id, assignment_id, student_id,"
                " created_at) VALUES (?,?,?,?)",
                (session_id, assignment_id, student_id, now_iso()))
            return session_id

    def get_session(self, session_id: str) -> dict:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM sessions WHERE session_id = ?", (session_id,)).fetchone()
        if row is None:
            raise NotFound(f"session {session_id} not found")
        return dict(row)

    def append_event(self, session_id: str, subject_id: str, kind: str,
                     at_ms: int, wall_time: float, value: float | None) -> int:
        with self._lock, self._conn:
            last = self._conn.execute(
                "SELECT MAX(seq) AS s, MAX(wall_time) AS w FROM events"
                " WHERE session_id = ?", (session_id,)).fetchone()
            if last["w"] is not None and wall_time < last["w"]:
                raise OrderViolation(
                    f"event wall_time {wall_time} precedes last stored {last['w']}")
            seq = (last["s"] + 1) if last["s"] is not None else 0
            self._conn.execute(
                "INSERT INTO events (session_id, seq, subject_id, kind, at_ms,"
                " wall_time, value) VALUES (?,?,?,?,?,?,?)",
                (session_id, seq, subject_id, kind, at_ms, wall_time, value))
        return seq

    def events_for_session(self, session_id: str) -> list[dict]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT * FROM events WHERE session_id = ? ORDER BY seq",
                (session_id,)).fetchall()
        return [dict(r) for r in rows]

    def sessions_for_assignment(self, assignment_id: str) -> list[str]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT session_id FROM sessions WHERE assignment_id = ?"
                " ORDER BY created_at", (assignment_id,)).fetchall()
        return [r["session_id"] for r in rows]

    # --- quiz results / surveys / ratings -----------------------------------

    def quiz_result(self, assignment_id: str) -> dict | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM quiz_results WHERE assignment_id = ?",
                (assignment_id,)).fetchone()
        return dict(row) if row else None

    def put_quiz_result(self, assignment_id: str, student_id: str, score_pct: float,
                        duration_s: float | None, revisits: int, answers: dict) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO quiz_results (assignment_id, student_id, score_pct,"
                " duration_s, revisits, submitted_at, answers) VALUES (?,?,?,?,?,?,?)",
                (assignment_id, student_id, score_pct, duration_s, revisits,
                 now_iso(), json.dumps(answers)))

    def put_likert(self, assignment_id: str, instrument: str, item_id: str,
                   value: int, reversed_item: bool) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT OR REPLACE INTO likert_responses"
                " (assignment_id, instrument, item_id, value, reversed)"
                " VALUES (?,?,?,?,?)",
                (assignment_id, instrument, item_id, value, 1 if reversed_item else 0))

    def likert_for_assignment(self, assignment_id: str) -> list[dict]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT instrument, item_id, value, reversed FROM likert_responses"
                " WHERE assignment_id = ?", (assignment_id,)).fetchall()
        return [dict(r) for r in rows]

    def put_rating(self, reel_id: str, student_id: str, value: int) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT OR REPLACE INTO ratings (reel_id, student_id, value, at)"
                " VALUES (?,?,?,?)", (reel_id, student_id, value, now_iso()))

    def ratings_for_reel(self, reel_id: str) -> list[dict]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT student_id, value FROM ratings WHERE reel_id = ?",
                (reel_id,)).fetchall()
        return [dict(r) for r in rows]
