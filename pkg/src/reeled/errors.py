"""Typed errors shared across the package.

Every expected failure surfaces as a subclass of ReeledError so callers
(CLI, HTTP layer) can map failures to exit codes / status codes without
string matching.
"""

from __future__ import annotations


class ReeledError(Exception):
    """Base class for all expected failures."""

    code = "error"

    def __str__(self) -> str:
        msg = super().__str__()
        return msg if msg else self.code


# --- transcript ingest ------------------------------------------------------

class DecodeError(ReeledError):
    code = "decode_error"


class FormatError(ReeledError):
    code = "format_error"

    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class EmptyTranscript(ReeledError):
    code = "empty_transcript"


class RangeError(ReeledError):
    """A timestamp or window violates its bounds."""

    code = "range_error"


# --- LLM key moments --------------------------------------------------------

class ParseError(ReeledError):
    code = "parse_error"


class SchemaError(ReeledError):
    code = "schema_error"

    def __init__(self, message: str, path: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class CountError(ReeledError):
    code = "count_error"


class MissingWindow(ReeledError):
    code = "missing_window"


class InfeasibleSpec(ReeledError):
    code = "infeasible_spec"


class ProviderError(ReeledError):
    code = "provider_error"


class ExhaustedRetries(ReeledError):
    code = "exhausted_retries"

    def __init__(self, message: str, last_error: ReeledError | None = None):
        super().__init__(message)
        self.last_error = last_error


# --- segment planner --------------------------------------------------------

class InfeasibleSegment(ReeledError):
    code = "infeasible_segment"

    def __init__(self, message: str, moment_rank: int | None = None):
        super().__init__(message)
        self.moment_rank = moment_rank


class PlanError(ReeledError):
    code = "plan_error"

    def __init__(self, message: str, pair: tuple[int, int] | None = None,
                 moment_rank: int | None = None):
        super().__init__(message)
        self.pair = pair
        self.moment_rank = moment_rank


# --- media assembler --------------------------------------------------------

class ToolNotFound(ReeledError):
    code = "tool_not_found"


class ToolFailure(ReeledError):
    code = "tool_failure"

    def __init__(self, message: str, stderr: str = "", segment_order: int | None = None):
        super().__init__(message)
        self.stderr = stderr
        self.segment_order = segment_order


class DurationMismatch(ReeledError):
    code = "duration_mismatch"

    def __init__(self, message: str, segment_order: int | None = None):
        super().__init__(message)
        self.segment_order = segment_order


class NotMedia(ReeledError):
    code = "not_media"


class ConcatFailure(ReeledError):
    code = "concat_failure"


# --- service ----------------------------------------------------------------

class SpecError(ReeledError):
    code = "spec_error"


class SourceUnresolvable(ReeledError):
    code = "source_unresolvable"


class SessionUnknown(ReeledError):
    code = "session_unknown"


class OrderViolation(ReeledError):
    code = "order_violation"


class AlreadySubmitted(ReeledError):
    code = "already_submitted"


class NotFound(ReeledError):
    code = "not_found"


class Forbidden(ReeledError):
    code = "forbidden"


class EmptyFilter(ReeledError):
    code = "empty_filter"


class JobTerminal(ReeledError):
    """advance_job was called on a job already in a terminal state."""

    code = "job_terminal"


# --- analytics --------------------------------------------------------------

class TooFewValues(ReeledError):
    code = "too_few_values"


class TooManyValues(ReeledError):
    code = "too_many_values"


class ZeroVariance(ReeledError):
    code = "zero_variance"


class WrongItemCount(ReeledError):
    code = "wrong_item_count"


class MixedInstruments(ReeledError):
    code = "mixed_instruments"


class UnknownItem(ReeledError):
    code = "unknown_item"
