"""Exception vocabulary shared across the platform.

Every domain error carries a stable ``code`` string that the HTTP layer maps
onto a status and a JSON error body, so handlers never need per-module
special cases.
"""

from __future__ import annotations


class ChatbenchError(Exception):
    """Base class for all domain errors."""

    code = "error"
    http_status = 400

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_payload(self) -> dict:
        body = {"code": self.code, "message": self.message}
        if self.details:
            body["details"] = self.details
        return body


# --- configuration / input files ---------------------------------------

class ConfigSyntaxError(ChatbenchError):
    """Input text is not well-formed YAML/JSON; carries line/column."""

    code = "syntax_error"

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message, line=line, column=column)
        self.line = line
        self.column = column


class SchemaError(ChatbenchError):
    """Missing or mistyped field; names the offending field path."""

    code = "schema_error"

    def __init__(self, message: str, path: str = ""):
        super().__init__(message, path=path)
        self.path = path


class InvariantError(SchemaError):
    """Structurally valid input that violates a documented invariant."""

    code = "invariant_error"


class ConfigError(ChatbenchError):
    """Operation requested that the active configuration does not permit."""

    code = "config_error"
    http_status = 409


# --- topics --------------------------------------------------------------

class TopicNotFound(ChatbenchError):
    code = "topic_not_found"
    http_status = 404

    def __init__(self, topic_id: str):
        super().__init__(f"no topic with id {topic_id!r}", topic_id=topic_id)
        self.topic_id = topic_id


# --- room engine ---------------------------------------------------------

class ThreadNotFound(ChatbenchError):
    code = "thread_not_found"
    http_status = 404


class ThreadDeleted(ChatbenchError):
    code = "thread_deleted"
    http_status = 404


class WrongState(ChatbenchError):
    code = "wrong_state"
    http_status = 409


class ThreadFull(ChatbenchError):
    code = "thread_full"
    http_status = 409


class AlreadyParticipant(ChatbenchError):
    code = "already_participant"
    http_status = 409


class NotParticipant(ChatbenchError):
    code = "not_participant"
    http_status = 403


class NotConsented(ChatbenchError):
    code = "not_consented"
    http_status = 403


class LimitExceeded(ChatbenchError):
    code = "limit_exceeded"
    http_status = 409


class TurnViolation(ChatbenchError):
    code = "turn_violation"
    http_status = 409


class EmptyMessage(ChatbenchError):
    code = "empty_message"


class AlreadySubmitted(ChatbenchError):
    code = "already_submitted"
    http_status = 409


class ValidationFailed(ChatbenchError):
    """Survey answers rejected; carries the full validation report."""

    code = "validation_failed"

    def __init__(self, message: str, report):
        super().__init__(message, report=[p.to_dict() for p in report.problems])
        self.report = report


class IllegalTransition(ChatbenchError):
    """Internal guard: a state change outside the lifecycle table."""

    code = "illegal_transition"
    http_status = 500


# --- bot gateway -----------------------------------------------------------

class BotUnavailable(ChatbenchError):
    code = "bot_unavailable"
    http_status = 409


class DuplicateName(ChatbenchError):
    code = "duplicate_name"
    http_status = 409


class MalformedUrl(ChatbenchError):
    code = "malformed_url"


class EmptyScript(ChatbenchError):
    code = "empty_script"


class BotError(ChatbenchError):
    """Terminal gateway failure after retries; kind is one of
    ``timeout``, ``bad_status``, ``malformed_body``, ``connect``."""

    code = "bot_error"
    http_status = 502

    def __init__(self, kind: str, message: str, status_code: int | None = None, attempts: int = 0):
        super().__init__(message, kind=kind, status_code=status_code, attempts=attempts)
        self.kind = kind
        self.status_code = status_code
        self.attempts = attempts


# --- crowd client ----------------------------------------------------------

class UnknownWorker(ChatbenchError):
    code = "unknown_worker"
    http_status = 404


class UnknownAssignment(ChatbenchError):
    code = "unknown_assignment"
    http_status = 404


class NonPositiveAmount(ChatbenchError):
    code = "non_positive_amount"


class PlatformRejected(ChatbenchError):
    code = "platform_rejected"
    http_status = 502


class LedgerAppendFailed(ChatbenchError):
    code = "ledger_append_failed"
    http_status = 500


# --- http sessions -----------------------------------------------------------

class AuthRequired(ChatbenchError):
    code = "auth_required"
    http_status = 401


class Forbidden(ChatbenchError):
    code = "forbidden"
    http_status = 403


class IncompleteConsent(ChatbenchError):
    def __init__(self, unchecked: list[int]):
        super().__init__("all agreement checkboxes must be checked", unchecked=unchecked)
        self.unchecked = unchecked

    code = "incomplete_consent"
