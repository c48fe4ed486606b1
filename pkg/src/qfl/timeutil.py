"""RFC 3339 UTC timestamp helpers.

All timestamps in interchange documents and on the wire are RFC 3339 in UTC.
Python 3.10's fromisoformat does not accept the trailing "Z", hence the
dedicated parser.
"""

from __future__ import annotations

from datetime import datetime, timezone

from .errors import SchemaError


def parse_rfc3339(text: str) -> datetime:
    """Parse an RFC 3339 timestamp into an aware UTC datetime."""
    if not isinstance(text, str):
        raise SchemaError(f"timestamp must be a string, got {type(text).__name__}")
    normalized = text.strip()
    if normalized.endswith(("Z", "z")):
        normalized = normalized[:-1] + "+00:00"
    try:
        parsed = datetime.fromisoformat(normalized)
    except ValueError as exc:
        raise SchemaError(f"invalid RFC 3339 timestamp {text!r}") from exc
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def format_rfc3339(instant: datetime) -> str:
    """Render an aware datetime as RFC 3339 UTC with a Z suffix."""
    if instant.tzinfo is None:
        instant = instant.replace(tzinfo=timezone.utc)
    instant = instant.astimezone(timezone.utc)
    text = instant.isoformat()
    return text.replace("+00:00", "Z")


def utcnow() -> datetime:
    return datetime.now(timezone.utc)
