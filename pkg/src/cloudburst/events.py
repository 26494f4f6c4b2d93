"""Append-only JSON-lines event log: the single source of truth.

Layout: one header line (schema-versioned, carries the scenario facts a
replay needs), then one canonical-JSON event per line in (at, seq) order,
then one footer line recording the event count so truncation is
detectable. Canonical form — sorted keys, no whitespace — makes equal
runs byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

SCHEMA = "cloudburst-log/1"

# event kinds
RECONCILE_REQUESTED = "ReconcileRequested"
INSTANCE_PROVISIONED = "InstanceProvisioned"
INSTANCE_RUNNING = "InstanceRunning"
INSTANCE_PREEMPTED = "InstancePreempted"
INSTANCE_DEPROVISIONED = "InstanceDeprovisioned"
PILOT_STARTED = "PilotStarted"
PILOT_DEAD = "PilotDead"
KEEPALIVE_SENT = "KeepaliveSent"
JOB_SUBMITTED = "JobSubmitted"
JOB_ASSIGNED = "JobAssigned"
JOB_PREEMPTED = "JobPreempted"
JOB_COMPLETED = "JobCompleted"
SPEND_ACCRUED = "SpendAccrued"
ALERT_FIRED = "AlertFired"
POLICY_TICK = "PolicyTick"
OPERATOR_COMMAND = "OperatorCommand"
CE_OUTAGE_BEGIN = "CEOutageBegin"
CE_OUTAGE_END = "CEOutageEnd"

KINDS = frozenset(
    {
        RECONCILE_REQUESTED,
        INSTANCE_PROVISIONED,
        INSTANCE_RUNNING,
        INSTANCE_PREEMPTED,
        INSTANCE_DEPROVISIONED,
        PILOT_STARTED,
        PILOT_DEAD,
        KEEPALIVE_SENT,
        JOB_SUBMITTED,
        JOB_ASSIGNED,
        JOB_PREEMPTED,
        JOB_COMPLETED,
        SPEND_ACCRUED,
        ALERT_FIRED,
        POLICY_TICK,
        OPERATOR_COMMAND,
        CE_OUTAGE_BEGIN,
        CE_OUTAGE_END,
    }
)


class IntegrityError(Exception):
    """The log is malformed, truncated, or out of order."""


def canonical_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


class EventLogWriter:
    """Serializes events to a file or text stream in canonical order.

    Usage: write_header once, append events in (at, seq) order, close.
    Ordering violations raise immediately — a log written cleanly is a
    log that reads cleanly. Given a path, the writer owns the file;
    given a stream, closing is the caller's business.
    """

    def __init__(self, dest):
        if hasattr(dest, "write"):
            self._fp = dest
            self._owns_fp = False
        else:
            self._fp = open(dest, "w", encoding="utf-8", newline="\n")
            self._owns_fp = True
        self._count = 0
        self._last: Optional[tuple[int, int]] = None
        self._header_written = False
        self._closed = False

    def write_header(self, header: dict):
        if self._header_written:
            raise ValueError("header already written")
        if header.get("schema") != SCHEMA:
            raise ValueError(f"header schema must be {SCHEMA!r}")
        self._fp.write(canonical_line(header))
        self._header_written = True

    def append(self, event: dict):
        if not self._header_written:
            raise ValueError("header must precede events")
        if self._closed:
            raise ValueError("log already closed")
        at, seq, kind = event.get("at"), event.get("seq"), event.get("kind")
        if not isinstance(at, int) or not isinstance(seq, int):
            raise ValueError(f"event needs integer at/seq: {event!r}")
        if kind not in KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        key = (at, seq)
        if self._last is not None and key <= self._last:
            raise ValueError(f"event order violation: {key} after {self._last}")
        self._last = key
        self._fp.write(canonical_line(event))
        self._count += 1

    def close(self):
        """Write the footer and, if the writer opened the file, close it."""
        if self._closed:
            return
        if not self._header_written:
            raise ValueError("cannot close a log with no header")
        self._fp.write(canonical_line({"closed": True, "events": self._count}))
        self._closed = True
        if self._owns_fp:
            self._fp.close()

    @property
    def count(self) -> int:
        return self._count


@dataclass
class EventLog:
    header: dict
    events: list[dict]

    @property
    def count(self) -> int:
        return len(self.events)


def _parse_line(raw: str, lineno: int) -> dict:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as e:
        raise IntegrityError(f"line {lineno}: not valid JSON ({e.msg})") from None
    if not isinstance(obj, dict):
        raise IntegrityError(f"line {lineno}: expected an object")
    return obj


def iter_event_log(fp) -> Iterator[dict]:
    """Yield the header then each event, verifying schema, ordering, and
    the closing footer. Raises IntegrityError on any defect, including a
    missing footer (a truncated log)."""
    lineno = 0
    header = None
    last = None
    count = 0
    closed = False
    for raw in fp:
        lineno += 1
        if closed:
            raise IntegrityError(f"line {lineno}: content after footer")
        if not raw.endswith("\n"):
            raise IntegrityError(f"line {lineno}: truncated (no newline)")
        obj = _parse_line(raw, lineno)
        if header is None:
            if obj.get("schema") != SCHEMA:
                raise IntegrityError(
                    f"line 1: unsupported or missing schema (want {SCHEMA!r})"
                )
            header = obj
            yield obj
            continue
        if obj.get("closed") is True:
            if obj.get("events") != count:
                raise IntegrityError(
                    f"footer event count {obj.get('events')} != {count} events read"
                )
            closed = True
            continue
        at, seq, kind = obj.get("at"), obj.get("seq"), obj.get("kind")
        if not isinstance(at, int) or not isinstance(seq, int) or kind not in KINDS:
            raise IntegrityError(f"line {lineno}: malformed event")
        if last is not None and (at, seq) <= last:
            raise IntegrityError(f"line {lineno}: order violation")
        last = (at, seq)
        count += 1
        yield obj
    if header is None:
        raise IntegrityError("empty log: no header")
    if not closed:
        raise IntegrityError("truncated log: footer missing")


def read_event_log(path) -> EventLog:
    """Load and validate a whole log file."""
    with open(path, "r", encoding="utf-8") as fp:
        it = iter_event_log(fp)
        header = next(it)
        events = list(it)
    return EventLog(header=header, events=events)
