"""Event-sourced live trial sessions.

A session is a design + trial configuration plus an append-only event log;
replaying the log through a fresh TrialEngine reproduces the state exactly,
and every logged decision is re-derived (and checked) from the pure rules on
replay. Persistence is a JSON-lines file, one event per line, so a restarted
service recovers every session by replay.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any

from .engine import CohortOutcome, TrialEngine
from .errors import ComputationError, ConflictError, ParameterError
from .types import DesignSpec


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class SessionEvent:
    seq: int
    ts: str
    type: str  # created | cohort
    payload: dict[str, Any]

    def to_dict(self, session_id: str) -> dict[str, Any]:
        return {"session": session_id, "seq": self.seq, "ts": self.ts, "type": self.type, "payload": self.payload}


class TrialSession:
    """One live dose-finding trial driven over HTTP."""

    def __init__(
        self,
        session_id: str,
        spec: DesignSpec,
        num_doses: int,
        sample_size: int,
        cohort_size: int,
        start_dose: int = 0,
    ):
        self.id = session_id
        self.spec = spec
        self.num_doses = num_doses
        self.sample_size = sample_size
        self.cohort_size = cohort_size
        self.start_dose = start_dose
        self.engine = TrialEngine(spec, num_doses, sample_size, start_dose)
        self.events: list[SessionEvent] = []
        self.lock = threading.Lock()

    @classmethod
    def create(cls, spec: DesignSpec, num_doses: int, sample_size: int, cohort_size: int, start_dose: int = 0) -> "TrialSession":
        session = cls(uuid.uuid4().hex, spec, num_doses, sample_size, cohort_size, start_dose)
        session.events.append(
            SessionEvent(0, _now(), "created", {
                "design": spec.to_dict(),
                "num_doses": num_doses,
                "sample_size": sample_size,
                "cohort_size": cohort_size,
                "start_dose": start_dose + 1,
            })
        )
        return session

    @property
    def seq(self) -> int:
        return len(self.events)

    def apply_cohort(self, dlt_count: int, cohort_size: int | None = None, expected_seq: int | None = None) -> CohortOutcome:
        size = cohort_size if cohort_size is not None else self.cohort_size
        if expected_seq is not None and expected_seq != self.seq:
            raise ConflictError(f"session at seq {self.seq}, post expected {expected_seq}")
        outcome = self.engine.apply(dlt_count, size)
        self.events.append(
            SessionEvent(self.seq, _now(), "cohort", {
                "dlt_count": dlt_count,
                "cohort_size": size,
                "outcome": outcome.to_dict(),
            })
        )
        return outcome

    def whatif(self, dlt_count: int, cohort_size: int | None = None) -> CohortOutcome:
        size = cohort_size if cohort_size is not None else self.cohort_size
        return self.engine.preview(dlt_count, size)

    def state_dict(self) -> dict[str, Any]:
        state = self.engine.state_dict()
        state.update({
            "id": self.id,
            "design": self.spec.to_dict(),
            "cohort_size": self.cohort_size,
            "seq": self.seq,
            "events": [e.to_dict(self.id) for e in self.events],
        })
        return state

    @classmethod
    def replay(cls, session_id: str, events: list[SessionEvent]) -> "TrialSession":
        """Rebuild a session from its log, re-deriving and checking each decision."""
        if not events or events[0].type != "created":
            raise ComputationError(f"session {session_id}: log must start with a 'created' event")
        head = events[0].payload
        spec = DesignSpec.from_dict(head["design"])
        session = cls(
            session_id, spec, int(head["num_doses"]), int(head["sample_size"]),
            int(head["cohort_size"]), int(head.get("start_dose", 1)) - 1,
        )
        session.events.append(events[0])
        for event in events[1:]:
            if event.type != "cohort":
                raise ComputationError(f"session {session_id}: unknown event type {event.type!r}")
            payload = event.payload
            outcome = session.engine.apply(int(payload["dlt_count"]), int(payload["cohort_size"]))
            logged = payload.get("outcome", {})
            if logged and logged.get("decision") != outcome.decision.letter:
                raise ComputationError(
                    f"session {session_id} seq {event.seq}: logged decision "
                    f"{logged.get('decision')!r} != replayed {outcome.decision.letter!r}"
                )
            session.events.append(event)
        return session


class SessionStore:
    """In-memory session registry with optional JSON-lines persistence."""

    def __init__(self, path: str | None = None):
        self.path = path
        self.sessions: dict[str, TrialSession] = {}
        self._io_lock = threading.Lock()
        if path:
            self._load()

    def _load(self):
        try:
            fh = open(self.path, "r", encoding="utf-8")
        except FileNotFoundError:
            return
        logs: dict[str, list[SessionEvent]] = {}
        deleted: set[str] = set()
        with fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                raw = json.loads(line)
                sid = raw["session"]
                if raw["type"] == "deleted":
                    deleted.add(sid)
                    logs.pop(sid, None)
                    continue
                deleted.discard(sid)
                logs.setdefault(sid, []).append(
                    SessionEvent(int(raw["seq"]), raw["ts"], raw["type"], raw["payload"])
                )
        for sid, events in logs.items():
            if sid not in deleted:
                self.sessions[sid] = TrialSession.replay(sid, events)

    def _append(self, record: dict[str, Any]):
        if not self.path:
            return
        with self._io_lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, separators=(",", ":")) + "\n")

    def create(self, spec: DesignSpec, num_doses: int, sample_size: int, cohort_size: int, start_dose: int = 0) -> TrialSession:
        session = TrialSession.create(spec, num_doses, sample_size, cohort_size, start_dose)
        self.sessions[session.id] = session
        self._append(session.events[0].to_dict(session.id))
        return session

    def get(self, session_id: str) -> TrialSession:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise ParameterError(f"unknown session {session_id!r}") from None

    def apply_cohort(self, session_id: str, dlt_count: int, cohort_size: int | None = None, expected_seq: int | None = None) -> CohortOutcome:
        session = self.get(session_id)
        with session.lock:  # one writer per session
            outcome = session.apply_cohort(dlt_count, cohort_size, expected_seq)
            self._append(session.events[-1].to_dict(session_id))
        return outcome

    def delete(self, session_id: str):
        session = self.get(session_id)
        with session.lock:
            del self.sessions[session_id]
            self._append({"session": session_id, "seq": session.seq, "ts": _now(), "type": "deleted", "payload": {}})
