"""Durable validation store: append-only JSONL event log with on-start replay
and an optional compacted snapshot for fast boot.

Events: {"type": "row_created", "row": {...}} and
        {"type": "vote_recorded", "row_id", "validator", "choice"}.
Replay is idempotent: re-applying an already-known event is a no-op.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

from .hitl import AGGREGATION_RULES, HitlPolicy, NO_MATCH, ValidationRow, enqueue_predictions, record_vote
from .model import DomainError


class CorruptLogError(RuntimeError):
    """Event log unreadable; carries the byte position of the bad record."""


class ValidationStore:
    """Single-writer store of validation rows backed by an event log."""

    def __init__(self, data_dir, rule_name: str = "majority"):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.data_dir / "events.jsonl"
        self.snapshot_path = self.data_dir / "snapshot.json"
        self.rule = AGGREGATION_RULES[rule_name]
        self.rule_name = rule_name
        self.rows: dict[str, ValidationRow] = {}
        self.verdicts: dict[str, str] = {}
        self._lock = threading.Lock()
        self._fh = None
        self._load()
        self._fh = open(self.log_path, "a", encoding="utf-8")

    # -- replay ---------------------------------------------------------------

    def _load(self) -> None:
        if self.snapshot_path.exists():
            with open(self.snapshot_path, encoding="utf-8") as fh:
                snap = json.load(fh)
            for rec in snap["rows"]:
                self._apply_row(rec)
        if self.log_path.exists():
            with open(self.log_path, "rb") as fh:
                pos = 0
                for raw in fh:
                    line = raw.decode("utf-8", errors="replace").strip()
                    if line:
                        try:
                            self.apply(json.loads(line), replay=True)
                        except (json.JSONDecodeError, KeyError) as exc:
                            raise CorruptLogError(
                                f"{self.log_path}: bad event at byte {pos}: {exc}") from exc
                    pos += len(raw)

    def _apply_row(self, rec: dict) -> None:
        row = ValidationRow(
            row_id=rec["row_id"],
            query=rec["query"],
            candidates=rec["candidates"],
            required_votes=rec.get("required_votes", 3),
            votes=[tuple(v) for v in rec.get("votes", [])],
            true_choice=rec.get("true_choice"),
            labeled=rec.get("labeled", False),
        )
        self.rows[row.row_id] = row
        if row.status == "complete":
            self.verdicts[row.row_id] = self.rule(row)

    def apply(self, event: dict, replay: bool = False) -> None:
        """Apply one event to in-memory state. Idempotent."""
        kind = event["type"]
        if kind == "row_created":
            rec = event["row"]
            if rec["row_id"] not in self.rows:
                self._apply_row(rec)
        elif kind == "vote_recorded":
            row = self.rows.get(event["row_id"])
            if row is None:
                if replay:
                    return
                raise DomainError(f"unknown row {event['row_id']}")
            vote = (event["validator"], event["choice"])
            if vote in row.votes:
                return
            record_vote(row, event["validator"], event["choice"])
            if row.status == "complete" and row.row_id not in self.verdicts:
                self.verdicts[row.row_id] = self.rule(row)
        else:
            raise DomainError(f"unknown event type {kind!r}")

    def _append(self, event: dict) -> None:
        self._fh.write(json.dumps(event, sort_keys=True) + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())

    # -- public API -----------------------------------------------------------

    def enqueue(self, predictions, policy: HitlPolicy, snapshots=None) -> list[ValidationRow]:
        with self._lock:
            rows = enqueue_predictions(
                predictions, policy, existing_keys=set(self.rows), snapshots=snapshots)
            for row in rows:
                event = {"type": "row_created", "row": row.to_dict()}
                self.apply(event)
                self._append(event)
            return rows

    def add_rows(self, rows: list[ValidationRow]) -> None:
        with self._lock:
            for row in rows:
                if row.row_id in self.rows:
                    continue
                event = {"type": "row_created", "row": row.to_dict()}
                self.apply(event)
                self._append(event)

    def vote(self, row_id: str, validator_id: str, choice: str) -> ValidationRow:
        with self._lock:
            row = self.rows.get(row_id)
            if row is None:
                raise KeyError(row_id)
            event = {"type": "vote_recorded", "row_id": row_id,
                     "validator": validator_id, "choice": choice}
            # validate before persisting so a rejected vote leaves no event
            record_vote(ValidationRow(**{**row.__dict__, "votes": list(row.votes)}),
                        validator_id, choice)
            self.apply(event)
            self._append(event)
            return self.rows[row_id]

    def next_pending(self, validator_id: str) -> ValidationRow | None:
        with self._lock:
            for row_id in sorted(self.rows):
                row = self.rows[row_id]
                if row.status == "pending" and all(v != validator_id for v, _ in row.votes):
                    return row
            return None

    def verdict(self, row_id: str) -> str | None:
        return self.verdicts.get(row_id)

    def pending_count(self) -> int:
        return sum(1 for r in self.rows.values() if r.status == "pending")

    def completed_rows(self) -> list[ValidationRow]:
        return [self.rows[r] for r in sorted(self.rows) if self.rows[r].status == "complete"]

    def snapshot(self) -> None:
        """Compact current state into the snapshot file and truncate the log."""
        with self._lock:
            tmp = self.snapshot_path.with_suffix(".tmp")
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump({"rows": [r.to_dict() for r in self.rows.values()]}, fh)
            os.replace(tmp, self.snapshot_path)
            self._fh.close()
            self._fh = open(self.log_path, "w", encoding="utf-8")

    def close(self) -> None:
        if self._fh and not self._fh.closed:
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._fh.close()
