"""Append-only JSON-lines event log with periodic state snapshots.

Layout under the store root: ``<profile_id>/events.jsonl`` plus
``<profile_id>/snapshot-<seq>.json``. Events are immutable once appended and
their sequence numbers must be contiguous from 1; anything else is a corrupt
log.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import CorruptLog

SNAPSHOT_EVERY = 100


@dataclass(frozen=True)
class Event:
    seq: int
    kind: str
    timestamp: float
    payload: dict

    def to_line(self) -> str:
        return json.dumps(
            {
                "seq": self.seq,
                "kind": self.kind,
                "timestamp": self.timestamp,
                "payload": self.payload,
            },
            separators=(",", ":"),
            sort_keys=True,
        )

    @classmethod
    def from_line(cls, line: str) -> "Event":
        try:
            raw = json.loads(line)
            return cls(
                seq=int(raw["seq"]),
                kind=str(raw["kind"]),
                timestamp=float(raw["timestamp"]),
                payload=raw["payload"],
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise CorruptLog(f"unreadable event line: {exc}") from None


class EventStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _dir(self, profile_id: str) -> Path:
        return self.root / profile_id

    def append(self, profile_id: str, event: Event) -> None:
        directory = self._dir(profile_id)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / "events.jsonl", "a", encoding="utf-8") as fh:
            fh.write(event.to_line() + "\n")

    def read_events(self, profile_id: str, after_seq: int = 0) -> list[Event]:
        path = self._dir(profile_id) / "events.jsonl"
        if not path.exists():
            raise CorruptLog(f"no event log for profile {profile_id}")
        events = []
        expected = None
        for line in path.read_text(encoding="utf-8").splitlines():
            event = Event.from_line(line)
            if expected is not None and event.seq != expected:
                raise CorruptLog(f"sequence gap: expected {expected}, got {event.seq}")
            if expected is None and event.seq != 1:
                raise CorruptLog(f"log must start at seq 1, got {event.seq}")
            expected = event.seq + 1
            if event.seq > after_seq:
                events.append(event)
        return events

    def write_snapshot(self, profile_id: str, seq: int, state: dict) -> None:
        path = self._dir(profile_id) / f"snapshot-{seq:08d}.json"
        path.write_text(json.dumps(state, sort_keys=True), encoding="utf-8")

    def latest_snapshot(self, profile_id: str) -> tuple[int, dict] | None:
        directory = self._dir(profile_id)
        if not directory.exists():
            return None
        snapshots = sorted(directory.glob("snapshot-*.json"))
        if not snapshots:
            return None
        path = snapshots[-1]
        try:
            seq = int(path.stem.split("-")[1])
            return seq, json.loads(path.read_text(encoding="utf-8"))
        except (ValueError, IndexError) as exc:
            raise CorruptLog(f"unreadable snapshot {path.name}: {exc}") from None

    def profile_ids(self) -> list[str]:
        return sorted(
            p.name for p in self.root.iterdir() if (p / "events.jsonl").exists()
        )
