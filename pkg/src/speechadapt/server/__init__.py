"""Session server: event-sourced profile lifecycle plus the HTTP API."""

from .engine import ProfileState, SessionEngine, replay_events
from .store import Event, EventStore

__all__ = ["Event", "EventStore", "ProfileState", "SessionEngine", "replay_events"]
