"""Injectable time and id sources so replays are deterministic."""

from __future__ import annotations

import random
import uuid
from datetime import datetime, timedelta, timezone


class Clock:
    """Wall-clock time, ISO 8601 in UTC."""

    def now(self) -> datetime:
        return datetime.now(timezone.utc)

    def stamp(self) -> str:
        return self.now().isoformat()


class TickingClock(Clock):
    """Starts at a fixed instant and advances one second per reading."""

    def __init__(self, start: str = "2026-01-01T00:00:00+00:00"):
        self._current = datetime.fromisoformat(start)

    def now(self) -> datetime:
        value = self._current
        self._current = value + timedelta(seconds=1)
        return value


class IdSource:
    """Random UUIDs."""

    def uuid(self) -> str:
        return str(uuid.uuid4())


class SeededIdSource(IdSource):
    """Deterministic UUID stream for replayable sessions and tests."""

    def __init__(self, seed: int = 0):
        self._rng = random.Random(seed)

    def uuid(self) -> str:
        return str(uuid.UUID(int=self._rng.getrandbits(128), version=4))
