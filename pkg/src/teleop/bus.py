"""In-process pub/sub bus with bounded, drop-oldest subscriptions.

Topics are fixed by a registry mapping each topic name to the one
payload kind it carries. Publishing checks the message against the
registry, assigns the topic's next sequence number (per topic, from 0)
and stamps the envelope with the wall clock. Subscribers each own a
bounded buffer; a slow subscriber loses the oldest envelopes and the
loss is counted, but publishers never block.

Taps see every locally published envelope synchronously, in sequence
order, and exist for bridge links that forward traffic to other buses.
Envelopes arriving from a bridge are injected with their original seq
and stamp and are not re-offered to taps, so a pair of bridged buses
cannot echo traffic back and forth.
"""

from __future__ import annotations

import hashlib
import threading
import time
from collections import deque
from typing import Callable, Deque, Dict, Iterator, List, Mapping, Optional

from .wire import (
    Envelope,
    KINDS,
    Message,
    canonical_dumps,
    encode_payload,
    kind_of,
    now_us,
)

BUFFER_CAPACITY = 64

DEFAULT_TOPICS: Mapping[str, str] = {
    "skeleton": "skeleton_frame",
    "skel_angles": "joint_angles",
    "commands": "joint_commands",
    "robot_state": "robot_state",
    "gait_events": "gait_event",
}


class UnknownTopic(KeyError):
    """Topic is not in the registry."""


class KindMismatch(TypeError):
    """Message kind does not match what the topic carries."""


class BusClosed(RuntimeError):
    """Operation on a bus that has been shut down."""


class TopicRegistry(Mapping[str, str]):
    """Immutable topic -> payload kind table, hashable for handshakes."""

    def __init__(self, topics: Mapping[str, str]):
        for topic, kind in topics.items():
            if not topic or not isinstance(topic, str):
                raise ValueError(f"bad topic name {topic!r}")
            if kind not in KINDS:
                raise ValueError(f"topic {topic!r} carries unknown kind {kind!r}")
        self._topics = dict(topics)

    def __getitem__(self, topic: str) -> str:
        try:
            return self._topics[topic]
        except KeyError:
            raise UnknownTopic(topic) from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._topics)

    def __len__(self) -> int:
        return len(self._topics)

    def kind_for(self, topic: str) -> str:
        return self[topic]

    def hash(self) -> str:
        """sha256 over the canonical serialization; equal tables, equal hash."""
        return hashlib.sha256(canonical_dumps(self._topics).encode()).hexdigest()

    @staticmethod
    def default() -> "TopicRegistry":
        return TopicRegistry(DEFAULT_TOPICS)


class Subscription:
    """One subscriber's buffered view of a topic."""

    def __init__(self, topic: str, capacity: int = BUFFER_CAPACITY):
        if capacity < 1:
            raise ValueError("subscription capacity must be >= 1")
        self.topic = topic
        self.capacity = capacity
        self.dropped = 0
        self._items: Deque[Envelope] = deque()
        self._cond = threading.Condition()
        self._closed = False

    def _put(self, envelope: Envelope) -> None:
        with self._cond:
            if self._closed:
                return
            if len(self._items) >= self.capacity:
                self._items.popleft()
                self.dropped += 1
            self._items.append(envelope)
            self._cond.notify()

    def get(self, timeout: Optional[float] = None) -> Optional[Envelope]:
        """Next envelope, oldest first; None on timeout or after close.

        timeout=None blocks until something arrives or the subscription
        closes; timeout=0 polls. Buffered envelopes still drain after
        close.
        """
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._cond:
            while not self._items:
                if self._closed:
                    return None
                if deadline is None:
                    self._cond.wait()
                else:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0:
                        return None
                    self._cond.wait(remaining)
            return self._items.popleft()

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    @property
    def closed(self) -> bool:
        return self._closed

    def __len__(self) -> int:
        with self._cond:
            return len(self._items)


class Bus:
    def __init__(self, registry: Optional[TopicRegistry] = None):
        self.registry = registry or TopicRegistry.default()
        self._lock = threading.RLock()
        self._next_seq: Dict[str, int] = {topic: 0 for topic in self.registry}
        self._subs: Dict[str, List[Subscription]] = {t: [] for t in self.registry}
        self._taps: List[Callable[[Envelope], None]] = []
        self._closed = False

    @property
    def closed(self) -> bool:
        return self._closed

    def publish(
        self, topic: str, message: Message, stamp_us: Optional[int] = None
    ) -> Envelope:
        """Wrap the message and deliver it; returns the sent envelope."""
        kind, payload = encode_payload(message)
        with self._lock:
            if self._closed:
                raise BusClosed("publish on a closed bus")
            expected = self.registry.kind_for(topic)
            if kind != expected:
                raise KindMismatch(
                    f"topic {topic!r} carries {expected!r}, got {kind!r}"
                )
            envelope = Envelope(
                topic=topic,
                seq=self._next_seq[topic],
                stamp_us=now_us() if stamp_us is None else stamp_us,
                kind=kind,
                payload=payload,
            )
            self._next_seq[topic] += 1
            subs = list(self._subs[topic])
            taps = list(self._taps)
            # Taps run under the lock so bridge links observe envelopes in
            # exactly the sequence order they were assigned.
            for sub in subs:
                sub._put(envelope)
            for tap in taps:
                tap(envelope)
        return envelope

    def _deliver_remote(self, envelope: Envelope) -> None:
        """Inject an envelope from a bridge, keeping its original numbering.

        Taps are skipped: bridged traffic must not bounce back through
        the link it arrived on.
        """
        with self._lock:
            if self._closed:
                return
            expected = self.registry.kind_for(envelope.topic)
            if envelope.kind != expected:
                raise KindMismatch(
                    f"topic {envelope.topic!r} carries {expected!r}, "
                    f"got {envelope.kind!r}"
                )
            for sub in list(self._subs[envelope.topic]):
                sub._put(envelope)

    def subscribe(self, topic: str, capacity: int = BUFFER_CAPACITY) -> Subscription:
        with self._lock:
            if self._closed:
                raise BusClosed("subscribe on a closed bus")
            self.registry.kind_for(topic)  # raises UnknownTopic
            sub = Subscription(topic, capacity)
            self._subs[topic].append(sub)
            return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            entries = self._subs.get(sub.topic, [])
            if sub in entries:
                entries.remove(sub)
        sub.close()

    def add_tap(self, tap: Callable[[Envelope], None]) -> None:
        with self._lock:
            if self._closed:
                raise BusClosed("tap on a closed bus")
            self._taps.append(tap)

    def remove_tap(self, tap: Callable[[Envelope], None]) -> None:
        with self._lock:
            if tap in self._taps:
                self._taps.remove(tap)

    def next_seq(self, topic: str) -> int:
        """The seq the next publish on this topic will get."""
        with self._lock:
            self.registry.kind_for(topic)
            return self._next_seq[topic]

    def close(self) -> None:
        with self._lock:
            if self._closed:
                return
            self._closed = True
            subs = [s for entries in self._subs.values() for s in entries]
            self._taps.clear()
        for sub in subs:
            sub.close()
