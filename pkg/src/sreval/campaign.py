"""Annotation campaign state: pair assignment, image refs, durable event log.

The event log is an append-only JSONL file, one choice per line, flushed
and fsynced before the caller is acknowledged. Restarting a campaign
replays the log; the in-memory state (session cursors, answered sets) is
a pure function of the log, so a crash after flush loses nothing and a
retry of an acknowledged submission is rejected as a duplicate.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .image import image_size, load_image, png_bytes
from .study import ChoiceEvent, PairRecord, generate_pairs, pairs_by_id

_IMAGE_SUFFIXES = (".png", ".pgm")


class DuplicateChoiceError(ValueError):
    """The (annotator, pair) combination already has a recorded choice."""


class OutOfOrderError(ValueError):
    """Submission does not match the pair at the session cursor."""


@dataclass(frozen=True)
class CampaignConfig:
    images: tuple[str, ...]
    methods: dict[str, str]  # method id -> directory of that method's results
    seed: int
    threshold: float = 0.70

    @classmethod
    def from_json(cls, path) -> "CampaignConfig":
        raw = json.loads(Path(path).read_text())
        return cls(
            images=tuple(raw["images"]),
            methods=dict(raw["methods"]),
            seed=int(raw["seed"]),
            threshold=float(raw.get("threshold", 0.70)),
        )

    def to_json_dict(self) -> dict:
        return {
            "images": list(self.images),
            "methods": dict(self.methods),
            "seed": self.seed,
            "threshold": self.threshold,
        }


def find_image(directory, stem: str) -> Path:
    """The unique image file in `directory` whose stem matches."""
    directory = Path(directory)
    hits = [
        p
        for suffix in _IMAGE_SUFFIXES
        for p in directory.glob(f"{stem}{suffix}")
        if p.is_file()
    ]
    if not hits:
        raise FileNotFoundError(f"no image for stem {stem!r} in {directory}")
    if len(hits) > 1:
        raise ValueError(f"stem collision for {stem!r} in {directory}: {hits}")
    return hits[0]


class EventLog:
    """Append-only JSONL of choice events with at-most-once enforcement."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._seen: set[tuple[str, str]] = set()
        self.events: list[ChoiceEvent] = []
        if self.path.exists():
            self._replay()

    def _replay(self) -> None:
        with self.path.open() as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    raw = json.loads(line)
                    event = ChoiceEvent(
                        annotator=raw["annotator"],
                        pair_id=raw["pair"],
                        choice=raw["choice"],
                        timestamp=float(raw.get("ts", 0.0)),
                    )
                except (KeyError, ValueError, json.JSONDecodeError) as exc:
                    raise ValueError(f"{self.path}: line {lineno}: {exc}") from exc
                key = (event.annotator, event.pair_id)
                if key in self._seen:
                    raise ValueError(
                        f"{self.path}: line {lineno}: duplicate choice for {key}"
                    )
                self._seen.add(key)
                self.events.append(event)

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._seen

    def append(self, event: ChoiceEvent) -> None:
        """Durably record one event; flush + fsync before returning."""
        key = (event.annotator, event.pair_id)
        with self._lock:
            if key in self._seen:
                raise DuplicateChoiceError(f"choice already recorded for {key}")
            line = json.dumps(
                {
                    "annotator": event.annotator,
                    "pair": event.pair_id,
                    "choice": event.choice,
                    "ts": event.timestamp,
                },
                sort_keys=True,
            )
            with self.path.open("a") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._seen.add(key)
            self.events.append(event)


@dataclass
class Session:
    """One annotator's randomized walk through the campaign's pairs."""

    session_id: str
    annotator: str
    order: list[str]
    cursor: int = 0
    created_at: float = field(default_factory=time.time)

    @property
    def done(self) -> bool:
        return self.cursor >= len(self.order)

    def current_pair(self) -> str | None:
        return None if self.done else self.order[self.cursor]


class Campaign:
    """Pairs, opaque image refs and sessions for one labeling campaign."""

    def __init__(self, config: CampaignConfig, log_path, check_dimensions: bool = True):
        self.config = config
        self.pairs: list[PairRecord] = generate_pairs(
            list(config.images), sorted(config.methods), config.seed
        )
        self.pair_index = pairs_by_id(self.pairs)
        self.log = EventLog(log_path)
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

        # Opaque refs hide method identity from everything client-facing.
        self._ref_to_path: dict[str, Path] = {}
        self._ref_of: dict[tuple[str, str], str] = {}
        for image in config.images:
            for method, directory in config.methods.items():
                path = find_image(directory, image)
                ref = self._make_ref(image, method)
                self._ref_to_path[ref] = path
                self._ref_of[(image, method)] = ref
        if check_dimensions:
            self._check_pair_dimensions()
        for event in self.log.events:
            self._apply_event(event)

    def _make_ref(self, image: str, method: str) -> str:
        digest = hashlib.sha256(
            f"{self.config.seed}:{image}:{method}".encode()
        ).hexdigest()
        return digest[:16]

    def _check_pair_dimensions(self) -> None:
        sizes: dict[str, tuple[int, int]] = {}
        for (image, _method), ref in self._ref_of.items():
            size = image_size(self._ref_to_path[ref])
            if image in sizes and sizes[image] != size:
                raise ValueError(
                    f"image {image!r}: result dimensions differ across methods "
                    f"({sizes[image]} vs {size}); pairs must match"
                )
            sizes.setdefault(image, size)

    def _apply_event(self, event: ChoiceEvent) -> None:
        session = self._session_for(event.annotator)
        if session.current_pair() != event.pair_id:
            raise ValueError(
                f"event log out of order for {event.annotator}: expected "
                f"{session.current_pair()}, got {event.pair_id}"
            )
        session.cursor += 1

    def _session_for(self, annotator: str) -> Session:
        session = self._sessions.get(annotator)
        if session is None:
            rng = random.Random(f"session:{self.config.seed}:{annotator}")
            order = [p.pair_id for p in self.pairs]
            rng.shuffle(order)
            sid = hashlib.sha256(
                f"sid:{self.config.seed}:{annotator}".encode()
            ).hexdigest()[:16]
            session = Session(session_id=sid, annotator=annotator, order=order)
            self._sessions[annotator] = session
        return session

    # -- service-facing operations ------------------------------------

    def start_session(self, annotator: str) -> Session:
        """Idempotent: reconnecting resumes at the first unanswered pair."""
        if not annotator:
            raise ValueError("annotator id must be non-empty")
        with self._lock:
            return self._session_for(annotator)

    def session_by_id(self, session_id: str) -> Session:
        with self._lock:
            for session in self._sessions.values():
                if session.session_id == session_id:
                    return session
        raise KeyError(f"unknown session {session_id}")

    def next_pair(self, session: Session) -> dict | None:
        """Payload for the pair at the cursor; None when the session is done.

        The payload carries opaque image refs only, never method ids.
        """
        pair_id = session.current_pair()
        if pair_id is None:
            return None
        record = self.pair_index[pair_id]
        return {
            "pair_id": pair_id,
            "left": self._ref_of[(record.image_id, record.method_left)],
            "right": self._ref_of[(record.image_id, record.method_right)],
            "index": session.cursor,
            "total": len(session.order),
        }

    def submit_choice(
        self, session: Session, pair_id: str, choice: str, timestamp: float | None = None
    ) -> int:
        """Record a choice for the cursor pair; returns the new cursor.

        The event hits disk before the cursor moves, so an ack implies
        durability and a crash between flush and ack surfaces as a
        duplicate on retry.
        """
        with self._lock:
            current = session.current_pair()
            if (session.annotator, pair_id) in self.log:
                raise DuplicateChoiceError(
                    f"pair {pair_id} already answered by {session.annotator}"
                )
            if current != pair_id:
                raise OutOfOrderError(
                    f"expected choice for pair {current}, got {pair_id}"
                )
            event = ChoiceEvent(
                annotator=session.annotator,
                pair_id=pair_id,
                choice=choice,
                timestamp=time.time() if timestamp is None else timestamp,
            )
            self.log.append(event)
            session.cursor += 1
            return session.cursor

    def serve_image(self, ref: str) -> bytes:
        """PNG bytes for an issued ref; unknown refs raise KeyError."""
        path = self._ref_to_path.get(ref)
        if path is None:
            raise KeyError(f"unknown image ref {ref}")
        if path.suffix.lower() == ".png":
            return path.read_bytes()
        return png_bytes(load_image(path))

    def progress(self) -> dict:
        with self._lock:
            return {
                "total_pairs": len(self.pairs),
                "total_events": len(self.log.events),
                "annotators": {
                    s.annotator: {"answered": s.cursor, "total": len(s.order)}
                    for s in self._sessions.values()
                },
            }
