"""Adaptive forensic publisher.

Per interval and per container, the publisher either accumulates
training vectors (no model yet), publishes just the compact latent
record (interval judged stable), or publishes the latent record plus the
interval's raw forensics (drift). A ring buffer of recent raw intervals
stays available for fetch-on-request after a drift, and a conventional
mode that always ships full forensics exists for cost comparisons.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from vaeguard.errors import SinkUnavailable, UnknownContainer
from vaeguard.events import ForensicEvent
from vaeguard.sinks import Document, Sink, SpoolDirectory
from vaeguard.summarize import ActivityVector, IntervalKey, vectors_to_matrix
from vaeguard.thresholds import StabilityVerdict, ThresholdPolicy, assess
from vaeguard.vae import LatentRecord, TrainConfig, VaeStabilityDetector, save_model

logger = logging.getLogger(__name__)

DEFAULT_LATENT_INDEX = "stability-latent"
DEFAULT_FORENSICS_INDEX = "stability-forensics"


class PublishMode(enum.Enum):
    ACCUMULATING = "accumulating"
    LATENT_ONLY = "latent"
    LATENT_PLUS_FORENSICS = "latent_forensics"
    # conventional publisher used as the cost baseline; the adaptive
    # decision table never produces it
    FORENSICS_ONLY = "forensics"


@dataclass(frozen=True)
class PublishAction:
    key: IntervalKey
    mode: PublishMode
    latent: LatentRecord | None = None
    forensics: tuple[ForensicEvent, ...] | None = None
    verdict: StabilityVerdict | None = None

    def __post_init__(self):
        mode = self.mode
        if mode is PublishMode.LATENT_ONLY:
            assert self.verdict is not None and self.verdict.stable
            assert self.latent is not None and self.forensics is None
        elif mode is PublishMode.LATENT_PLUS_FORENSICS:
            assert self.verdict is not None and not self.verdict.stable
            assert self.latent is not None and self.forensics is not None
        elif mode is PublishMode.ACCUMULATING:
            assert self.latent is None and self.verdict is None
        elif mode is PublishMode.FORENSICS_ONLY:
            assert self.forensics is not None


class IntervalCache:
    """Per-container ring buffer of the most recent raw intervals."""

    def __init__(self, capacity: int = 4):
        if capacity < 1:
            raise ValueError("cache capacity must be >= 1")
        self.capacity = capacity
        self._buffers: dict[str, list[tuple[IntervalKey, tuple[ForensicEvent, ...], ActivityVector]]] = {}

    def push(
        self,
        key: IntervalKey,
        events: Sequence[ForensicEvent],
        vector: ActivityVector,
    ) -> None:
        buffer = self._buffers.setdefault(key.container_id, [])
        buffer.append((key, tuple(events), vector))
        if len(buffer) > self.capacity:
            del buffer[0]

    def fetch_prior_intervals(
        self, container_id: str, count: int
    ) -> list[tuple[IntervalKey, tuple[ForensicEvent, ...]]]:
        """Up to `count` most recent cached intervals, newest first."""
        if count < 1:
            raise ValueError("count must be >= 1")
        if container_id not in self._buffers:
            raise UnknownContainer(container_id)
        buffer = self._buffers[container_id]
        return [(key, events) for key, events, _ in reversed(buffer[-count:])]

    def size(self, container_id: str) -> int:
        return len(self._buffers.get(container_id, ()))


def fetch_prior_intervals(cache: IntervalCache, container_id: str, count: int):
    return cache.fetch_prior_intervals(container_id, count)


class TrainingAccumulator:
    """Collects activity vectors per container until the training target."""

    def __init__(self, target: int):
        if target < 1:
            raise ValueError("accumulation target must be >= 1")
        self.target = target
        self._vectors: dict[str, list[ActivityVector]] = {}
        self._sealed: set[str] = set()

    def add(self, vector: ActivityVector) -> bool:
        """Append one vector; True exactly when the target is reached."""
        container = vector.key.container_id
        if container in self._sealed:
            raise RuntimeError(f"accumulator for {container!r} is sealed")
        bucket = self._vectors.setdefault(container, [])
        bucket.append(vector)
        return len(bucket) == self.target

    def vectors(self, container_id: str) -> list[ActivityVector]:
        return list(self._vectors.get(container_id, ()))

    def seal(self, container_id: str) -> None:
        self._sealed.add(container_id)

    def count(self, container_id: str) -> int:
        return len(self._vectors.get(container_id, ()))


# -- serialization ----------------------------------------------------------


def _round8(value: float) -> float:
    """8 significant digits: plenty for published monitoring records and
    roughly half the wire size of full float64 repr."""
    return float(f"{value:.8g}")


def _event_row(event: ForensicEvent) -> list:
    return [event.timestamp, event.syscall, event.pid, event.result, event.arg_bytes]


def serialize_action(action: PublishAction) -> bytes:
    """One newline-terminated record per action; deterministic bytes."""
    doc: dict = {
        "kind": action.mode.value,
        "container": action.key.container_id,
        "interval": action.key.interval_index,
        "interval_len": action.key.length,
    }
    if action.latent is not None:
        doc["latent"] = {
            "mu": [_round8(v) for v in action.latent.mu],
            "logvar": [_round8(v) for v in action.latent.logvar],
            "recon_error": _round8(action.latent.recon_error),
        }
    if action.verdict is not None:
        doc["verdict"] = {
            "threshold": _round8(action.verdict.threshold),
            "stable": action.verdict.stable,
        }
    if action.forensics is not None:
        doc["events"] = [_event_row(event) for event in action.forensics]
    return (json.dumps(doc, separators=(",", ":")) + "\n").encode("utf-8")


def parse_action(line: bytes) -> PublishAction:
    doc = json.loads(line.decode("utf-8"))
    key = IntervalKey(doc["container"], doc["interval"], doc["interval_len"])
    latent = None
    if "latent" in doc:
        latent = LatentRecord(
            key=key,
            mu=np.array(doc["latent"]["mu"], dtype=np.float64),
            logvar=np.array(doc["latent"]["logvar"], dtype=np.float64),
            recon_error=doc["latent"]["recon_error"],
        )
    verdict = None
    if "verdict" in doc:
        verdict = StabilityVerdict(
            key=key,
            recon_error=latent.recon_error if latent else float("nan"),
            threshold=doc["verdict"]["threshold"],
            stable=doc["verdict"]["stable"],
            latent=latent,
        )
    forensics = None
    if "events" in doc:
        forensics = tuple(
            ForensicEvent(row[0], key.container_id, row[1], row[2], row[3], row[4])
            for row in doc["events"]
        )
    return PublishAction(
        key=key,
        mode=PublishMode(doc["kind"]),
        latent=latent,
        forensics=forensics,
        verdict=verdict,
    )


def action_to_documents(
    action: PublishAction,
    latent_index: str = DEFAULT_LATENT_INDEX,
    forensics_index: str = DEFAULT_FORENSICS_INDEX,
) -> list[Document]:
    """Bulk documents for an action: one status/latent doc, then one doc
    per raw event when forensics ship."""
    base = {
        "container": action.key.container_id,
        "interval": action.key.interval_index,
        "interval_start": action.key.start,
    }
    documents: list[Document] = []
    head = dict(base)
    head["kind"] = action.mode.value
    if action.latent is not None:
        head["mu"] = [_round8(v) for v in action.latent.mu]
        head["logvar"] = [_round8(v) for v in action.latent.logvar]
        head["recon_error"] = _round8(action.latent.recon_error)
    if action.verdict is not None:
        head["threshold"] = _round8(action.verdict.threshold)
        head["stable"] = action.verdict.stable
    documents.append((latent_index, head))
    if action.forensics is not None:
        for event in action.forensics:
            documents.append(
                (
                    forensics_index,
                    {
                        **base,
                        "t": event.timestamp,
                        "syscall": event.syscall,
                        "pid": event.pid,
                        "ret": event.result,
                        "bytes": event.arg_bytes,
                    },
                )
            )
    return documents


def emit(
    action: PublishAction,
    sink: Sink,
    spool: SpoolDirectory | None = None,
    latent_index: str = DEFAULT_LATENT_INDEX,
    forensics_index: str = DEFAULT_FORENSICS_INDEX,
) -> int:
    """Publish one action; returns exact bytes written to the sink.

    If the sink is unavailable the serialized action is spooled (when a
    spool is configured) and the failure still propagates so callers see
    the outage.
    """
    line = serialize_action(action)
    documents = action_to_documents(action, latent_index, forensics_index)
    try:
        return sink.publish(line, documents)
    except SinkUnavailable:
        if spool is not None:
            spool.store(line)
            logger.warning(
                "sink unavailable; spooled %s interval %d",
                action.key.container_id,
                action.key.interval_index,
            )
        raise


def replay_spool(
    spool: SpoolDirectory,
    sink: Sink,
    latent_index: str = DEFAULT_LATENT_INDEX,
    forensics_index: str = DEFAULT_FORENSICS_INDEX,
) -> int:
    return spool.replay(
        sink,
        lambda line: action_to_documents(parse_action(line), latent_index, forensics_index),
    )


# -- the adaptive publisher --------------------------------------------------


class AdaptivePublisher:
    """Stateful per-container publish decisions over an interval stream.

    Containers without a model accumulate vectors; the first interval
    that reaches the accumulation target triggers exactly one training
    run, after which intervals are scored and published adaptively.
    """

    def __init__(
        self,
        train_config: TrainConfig | None = None,
        threshold_k: float = 3.0,
        cache_capacity: int = 4,
        model_dir: Path | str | None = None,
        detector_factory: Callable[[], VaeStabilityDetector] | None = None,
        policy_override: ThresholdPolicy | None = None,
    ):
        self.train_config = train_config or TrainConfig()
        self.threshold_k = threshold_k
        self.cache = IntervalCache(cache_capacity)
        self.accumulator = TrainingAccumulator(self.train_config.accumulation_target)
        self.model_dir = Path(model_dir) if model_dir is not None else None
        self.policy_override = policy_override
        self.models: dict[str, VaeStabilityDetector] = {}
        self.trainings_completed: dict[str, int] = {}
        self._detector_factory = detector_factory or self._default_factory

    def _default_factory(self) -> VaeStabilityDetector:
        cfg = self.train_config
        return VaeStabilityDetector(
            learning_rate=cfg.learning_rate,
            beta1=cfg.beta1,
            beta2=cfg.beta2,
            epsilon=cfg.epsilon,
            epochs=cfg.epochs,
            batch_size=cfg.batch_size,
            kl_weight=cfg.kl_weight,
            accumulation_target=cfg.accumulation_target,
            threshold_k=self.threshold_k,
            seed=cfg.seed,
        )

    def install_model(self, container_id: str, detector: VaeStabilityDetector) -> None:
        """Register a pre-trained detector (e.g. loaded from a bundle)."""
        self.models[container_id] = detector

    def _policy_for(self, detector: VaeStabilityDetector) -> ThresholdPolicy:
        return self.policy_override or detector.threshold_policy_

    def _train_container(self, container_id: str) -> None:
        vectors = self.accumulator.vectors(container_id)
        detector = self._detector_factory()
        detector.container_id = container_id
        detector.fit(vectors_to_matrix(vectors))
        self.accumulator.seal(container_id)
        self.models[container_id] = detector
        self.trainings_completed[container_id] = (
            self.trainings_completed.get(container_id, 0) + 1
        )
        if self.model_dir is not None:
            self.model_dir.mkdir(parents=True, exist_ok=True)
            save_model(detector, self.model_dir / f"{container_id}.model.json")
        logger.info(
            "trained model for %s on %d intervals (threshold %.6g)",
            container_id,
            len(vectors),
            detector.threshold_,
        )

    def process_interval(
        self,
        key: IntervalKey,
        events: Sequence[ForensicEvent],
        vector: ActivityVector,
    ) -> PublishAction:
        """Decide what to publish for one summarized interval."""
        self.cache.push(key, events, vector)
        container = key.container_id
        detector = self.models.get(container)
        if detector is None:
            if self.accumulator.add(vector):
                self._train_container(container)
            return PublishAction(key=key, mode=PublishMode.ACCUMULATING)

        latent = detector.score_vector(vector)
        verdict = assess(latent, self._policy_for(detector))
        if verdict.stable:
            return PublishAction(
                key=key, mode=PublishMode.LATENT_ONLY, latent=latent, verdict=verdict
            )
        return PublishAction(
            key=key,
            mode=PublishMode.LATENT_PLUS_FORENSICS,
            latent=latent,
            forensics=tuple(events),
            verdict=verdict,
        )


class StandardPublisher:
    """Conventional baseline: cache the interval, ship all forensics."""

    def __init__(self, cache_capacity: int = 4):
        self.cache = IntervalCache(cache_capacity)

    def process_interval(
        self,
        key: IntervalKey,
        events: Sequence[ForensicEvent],
        vector: ActivityVector,
    ) -> PublishAction:
        self.cache.push(key, events, vector)
        return PublishAction(
            key=key, mode=PublishMode.FORENSICS_ONLY, forensics=tuple(events)
        )
