"""Per-tick pipeline engine.

Each step: charge the stage timers on the virtual clock, call the backend,
grade and assemble the communication, latch or clear the alarm, and enqueue
the output for priority dispatch.  A budget overrun or backend failure
routes to a pre-formulated fallback alert built from the last known
criticality, so communication is never fully blocked.

The engine is a single logical event loop owning its state; backends may
run elsewhere but results are applied serially in step order.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .clock import Clock, VirtualClock
from .core import (
    Channel,
    CHANNEL_ORDER,
    Character,
    CommOutput,
    Criticality,
    Feasibility,
    HazardCategory,
    MessageTuple,
    RiskScore,
    TemplateTable,
    TimeSensitivity,
    ValidationError,
    alarm_for,
    assemble_output,
    band_risk,
    character_for,
    enum_from_label,
    recipients_for,
    tone_for,
)
from .perception import Backend, BackendError, HazardAssessment, Observation


@dataclass(frozen=True)
class TimerProfile:
    """Simulated stage costs in ticks (0.1 s each).

    Defaults follow the measured deployment profile: 2.5 s onboard
    (camera 1.0 s + saliency map 1.5 s), 9.5 s model round-trip, and
    negligible local communication time.  ``t_llm`` is the nominal backend
    cost for backends that do not consume clock time themselves;
    clock-advancing wrappers (fault injection, virtual transports) stack
    on top of it.
    """

    t_camera: int = 10
    t_heatmap: int = 15
    t_llm: int = 95
    t_comm: int = 0

    def __post_init__(self) -> None:
        for name in ("t_camera", "t_heatmap", "t_llm", "t_comm"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")


@dataclass(frozen=True)
class EngineConfig:
    """Engine and scoring knobs.

    ``t_max`` is the total latency budget in ticks (default 20 s); the
    effectiveness weights and fatigue trade-off live here so a whole run is
    described by one value.
    """

    t_max: int = 200
    weights: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    fatigue_lambda: float = 1.0
    timers: TimerProfile = field(default_factory=TimerProfile)
    suppression_window: int = 50

    def __post_init__(self) -> None:
        if self.t_max <= 0:
            raise ValidationError(f"t_max must be positive, got {self.t_max}")
        if self.fatigue_lambda <= 0:
            raise ValidationError(
                f"fatigue_lambda must be positive, got {self.fatigue_lambda}"
            )
        if self.suppression_window < 0:
            raise ValidationError("suppression_window must be >= 0")
        if len(self.weights) != 4 or any(w < 0 for w in self.weights):
            raise ValidationError("weights must be four non-negative reals")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValidationError(f"weights must sum to 1, got {sum(self.weights)}")


@dataclass(frozen=True)
class StageTimers:
    """Per-stage durations of one step, in ticks."""

    t_camera: int
    t_heatmap: int
    t_llm: int
    t_comm: int

    def __post_init__(self) -> None:
        for name in ("t_camera", "t_heatmap", "t_llm", "t_comm"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")

    @property
    def total(self) -> int:
        return compute_latency(self)


def compute_latency(timers: StageTimers) -> int:
    """Total step latency: the exact sum of the four stage durations."""
    return timers.t_camera + timers.t_heatmap + timers.t_llm + timers.t_comm


@dataclass(frozen=True)
class TraceRecord:
    """One step of the trajectory, as written to the trace log."""

    tick: int
    obs_id: str
    category: HazardCategory | None
    level: Criticality | None
    time_sensitivity: TimeSensitivity | None
    feasibility: Feasibility | None
    risk: float | None
    criticality: Criticality | None
    tone: float | None
    character: Character | None
    alarm: bool
    recipients: tuple[Channel, ...]
    t_total: int
    fallback: bool
    text: str | None

    def to_wire(self) -> dict:
        return {
            "tick": self.tick,
            "obs_id": self.obs_id,
            "category": self.category.value if self.category else None,
            "d": self.level.value if self.level else None,
            "tau": self.time_sensitivity.value if self.time_sensitivity else None,
            "phi": self.feasibility.value if self.feasibility else None,
            "rho": self.risk,
            "k": self.criticality.value if self.criticality else None,
            "gamma": self.tone,
            "chi": self.character.value if self.character else None,
            "alarm": self.alarm,
            "recipients": [c.value for c in self.recipients],
            "t_total": self.t_total,
            "fallback": self.fallback,
            "text": self.text,
        }

    @classmethod
    def from_wire(cls, doc: dict, where: str = "record") -> "TraceRecord":
        if not isinstance(doc, dict):
            raise ValidationError(f"{where}: not an object")
        required = {"tick", "obs_id", "rho", "k", "gamma", "chi", "alarm",
                    "recipients", "t_total", "fallback"}
        missing = required - doc.keys()
        if missing:
            raise ValidationError(f"{where}: missing fields {sorted(missing)}")

        def opt(key: str, enum_cls):
            value = doc.get(key)
            return None if value is None else enum_from_label(enum_cls, value, where)

        try:
            recipients = tuple(
                enum_from_label(Channel, c, where) for c in doc["recipients"]
            )
            return cls(
                tick=int(doc["tick"]),
                obs_id=str(doc["obs_id"]),
                category=opt("category", HazardCategory),
                level=opt("d", Criticality),
                time_sensitivity=opt("tau", TimeSensitivity),
                feasibility=opt("phi", Feasibility),
                risk=None if doc["rho"] is None else float(doc["rho"]),
                criticality=opt("k", Criticality),
                tone=None if doc["gamma"] is None else float(doc["gamma"]),
                character=opt("chi", Character),
                alarm=bool(doc["alarm"]),
                recipients=recipients,
                t_total=int(doc["t_total"]),
                fallback=bool(doc["fallback"]),
                text=doc.get("text"),
            )
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{where}: {exc}") from exc


def write_trace(path: str | Path, records: Iterable[TraceRecord]) -> None:
    """Append step records to a trace log, one JSON document per line."""
    with open(path, "a", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_wire(), sort_keys=True) + "\n")


def read_trace(path: str | Path) -> list[TraceRecord]:
    """Parse a trace log written by :func:`write_trace`."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{line_no}: not JSON: {exc}") from exc
            records.append(TraceRecord.from_wire(doc, where=f"{path}:{line_no}"))
    return records


class PendingQueue:
    """Pending communications ordered by (criticality desc, risk desc, FIFO)."""

    def __init__(self) -> None:
        self._heap: list[tuple[int, float, int, CommOutput]] = []
        self._seq = 0

    def push(self, output: CommOutput) -> None:
        key = (-output.criticality.rank, -output.risk.value, self._seq)
        heapq.heappush(self._heap, (*key, output))
        self._seq += 1

    def pop(self) -> Optional[CommOutput]:
        if not self._heap:
            return None
        return heapq.heappop(self._heap)[3]

    def snapshot(self) -> list[CommOutput]:
        """Queue contents in dispatch order, without consuming them."""
        return [entry[3] for entry in sorted(self._heap)]

    def __len__(self) -> int:
        return len(self._heap)


@dataclass
class StepResult:
    """Outcome of one engine step."""

    output: Optional[CommOutput]
    timers: StageTimers
    fallback_used: bool
    record: TraceRecord


# Pre-formulated fallback alerts: fixed text per criticality, plus a
# band-representative score so the output passes every policy check.
_FALLBACK_RISK = {
    Criticality.LOW: 2.0,
    Criticality.MEDIUM: 6.0,
    Criticality.HIGH: 9.0,
}

_FALLBACK_TEXT = {
    Criticality.LOW: (
        "Notice: a monitored situation nearby could not be re-checked in "
        "time; it previously appeared minor. The robot is re-assessing."
    ),
    Criticality.MEDIUM: (
        "Alert: a potential hazard nearby could not be fully assessed in "
        "time. Please check the immediate area; alarm activated."
    ),
    Criticality.HIGH: (
        "Urgent: assessment of a high-risk hazard nearby is delayed. Treat "
        "the area as hazardous and keep clear; alarm activated and "
        "responders have been notified."
    ),
}


def fallback_output(last_known: Criticality | None) -> CommOutput:
    """Conservative pre-formulated alert from the last known criticality.

    With no prior classification the alert grades Medium: enough to raise
    attention without maximal escalation.
    """
    criticality = last_known if last_known is not None else Criticality.MEDIUM
    risk = RiskScore(_FALLBACK_RISK[criticality])
    message = MessageTuple(
        text=_FALLBACK_TEXT[criticality],
        tone=tone_for(risk),
        character=character_for(criticality),
    )
    return CommOutput(
        message=message,
        recipients=recipients_for(criticality),
        alarm=alarm_for(criticality),
        criticality=criticality,
        risk=risk,
        category=None,
    )


class Engine:
    """The event-loop core: alarm latch, last-known criticality, pending
    queue, stage timing, and the budget-checked fallback path."""

    def __init__(
        self,
        config: EngineConfig | None = None,
        clock: Clock | None = None,
        templates: TemplateTable | None = None,
    ) -> None:
        self.config = config if config is not None else EngineConfig()
        self.clock = clock if clock is not None else VirtualClock()
        self.templates = templates
        self.alarm_latched = False
        self.last_known_criticality: Criticality | None = None
        self.queue = PendingQueue()
        self._step_index = 0

    def apply_fallback(self) -> CommOutput:
        """Build the fallback alert for the current state.

        Meant for the degraded path only: when the budget is exceeded or
        the backend failed.
        """
        return fallback_output(self.last_known_criticality)

    def enqueue(self, output: CommOutput) -> None:
        self.queue.push(output)

    def dequeue(self) -> Optional[CommOutput]:
        return self.queue.pop()

    def step(
        self,
        obs: Observation,
        backend: Backend,
        obs_id: str | None = None,
    ) -> StepResult:
        """Run one observation through the pipeline.

        Backend errors never escape: they are absorbed into the fallback
        path and recorded.  Every step yields either an output (enqueued
        for dispatch) or an explicit no-hazard record.
        """
        profile = self.config.timers
        if obs_id is None:
            obs_id = f"step-{self._step_index:05d}"
        self._step_index += 1

        start = self.clock.now
        self.clock.advance(profile.t_camera)
        self.clock.advance(profile.t_heatmap)

        llm_start = self.clock.now
        self.clock.advance(profile.t_llm)
        assessment: Optional[HazardAssessment] = None
        backend_failed = False
        try:
            assessment = backend.assess(obs)
        except BackendError:
            backend_failed = True
        t_llm = self.clock.now - llm_start

        output: Optional[CommOutput] = None
        fallback_used = False
        if backend_failed:
            # No information at all: dispatch the conservative alert.
            self.clock.advance(profile.t_comm)
            output = self.apply_fallback()
            fallback_used = True
        elif assessment is None:
            # Explicit no-hazard: clear the alarm, nothing to say.
            self.alarm_latched = False
        else:
            self.clock.advance(profile.t_comm)
            timers_so_far = StageTimers(
                profile.t_camera, profile.t_heatmap, t_llm, profile.t_comm
            )
            if timers_so_far.total > self.config.t_max:
                # The verdict arrived past the deadline; the pre-formulated
                # alert from the last known criticality goes out instead.
                output = self.apply_fallback()
                fallback_used = True
            else:
                output = assemble_output(
                    assessment.category, assessment.risk, obs.env,
                    table=self.templates,
                )
            self.last_known_criticality = band_risk(assessment.risk)

        timers = StageTimers(
            t_camera=profile.t_camera,
            t_heatmap=profile.t_heatmap,
            t_llm=t_llm,
            t_comm=profile.t_comm if output is not None else 0,
        )
        if output is not None:
            self.alarm_latched = output.alarm
            self.enqueue(output)

        record = self._record(
            obs_id, start, assessment if not fallback_used else None,
            output, timers, fallback_used,
        )
        return StepResult(
            output=output, timers=timers, fallback_used=fallback_used, record=record
        )

    def _record(
        self,
        obs_id: str,
        tick: int,
        assessment: Optional[HazardAssessment],
        output: Optional[CommOutput],
        timers: StageTimers,
        fallback_used: bool,
    ) -> TraceRecord:
        if output is None:
            return TraceRecord(
                tick=tick, obs_id=obs_id, category=None, level=None,
                time_sensitivity=None, feasibility=None, risk=None,
                criticality=None, tone=None, character=None, alarm=False,
                recipients=(), t_total=timers.total, fallback=False, text=None,
            )
        recipients = tuple(c for c in CHANNEL_ORDER if c in output.recipients)
        return TraceRecord(
            tick=tick,
            obs_id=obs_id,
            category=output.category,
            level=assessment.factors.criticality_level if assessment else None,
            time_sensitivity=assessment.factors.time_sensitivity if assessment else None,
            feasibility=assessment.factors.feasibility if assessment else None,
            risk=output.risk.value,
            criticality=output.criticality,
            tone=output.message.tone,
            character=output.message.character,
            alarm=output.alarm,
            recipients=recipients,
            t_total=timers.total,
            fallback=fallback_used,
            text=output.message.text,
        )
