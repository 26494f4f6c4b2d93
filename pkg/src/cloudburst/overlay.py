"""Overlay workload management: compute element, pilots, jobs.

The compute element admits jobs from authorized communities into a FIFO
queue. Each cloud instance runs one pilot; a pilot registers with the CE
(opening a NAT-tracked connection home), then alternates Idle/Busy as
jobs are matched to it. Keepalives refresh the NAT mapping — a keepalive
interval at or above the NAT idle timeout means the mapping always
expires and the pilot dies, taking its job with it. Preempted or dropped
jobs lose progress and re-queue at the tail; they are never lost.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

DEFAULT_PILOT_START_LATENCY_S = 30
DEFAULT_KEEPALIVE_INTERVAL_S = 300


class PilotState(enum.Enum):
    STARTING = "starting"
    IDLE = "idle"
    BUSY = "busy"
    DEAD = "dead"


class JobState(enum.Enum):
    QUEUED = "queued"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"


class AdmitResult(enum.Enum):
    ADMITTED = "admitted"
    REJECTED = "rejected"
    ERROR = "error"  # CE unreachable: distinct from a policy rejection


@dataclass
class Pilot:
    id: str
    seq: int
    instance_id: str
    group: str
    keepalive_interval_s: int
    state: PilotState = PilotState.STARTING
    registered_at: Optional[int] = None
    last_traffic_at: Optional[int] = None
    drop_at: int = -1  # analytic NAT-expiry time; -1 = never
    current_job: Optional[str] = None

    def register(self, now: int, drop_at: int):
        if self.state is not PilotState.STARTING:
            raise ValueError(f"pilot {self.id}: register from {self.state.value}")
        self.state = PilotState.IDLE
        self.registered_at = now
        self.last_traffic_at = now
        self.drop_at = drop_at

    def die(self, now: int):
        if self.state is PilotState.DEAD:
            return
        self.state = PilotState.DEAD
        self.current_job = None


@dataclass
class Job:
    id: str
    seq: int
    community: str
    required_gpu_seconds: int
    submitted_at: int
    state: JobState = JobState.QUEUED
    completed_gpu_seconds: int = 0
    preemption_count: int = 0
    pilot_id: Optional[str] = None
    run_started_at: Optional[int] = None
    finished_at: Optional[int] = None

    def __post_init__(self):
        if self.required_gpu_seconds < 0:
            raise ValueError("required_gpu_seconds must be >= 0")


class ComputeElement:
    """FIFO job gateway restricted to authorized communities."""

    def __init__(self, id: str, accepted_communities):
        self.id = id
        self.accepted_communities = frozenset(accepted_communities)
        self.queue: deque[Job] = deque()
        self.up = True
        self.rejected_count = 0
        self.error_count = 0

    def ce_admit(self, job: Job) -> AdmitResult:
        """Admit to the queue, reject unauthorized communities, or fail
        outright while the CE is down."""
        if not self.up:
            self.error_count += 1
            job.state = JobState.FAILED
            return AdmitResult.ERROR
        if job.community not in self.accepted_communities:
            self.rejected_count += 1
            job.state = JobState.FAILED
            return AdmitResult.REJECTED
        if job.required_gpu_seconds == 0:
            # degenerate job: complete on arrival, never queued
            job.state = JobState.DONE
            job.finished_at = job.submitted_at
            return AdmitResult.ADMITTED
        self.queue.append(job)
        return AdmitResult.ADMITTED

    def requeue(self, job: Job):
        """Put a preempted/dropped job back at the tail."""
        self.queue.append(job)

    def match_jobs(self, idle_pilots, now: int) -> list[tuple[Job, Pilot]]:
        """Assign head-of-queue jobs to idle pilots in pilot-id order.
        No matching happens while the CE is down."""
        if not self.up or not self.queue:
            return []
        assignments = []
        for pilot in sorted(idle_pilots, key=lambda p: p.seq):
            if not self.queue:
                break
            if pilot.state is not PilotState.IDLE:
                continue
            job = self.queue.popleft()
            job.state = JobState.RUNNING
            job.pilot_id = pilot.id
            job.run_started_at = now
            pilot.state = PilotState.BUSY
            pilot.current_job = job.id
            assignments.append((job, pilot))
        return assignments


def handle_preemption(job: Job, ce: ComputeElement) -> Job:
    """Running job loses its pilot: progress is discarded (no
    checkpointing), the preemption is counted, and the job re-queues at
    the tail. Jobs are never lost to preemption."""
    if job.state is not JobState.RUNNING:
        raise ValueError(f"job {job.id}: preempted while {job.state.value}")
    job.state = JobState.QUEUED
    job.completed_gpu_seconds = 0
    job.preemption_count += 1
    job.pilot_id = None
    job.run_started_at = None
    ce.requeue(job)
    return job


def connection_drop_check(pilot: Pilot, nat_idle_timeout_s: int, now: int) -> bool:
    """True when the pilot's NAT mapping has expired: the mapping dies the
    instant `nat_idle_timeout` elapses since the last traffic, and a
    refresh scheduled for exactly that instant is already too late."""
    if pilot.state is PilotState.DEAD:
        raise ValueError(f"pilot {pilot.id} is dead")
    if pilot.last_traffic_at is None:
        return False
    return now - pilot.last_traffic_at >= nat_idle_timeout_s


def pilot_heartbeat_tick(pilot: Pilot, now: int) -> bool:
    """Second-by-second keepalive bookkeeping: refresh last_traffic_at
    when the interval has elapsed. Returns True when a keepalive was
    sent. The simulation kernel normally precomputes drop times
    analytically; this mechanical form backs unit tests and spot checks."""
    if pilot.state is PilotState.DEAD:
        raise ValueError(f"pilot {pilot.id} is dead")
    if pilot.last_traffic_at is None:
        return False
    if now - pilot.last_traffic_at >= pilot.keepalive_interval_s:
        pilot.last_traffic_at = now
        return True
    return False
