"""Scale groups: the common behaviour of cloud instance-group mechanisms.

A ScaleGroup owns instances in one spot market. Operators (or the policy
controller) set a desired count; reconciliation tops up or tears down to
match, bounded by market capacity — when capacity falls short the group
provisions as many as available and records the shortfall rather than
erroring. Instances follow a strict state machine and are preempted by a
per-market Bernoulli process driven by a named random stream.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

from cloudburst.model import Region, SpotMarket
from cloudburst.rng import Stream

DEFAULT_PROVISION_LATENCY_S = 120
DEFAULT_DEPROVISION_LATENCY_S = 30


class InstanceState(enum.Enum):
    PROVISIONING = "provisioning"
    RUNNING = "running"
    PREEMPTED = "preempted"
    DEPROVISIONED = "deprovisioned"


_LEGAL = {
    InstanceState.PROVISIONING: {InstanceState.RUNNING, InstanceState.DEPROVISIONED},
    InstanceState.RUNNING: {InstanceState.PREEMPTED, InstanceState.DEPROVISIONED},
    InstanceState.PREEMPTED: set(),
    InstanceState.DEPROVISIONED: set(),
}


@dataclass
class Instance:
    id: str
    seq: int
    group: str
    gpus: int
    started_at: int  # provisioning requested
    state: InstanceState = InstanceState.PROVISIONING
    running_at: Optional[int] = None  # billing starts here
    ended_at: Optional[int] = None
    billed_micro: int = 0  # lifetime charges recorded so far
    teardown_due: Optional[int] = None  # set while a teardown is in flight

    def transition(self, to: InstanceState, at: int):
        if to not in _LEGAL[self.state]:
            raise ValueError(f"instance {self.id}: illegal {self.state.value} -> {to.value}")
        if to is InstanceState.RUNNING:
            self.running_at = at
        else:
            if at < self.started_at:
                raise ValueError(f"instance {self.id}: ended before started")
            self.ended_at = at
        self.state = to

    @property
    def live(self) -> bool:
        return self.state in (InstanceState.PROVISIONING, InstanceState.RUNNING)


@dataclass
class ProvisionAction:
    instance: Instance


@dataclass
class TeardownAction:
    instance: Instance


@dataclass
class ReconcilePlan:
    group: str
    desired: int
    live_before: int
    provision: list[ProvisionAction]
    teardown: list[TeardownAction]
    shortfall: int  # desired minus what the market can hold


class ScaleGroup:
    """Desired-count instance management against one spot market."""

    def __init__(self, id: str, region: Region, market: SpotMarket):
        self.id = id
        self.region = region
        self.market = market
        self.desired_count = 0
        self.instances: dict[str, Instance] = {}
        self.last_shortfall = 0

    def live_instances(self) -> list[Instance]:
        return [i for i in self.instances.values() if i.live]

    def running_instances(self) -> list[Instance]:
        return [
            i for i in self.instances.values() if i.state is InstanceState.RUNNING
        ]

    def live_count(self) -> int:
        return sum(1 for i in self.instances.values() if i.live)

    def set_desired(self, n: int) -> bool:
        """Record the operator's desired count. Returns True when it
        changed (callers skip the reconcile event for equal n)."""
        if n < 0:
            raise ValueError("desired count must be >= 0")
        if n == self.desired_count:
            return False
        self.desired_count = n
        return True

    def reconcile(self, now: int, alloc_seq) -> ReconcilePlan:
        """Plan the provisioning/teardown needed to meet desired_count.

        Tops up to min(desired, capacity) — never beyond the market's
        capacity — and tears down youngest-first when over. Teardown
        prefers instances not already on their way out. `alloc_seq` is a
        callable yielding fresh (seq, id) pairs for new instances.
        """
        live = [i for i in self.instances.values() if i.live and i.teardown_due is None]
        in_teardown = sum(
            1 for i in self.instances.values() if i.live and i.teardown_due is not None
        )
        plan = ReconcilePlan(
            group=self.id,
            desired=self.desired_count,
            live_before=len(live) + in_teardown,
            provision=[],
            teardown=[],
            shortfall=0,
        )
        want = self.desired_count
        if len(live) < want:
            room = self.market.capacity - len(live) - in_teardown
            top_up = min(want - len(live), max(0, room))
            plan.shortfall = want - len(live) - top_up
            for _ in range(top_up):
                seq, iid = alloc_seq()
                inst = Instance(
                    id=iid,
                    seq=seq,
                    group=self.id,
                    gpus=self.market.instance_type.gpus_per_instance,
                    started_at=now,
                )
                self.instances[iid] = inst
                plan.provision.append(ProvisionAction(inst))
        elif len(live) > want:
            excess = len(live) - want
            victims = sorted(live, key=lambda i: (i.started_at, i.seq), reverse=True)
            for inst in victims[:excess]:
                plan.teardown.append(TeardownAction(inst))
        self.last_shortfall = plan.shortfall
        return plan

    def sample_preemptions(self, dt_s: int, stream: Stream) -> list[Instance]:
        """Independently preempt each Running instance with probability
        1 - exp(-rate * dt_days). Consumes exactly one draw per Running
        instance (in instance-seq order) so replays are identical; zero-
        rate markets consume nothing."""
        if dt_s <= 0:
            raise ValueError("dt must be > 0")
        rate = self.market.preemption_rate_per_day
        if rate == 0.0:
            return []
        running = sorted(self.running_instances(), key=lambda i: i.seq)
        if not running:
            return []
        p = 1.0 - math.exp(-rate * (dt_s / 86400.0))
        hits = stream.sample_hits(len(running), p)
        return [running[i] for i in hits]


def zero_all(groups) -> list[ScaleGroup]:
    """Emergency directive: desired 0 everywhere. Returns the groups whose
    desired count actually changed (the ones needing a reconcile)."""
    changed = []
    for g in groups:
        if g.set_desired(0):
            changed.append(g)
    return changed
