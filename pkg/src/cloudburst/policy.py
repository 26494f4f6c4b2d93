"""Campaign control policy.

Pure decision logic: the staged ramp plan, the price/preemption-weighted
allocator that spreads a GPU target across spot markets, budget guards
that cap the fleet as money runs out, and the emergency-stop/resume state
machine. The simulation kernel asks this module what the fleet *should*
look like; the provisioning layer makes it so.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from cloudburst.model import SpotMarket

DEFAULT_CONTROL_TICK_S = 300
DEFAULT_EWMA_HALF_LIFE_S = 6 * 3600


# -- ramp plan ---------------------------------------------------------


@dataclass(frozen=True)
class RampStep:
    activate_at: int
    target_gpus: int

    def __post_init__(self):
        if self.target_gpus < 0:
            raise ValueError("ramp target must be >= 0")
        if self.activate_at < 0:
            raise ValueError("ramp step time must be >= 0")


@dataclass(frozen=True)
class RampPlan:
    """Ordered fleet-size steps, optionally forced to sustain each level.

    With a non-zero hold, a step cannot activate until its predecessor has
    been in force for at least `hold_validation_s`, so a pathologically
    front-loaded plan still climbs one validated level at a time.
    """

    steps: tuple[RampStep, ...]
    hold_validation_s: int = 0

    def __post_init__(self):
        if self.hold_validation_s < 0:
            raise ValueError("hold_validation must be >= 0")
        times = [s.activate_at for s in self.steps]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("ramp step times must be strictly increasing")

    def effective_activations(self) -> tuple[int, ...]:
        out: list[int] = []
        for step in self.steps:
            if not out:
                out.append(step.activate_at)
            else:
                out.append(max(step.activate_at, out[-1] + self.hold_validation_s))
        return tuple(out)

    def target_at(self, now: int) -> int:
        target = 0
        for step, at in zip(self.steps, self.effective_activations()):
            if at <= now:
                target = step.target_gpus
            else:
                break
        return target


def ramp_step(plan: RampPlan, now: int) -> int:
    """Fleet-size target currently in force: the latest activated step,
    or 0 before the first."""
    return plan.target_at(now)


# -- allocation --------------------------------------------------------


@dataclass(frozen=True)
class AllocationPolicy:
    """How a GPU target is spread across markets.

    weighted mode ranks markets by spot price plus a dollar penalty per
    observed preemption/day — expensive-but-stable supply can win over
    cheap-but-flaky. cheapest_first ignores preemption history.
    """

    mode: str = "weighted"
    preemption_penalty_usd: float = 0.0
    per_region_cap: Optional[int] = None

    def __post_init__(self):
        if self.mode not in ("cheapest_first", "weighted"):
            raise ValueError(f"unknown allocation mode {self.mode!r}")
        if self.preemption_penalty_usd < 0:
            raise ValueError("preemption_penalty must be >= 0")
        if self.per_region_cap is not None and self.per_region_cap < 0:
            raise ValueError("per_region_cap must be >= 0")

    def effective_price(self, market: SpotMarket, observed_rate: float) -> float:
        price = market.price_usd_per_gpu_day
        if self.mode == "weighted":
            price += self.preemption_penalty_usd * observed_rate
        return price


def allocate(
    target_gpus: int,
    markets: Sequence[tuple[str, SpotMarket, float]],
    policy: AllocationPolicy = AllocationPolicy(),
) -> dict[str, int]:
    """Greedy cheapest-first fill of `target_gpus` across markets.

    `markets` is a sequence of (group_id, market, observed_preemption_rate).
    Returns desired *instance* counts per group. Ranking ties break on
    group id so the result is deterministic. Each market contributes at
    most its capacity (and the per-region GPU cap, if set); with one GPU
    per instance the grand total is exactly min(target, total capacity).
    """
    if target_gpus < 0:
        raise ValueError("target_gpus must be >= 0")
    ranked = sorted(
        markets, key=lambda e: (policy.effective_price(e[1], e[2]), e[0])
    )
    remaining = target_gpus
    desired = {group_id: 0 for group_id, _, _ in markets}
    for group_id, market, _ in ranked:
        gpg = market.instance_type.gpus_per_instance
        cap_gpus = market.capacity * gpg
        if policy.per_region_cap is not None:
            cap_gpus = min(cap_gpus, policy.per_region_cap)
        take_gpus = min(remaining, cap_gpus)
        take_instances = take_gpus // gpg
        desired[group_id] = take_instances
        remaining -= take_instances * gpg
        if remaining <= 0:
            break
    return desired


# -- budget guards -----------------------------------------------------


@dataclass(frozen=True)
class BudgetGuard:
    """When the remaining budget fraction is at or below `fraction`,
    cap the fleet at `max_gpus`."""

    fraction: Fraction
    max_gpus: int

    def __post_init__(self):
        if not (0 <= self.fraction < 1):
            raise ValueError("guard fraction must be in [0, 1)")
        if self.max_gpus < 0:
            raise ValueError("guard max_gpus must be >= 0")


def budget_guard(remaining_fraction, guards: Sequence[BudgetGuard]) -> Optional[int]:
    """Cap from the tightest triggered guard, or None.

    A guard triggers when its fraction >= the remaining fraction
    (inclusive: hitting exactly 20% remaining activates a 0.2 guard).
    `guards` must be sorted by fraction descending; the last triggered
    one — the smallest fraction — wins.
    """
    fractions = [g.fraction for g in guards]
    if any(b >= a for a, b in zip(fractions, fractions[1:])):
        raise ValueError("guards must be sorted by fraction, descending")
    cap = None
    for g in guards:
        if g.fraction >= remaining_fraction:
            cap = g.max_gpus
    return cap


# -- preemption-rate estimation ----------------------------------------


class PreemptionEstimator:
    """Exponentially-weighted moving average of a market's preemption
    rate, in preemptions per instance per day."""

    def __init__(self, half_life_s: int = DEFAULT_EWMA_HALF_LIFE_S, initial: float = 0.0):
        if half_life_s <= 0:
            raise ValueError("half_life must be > 0")
        self.half_life_s = half_life_s
        self.rate = initial

    def update(self, events: int, instances: int, dt_s: int) -> float:
        """Fold in one observation window: `events` preemptions across
        `instances` running instances over `dt_s` seconds. Windows with
        no instances carry no information and leave the estimate alone."""
        if dt_s <= 0:
            raise ValueError("dt must be > 0")
        if instances > 0:
            observed = events * 86400.0 / (instances * dt_s)
            retain = 0.5 ** (dt_s / self.half_life_s)
            self.rate = self.rate * retain + observed * (1.0 - retain)
        return self.rate


# -- campaign controller ------------------------------------------------


@dataclass
class ControlDecision:
    """What the controller wants at one tick, with the reasoning spelled
    out for the event log and the status API."""

    target_gpus: int
    ramp_target: int
    guard_cap: Optional[int]
    pinned_target: Optional[int]
    stopped: bool


class CampaignController:
    """Ramp plan + operator overrides + budget guards + emergency stop.

    Operator commands win over the ramp plan (a pinned target replaces
    it until released), but budget guards cap everything — an operator
    cannot pin the fleet above what the remaining budget allows. While
    emergency-stopped the target is 0 no matter what; only an explicit
    resume (with a fresh, possibly reduced, single-step plan) restarts.
    """

    def __init__(
        self,
        plan: RampPlan,
        policy: AllocationPolicy = AllocationPolicy(),
        guards: Sequence[BudgetGuard] = (),
    ):
        self.plan = plan
        self.policy = policy
        self.guards = tuple(guards)
        self.stopped = False
        self.stop_reason: Optional[str] = None
        self.pinned_target: Optional[int] = None

    def decide(self, now: int, remaining_fraction) -> ControlDecision:
        ramp = ramp_step(self.plan, now)
        cap = budget_guard(remaining_fraction, self.guards)
        if self.stopped:
            target = 0
        else:
            target = ramp if self.pinned_target is None else self.pinned_target
            if cap is not None:
                target = min(target, cap)
        return ControlDecision(
            target_gpus=target,
            ramp_target=ramp,
            guard_cap=cap,
            pinned_target=self.pinned_target,
            stopped=self.stopped,
        )

    def emergency_stop(self, reason: str) -> bool:
        """Suspend the campaign: target 0 everywhere until resumed.
        Returns False if already stopped (idempotent beyond logging)."""
        if self.stopped:
            return False
        self.stopped = True
        self.stop_reason = reason
        self.pinned_target = None
        return True

    def resume(self, now: int, target_gpus: int) -> RampPlan:
        """Leave the stopped state with a fresh single-step plan."""
        if target_gpus < 0:
            raise ValueError("resume target must be >= 0")
        self.plan = RampPlan(
            steps=(RampStep(activate_at=now, target_gpus=target_gpus),),
            hold_validation_s=self.plan.hold_validation_s,
        )
        self.stopped = False
        self.stop_reason = None
        self.pinned_target = None
        return self.plan

    def pin_target(self, gpus: int):
        """Operator override: hold the fleet at `gpus` until released."""
        if gpus < 0:
            raise ValueError("pinned target must be >= 0")
        self.pinned_target = gpus

    def release_target(self):
        self.pinned_target = None
