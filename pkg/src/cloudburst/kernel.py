"""Deterministic discrete-event campaign engine.

Virtual time is integer seconds. Events within one second execute in a
fixed category order (outage transitions, job arrivals, control ticks,
cost accrual, operator commands, then connection drops, keepalives, job
completions, instance start-ups, teardowns, pilot registrations); after
the last entry of a second the engine runs a settlement pass that
matches queued jobs to idle pilots and samples the hourly timeline. Two
runs of the same (scenario, seed) produce byte-identical event logs.

Connection drops are not stepped second-by-second: each pilot's NAT
expiry is computed analytically at registration (see kernels.drop_time)
from the keepalive interval, the region's NAT idle timeout, and the
scheduled CE outage windows, then posted as a single future entry.
"""

from __future__ import annotations

import bisect
import heapq
import logging
import math
from fractions import Fraction
from typing import Optional

from cloudburst import events as ev
from cloudburst.budget import BudgetLedger, SpendRecord
from cloudburst.events import EventLogWriter
from cloudburst.kernels import accrue_span, drop_time
from cloudburst.model import micro_to_usd, micro_to_usd_str
from cloudburst.overlay import (
    ComputeElement,
    Job,
    JobState,
    Pilot,
    PilotState,
    handle_preemption,
)
from cloudburst.policy import CampaignController, PreemptionEstimator, allocate
from cloudburst.provision import Instance, InstanceState, ScaleGroup, zero_all
from cloudburst.rng import Stream
from cloudburst.scenario import Scenario

logger = logging.getLogger(__name__)

# Within-second execution phases. Lower runs first; the settlement pass
# (job matching, timeline sampling) runs after every entry of the second.
CAT_OUTAGE = 0
CAT_ARRIVAL = 1
CAT_POLICY = 2
CAT_ACCRUAL = 3
CAT_COMMAND = 4
CAT_DROP = 5
CAT_KEEPALIVE = 6
CAT_JOB_DONE = 7
CAT_INSTANCE_UP = 8
CAT_TEARDOWN = 9
CAT_REGISTER = 10

# causes shared by PilotDead.reason and JobPreempted.cause
CAUSE_DROP = "connection-drop"
CAUSE_PREEMPTED = "instance-preempted"
CAUSE_DEPROVISION = "deprovision"


def completion_time(t0: int, required_s: int, windows) -> int:
    """Second at which a job started at t0 has accumulated `required_s`
    progress-seconds. `windows` are (begin, end, factor) degradation
    spans (sorted, non-overlapping) scaling the progress rate; outside
    them progress runs at 1/s. Exact rational arithmetic, rounded up to
    the enclosing second."""
    if required_s <= 0:
        return t0
    if not windows:
        return t0 + required_s
    t = Fraction(t0)
    left = Fraction(required_s)
    for begin, end, factor in windows:
        if end <= t:
            continue
        if begin > t:
            gap = begin - t
            if left <= gap:
                return math.ceil(t + left)
            left -= gap
            t = Fraction(begin)
        capacity = (end - t) * factor
        if left <= capacity:
            return math.ceil(t + left / factor)
        left -= capacity
        t = Fraction(end)
    return math.ceil(t + left)


class _GroupRuntime:
    """A scale group plus everything the engine tracks alongside it."""

    __slots__ = ("spec", "group", "estimator", "stream", "unsettled")

    def __init__(self, spec, seed: int, half_life_s: int):
        self.spec = spec
        self.group = ScaleGroup(id=spec.id, region=spec.region, market=spec.market)
        self.estimator = PreemptionEstimator(half_life_s=half_life_s)
        self.stream = Stream(seed, f"preempt.{spec.id}")
        self.unsettled: list[Instance] = []  # running or ended, charges pending


class CampaignEngine:
    """One campaign: scenario in, ordered event log + hourly timeline out."""

    def __init__(self, scenario: Scenario, log_path=None, collect_events: bool = True):
        self.sc = scenario
        self.now = -1  # last fully settled second
        self.events: list[dict] = [] if collect_events else None
        self._writer = EventLogWriter(log_path) if log_path is not None else None
        self._seq = 0
        self._order = 0
        self._heap: list = []
        self._started = False
        self._finalized = False
        self._proc: Optional[tuple[int, int]] = None  # (second, category) in flight

        self.groups: dict[str, _GroupRuntime] = {
            g.id: _GroupRuntime(g, scenario.seed, scenario.policy.ewma_half_life_s)
            for g in scenario.groups
        }
        self._gids = sorted(self.groups)
        self.ce = ComputeElement(scenario.ce_id, scenario.accepted_communities)
        self.controller = CampaignController(
            plan=scenario.policy.ramp,
            policy=scenario.policy.allocation,
            guards=scenario.policy.guards,
        )
        self.ledger = BudgetLedger(
            total_budget_micro=scenario.budget.total_micro,
            thresholds=scenario.budget.thresholds,
            rate_window_s=scenario.budget.rate_window_s,
        )
        self._thr_str = {
            float(Fraction(s)): s for s in scenario.budget.thresholds
        }

        self.instances: dict[str, Instance] = {}
        self.pilots: dict[str, Pilot] = {}
        self.jobs: dict[str, Job] = {}
        self._inst_pilots: dict[str, list[str]] = {}  # live pilots per instance
        self._idle: dict[str, Pilot] = {}  # matchable pilots
        self._attempt: dict[str, int] = {}
        self._inst_seq = 0
        self._pilot_seq = 0

        self._durations: list[int] = []
        self._outage_extra: list[tuple[int, int]] = []
        self._win_starts: list[int] = []
        self._win_ends: list[int] = []
        self._deg_windows = scenario.degradation_windows()

        self._last_target: int = 0
        self._last_decision = None
        self.timeline: list[dict] = []
        self._marks: list[int] = []
        self._mark_idx = 0
        self._preempts_since_mark = 0

        # campaign counters
        self.completed_jobs = 0
        self.failed_jobs = 0
        self.preempted_job_events = 0
        self.instance_preemptions = 0
        self.connection_drops = 0
        self._running_jobs = 0

    # -- plumbing ------------------------------------------------------

    def _emit(self, at: int, kind: str, **payload):
        event = {"at": at, "seq": self._seq, "kind": kind, **payload}
        self._seq += 1
        if self.events is not None:
            self.events.append(event)
        if self._writer is not None:
            self._writer.append(event)

    def _push(self, at: int, cat: int, data):
        if self._proc is not None and (at, cat) <= self._proc:
            raise ValueError(
                f"cannot schedule {(at, cat)} at or before the entry "
                f"being processed {self._proc}"
            )
        if self._proc is None and self._started and at <= self.now:
            raise ValueError(f"cannot schedule at {at}: now is {self.now}")
        heapq.heappush(self._heap, (at, cat, self._order, data))
        self._order += 1

    def _in_outage(self, t: int) -> bool:
        idx = bisect.bisect_right(self._win_starts, t) - 1
        return idx >= 0 and t < self._win_ends[idx]

    def _defer_to_ce_up(self, t: int) -> int:
        """Registrations attempted during a CE outage land when it lifts."""
        idx = bisect.bisect_right(self._win_starts, t) - 1
        if idx >= 0 and t < self._win_ends[idx]:
            return self._win_ends[idx]
        return t

    def header(self) -> dict:
        groups = {
            gid: {
                "provider": g.spec.provider_id,
                "price_micro": g.spec.market.price_micro_per_gpu_day,
                "gpus_per_instance": g.spec.market.instance_type.gpus_per_instance,
                "tflops": g.spec.market.instance_type.fp32_tflops_per_gpu,
                "capacity": g.spec.market.capacity,
                "nat_idle_timeout_s": g.spec.region.nat_idle_timeout_s,
            }
            for gid, g in sorted(self.groups.items())
        }
        header = {
            "schema": ev.SCHEMA,
            "scenario": self.sc.name,
            "seed": self.sc.seed,
            "horizon_s": self.sc.horizon_s,
            "budget_micro": self.sc.budget.total_micro,
            "thresholds": list(self.sc.budget.thresholds),
            "keepalive_interval_s": self.sc.overlay.keepalive_interval_s,
            "groups": groups,
        }
        if self.sc.baseline_onprem_gpu_hours is not None:
            header["baseline_onprem_gpu_hours"] = self.sc.baseline_onprem_gpu_hours
        return header

    # -- lifecycle -----------------------------------------------------

    def inject_outage(self, begin_s: int, end_s: int):
        """Add a CE outage window before the run starts. Overlapping
        windows merge."""
        if self._started:
            raise ValueError("cannot inject an outage into a started run")
        if end_s <= begin_s:
            raise ValueError("outage must end after it begins")
        self._outage_extra.append((begin_s, end_s))

    def start(self):
        if self._started:
            return
        self._started = True
        sc = self.sc

        raw = sorted(sc.outage_windows() + self._outage_extra)
        merged: list[tuple[int, int]] = []
        for b, e in raw:
            if merged and b <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], e))
            else:
                merged.append((b, e))
        self._win_starts = [b for b, _ in merged]
        self._win_ends = [e for _, e in merged]

        if self._writer is not None:
            self._writer.write_header(self.header())

        horizon = sc.horizon_s
        for b, e in merged:
            if b <= horizon:
                self._push(b, CAT_OUTAGE, ("begin",))
            if e <= horizon:
                self._push(e, CAT_OUTAGE, ("end",))

        # job durations are intrinsic, drawn per job index up front so
        # admission outcomes never shift the stream
        w = sc.workload
        if w.duration_kind == "fixed":
            self._durations = [w.duration_min_s] * w.job_count
        else:
            stream = Stream(sc.seed, "workload.durations")
            self._durations = [
                stream.uniform_int(w.duration_min_s, w.duration_max_s)
                for _ in range(w.job_count)
            ]
        for i in range(w.job_count):
            if w.arrival_kind == "at":
                t = w.arrival_at_s
            else:
                span = w.arrival_end_s - w.arrival_start_s
                t = w.arrival_start_s + (i * span) // w.job_count
            if t <= horizon:
                self._push(t, CAT_ARRIVAL, (i,))

        tick = sc.policy.control_tick_s
        for t in range(0, horizon + 1, tick):
            self._push(t, CAT_POLICY, ())
        acc = sc.accrual_tick_s
        for t in range(acc, horizon + 1, acc):
            self._push(t, CAT_ACCRUAL, ())
        for i, cmd in enumerate(sc.operator_script):
            if cmd.at <= horizon:
                self._push(cmd.at, CAT_COMMAND, (cmd.command, cmd.args, "script"))

        self._marks = [
            min(h * 3600, horizon)
            for h in range(1, (horizon + 3599) // 3600 + 1)
        ]

    def submit_command(self, command: str, args: dict, source: str = "api") -> int:
        """Queue an operator command for the next simulated second.
        Returns the second it will execute at."""
        if not self._started:
            raise ValueError("engine not started")
        if self._finalized:
            raise ValueError("campaign already finalized")
        at = self.now + 1
        self._push(at, CAT_COMMAND, (command, dict(args), source))
        return at

    def run_until(self, t: int):
        """Advance through the end of second min(t, horizon), settling
        every second on the way; finalizes when the horizon is reached."""
        self.start()
        limit = min(t, self.sc.horizon_s)
        heap = self._heap
        while True:
            s_entry = heap[0][0] if heap else None
            s_mark = (
                self._marks[self._mark_idx]
                if self._mark_idx < len(self._marks)
                else None
            )
            s = None
            if s_entry is not None and s_entry <= limit:
                s = s_entry
            if s_mark is not None and s_mark <= limit and (s is None or s_mark < s):
                s = s_mark
            if s is None:
                break
            self.now = s
            while heap and heap[0][0] == s:
                at, cat, _, data = heapq.heappop(heap)
                self._proc = (at, cat)
                self._dispatch(s, cat, data)
            self._proc = None
            self._settle(s)
        self.now = max(self.now, limit)
        if t >= self.sc.horizon_s:
            self._finalize()

    def run(self):
        self.run_until(self.sc.horizon_s)

    # -- entry handlers --------------------------------------------------

    def _dispatch(self, now: int, cat: int, data):
        if cat == CAT_OUTAGE:
            self._on_outage(now, data[0])
        elif cat == CAT_ARRIVAL:
            self._on_arrival(now, data[0])
        elif cat == CAT_POLICY:
            self._on_policy_tick(now)
        elif cat == CAT_ACCRUAL:
            self._post_accruals(now)
        elif cat == CAT_COMMAND:
            self._on_command(now, *data)
        elif cat == CAT_DROP:
            self._on_drop(now, data[0])
        elif cat == CAT_KEEPALIVE:
            self._on_keepalive(now, *data)
        elif cat == CAT_JOB_DONE:
            self._on_job_done(now, *data)
        elif cat == CAT_INSTANCE_UP:
            self._on_instance_up(now, data[0])
        elif cat == CAT_TEARDOWN:
            self._on_teardown_done(now, *data)
        elif cat == CAT_REGISTER:
            self._on_register(now, data[0])
        else:  # pragma: no cover
            raise AssertionError(f"unknown category {cat}")

    def _on_outage(self, now: int, edge: str):
        if edge == "begin":
            self.ce.up = False
            self._emit(now, ev.CE_OUTAGE_BEGIN, ce=self.ce.id)
        else:
            self.ce.up = True
            self._emit(now, ev.CE_OUTAGE_END, ce=self.ce.id)

    def _on_arrival(self, now: int, idx: int):
        jid = f"j-{idx:06d}"
        job = Job(
            id=jid,
            seq=idx,
            community=self.sc.workload.community,
            required_gpu_seconds=self._durations[idx],
            submitted_at=now,
        )
        self.jobs[jid] = job
        result = self.ce.ce_admit(job)
        if job.state is JobState.DONE:
            outcome = "done"
            self.completed_jobs += 1
        elif job.state is JobState.FAILED:
            outcome = result.value  # "rejected" | "error"
            self.failed_jobs += 1
        else:
            outcome = "queued"
        self._emit(
            now,
            ev.JOB_SUBMITTED,
            job=jid,
            community=job.community,
            required_s=job.required_gpu_seconds,
            result=outcome,
        )

    def _on_policy_tick(self, now: int):
        sc = self.sc
        tick = sc.policy.control_tick_s
        # spot reclaims first: sample each group's Bernoulli stream
        for gid in self._gids:
            g = self.groups[gid]
            exposed = len(g.group.running_instances())
            victims = g.group.sample_preemptions(tick, g.stream)
            for inst in victims:
                self._preempt_instance(now, inst)
            g.estimator.update(len(victims), exposed, tick)

        remaining = Fraction(
            self.ledger.remaining_micro, self.ledger.total_budget_micro
        )
        decision = self.controller.decide(now, remaining)
        self._last_decision = decision
        if decision.target_gpus != self._last_target:
            self._emit(
                now,
                ev.POLICY_TICK,
                target_gpus=decision.target_gpus,
                ramp_target=decision.ramp_target,
                guard_cap=decision.guard_cap,
                stopped=decision.stopped,
                remaining_fraction=self.ledger.remaining_fraction,
            )
            self._last_target = decision.target_gpus

        desired = allocate(
            decision.target_gpus,
            [
                (gid, self.groups[gid].spec.market, self.groups[gid].estimator.rate)
                for gid in self._gids
            ],
            sc.policy.allocation,
        )
        for gid in self._gids:
            g = self.groups[gid]
            changed = g.group.set_desired(desired[gid])
            self._reconcile_group(now, g, announce=changed)

    def _reconcile_group(self, now: int, g: _GroupRuntime, announce: bool):
        plan = g.group.reconcile(now, self._alloc_instance)
        if announce or plan.provision or plan.teardown:
            self._emit(
                now,
                ev.RECONCILE_REQUESTED,
                group=g.spec.id,
                desired=plan.desired,
                live=plan.live_before,
                shortfall=plan.shortfall,
            )
        for action in plan.provision:
            inst = action.instance
            self.instances[inst.id] = inst
            self._emit(now, ev.INSTANCE_PROVISIONED, instance=inst.id, group=g.spec.id)
            up_at = now + self.sc.latencies.provision_s
            if up_at <= self.sc.horizon_s:
                self._push(up_at, CAT_INSTANCE_UP, (inst.id,))
        for action in plan.teardown:
            self._begin_teardown(now, action.instance)

    def _alloc_instance(self):
        self._inst_seq += 1
        return self._inst_seq, f"i-{self._inst_seq:06d}"

    def _begin_teardown(self, now: int, inst: Instance):
        if inst.state is InstanceState.PROVISIONING:
            # the request is cancelled before the instance ever runs
            inst.transition(InstanceState.DEPROVISIONED, now)
            self._emit(
                now,
                ev.INSTANCE_DEPROVISIONED,
                instance=inst.id,
                group=inst.group,
                cancelled=True,
            )
            return
        due = now + self.sc.latencies.deprovision_s
        inst.teardown_due = due
        # draining: its idle pilots leave the matchable pool now
        for pid in self._inst_pilots.get(inst.id, ()):
            self._idle.pop(pid, None)
        self._push(due, CAT_TEARDOWN, (inst.id, due))

    def _on_teardown_done(self, now: int, iid: str, due: int):
        inst = self.instances[iid]
        if inst.state is not InstanceState.RUNNING or inst.teardown_due != due:
            return  # preempted (or otherwise gone) while the teardown was in flight
        self._kill_pilots_on(now, inst, CAUSE_DEPROVISION)
        inst.transition(InstanceState.DEPROVISIONED, now)
        self._emit(
            now,
            ev.INSTANCE_DEPROVISIONED,
            instance=iid,
            group=inst.group,
            cancelled=False,
        )

    def _preempt_instance(self, now: int, inst: Instance):
        self.instance_preemptions += 1
        self._emit(now, ev.INSTANCE_PREEMPTED, instance=inst.id, group=inst.group)
        self._kill_pilots_on(now, inst, CAUSE_PREEMPTED)
        inst.transition(InstanceState.PREEMPTED, now)

    def _kill_pilots_on(self, now: int, inst: Instance, cause: str):
        for pid in self._inst_pilots.pop(inst.id, []):
            pilot = self.pilots[pid]
            if pilot.state is PilotState.DEAD:
                continue
            jid = pilot.current_job
            pilot.die(now)
            self._idle.pop(pid, None)
            self._emit(
                now,
                ev.PILOT_DEAD,
                pilot=pid,
                instance=inst.id,
                group=inst.group,
                reason=cause,
            )
            if jid is not None:
                self._requeue_job(now, jid, pid, cause)

    def _requeue_job(self, now: int, jid: str, pid: str, cause: str):
        job = self.jobs[jid]
        handle_preemption(job, self.ce)
        self._running_jobs -= 1
        self.preempted_job_events += 1
        self._preempts_since_mark += 1
        self._emit(now, ev.JOB_PREEMPTED, job=jid, pilot=pid, cause=cause)

    def _post_accruals(self, now: int):
        """Charge every group's unsettled running time through `now`,
        then evaluate budget thresholds on the new totals."""
        group_spend: dict[str, int] = {}
        provider_spend: dict[str, int] = {}
        for gid in self._gids:
            g = self.groups[gid]
            price = g.spec.market.price_micro_per_gpu_day
            total = 0
            still: list[Instance] = []
            for inst in g.unsettled:
                end = inst.ended_at if inst.ended_at is not None else now
                accrued = accrue_span(price, inst.gpus, end - inst.running_at)
                delta = accrued - inst.billed_micro
                if delta:
                    total += delta
                    inst.billed_micro = accrued
                if inst.ended_at is None:
                    still.append(inst)
            g.unsettled = still
            if total:
                group_spend[gid] = total
                pid = g.spec.provider_id
                provider_spend[pid] = provider_spend.get(pid, 0) + total
        alerts = []
        for gid, amount in group_spend.items():
            self._emit(
                now,
                ev.SPEND_ACCRUED,
                group=gid,
                provider=self.groups[gid].spec.provider_id,
                amount_micro=amount,
            )
        for pid in sorted(provider_spend):
            alerts += self.ledger.record_spend(
                SpendRecord(provider=pid, amount_micro=provider_spend[pid], at=now)
            )
        for alert in alerts:
            self._emit(
                now,
                ev.ALERT_FIRED,
                threshold=self._thr_str.get(alert.threshold, repr(alert.threshold)),
                remaining_fraction=alert.remaining_fraction,
                spend_rate_usd_per_day=alert.spend_rate_usd_per_day,
            )

    def _on_command(self, now: int, command: str, args: dict, source: str):
        rejected = self.controller.stopped and command != "resume"
        self._emit(
            now,
            ev.OPERATOR_COMMAND,
            command=command,
            args=args,
            source=source,
            rejected=rejected,
        )
        if rejected:
            return
        if command == "set_desired":
            g = self.groups[args["group"]]
            changed = g.group.set_desired(args["n"])
            self._reconcile_group(now, g, announce=changed)
        elif command == "pin_target":
            self.controller.pin_target(args["gpus"])
        elif command == "release_target":
            self.controller.release_target()
        elif command == "emergency_stop":
            self.controller.emergency_stop(args.get("reason", ""))
            for group in zero_all(self.groups[gid].group for gid in self._gids):
                self._reconcile_group(now, self.groups[group.id], announce=True)
        elif command == "resume":
            self.controller.resume(now, args["target"])
        else:
            raise ValueError(f"unknown command {command!r}")

    def _on_drop(self, now: int, pid: str):
        pilot = self.pilots[pid]
        if pilot.state is PilotState.DEAD:
            return
        inst = self.instances[pilot.instance_id]
        jid = pilot.current_job
        pilot.die(now)
        self._idle.pop(pid, None)
        pilots = self._inst_pilots.get(inst.id)
        if pilots and pid in pilots:
            pilots.remove(pid)
        self.connection_drops += 1
        self._emit(
            now,
            ev.PILOT_DEAD,
            pilot=pid,
            instance=inst.id,
            group=inst.group,
            reason=CAUSE_DROP,
        )
        if jid is not None:
            self._requeue_job(now, jid, pid, CAUSE_DROP)
        if (
            self.sc.overlay.pilot_restart
            and inst.state is InstanceState.RUNNING
            and inst.teardown_due is None
        ):
            at = self._defer_to_ce_up(now + self.sc.overlay.pilot_start_latency_s)
            if at <= self.sc.horizon_s:
                self._push(at, CAT_REGISTER, (inst.id,))

    def _on_keepalive(self, now: int, pid: str, due: int):
        pilot = self.pilots[pid]
        if pilot.state is PilotState.DEAD:
            return
        if not self._in_outage(now):
            self._emit(
                now, ev.KEEPALIVE_SENT, pilot=pid, instance=pilot.instance_id
            )
        nxt = due + self.sc.overlay.keepalive_interval_s
        if nxt <= self.sc.horizon_s:
            self._push(nxt, CAT_KEEPALIVE, (pid, nxt))

    def _on_job_done(self, now: int, jid: str, attempt: int):
        job = self.jobs[jid]
        if job.state is not JobState.RUNNING or self._attempt[jid] != attempt:
            return  # superseded: the run this entry belonged to was lost
        pid = job.pilot_id
        pilot = self.pilots[pid]
        job.state = JobState.DONE
        job.completed_gpu_seconds = job.required_gpu_seconds
        job.finished_at = now
        job.pilot_id = None
        pilot.state = PilotState.IDLE
        pilot.current_job = None
        self._running_jobs -= 1
        self.completed_jobs += 1
        self._emit(
            now,
            ev.JOB_COMPLETED,
            job=jid,
            pilot=pid,
            gpu_seconds=job.required_gpu_seconds,
        )
        inst = self.instances[pilot.instance_id]
        if inst.teardown_due is None:
            self._idle[pid] = pilot

    def _on_instance_up(self, now: int, iid: str):
        inst = self.instances[iid]
        if inst.state is not InstanceState.PROVISIONING:
            return  # cancelled while the request was in flight
        inst.transition(InstanceState.RUNNING, now)
        g = self.groups[inst.group]
        g.unsettled.append(inst)
        self._emit(now, ev.INSTANCE_RUNNING, instance=iid, group=inst.group)
        at = self._defer_to_ce_up(now + self.sc.overlay.pilot_start_latency_s)
        if at <= self.sc.horizon_s:
            for _ in range(inst.gpus):
                self._push(at, CAT_REGISTER, (iid,))

    def _on_register(self, now: int, iid: str):
        inst = self.instances[iid]
        if inst.state is not InstanceState.RUNNING or inst.teardown_due is not None:
            return  # the instance died or started draining first
        live = self._inst_pilots.setdefault(iid, [])
        if len(live) >= inst.gpus:
            return
        self._pilot_seq += 1
        pid = f"p-{self._pilot_seq:06d}"
        pilot = Pilot(
            id=pid,
            seq=self._pilot_seq,
            instance_id=iid,
            group=inst.group,
            keepalive_interval_s=self.sc.overlay.keepalive_interval_s,
        )
        g = self.groups[inst.group]
        drop_at = drop_time(
            now,
            self.sc.overlay.keepalive_interval_s,
            g.spec.region.nat_idle_timeout_s,
            self._win_starts,
            self._win_ends,
        )
        pilot.register(now, drop_at)
        self.pilots[pid] = pilot
        live.append(pid)
        self._idle[pid] = pilot
        self._emit(now, ev.PILOT_STARTED, pilot=pid, instance=iid, group=inst.group)
        if 0 <= drop_at <= self.sc.horizon_s:
            self._push(drop_at, CAT_DROP, (pid,))
        if self.sc.overlay.log_keepalives:
            nxt = now + self.sc.overlay.keepalive_interval_s
            if nxt <= self.sc.horizon_s:
                self._push(nxt, CAT_KEEPALIVE, (pid, nxt))

    # -- settlement ------------------------------------------------------

    def _settle(self, now: int):
        if self.ce.up and self.ce.queue and self._idle:
            assignments = self.ce.match_jobs(list(self._idle.values()), now)
            for job, pilot in assignments:
                del self._idle[pilot.id]
                self._attempt[job.id] = self._attempt.get(job.id, 0) + 1
                self._running_jobs += 1
                self._emit(
                    now,
                    ev.JOB_ASSIGNED,
                    job=job.id,
                    pilot=pilot.id,
                    instance=pilot.instance_id,
                    group=pilot.group,
                )
                done_at = completion_time(
                    now, job.required_gpu_seconds, self._deg_windows
                )
                if done_at <= self.sc.horizon_s:
                    self._push(done_at, CAT_JOB_DONE, (job.id, self._attempt[job.id]))
        if self._mark_idx < len(self._marks) and self._marks[self._mark_idx] == now:
            self._capture_row(now)
            self._mark_idx += 1

    def _capture_row(self, now: int):
        live_gpus = sum(
            sum(i.gpus for i in self.groups[gid].group.running_instances())
            for gid in self._gids
        )
        remaining = self.ledger.remaining_micro
        budget = self.ledger.total_budget_micro
        scaled = abs(remaining) * 1_000_000 // budget
        frac = f"{'-' if remaining < 0 else ''}{scaled // 1_000_000}.{scaled % 1_000_000:06d}"
        self.timeline.append(
            {
                "hour": self._mark_idx + 1,
                "live_gpus": live_gpus,
                "queued": len(self.ce.queue),
                "running": self._running_jobs,
                "spend_usd": micro_to_usd_str(self.ledger.spent_micro),
                "remaining_frac": frac,
                "preemptions": self._preempts_since_mark,
            }
        )
        self._preempts_since_mark = 0

    def _finalize(self):
        if self._finalized:
            return
        self._finalized = True
        self.now = self.sc.horizon_s
        self._post_accruals(self.now)
        if self._writer is not None:
            self._writer.close()

    @property
    def finalized(self) -> bool:
        return self._finalized

    # -- introspection (status API, console) ------------------------------

    def snapshot(self) -> dict:
        groups = {}
        provisioning_total = 0
        live_gpus = 0
        for gid in self._gids:
            g = self.groups[gid]
            running = draining = provisioning = 0
            for inst in g.group.instances.values():
                if inst.state is InstanceState.PROVISIONING:
                    provisioning += 1
                elif inst.state is InstanceState.RUNNING:
                    running += 1
                    live_gpus += inst.gpus
                    if inst.teardown_due is not None:
                        draining += 1
            provisioning_total += provisioning
            groups[gid] = {
                "id": gid,
                "provider": g.spec.provider_id,
                "region": g.spec.region.id,
                "instance_type": g.spec.market.instance_type.id,
                "price_usd_per_gpu_day": g.spec.market.price_usd_per_gpu_day,
                "capacity": g.spec.market.capacity,
                "desired": g.group.desired_count,
                "provisioning": provisioning,
                "running": running,
                "draining": draining,
                "shortfall": g.group.last_shortfall,
                "observed_preemption_rate": g.estimator.rate,
            }
        decision = self._last_decision
        return {
            "now": max(self.now, 0),
            "finalized": self._finalized,
            "stopped": self.controller.stopped,
            "stop_reason": self.controller.stop_reason,
            "pinned_target": self.controller.pinned_target,
            "target_gpus": decision.target_gpus if decision else 0,
            "guard_cap": decision.guard_cap if decision else None,
            "ce_up": self.ce.up,
            "live_gpus": live_gpus,
            "provisioning": provisioning_total,
            "queued": len(self.ce.queue),
            "running_jobs": self._running_jobs,
            "completed_jobs": self.completed_jobs,
            "failed_jobs": self.failed_jobs,
            "preempted_job_events": self.preempted_job_events,
            "instance_preemptions": self.instance_preemptions,
            "connection_drops": self.connection_drops,
            "spend_usd": micro_to_usd(self.ledger.spent_micro),
            "remaining_usd": micro_to_usd(self.ledger.remaining_micro),
            "remaining_fraction": self.ledger.remaining_fraction,
            "groups": groups,
        }

    def budget_snapshot(self) -> dict:
        agg = self.ledger.aggregate()
        return {
            "total_usd": micro_to_usd(agg.total_budget_micro),
            "spent_usd": micro_to_usd(agg.spent_micro),
            "remaining_usd": micro_to_usd(agg.remaining_micro),
            "remaining_fraction": agg.remaining_fraction,
            "overspent": agg.overspent,
            "by_provider_usd": {
                p: micro_to_usd(v) for p, v in sorted(agg.by_provider.items())
            },
            "spend_rate_usd_per_day": self.ledger.spend_rate(
                self.ledger.rate_window_s, max(self.now, 0)
            ),
            "alerts": [
                {
                    "threshold": self._thr_str.get(a.threshold, repr(a.threshold)),
                    "at": a.at,
                    "remaining_fraction": a.remaining_fraction,
                    "spend_rate_usd_per_day": a.spend_rate_usd_per_day,
                }
                for a in self.ledger.alerts
            ],
        }
