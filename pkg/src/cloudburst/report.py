"""Campaign reports, rebuilt from the event log alone.

The event log is the single source of truth: every figure here — GPU-days,
cost, efficiency, job outcomes, the hourly timeline — is a pure fold over
(header, events). A report computed from a finished engine's in-memory
events and one computed by re-reading the log file it wrote are equal by
construction.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

from cloudburst import events as ev
from cloudburst.events import read_event_log
from cloudburst.kernel import CampaignEngine
from cloudburst.model import fp32_eflop_hours, micro_to_usd, micro_to_usd_str
from cloudburst.scenario import Scenario

TIMELINE_COLUMNS = (
    "hour",
    "live_gpus",
    "queued",
    "running",
    "spend_usd",
    "remaining_frac",
    "preemptions",
)


@dataclass
class CampaignReport:
    scenario: str
    seed: int
    horizon_s: int
    total_cost_usd: float
    total_cost_micro: int
    total_gpu_days: float
    gpu_hours: float
    eflop_hours: float
    cost_per_gpu_day: float
    peak_gpus: int
    budget_usd: float
    remaining_fraction: float
    by_provider: dict[str, dict]
    by_group: dict[str, dict]
    jobs_submitted: int
    jobs_completed: int
    jobs_failed: int
    job_preemption_events: int
    instances_provisioned: int
    instance_preemptions: int
    connection_drops: int
    alerts: list[dict]
    baseline_onprem_gpu_hours: float | None = None

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "horizon_s": self.horizon_s,
            "total_cost_usd": self.total_cost_usd,
            "total_gpu_days": self.total_gpu_days,
            "gpu_hours": self.gpu_hours,
            "eflop_hours": self.eflop_hours,
            "cost_per_gpu_day": self.cost_per_gpu_day,
            "peak_gpus": self.peak_gpus,
            "budget_usd": self.budget_usd,
            "remaining_fraction": self.remaining_fraction,
            "by_provider": self.by_provider,
            "by_group": self.by_group,
            "jobs": {
                "submitted": self.jobs_submitted,
                "completed": self.jobs_completed,
                "failed": self.jobs_failed,
                "preemption_events": self.job_preemption_events,
            },
            "instances": {
                "provisioned": self.instances_provisioned,
                "preempted": self.instance_preemptions,
                "connection_drops": self.connection_drops,
            },
            "alerts": self.alerts,
            "baseline_onprem_gpu_hours": self.baseline_onprem_gpu_hours,
        }


class _Fold:
    """Single forward pass over an ordered event stream."""

    def __init__(self, header: dict):
        self.header = header
        self.horizon = header["horizon_s"]
        self.budget_micro = header["budget_micro"]
        self.groups = header["groups"]
        self.spend_micro = 0
        self.group_cost: dict[str, int] = {}
        self.group_gpu_seconds: dict[str, int] = {}
        self.running_since: dict[str, int] = {}  # instance -> second it started
        self.inst_group: dict[str, str] = {}
        self.live_gpus = 0
        self.peak_gpus = 0
        self.queued = 0
        self.running_jobs = 0
        self.submitted = 0
        self.completed = 0
        self.failed = 0
        self.job_preempts = 0
        self.provisioned = 0
        self.inst_preempts = 0
        self.drops = 0
        self.alerts: list[dict] = []
        # timeline
        self.marks = [
            min(h * 3600, self.horizon)
            for h in range(1, (self.horizon + 3599) // 3600 + 1)
        ]
        self.rows: list[dict] = []
        self._preempts_in_hour = 0

    def _gpus(self, gid: str) -> int:
        return self.groups[gid]["gpus_per_instance"]

    def feed(self, event: dict):
        while len(self.rows) < len(self.marks) and event["at"] > self.marks[len(self.rows)]:
            self._flush_row()
        kind = event["kind"]
        if kind == ev.JOB_SUBMITTED:
            self.submitted += 1
            result = event["result"]
            if result == "queued":
                self.queued += 1
            elif result == "done":
                self.completed += 1
            else:
                self.failed += 1
        elif kind == ev.JOB_ASSIGNED:
            self.queued -= 1
            self.running_jobs += 1
        elif kind == ev.JOB_COMPLETED:
            self.running_jobs -= 1
            self.completed += 1
        elif kind == ev.JOB_PREEMPTED:
            self.running_jobs -= 1
            self.queued += 1
            self.job_preempts += 1
            self._preempts_in_hour += 1
        elif kind == ev.INSTANCE_PROVISIONED:
            self.provisioned += 1
            self.inst_group[event["instance"]] = event["group"]
        elif kind == ev.INSTANCE_RUNNING:
            self.running_since[event["instance"]] = event["at"]
            self.live_gpus += self._gpus(event["group"])
            self.peak_gpus = max(self.peak_gpus, self.live_gpus)
        elif kind == ev.INSTANCE_PREEMPTED:
            self.inst_preempts += 1
            self._end_span(event["instance"], event["group"], event["at"])
        elif kind == ev.INSTANCE_DEPROVISIONED:
            self._end_span(event["instance"], event["group"], event["at"])
        elif kind == ev.SPEND_ACCRUED:
            amount = event["amount_micro"]
            self.spend_micro += amount
            gid = event["group"]
            self.group_cost[gid] = self.group_cost.get(gid, 0) + amount
        elif kind == ev.ALERT_FIRED:
            self.alerts.append(
                {
                    "threshold": event["threshold"],
                    "at": event["at"],
                    "remaining_fraction": event["remaining_fraction"],
                    "spend_rate_usd_per_day": event["spend_rate_usd_per_day"],
                }
            )
        elif kind == ev.PILOT_DEAD and event["reason"] == "connection-drop":
            self.drops += 1

    def _end_span(self, iid: str, gid: str, at: int):
        started = self.running_since.pop(iid, None)
        if started is None:
            return  # cancelled while provisioning: never ran
        gpus = self._gpus(gid)
        self.group_gpu_seconds[gid] = (
            self.group_gpu_seconds.get(gid, 0) + (at - started) * gpus
        )
        self.live_gpus -= gpus

    def _flush_row(self):
        remaining = self.budget_micro - self.spend_micro
        scaled = abs(remaining) * 1_000_000 // self.budget_micro
        frac = (
            f"{'-' if remaining < 0 else ''}"
            f"{scaled // 1_000_000}.{scaled % 1_000_000:06d}"
        )
        self.rows.append(
            {
                "hour": len(self.rows) + 1,
                "live_gpus": self.live_gpus,
                "queued": self.queued,
                "running": self.running_jobs,
                "spend_usd": micro_to_usd_str(self.spend_micro),
                "remaining_frac": frac,
                "preemptions": self._preempts_in_hour,
            }
        )
        self._preempts_in_hour = 0

    def finish(self):
        # remaining rows sample the end-of-horizon state (instances still
        # running count as live there), then their spans close for the
        # GPU-time totals
        while len(self.rows) < len(self.marks):
            self._flush_row()
        for iid in sorted(self.running_since):
            gid = self.inst_group[iid]
            self._end_span(iid, gid, self.horizon)


def build_fold(header: dict, events) -> _Fold:
    fold = _Fold(header)
    for event in events:
        fold.feed(event)
    fold.finish()
    return fold


def build_report(header: dict, events) -> CampaignReport:
    fold = build_fold(header, events)
    by_provider: dict[str, dict] = {}
    by_group: dict[str, dict] = {}
    eflop = 0.0
    total_gpu_seconds = 0
    for gid in sorted(fold.groups):
        info = fold.groups[gid]
        gpu_seconds = fold.group_gpu_seconds.get(gid, 0)
        cost = fold.group_cost.get(gid, 0)
        gpu_days = gpu_seconds / 86400.0
        total_gpu_seconds += gpu_seconds
        eflop += fp32_eflop_hours(gpu_days, info["tflops"])
        by_group[gid] = {
            "provider": info["provider"],
            "cost_usd": micro_to_usd(cost),
            "gpu_days": gpu_days,
        }
        prov = by_provider.setdefault(
            info["provider"], {"cost_usd": 0.0, "gpu_days": 0.0}
        )
        prov["cost_usd"] += micro_to_usd(cost)
        prov["gpu_days"] += gpu_days
    gpu_days = total_gpu_seconds / 86400.0
    return CampaignReport(
        scenario=header["scenario"],
        seed=header["seed"],
        horizon_s=fold.horizon,
        total_cost_usd=micro_to_usd(fold.spend_micro),
        total_cost_micro=fold.spend_micro,
        total_gpu_days=gpu_days,
        gpu_hours=gpu_days * 24.0,
        eflop_hours=eflop,
        cost_per_gpu_day=(
            micro_to_usd(fold.spend_micro) / gpu_days if gpu_days else 0.0
        ),
        peak_gpus=fold.peak_gpus,
        budget_usd=micro_to_usd(fold.budget_micro),
        remaining_fraction=(fold.budget_micro - fold.spend_micro) / fold.budget_micro,
        by_provider=by_provider,
        by_group=by_group,
        jobs_submitted=fold.submitted,
        jobs_completed=fold.completed,
        jobs_failed=fold.failed,
        job_preemption_events=fold.job_preempts,
        instances_provisioned=fold.provisioned,
        instance_preemptions=fold.inst_preempts,
        connection_drops=fold.drops,
        alerts=fold.alerts,
        baseline_onprem_gpu_hours=header.get("baseline_onprem_gpu_hours"),
    )


def build_timeline(header: dict, events) -> list[dict]:
    """Hourly samples identical to what the engine recorded live."""
    return build_fold(header, events).rows


def timeline_csv(rows) -> str:
    out = io.StringIO()
    out.write(",".join(TIMELINE_COLUMNS) + "\n")
    for row in rows:
        out.write(",".join(str(row[c]) for c in TIMELINE_COLUMNS) + "\n")
    return out.getvalue()


def report_from_log(path) -> CampaignReport:
    log = read_event_log(path)
    return build_report(log.header, log.events)


def timeline_from_log(path) -> list[dict]:
    log = read_event_log(path)
    return build_timeline(log.header, log.events)


@dataclass
class RunResult:
    engine: CampaignEngine
    report: CampaignReport
    timeline: list[dict]


def run_campaign(scenario: Scenario, log_path=None) -> RunResult:
    """Run a scenario to its horizon and fold the report."""
    engine = CampaignEngine(scenario, log_path=log_path)
    engine.run()
    report = build_report(engine.header(), engine.events)
    return RunResult(engine=engine, report=report, timeline=engine.timeline)
