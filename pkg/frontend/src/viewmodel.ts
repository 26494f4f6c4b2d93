/**
 * Pure builders from API snapshots to display models.
 *
 * Everything the console shows is computed here as plain strings, so
 * the rendering layer has no logic and the tests can assert the
 * displayed values verbatim against recorded API fixtures.
 */

import type { BudgetSnapshot, StatusSnapshot, TimelineRow } from "./api.js";
import {
  formatClock,
  formatInt,
  formatPercent,
  formatPreemptionRate,
  formatRate,
  formatThreshold,
  formatUsd,
} from "./format.js";

// -- status ------------------------------------------------------------------

export interface Badge {
  label: string;
  tone: "ok" | "warn" | "stop";
}

export interface GroupRowView {
  id: string;
  provider: string;
  region: string;
  instanceType: string;
  price: string;
  capacity: string;
  desired: string;
  provisioning: string;
  running: string;
  draining: string;
  shortfall: string;
  preemptionRate: string;
}

export interface StatusView {
  clock: string;
  simSeconds: number;
  state: Badge;
  ce: Badge;
  target: string;
  pinned: string | null;
  guardCap: string | null;
  live: string;
  provisioning: string;
  queued: string;
  runningJobs: string;
  completedJobs: string;
  failedJobs: string;
  preemptedJobEvents: string;
  instancePreemptions: string;
  connectionDrops: string;
  spend: string;
  remaining: string;
  remainingPercent: string;
  stopped: boolean;
  finalized: boolean;
  groupIds: string[];
  groups: GroupRowView[];
}

function stateBadge(s: StatusSnapshot): Badge {
  if (s.finalized) return { label: "FINISHED", tone: "warn" };
  if (s.stopped) {
    const reason = s.stop_reason ? `: ${s.stop_reason}` : "";
    return { label: `STOPPED${reason}`, tone: "stop" };
  }
  return { label: "RUNNING", tone: "ok" };
}

export function buildStatusView(s: StatusSnapshot): StatusView {
  const ids = Object.keys(s.groups).sort();
  return {
    clock: formatClock(s.now),
    simSeconds: s.now,
    state: stateBadge(s),
    ce: s.ce_up
      ? { label: "CE up", tone: "ok" }
      : { label: "CE DOWN", tone: "stop" },
    target: formatInt(s.target_gpus),
    pinned: s.pinned_target === null ? null : formatInt(s.pinned_target),
    guardCap: s.guard_cap === null ? null : formatInt(s.guard_cap),
    live: formatInt(s.live_gpus),
    provisioning: formatInt(s.provisioning),
    queued: formatInt(s.queued),
    runningJobs: formatInt(s.running_jobs),
    completedJobs: formatInt(s.completed_jobs),
    failedJobs: formatInt(s.failed_jobs),
    preemptedJobEvents: formatInt(s.preempted_job_events),
    instancePreemptions: formatInt(s.instance_preemptions),
    connectionDrops: formatInt(s.connection_drops),
    spend: formatUsd(s.spend_usd),
    remaining: formatUsd(s.remaining_usd),
    remainingPercent: formatPercent(s.remaining_fraction),
    stopped: s.stopped,
    finalized: s.finalized,
    groupIds: ids,
    groups: ids.map((id) => {
      const g = s.groups[id]!;
      return {
        id: g.id,
        provider: g.provider,
        region: g.region,
        instanceType: g.instance_type,
        price: formatUsd(g.price_usd_per_gpu_day),
        capacity: formatInt(g.capacity),
        desired: formatInt(g.desired),
        provisioning: formatInt(g.provisioning),
        running: formatInt(g.running),
        draining: formatInt(g.draining),
        shortfall: formatInt(g.shortfall),
        preemptionRate: formatPreemptionRate(g.observed_preemption_rate),
      };
    }),
  };
}

// -- budget ------------------------------------------------------------------

export interface AlertRowView {
  threshold: string;
  at: string;
  remainingPercent: string;
  rate: string;
}

export interface BudgetView {
  total: string;
  spent: string;
  remaining: string;
  remainingPercent: string;
  spentBarPercent: number;
  overspent: boolean;
  rate: string;
  byProvider: { provider: string; amount: string }[];
  alerts: AlertRowView[];
}

export function buildBudgetView(b: BudgetSnapshot): BudgetView {
  const spentFraction = Math.min(Math.max(1 - b.remaining_fraction, 0), 1);
  return {
    total: formatUsd(b.total_usd),
    spent: formatUsd(b.spent_usd),
    remaining: formatUsd(b.remaining_usd),
    remainingPercent: formatPercent(b.remaining_fraction),
    spentBarPercent: Math.round(spentFraction * 1000) / 10,
    overspent: b.overspent,
    rate: formatRate(b.spend_rate_usd_per_day),
    byProvider: Object.keys(b.by_provider_usd)
      .sort()
      .map((provider) => ({
        provider,
        amount: formatUsd(b.by_provider_usd[provider]!),
      })),
    alerts: b.alerts.map((a) => ({
      threshold: formatThreshold(a.threshold),
      at: formatClock(a.at),
      remainingPercent: formatPercent(a.remaining_fraction),
      rate: formatRate(a.spend_rate_usd_per_day),
    })),
  };
}

// -- timeline ----------------------------------------------------------------

export interface TimelineLatestView {
  hour: string;
  live: string;
  queued: string;
  running: string;
  spend: string;
}

export function buildTimelineLatest(
  rows: readonly TimelineRow[],
): TimelineLatestView | null {
  const last = rows[rows.length - 1];
  if (!last) return null;
  return {
    hour: `h${last.hour}`,
    live: formatInt(last.live_gpus),
    queued: formatInt(last.queued),
    running: formatInt(last.running),
    spend: formatUsd(Number(last.spend_usd)),
  };
}
