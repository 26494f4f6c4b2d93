/**
 * Recorded service responses must render verbatim: every value the
 * console displays equals the fixture value under the documented
 * formatting rule — no drift, no reordering, no leakage between
 * fields.  Fixtures come from scripts/record_fixtures.py against the
 * real service.
 */

import { describe, expect, it } from "vitest";

import type { BudgetSnapshot, StatusSnapshot } from "../src/api.js";
import {
  formatClock,
  formatInt,
  formatPercent,
  formatPreemptionRate,
  formatRate,
  formatThreshold,
  formatUsd,
} from "../src/format.js";
import {
  esc,
  renderBudgetPanel,
  renderGroupsPanel,
  renderStatusPanel,
} from "../src/render.js";
import { buildBudgetView, buildStatusView } from "../src/viewmodel.js";

import fxBudgetLive from "./fixtures/budget_live.json";
import fxStatusLive from "./fixtures/status_live.json";
import fxStatusStopped from "./fixtures/status_stopped.json";

const statusLive = fxStatusLive.body as StatusSnapshot;
const statusStopped = fxStatusStopped.body as unknown as StatusSnapshot;
const budgetLive = fxBudgetLive.body as BudgetSnapshot;

describe("status fixture renders verbatim", () => {
  const v = buildStatusView(statusLive);

  it("shows the exact recorded values", () => {
    expect(v.clock).toBe("8d 02:26:40");
    expect(v.state).toEqual({ label: "RUNNING", tone: "ok" });
    expect(v.ce).toEqual({ label: "CE up", tone: "ok" });
    expect(v.live).toBe("2,000");
    expect(v.target).toBe("2,000");
    expect(v.queued).toBe("36,124");
    expect(v.runningJobs).toBe("2,000");
    expect(v.completedJobs).toBe("31,876");
    expect(v.spend).toBe("$23,823.96");
    expect(v.remaining).toBe("$32,176.04");
    expect(v.remainingPercent).toBe("57.5%");
    expect(v.pinned).toBeNull();
    expect(v.guardCap).toBeNull();
  });

  it("maps every field of every group, in sorted id order", () => {
    expect(v.groupIds).toEqual([
      "aws-useast.t4x1",
      "az-useast.t4x1",
      "gcp-uscentral.t4x1",
    ]);
    v.groups.forEach((rowView, i) => {
      const g = statusLive.groups[v.groupIds[i]!]!;
      expect(rowView.id).toBe(g.id);
      expect(rowView.provider).toBe(g.provider);
      expect(rowView.region).toBe(g.region);
      expect(rowView.instanceType).toBe(g.instance_type);
      expect(rowView.price).toBe(formatUsd(g.price_usd_per_gpu_day));
      expect(rowView.capacity).toBe(formatInt(g.capacity));
      expect(rowView.desired).toBe(formatInt(g.desired));
      expect(rowView.provisioning).toBe(formatInt(g.provisioning));
      expect(rowView.running).toBe(formatInt(g.running));
      expect(rowView.draining).toBe(formatInt(g.draining));
      expect(rowView.shortfall).toBe(formatInt(g.shortfall));
      expect(rowView.preemptionRate).toBe(
        formatPreemptionRate(g.observed_preemption_rate),
      );
    });
    const az = v.groups[1]!;
    expect(az.price).toBe("$2.90");
    expect(az.desired).toBe("1,500");
    expect(az.running).toBe("1,500");
  });

  it("every status counter round-trips through the documented format", () => {
    expect(v.provisioning).toBe(formatInt(statusLive.provisioning));
    expect(v.failedJobs).toBe(formatInt(statusLive.failed_jobs));
    expect(v.preemptedJobEvents).toBe(
      formatInt(statusLive.preempted_job_events),
    );
    expect(v.instancePreemptions).toBe(
      formatInt(statusLive.instance_preemptions),
    );
    expect(v.connectionDrops).toBe(formatInt(statusLive.connection_drops));
    expect(v.spend).toBe(formatUsd(statusLive.spend_usd));
    expect(v.remainingPercent).toBe(
      formatPercent(statusLive.remaining_fraction),
    );
  });

  it("appears verbatim in the rendered HTML", () => {
    const html = renderStatusPanel(v);
    for (const s of ["8d 02:26:40", "RUNNING", "CE up", "2,000", "36,124"]) {
      expect(html).toContain(esc(s));
    }
    const groupsHtml = renderGroupsPanel(v);
    for (const g of v.groups) {
      expect(groupsHtml).toContain(esc(g.id));
      expect(groupsHtml).toContain(esc(g.price));
      expect(groupsHtml).toContain(esc(g.preemptionRate));
    }
  });
});

describe("stopped fixture renders verbatim", () => {
  const v = buildStatusView(statusStopped);

  it("carries the stop reason and zeroed fleet", () => {
    expect(v.state).toEqual({ label: "STOPPED: console drill", tone: "stop" });
    expect(v.live).toBe("0");
    expect(v.target).toBe("0");
    expect(v.runningJobs).toBe("0");
    expect(v.queued).toBe("38,120");
    expect(v.preemptedJobEvents).toBe("1,996");
    for (const g of v.groups) {
      expect(g.desired).toBe("0");
      expect(g.provisioning).toBe("0");
      expect(g.running).toBe("0");
      expect(g.draining).toBe("0");
    }
  });
});

describe("budget fixture renders verbatim", () => {
  const v = buildBudgetView(budgetLive);

  it("shows the exact recorded money", () => {
    expect(v.total).toBe("$56,000.00");
    expect(v.spent).toBe("$23,823.96");
    expect(v.remaining).toBe("$32,176.04");
    expect(v.remainingPercent).toBe("57.5%");
    expect(v.spentBarPercent).toBe(42.5);
    expect(v.overspent).toBe(false);
    expect(v.rate).toBe("$4,366.26/day");
    expect(v.byProvider).toEqual([
      { provider: "aws", amount: "$32.78" },
      { provider: "azure", amount: "$22,976.46" },
      { provider: "gcp", amount: "$814.72" },
    ]);
  });

  it("renders each alert with the recorded values", () => {
    expect(v.alerts).toHaveLength(budgetLive.alerts.length);
    v.alerts.forEach((a, i) => {
      const raw = budgetLive.alerts[i]!;
      expect(a.threshold).toBe(formatThreshold(raw.threshold));
      expect(a.at).toBe(formatClock(raw.at));
      expect(a.remainingPercent).toBe(formatPercent(raw.remaining_fraction));
      expect(a.rate).toBe(formatRate(raw.spend_rate_usd_per_day));
    });
    expect(v.alerts[0]).toEqual({
      threshold: "75%",
      at: "6d 01:00:00",
      remainingPercent: "74.8%",
      rate: "$3,213.36/day",
    });
    const html = renderBudgetPanel(v);
    expect(html).toContain("below 75%");
    expect(html).toContain("6d 01:00:00");
  });
});

describe("escaping", () => {
  it("neutralizes hostile strings from the API", () => {
    const hostile: StatusSnapshot = {
      ...statusStopped,
      stop_reason: '<img src=x onerror=alert(1)>"&',
      groups: {},
    };
    const html = renderStatusPanel(buildStatusView(hostile));
    expect(html).not.toContain("<img");
    expect(html).toContain("&lt;img");
    expect(html).toContain("&quot;&amp;");
  });
});
