/**
 * HTML renderers: view models in, markup strings out.
 *
 * Renderers are pure string builders (no document access) so the same
 * bytes that reach the browser can be asserted in node tests.  Every
 * interpolated value goes through esc().
 */

import type { ChartModel } from "./charts.js";
import { chartSvg } from "./charts.js";
import type {
  Badge,
  BudgetView,
  StatusView,
  TimelineLatestView,
} from "./viewmodel.js";

export function esc(s: string): string {
  return s
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

function badge(b: Badge): string {
  return `<span class="badge badge-${b.tone}">${esc(b.label)}</span>`;
}

function stat(label: string, value: string, extra = ""): string {
  const cls = extra ? ` stat-${extra}` : "";
  return `<div class="stat${cls}"><div class="stat-value">${esc(value)}</div><div class="stat-label">${esc(label)}</div></div>`;
}

// -- status ------------------------------------------------------------------

export function renderStatusPanel(v: StatusView): string {
  const notes: string[] = [];
  if (v.pinned !== null) notes.push(`pinned at ${v.pinned}`);
  if (v.guardCap !== null) notes.push(`budget guard caps at ${v.guardCap}`);
  const noteHtml = notes.length
    ? `<div class="target-note">${esc(notes.join(" · "))}</div>`
    : "";
  return [
    `<div class="status-head">`,
    `<span class="clock" title="simulated second ${v.simSeconds}">${esc(v.clock)}</span>`,
    badge(v.state),
    badge(v.ce),
    `</div>`,
    `<div class="stat-grid">`,
    stat("live GPUs", v.live, "live"),
    stat("target", v.target),
    stat("provisioning", v.provisioning),
    stat("queued jobs", v.queued),
    stat("running jobs", v.runningJobs),
    stat("completed", v.completedJobs),
    stat("failed", v.failedJobs),
    stat("job preemptions", v.preemptedJobEvents),
    stat("instance preemptions", v.instancePreemptions),
    stat("connection drops", v.connectionDrops),
    `</div>`,
    noteHtml,
  ].join("");
}

// -- groups ------------------------------------------------------------------

export function renderGroupsPanel(v: StatusView): string {
  if (v.groups.length === 0) return `<p class="muted">no scale groups</p>`;
  const rows = v.groups
    .map(
      (g) =>
        `<tr><td class="mono">${esc(g.id)}</td><td>${esc(g.provider)}</td>` +
        `<td>${esc(g.price)}</td><td class="num">${esc(g.capacity)}</td>` +
        `<td class="num">${esc(g.desired)}</td><td class="num">${esc(g.provisioning)}</td>` +
        `<td class="num">${esc(g.running)}</td><td class="num">${esc(g.draining)}</td>` +
        `<td class="num">${esc(g.shortfall)}</td><td class="num">${esc(g.preemptionRate)}</td></tr>`,
    )
    .join("");
  return (
    `<table class="groups"><thead><tr>` +
    `<th>group</th><th>provider</th><th>$/GPU-day</th><th>cap</th>` +
    `<th>desired</th><th>prov</th><th>running</th><th>drain</th>` +
    `<th>short</th><th>preempt rate</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}

// -- budget ------------------------------------------------------------------

export function renderBudgetPanel(v: BudgetView): string {
  const providers = v.byProvider
    .map(
      (p) =>
        `<span class="provider">${esc(p.provider)} <b>${esc(p.amount)}</b></span>`,
    )
    .join(" ");
  const alerts = v.alerts.length
    ? `<table class="alerts"><thead><tr><th>alert</th><th>fired at</th><th>remaining</th><th>rate</th></tr></thead><tbody>` +
      v.alerts
        .map(
          (a) =>
            `<tr><td>below ${esc(a.threshold)}</td><td>${esc(a.at)}</td>` +
            `<td>${esc(a.remainingPercent)}</td><td>${esc(a.rate)}</td></tr>`,
        )
        .join("") +
      `</tbody></table>`
    : `<p class="muted">no budget alerts fired</p>`;
  const overspentCls = v.overspent ? " bar-overspent" : "";
  return [
    `<div class="budget-line">`,
    `<span>spent <b>${esc(v.spent)}</b> of <b>${esc(v.total)}</b></span>`,
    `<span>remaining <b>${esc(v.remaining)}</b> (${esc(v.remainingPercent)})</span>`,
    `<span>rate <b>${esc(v.rate)}</b></span>`,
    `</div>`,
    `<div class="bar"><div class="bar-fill${overspentCls}" style="width:${v.spentBarPercent}%"></div></div>`,
    `<div class="providers">${providers}</div>`,
    alerts,
  ].join("");
}

// -- timeline ----------------------------------------------------------------

export function renderTimelinePanel(
  chart: ChartModel,
  latest: TimelineLatestView | null,
): string {
  const line = latest
    ? `<div class="timeline-latest">${esc(latest.hour)} · ${esc(latest.live)} live · ` +
      `${esc(latest.queued)} queued · ${esc(latest.running)} running · ${esc(latest.spend)} spent</div>`
    : "";
  const legend =
    `<div class="legend"><span class="key key-gpu"></span>live GPUs` +
    `<span class="key key-spend"></span>cumulative spend</div>`;
  return chartSvg(chart) + legend + line;
}

// -- controls ----------------------------------------------------------------

export interface ControlsUiState {
  stopArmed: boolean;
  busy: boolean;
  message: { kind: "ok" | "error"; text: string } | null;
}

export function renderControls(v: StatusView, ui: ControlsUiState): string {
  const dis = ui.busy ? " disabled" : "";
  const parts: string[] = [];

  if (ui.message) {
    const mark = ui.message.kind === "ok" ? "✓" : "✗";
    parts.push(
      `<div class="message message-${ui.message.kind}">${mark} ${esc(ui.message.text)}</div>`,
    );
  }

  if (v.finalized) {
    parts.push(`<p class="muted">campaign finished — controls disabled</p>`);
    return parts.join("");
  }

  if (v.stopped) {
    parts.push(
      `<form class="control" data-cmd="resume">`,
      `<label>resume with fleet target <input name="target" inputmode="numeric" autocomplete="off" placeholder="GPUs"${dis}></label>`,
      `<button type="submit"${dis}>Resume</button>`,
      `</form>`,
      `<p class="muted">stopped — only resume is accepted</p>`,
    );
    return parts.join("");
  }

  const options = v.groupIds
    .map((id) => `<option value="${esc(id)}">${esc(id)}</option>`)
    .join("");
  parts.push(
    `<form class="control" data-cmd="desired">`,
    `<label>group <select name="group"${dis}>${options}</select></label>`,
    `<label>desired instances <input name="n" inputmode="numeric" autocomplete="off" placeholder="count"${dis}></label>`,
    `<button type="submit"${dis}>Set desired</button>`,
    `</form>`,
    `<form class="control" data-cmd="pin">`,
    `<label>pin fleet target <input name="gpus" inputmode="numeric" autocomplete="off" placeholder="GPUs"${dis}></label>`,
    `<button type="submit"${dis}>Pin</button>`,
    `</form>`,
  );

  if (ui.stopArmed) {
    parts.push(
      `<form class="control control-stop" data-cmd="stop">`,
      `<label>reason <input name="reason" autocomplete="off" value="operator console"${dis}></label>`,
      `<button type="submit" class="danger"${dis}>Confirm emergency stop</button>`,
      `<button type="button" data-action="cancel-stop"${dis}>Cancel</button>`,
      `</form>`,
    );
  } else {
    parts.push(
      `<button type="button" class="danger" data-action="arm-stop"${dis}>Emergency stop…</button>`,
    );
  }
  return parts.join("");
}

// -- banner ------------------------------------------------------------------

export type BannerState =
  | { kind: "connecting" }
  | { kind: "live" }
  | { kind: "stale"; ago: string; lastClock: string };

export function renderBanner(state: BannerState): string {
  switch (state.kind) {
    case "connecting":
      return `<div class="banner banner-wait">connecting to campaign…</div>`;
    case "live":
      return "";
    case "stale":
      return (
        `<div class="banner banner-stale">connection lost — retrying; ` +
        `last update ${esc(state.ago)} ago (sim ${esc(state.lastClock)})</div>`
      );
  }
}
