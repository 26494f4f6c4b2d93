/**
 * Console controller: the polling loop and command funnel.
 *
 * Owns all client-side state (latest snapshots, staleness, form
 * gating) and is fully driveable from tests — scheduling and the clock
 * are injected, rendering goes through the ConsoleView interface, and
 * network access happens only via the ApiClient.
 *
 * Command discipline: every submission is validated locally first
 * (bounds, group membership, campaign state), at most one command is
 * in flight at a time, and an accepted command triggers an immediate
 * refresh so the operator sees its effect on the next snapshot.
 */

import type { ApiClient, CommandAccepted, StatusSnapshot } from "./api.js";
import { ApiError } from "./api.js";
import { buildChart } from "./charts.js";
import { formatAgo, formatClock } from "./format.js";
import type { BannerState, ControlsUiState } from "./render.js";
import {
  renderBanner,
  renderBudgetPanel,
  renderControls,
  renderGroupsPanel,
  renderStatusPanel,
  renderTimelinePanel,
} from "./render.js";
import { normalizeReason, parseCount, ValidationError } from "./validate.js";
import {
  buildBudgetView,
  buildStatusView,
  buildTimelineLatest,
} from "./viewmodel.js";

export interface ConsoleView {
  renderBanner(html: string): void;
  renderStatus(html: string): void;
  renderGroups(html: string): void;
  renderBudget(html: string): void;
  renderTimeline(html: string): void;
  renderControls(html: string): void;
}

export interface ConsoleOptions {
  pollIntervalMs?: number;
  maxBackoffMs?: number;
  stopArmTimeoutMs?: number;
  now?: () => number;
  schedule?: (fn: () => void, ms: number) => unknown;
  clearSchedule?: (handle: unknown) => void;
}

export class ConsoleController {
  private readonly pollIntervalMs: number;
  private readonly maxBackoffMs: number;
  private readonly stopArmTimeoutMs: number;
  private readonly now: () => number;
  private readonly schedule: (fn: () => void, ms: number) => unknown;
  private readonly clearSchedule: (handle: unknown) => void;

  private lastStatus: StatusSnapshot | null = null;
  private lastSuccessWallMs: number | null = null;
  private failures = 0;
  private pollInFlight = false;
  private commandInFlight = false;
  private stopArmed = false;
  private message: ControlsUiState["message"] = null;
  private running = false;
  private pollTimer: unknown = null;
  private armTimer: unknown = null;
  private lastHtml = new Map<string, string>();

  constructor(
    private readonly api: ApiClient,
    private readonly view: ConsoleView,
    opts: ConsoleOptions = {},
  ) {
    this.pollIntervalMs = opts.pollIntervalMs ?? 1000;
    this.maxBackoffMs = opts.maxBackoffMs ?? 15_000;
    this.stopArmTimeoutMs = opts.stopArmTimeoutMs ?? 6_000;
    this.now = opts.now ?? (() => Date.now());
    this.schedule = opts.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearSchedule =
      opts.clearSchedule ?? ((h) => clearTimeout(h as number));
  }

  // -- lifecycle -------------------------------------------------------------

  start(): void {
    if (this.running) return;
    this.running = true;
    this.paint("banner", renderBanner({ kind: "connecting" }));
    void this.pollOnce();
  }

  stop(): void {
    this.running = false;
    if (this.pollTimer !== null) this.clearSchedule(this.pollTimer);
    this.pollTimer = null;
  }

  /** Delay before the next poll given the current failure streak. */
  backoffMs(): number {
    const factor = Math.pow(2, Math.min(this.failures, 4));
    return Math.min(this.pollIntervalMs * factor, this.maxBackoffMs);
  }

  // -- polling ---------------------------------------------------------------

  async pollOnce(): Promise<void> {
    if (this.pollInFlight) return;
    this.pollInFlight = true;
    try {
      const [status, budget, timeline] = await Promise.all([
        this.api.status(),
        this.api.budget(),
        this.api.timeline(),
      ]);
      this.lastStatus = status;
      this.lastSuccessWallMs = this.now();
      this.failures = 0;

      const sv = buildStatusView(status);
      this.paint("banner", renderBanner({ kind: "live" }));
      this.paint("status", renderStatusPanel(sv));
      this.paint("groups", renderGroupsPanel(sv));
      this.paint("budget", renderBudgetPanel(buildBudgetView(budget)));
      this.paint(
        "timeline",
        renderTimelinePanel(
          buildChart(timeline.rows),
          buildTimelineLatest(timeline.rows),
        ),
      );
      this.paint("controls", renderControls(sv, this.uiState()));
    } catch {
      this.failures += 1;
      this.paint("banner", renderBanner(this.staleBanner()));
    } finally {
      this.pollInFlight = false;
      this.scheduleNext();
    }
  }

  private staleBanner(): BannerState {
    if (this.lastSuccessWallMs === null || this.lastStatus === null) {
      return { kind: "connecting" };
    }
    const agoS = (this.now() - this.lastSuccessWallMs) / 1000;
    return {
      kind: "stale",
      ago: formatAgo(agoS),
      lastClock: formatClock(this.lastStatus.now),
    };
  }

  private scheduleNext(): void {
    if (!this.running) return;
    if (this.pollTimer !== null) this.clearSchedule(this.pollTimer);
    this.pollTimer = this.schedule(() => {
      this.pollTimer = null;
      void this.pollOnce();
    }, this.backoffMs());
  }

  // -- rendering -------------------------------------------------------------

  private paint(panel: string, html: string): void {
    if (this.lastHtml.get(panel) === html) return;
    this.lastHtml.set(panel, html);
    switch (panel) {
      case "banner":
        return this.view.renderBanner(html);
      case "status":
        return this.view.renderStatus(html);
      case "groups":
        return this.view.renderGroups(html);
      case "budget":
        return this.view.renderBudget(html);
      case "timeline":
        return this.view.renderTimeline(html);
      case "controls":
        return this.view.renderControls(html);
    }
  }

  private uiState(): ControlsUiState {
    return {
      stopArmed: this.stopArmed,
      busy: this.commandInFlight,
      message: this.message,
    };
  }

  private repaintControls(): void {
    if (this.lastStatus === null) return;
    this.paint(
      "controls",
      renderControls(buildStatusView(this.lastStatus), this.uiState()),
    );
  }

  // -- actions (buttons) -----------------------------------------------------

  handleAction(action: string): void {
    switch (action) {
      case "arm-stop": {
        if (this.commandInFlight || this.lastStatus === null) return;
        this.stopArmed = true;
        this.message = null;
        if (this.armTimer !== null) this.clearSchedule(this.armTimer);
        this.armTimer = this.schedule(() => {
          this.armTimer = null;
          this.stopArmed = false;
          this.repaintControls();
        }, this.stopArmTimeoutMs);
        this.repaintControls();
        return;
      }
      case "cancel-stop": {
        this.disarmStop();
        this.repaintControls();
        return;
      }
    }
  }

  private disarmStop(): void {
    this.stopArmed = false;
    if (this.armTimer !== null) {
      this.clearSchedule(this.armTimer);
      this.armTimer = null;
    }
  }

  // -- command submission (forms) ---------------------------------------------

  async handleSubmit(
    cmd: string,
    fields: Record<string, string>,
  ): Promise<void> {
    if (this.commandInFlight) return;
    const status = this.lastStatus;
    if (status === null) {
      return this.fail("no campaign snapshot yet — try again");
    }
    if (status.finalized) {
      return this.fail("campaign already finished");
    }
    if (status.stopped && cmd !== "resume") {
      return this.fail("campaign is stopped; only resume is accepted");
    }

    let send: (() => Promise<CommandAccepted>) | null = null;
    let label = cmd;
    switch (cmd) {
      case "desired": {
        const group = fields["group"] ?? "";
        const n = parseCount(fields["n"] ?? "");
        if (!(group in status.groups)) {
          return this.fail(`unknown group ${group || "(none)"}`);
        }
        if (n === null) {
          return this.fail(
            "desired count must be an integer between 0 and 1,000,000",
          );
        }
        label = `set_desired ${group}=${n}`;
        send = () => this.api.setDesired(group, n);
        break;
      }
      case "pin": {
        const gpus = parseCount(fields["gpus"] ?? "");
        if (gpus === null) {
          return this.fail(
            "target must be an integer between 0 and 1,000,000",
          );
        }
        label = `pin_target ${gpus}`;
        send = () => this.api.pinTarget(gpus);
        break;
      }
      case "stop": {
        if (!this.stopArmed) {
          return this.fail("emergency stop is not armed");
        }
        const reason = normalizeReason(fields["reason"] ?? "");
        label = "emergency_stop";
        send = () => this.api.emergencyStop(reason);
        break;
      }
      case "resume": {
        const target = parseCount(fields["target"] ?? "");
        if (target === null) {
          return this.fail(
            "resume target must be an integer between 0 and 1,000,000",
          );
        }
        label = `resume ${target}`;
        send = () => this.api.resume(target);
        break;
      }
      default:
        return this.fail(`unknown command ${cmd}`);
    }

    this.commandInFlight = true;
    this.repaintControls();
    try {
      const ack = await send();
      this.disarmStop();
      this.message = {
        kind: "ok",
        text: `${label} accepted — executes at sim ${formatClock(ack.executes_at)}`,
      };
    } catch (err) {
      if (err instanceof ApiError) {
        this.message = { kind: "error", text: err.message };
      } else if (err instanceof ValidationError) {
        this.message = { kind: "error", text: err.message };
      } else {
        this.message = { kind: "error", text: "request failed — still retrying" };
      }
    } finally {
      this.commandInFlight = false;
    }
    this.repaintControls();
    await this.pollOnce();
  }

  private fail(text: string): void {
    this.message = { kind: "error", text };
    this.repaintControls();
  }
}
