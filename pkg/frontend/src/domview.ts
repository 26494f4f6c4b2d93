/**
 * Browser glue: panel containers and delegated event wiring.
 *
 * Deliberately logic-free — all state and decisions live in the
 * controller; this file only assigns innerHTML and forwards DOM events
 * as (command, fields) pairs.
 */

import type { ConsoleController, ConsoleView } from "./controller.js";

const PANEL_IDS = {
  banner: "banner",
  status: "panel-status",
  groups: "panel-groups",
  budget: "panel-budget",
  timeline: "panel-timeline",
  controls: "panel-controls",
} as const;

export class DomView implements ConsoleView {
  constructor(private readonly doc: Document) {}

  private set(id: string, html: string): void {
    const el = this.doc.getElementById(id);
    if (el) el.innerHTML = html;
  }

  renderBanner(html: string): void {
    this.set(PANEL_IDS.banner, html);
  }

  renderStatus(html: string): void {
    this.set(PANEL_IDS.status, html);
  }

  renderGroups(html: string): void {
    this.set(PANEL_IDS.groups, html);
  }

  renderBudget(html: string): void {
    this.set(PANEL_IDS.budget, html);
  }

  renderTimeline(html: string): void {
    this.set(PANEL_IDS.timeline, html);
  }

  renderControls(html: string): void {
    this.set(PANEL_IDS.controls, html);
  }
}

export function bindEvents(doc: Document, controller: ConsoleController): void {
  doc.addEventListener("click", (event) => {
    const target = event.target as Element | null;
    const actionEl = target?.closest?.("[data-action]");
    if (!actionEl) return;
    event.preventDefault();
    const action = actionEl.getAttribute("data-action");
    if (action) controller.handleAction(action);
  });

  doc.addEventListener("submit", (event) => {
    const form = event.target as HTMLFormElement | null;
    const cmd = form?.getAttribute?.("data-cmd");
    if (!form || !cmd) return;
    event.preventDefault();
    const fields: Record<string, string> = {};
    new FormData(form).forEach((value, key) => {
      fields[key] = String(value);
    });
    void controller.handleSubmit(cmd, fields);
  });
}
