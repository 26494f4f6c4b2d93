/**
 * Typed client for the campaign control API.
 *
 * Response shapes mirror the service exactly.  Every mutating call
 * validates its arguments before building the request — an invalid
 * argument rejects locally with ValidationError and the fetch function
 * is never invoked.
 */

import { checkCount, checkGroupId, checkReason, must } from "./validate.js";

// -- response shapes ---------------------------------------------------------

export interface GroupSnapshot {
  id: string;
  provider: string;
  region: string;
  instance_type: string;
  price_usd_per_gpu_day: number;
  capacity: number;
  desired: number;
  provisioning: number;
  running: number;
  draining: number;
  shortfall: number;
  observed_preemption_rate: number;
}

export interface StatusSnapshot {
  now: number;
  finalized: boolean;
  stopped: boolean;
  stop_reason: string | null;
  pinned_target: number | null;
  target_gpus: number;
  guard_cap: number | null;
  ce_up: boolean;
  live_gpus: number;
  provisioning: number;
  queued: number;
  running_jobs: number;
  completed_jobs: number;
  failed_jobs: number;
  preempted_job_events: number;
  instance_preemptions: number;
  connection_drops: number;
  spend_usd: number;
  remaining_usd: number;
  remaining_fraction: number;
  groups: Record<string, GroupSnapshot>;
}

export interface BudgetAlert {
  threshold: string;
  at: number;
  remaining_fraction: number;
  spend_rate_usd_per_day: number;
}

export interface BudgetSnapshot {
  total_usd: number;
  spent_usd: number;
  remaining_usd: number;
  remaining_fraction: number;
  overspent: boolean;
  by_provider_usd: Record<string, number>;
  spend_rate_usd_per_day: number;
  alerts: BudgetAlert[];
}

export interface TimelineRow {
  hour: number;
  live_gpus: number;
  queued: number;
  running: number;
  spend_usd: string;
  remaining_frac: string;
  preemptions: number;
}

export interface TimelineResponse {
  rows: TimelineRow[];
}

export interface GroupsResponse {
  now: number;
  stopped: boolean;
  groups: GroupSnapshot[];
}

export interface CommandAccepted {
  accepted: boolean;
  command: string;
  executes_at: number;
}

// -- client ------------------------------------------------------------------

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Non-2xx response, carrying the service's `detail` when present. */
export class ApiError extends Error {
  override readonly name = "ApiError";

  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
  }
}

async function errorDetail(res: Response): Promise<string> {
  try {
    const body: unknown = await res.json();
    if (body && typeof body === "object" && "detail" in body) {
      const detail = (body as { detail: unknown }).detail;
      if (typeof detail === "string") return detail;
      return JSON.stringify(detail);
    }
  } catch {
    // fall through to the status line
  }
  return `HTTP ${res.status}`;
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchFn(this.base + path, {
      headers: { accept: "application/json" },
    });
    if (!res.ok) throw new ApiError(res.status, await errorDetail(res));
    return (await res.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const res = await this.fetchFn(this.base + path, {
      method: "POST",
      headers: {
        accept: "application/json",
        "content-type": "application/json",
      },
      body: JSON.stringify(body),
    });
    if (!res.ok) throw new ApiError(res.status, await errorDetail(res));
    return (await res.json()) as T;
  }

  status(): Promise<StatusSnapshot> {
    return this.get("/status");
  }

  budget(): Promise<BudgetSnapshot> {
    return this.get("/budget");
  }

  timeline(fromHour = 0): Promise<TimelineResponse> {
    const suffix =
      Number.isSafeInteger(fromHour) && fromHour > 0 ? `?from=${fromHour}` : "";
    return this.get(`/timeline${suffix}`);
  }

  groups(): Promise<GroupsResponse> {
    return this.get("/groups");
  }

  async setDesired(groupId: string, n: number): Promise<CommandAccepted> {
    must(checkGroupId(groupId));
    must(checkCount(n, "desired count"));
    return this.post(`/groups/${encodeURIComponent(groupId)}/desired`, { n });
  }

  async pinTarget(gpus: number): Promise<CommandAccepted> {
    must(checkCount(gpus, "target"));
    return this.post("/target", { gpus });
  }

  async emergencyStop(reason: string): Promise<CommandAccepted> {
    must(checkReason(reason));
    return this.post("/emergency-stop", { reason });
  }

  async resume(target: number): Promise<CommandAccepted> {
    must(checkCount(target, "resume target"));
    return this.post("/resume", { target });
  }
}
