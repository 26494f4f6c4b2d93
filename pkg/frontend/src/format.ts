/**
 * Deterministic display formatting.
 *
 * Everything here is pure string/integer math — no Intl, no locale
 * lookups — so the console renders the same bytes on every platform
 * and the tests can assert output verbatim.
 */

function groupThousands(digits: string): string {
  let out = "";
  for (let i = 0; i < digits.length; i++) {
    const fromEnd = digits.length - i;
    out += digits[i];
    if (fromEnd > 1 && fromEnd % 3 === 1) out += ",";
  }
  return out;
}

/** Integer with thousands separators: 1234567 → "1,234,567". */
export function formatInt(n: number): string {
  if (!Number.isFinite(n)) return "—";
  const v = Math.trunc(n);
  const sign = v < 0 ? "-" : "";
  return sign + groupThousands(String(Math.abs(v)));
}

/** US dollars, rounded to the cent: 52098.8715 → "$52,098.87". */
export function formatUsd(v: number): string {
  if (!Number.isFinite(v)) return "—";
  const sign = v < 0 ? "-" : "";
  const cents = Math.round(Math.abs(v) * 100);
  const whole = Math.floor(cents / 100);
  const rem = cents % 100;
  return `${sign}$${groupThousands(String(whole))}.${String(rem).padStart(2, "0")}`;
}

/** Dollars per day: "$8,120.00/day". */
export function formatRate(v: number): string {
  const usd = formatUsd(v);
  return usd === "—" ? usd : `${usd}/day`;
}

/**
 * Fraction as a percentage. Whole percentages drop the decimals
 * (0.75 → "75%"), anything else keeps one place (0.69663 → "69.7%").
 */
export function formatPercent(frac: number): string {
  if (!Number.isFinite(frac)) return "—";
  const pct = frac * 100;
  const fixed = pct.toFixed(1);
  return fixed.endsWith(".0") ? `${fixed.slice(0, -2)}%` : `${fixed}%`;
}

/** Simulation clock: 700000 → "8d 02:26:40". */
export function formatClock(nowS: number): string {
  if (!Number.isFinite(nowS) || nowS < 0) return "—";
  const t = Math.trunc(nowS);
  const days = Math.floor(t / 86400);
  const r = t % 86400;
  const hh = String(Math.floor(r / 3600)).padStart(2, "0");
  const mm = String(Math.floor((r % 3600) / 60)).padStart(2, "0");
  const ss = String(r % 60).padStart(2, "0");
  return `${days}d ${hh}:${mm}:${ss}`;
}

/** Short elapsed time for the staleness banner: 65 → "1m 5s". */
export function formatAgo(seconds: number): string {
  const s = Math.max(0, Math.trunc(seconds));
  if (s < 60) return `${s}s`;
  const m = Math.floor(s / 60);
  return `${m}m ${s % 60}s`;
}

/** Preemption rate estimate with fixed precision: "0.125/day". */
export function formatPreemptionRate(v: number): string {
  if (!Number.isFinite(v)) return "—";
  return `${v.toFixed(3)}/day`;
}

/** Threshold config string ("0.75") as a percentage label ("75%"). */
export function formatThreshold(threshold: string): string {
  const f = Number(threshold);
  return Number.isFinite(f) ? formatPercent(f) : threshold;
}
