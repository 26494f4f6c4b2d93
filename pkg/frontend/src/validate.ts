/**
 * Outbound-command validation.
 *
 * The service enforces strict request schemas (integer counts >= 0,
 * string reasons) and answers anything else with a 422.  The console
 * re-implements those bounds here and refuses to emit a request that
 * would fail them, so a fumbled form can never turn into an invalid
 * call.  Counts are additionally capped well below anything a real
 * campaign could want, and group ids are held to the character set
 * scenario files actually produce.
 */

/** Upper bound the console accepts for any GPU/instance count. */
export const MAX_TARGET = 1_000_000;

/** Longest emergency-stop reason the console will send. */
export const MAX_REASON_LENGTH = 200;

/** Group ids are "<region>.<instance-type>" — keep to a safe charset. */
const GROUP_ID_RE = /^[A-Za-z0-9._-]{1,128}$/;

/** Reason text used when the operator leaves the field blank. */
export const DEFAULT_REASON = "operator console";

export class ValidationError extends Error {
  override readonly name = "ValidationError";
}

/**
 * A non-negative integer count within bounds, or an error message.
 * Accepts only real integers — no NaN, no floats, no 1e3 notation
 * smuggled through Number().
 */
export function checkCount(value: unknown, label: string): string | null {
  if (typeof value !== "number" || !Number.isSafeInteger(value)) {
    return `${label} must be an integer`;
  }
  if (value < 0) return `${label} must be >= 0`;
  if (value > MAX_TARGET) return `${label} must be <= ${MAX_TARGET}`;
  return null;
}

/**
 * Parse a form field into a count.  Strictly digits (optional
 * surrounding whitespace): no signs, decimals, exponents, separators.
 * Returns null when the text is not an acceptable count.
 */
export function parseCount(raw: string): number | null {
  const text = raw.trim();
  if (!/^\d{1,7}$/.test(text)) return null;
  const n = Number(text);
  return checkCount(n, "count") === null ? n : null;
}

/** Syntactic group-id check (membership is the caller's job). */
export function checkGroupId(id: unknown): string | null {
  if (typeof id !== "string" || !GROUP_ID_RE.test(id)) {
    return "group id must be 1-128 chars of [A-Za-z0-9._-]";
  }
  return null;
}

/** Reason strings must be plain, non-empty, and bounded. */
export function checkReason(reason: unknown): string | null {
  if (typeof reason !== "string") return "reason must be a string";
  if (reason.trim().length === 0) return "reason must not be blank";
  if (reason.length > MAX_REASON_LENGTH) {
    return `reason must be <= ${MAX_REASON_LENGTH} characters`;
  }
  return null;
}

/** Normalize operator-typed reason text; blank falls back to a default. */
export function normalizeReason(raw: string): string {
  const text = raw.trim().slice(0, MAX_REASON_LENGTH);
  return text.length > 0 ? text : DEFAULT_REASON;
}

/** Throw ValidationError unless `err` is null. */
export function must(err: string | null): void {
  if (err !== null) throw new ValidationError(err);
}
