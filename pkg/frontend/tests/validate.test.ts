import { describe, expect, it } from "vitest";

import {
  DEFAULT_REASON,
  MAX_REASON_LENGTH,
  MAX_TARGET,
  checkCount,
  checkGroupId,
  checkReason,
  normalizeReason,
  parseCount,
} from "../src/validate.js";

describe("checkCount", () => {
  it("accepts integers within bounds", () => {
    expect(checkCount(0, "n")).toBeNull();
    expect(checkCount(42, "n")).toBeNull();
    expect(checkCount(MAX_TARGET, "n")).toBeNull();
  });

  it("rejects everything else", () => {
    expect(checkCount(-1, "n")).toMatch(/>= 0/);
    expect(checkCount(MAX_TARGET + 1, "n")).toMatch(/<=/);
    expect(checkCount(1.5, "n")).toMatch(/integer/);
    expect(checkCount(Number.NaN, "n")).toMatch(/integer/);
    expect(checkCount(Infinity, "n")).toMatch(/integer/);
    expect(checkCount(2 ** 53, "n")).toMatch(/integer/);
    expect(checkCount("5", "n")).toMatch(/integer/);
    expect(checkCount(null, "n")).toMatch(/integer/);
    expect(checkCount(undefined, "n")).toMatch(/integer/);
    expect(checkCount(-0.5, "n")).toMatch(/integer/);
  });
});

describe("parseCount", () => {
  it("parses plain decimal digit strings", () => {
    expect(parseCount("0")).toBe(0);
    expect(parseCount("42")).toBe(42);
    expect(parseCount(" 42 ")).toBe(42);
    expect(parseCount("0042")).toBe(42);
    expect(parseCount("1000000")).toBe(1_000_000);
  });

  it("rejects signs, floats, exponents, junk, and out-of-range", () => {
    for (const raw of [
      "",
      " ",
      "-1",
      "+5",
      "1.5",
      "1e3",
      "0x10",
      "NaN",
      "Infinity",
      "abc",
      "1,000",
      "12 34",
      "42\nx",
      "١٢٣",
      "⑤",
      "1000001",
      "9999999",
      "99999999999999999999",
    ]) {
      expect(parseCount(raw), JSON.stringify(raw)).toBeNull();
    }
  });
});

describe("checkGroupId", () => {
  it("accepts scenario-shaped ids", () => {
    expect(checkGroupId("az-useast.t4x1")).toBeNull();
    expect(checkGroupId("a_b-c.d")).toBeNull();
  });

  it("rejects empty, spaced, slashed, long, or non-string ids", () => {
    expect(checkGroupId("")).not.toBeNull();
    expect(checkGroupId("a b")).not.toBeNull();
    expect(checkGroupId("../../etc/passwd")).not.toBeNull();
    expect(checkGroupId("a/b")).not.toBeNull();
    expect(checkGroupId("x".repeat(129))).not.toBeNull();
    expect(checkGroupId(42)).not.toBeNull();
    expect(checkGroupId(null)).not.toBeNull();
  });
});

describe("checkReason / normalizeReason", () => {
  it("bounds reasons", () => {
    expect(checkReason("drill")).toBeNull();
    expect(checkReason("")).not.toBeNull();
    expect(checkReason("   ")).not.toBeNull();
    expect(checkReason("x".repeat(MAX_REASON_LENGTH + 1))).not.toBeNull();
    expect(checkReason(42)).not.toBeNull();
  });

  it("normalizes operator input", () => {
    expect(normalizeReason("  why  ")).toBe("why");
    expect(normalizeReason("")).toBe(DEFAULT_REASON);
    expect(normalizeReason("x".repeat(500))).toHaveLength(MAX_REASON_LENGTH);
  });
});
