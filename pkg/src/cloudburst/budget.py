"""Multi-provider campaign budget ledger.

Tracks every spend entry in integer micro-USD, aggregates per provider and
in total, fires one-shot alerts as the remaining fraction crosses
configured thresholds, and reports the trailing-window spending rate.

Threshold comparisons are exact rational arithmetic (micro-USD integers
against Fraction thresholds), so "strictly below 50% remaining" means
precisely that — no float rounding at the boundary.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction

from cloudburst.model import SECONDS_PER_DAY, micro_to_usd

DEFAULT_THRESHOLDS = ("0.75", "0.5", "0.25", "0.1")
DEFAULT_RATE_WINDOW_S = 3 * SECONDS_PER_DAY


@dataclass(frozen=True)
class SpendRecord:
    """One spend entry: `amount_micro` charged to `provider` at time `at`,
    attributed to scale group `source`."""

    provider: str
    amount_micro: int
    at: int
    source: str = ""

    def __post_init__(self):
        if self.amount_micro < 0:
            raise ValueError("spend amount must be >= 0")
        if self.at < 0:
            raise ValueError("spend time must be >= 0")


@dataclass(frozen=True)
class Alert:
    """One-shot notification that the remaining budget fraction dropped
    strictly below `threshold`."""

    threshold: float
    at: int
    remaining_fraction: float
    spend_rate_usd_per_day: float


@dataclass(frozen=True)
class BudgetSummary:
    total_budget_micro: int
    spent_micro: int
    remaining_micro: int
    remaining_fraction: float
    by_provider: dict[str, int]
    overspent: bool


def _parse_threshold(value) -> Fraction:
    f = Fraction(str(value))
    if not (0 < f < 1):
        raise ValueError(f"threshold {value!r} must be in (0, 1)")
    return f


class BudgetLedger:
    """Append-only spend ledger with one-shot threshold alerts.

    Single-writer: the simulation kernel appends entries in global time
    order (out-of-order inserts are tolerated but slow). Reads are pure.
    """

    def __init__(
        self,
        total_budget_micro: int,
        thresholds=DEFAULT_THRESHOLDS,
        rate_window_s: int = DEFAULT_RATE_WINDOW_S,
    ):
        if total_budget_micro <= 0:
            raise ValueError("total budget must be > 0")
        if rate_window_s <= 0:
            raise ValueError("rate window must be > 0")
        parsed = [_parse_threshold(t) for t in thresholds]
        if any(b >= a for a, b in zip(parsed, parsed[1:])):
            raise ValueError("thresholds must be strictly descending")
        self.total_budget_micro = total_budget_micro
        self.thresholds: tuple[Fraction, ...] = tuple(parsed)
        self.rate_window_s = rate_window_s
        self.entries: list[SpendRecord] = []
        self.spent_micro = 0
        self.by_provider: dict[str, int] = {}
        self.fired: set[Fraction] = set()
        self.alerts: list[Alert] = []
        self._last_at: dict[str, int] = {}
        # parallel arrays sorted by time, for O(log n) window sums
        self._times: list[int] = []
        self._cum: list[int] = []

    # -- writes ------------------------------------------------------

    def record_spend(self, record: SpendRecord) -> list[Alert]:
        """Append one entry and return any alerts it newly triggers."""
        last = self._last_at.get(record.provider)
        if last is not None and record.at < last:
            raise ValueError(
                f"spend time regression for provider {record.provider}: "
                f"{record.at} < {last}"
            )
        self._last_at[record.provider] = record.at
        self.entries.append(record)
        self.spent_micro += record.amount_micro
        self.by_provider[record.provider] = (
            self.by_provider.get(record.provider, 0) + record.amount_micro
        )
        self._insert(record.at, record.amount_micro)
        return self.evaluate_thresholds(record.at)

    def _insert(self, at: int, micro: int):
        if not self._times or at >= self._times[-1]:
            prev = self._cum[-1] if self._cum else 0
            self._times.append(at)
            self._cum.append(prev + micro)
            return
        idx = bisect.bisect_right(self._times, at)
        prev = self._cum[idx - 1] if idx else 0
        self._times.insert(idx, at)
        self._cum.insert(idx, prev + micro)
        for j in range(idx + 1, len(self._cum)):
            self._cum[j] += micro

    # -- reads -------------------------------------------------------

    @property
    def remaining_micro(self) -> int:
        return self.total_budget_micro - self.spent_micro

    @property
    def remaining_fraction(self) -> float:
        return self.remaining_micro / self.total_budget_micro

    def aggregate(self) -> BudgetSummary:
        return BudgetSummary(
            total_budget_micro=self.total_budget_micro,
            spent_micro=self.spent_micro,
            remaining_micro=self.remaining_micro,
            remaining_fraction=self.remaining_fraction,
            by_provider=dict(self.by_provider),
            overspent=self.spent_micro > self.total_budget_micro,
        )

    def remaining_below(self, threshold: Fraction) -> bool:
        """Exact test: remaining fraction strictly below `threshold`."""
        return (
            self.remaining_micro * threshold.denominator
            < threshold.numerator * self.total_budget_micro
        )

    def remaining_at_or_below(self, threshold: Fraction) -> bool:
        """Exact test: remaining fraction at or below `threshold`."""
        return (
            self.remaining_micro * threshold.denominator
            <= threshold.numerator * self.total_budget_micro
        )

    def evaluate_thresholds(self, now: int, thresholds=None) -> list[Alert]:
        """Fire (once each) every configured threshold the remaining
        fraction has dropped strictly below. A single large spend may
        trigger several at once; they are returned in descending order."""
        todo = self.thresholds if thresholds is None else tuple(
            _parse_threshold(t) for t in thresholds
        )
        new = []
        for t in todo:
            if t in self.fired or not self.remaining_below(t):
                continue
            self.fired.add(t)
            alert = Alert(
                threshold=float(t),
                at=now,
                remaining_fraction=self.remaining_fraction,
                spend_rate_usd_per_day=self.spend_rate(self.rate_window_s, now),
            )
            self.alerts.append(alert)
            new.append(alert)
        return new

    def _spent_through(self, t: int) -> int:
        idx = bisect.bisect_right(self._times, t)
        return self._cum[idx - 1] if idx else 0

    def spend_rate(self, window_s: int, now: int) -> float:
        """USD/day spent over the trailing window (now - window, now]."""
        if window_s <= 0:
            raise ValueError("window must be > 0")
        in_window = self._spent_through(now) - self._spent_through(now - window_s)
        return micro_to_usd(in_window) * SECONDS_PER_DAY / window_s
