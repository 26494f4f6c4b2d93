"""Static domain model: providers, regions, spot markets, instance types,
and the pricing/throughput arithmetic every other module leans on.

Money is integer micro-USD end to end so spend sums are exact; only the
rendering helpers convert back to decimal dollars. Simulation time is
integer seconds from campaign start.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation

MICRO_PER_USD = 1_000_000
SECONDS_PER_DAY = 86_400
SECONDS_PER_HOUR = 3_600


def usd_to_micro(amount) -> int:
    """Parse a decimal USD amount (str/int/float) into exact micro-USD.

    Floats are routed through their shortest decimal repr, so a scenario
    value like 2.9 becomes exactly 2_900_000 and never 2_899_999.
    """
    try:
        d = Decimal(str(amount))
    except InvalidOperation:
        raise ValueError(f"not a decimal USD amount: {amount!r}") from None
    scaled = d * MICRO_PER_USD
    if scaled != scaled.to_integral_value():
        raise ValueError(f"USD amount {amount!r} has sub-micro precision")
    return int(scaled)


def micro_to_usd(micro: int) -> float:
    return micro / MICRO_PER_USD


def micro_to_usd_str(micro: int) -> str:
    """Exact decimal rendering, always six fractional digits."""
    sign = "-" if micro < 0 else ""
    micro = abs(micro)
    return f"{sign}{micro // MICRO_PER_USD}.{micro % MICRO_PER_USD:06d}"


@dataclass(frozen=True)
class InstanceType:
    id: str
    gpus_per_instance: int = 1
    gpu_model: str = "NVIDIA T4"
    fp32_tflops_per_gpu: float = 8.1

    def __post_init__(self):
        if self.gpus_per_instance < 1:
            raise ValueError(f"instance type {self.id}: gpus_per_instance must be >= 1")
        if self.fp32_tflops_per_gpu <= 0:
            raise ValueError(f"instance type {self.id}: fp32_tflops_per_gpu must be > 0")


@dataclass(frozen=True)
class SpotMarket:
    """Priced, capacity-limited, preemption-prone GPU supply in one region.

    capacity is the number of simultaneously provisionable instances;
    preemption_rate is the expected reclamations per instance per day.
    """

    instance_type: InstanceType
    price_micro_per_gpu_day: int
    capacity: int
    preemption_rate_per_day: float = 0.0

    def __post_init__(self):
        if self.price_micro_per_gpu_day <= 0:
            raise ValueError("spot_price_per_gpu_day must be > 0")
        if self.capacity < 0:
            raise ValueError("capacity must be >= 0")
        if self.preemption_rate_per_day < 0:
            raise ValueError("preemption_rate must be >= 0")

    @property
    def price_usd_per_gpu_day(self) -> float:
        return micro_to_usd(self.price_micro_per_gpu_day)


@dataclass(frozen=True)
class Region:
    id: str
    provider_id: str
    nat_idle_timeout_s: int
    markets: tuple[SpotMarket, ...] = ()

    def __post_init__(self):
        if self.nat_idle_timeout_s <= 0:
            raise ValueError(f"region {self.id}: nat_idle_timeout must be > 0")


@dataclass(frozen=True)
class Provider:
    id: str
    name: str
    region_ids: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.region_ids:
            raise ValueError(f"provider {self.id}: at least one region required")


def fp32_eflop_hours(gpu_days: float, tflops_per_gpu: float) -> float:
    """Convert GPU-days at a per-GPU fp32 rate into fp32 EFLOP-hours.

    gpu_days x 24 h/day x tflops x 10^-6 (TFLOPS-hours -> EFLOP-hours).
    """
    if gpu_days < 0:
        raise ValueError("gpu_days must be >= 0")
    if tflops_per_gpu <= 0:
        raise ValueError("tflops_per_gpu must be > 0")
    return gpu_days * 24.0 * tflops_per_gpu * 1e-6


def blended_cost_per_gpu_day(total_cost_usd: float, gpu_days: float) -> float:
    """Campaign-average $/GPU-day; the headline unit price of delivered compute."""
    if gpu_days <= 0:
        raise ValueError("gpu_days must be > 0")
    return total_cost_usd / gpu_days


def accrue_instance_cost(market: SpotMarket, gpus: int, seconds: int) -> int:
    """Cost in micro-USD of `gpus` GPUs billed at this market for `seconds`.

    Per-second proration of the per-GPU-day price, rounded half-up to the
    nearest micro-USD. Integer arithmetic throughout, so partitioned
    intervals re-sum to within one micro-USD per boundary and full-lifetime
    charges are reproducible exactly.
    """
    if seconds < 0:
        raise ValueError("seconds must be >= 0")
    if gpus < 0:
        raise ValueError("gpus must be >= 0")
    num = gpus * seconds * market.price_micro_per_gpu_day
    return (num + SECONDS_PER_DAY // 2) // SECONDS_PER_DAY
