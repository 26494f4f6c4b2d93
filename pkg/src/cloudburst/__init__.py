"""Deterministic simulator and control service for multi-cloud spot-GPU
provisioning campaigns."""

__version__ = "0.1.0"

from cloudburst.model import (
    InstanceType,
    Provider,
    Region,
    SpotMarket,
    accrue_instance_cost,
    blended_cost_per_gpu_day,
    fp32_eflop_hours,
)

__all__ = [
    "InstanceType",
    "Provider",
    "Region",
    "SpotMarket",
    "accrue_instance_cost",
    "blended_cost_per_gpu_day",
    "fp32_eflop_hours",
    "__version__",
]
