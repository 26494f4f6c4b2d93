"""Unit tests for the pricing/throughput arithmetic in cloudburst.model."""

import math

import pytest
from hypothesis import given, strategies as st

from cloudburst.model import (
    InstanceType,
    Region,
    SpotMarket,
    accrue_instance_cost,
    blended_cost_per_gpu_day,
    fp32_eflop_hours,
    micro_to_usd_str,
    usd_to_micro,
)

T4 = InstanceType(id="t4", gpus_per_instance=1, fp32_tflops_per_gpu=8.1)


def market(price_usd, capacity=1000, rate=0.0):
    return SpotMarket(
        instance_type=T4,
        price_micro_per_gpu_day=usd_to_micro(price_usd),
        capacity=capacity,
        preemption_rate_per_day=rate,
    )


class TestMoney:
    def test_exact_parse(self):
        assert usd_to_micro("2.9") == 2_900_000
        assert usd_to_micro(2.9) == 2_900_000
        assert usd_to_micro(58000) == 58_000_000_000
        assert usd_to_micro("0.000001") == 1

    def test_sub_micro_rejected(self):
        with pytest.raises(ValueError):
            usd_to_micro("0.0000001")

    def test_render(self):
        assert micro_to_usd_str(2_900_000) == "2.900000"
        assert micro_to_usd_str(-1) == "-0.000001"
        assert micro_to_usd_str(0) == "0.000000"


class TestFp32EflopHours:
    def test_t4_fleet_value(self):
        # 16k GPU-days of T4 time: 16000 * 24 * 8.1e-6 = 3.1104 EFLOP-hours.
        assert fp32_eflop_hours(16000, 8.1) == pytest.approx(3.1104, abs=1e-12)

    def test_zero(self):
        assert fp32_eflop_hours(0, 8.1) == 0.0

    def test_domain(self):
        with pytest.raises(ValueError):
            fp32_eflop_hours(-1, 8.1)
        with pytest.raises(ValueError):
            fp32_eflop_hours(1, 0)

    @given(
        st.floats(min_value=0, max_value=1e6, allow_nan=False),
        st.floats(min_value=0.001, max_value=1000, allow_nan=False),
    )
    def test_linear_in_gpu_days(self, gpu_days, tflops):
        one = fp32_eflop_hours(1.0, tflops)
        assert fp32_eflop_hours(gpu_days, tflops) == pytest.approx(
            gpu_days * one, rel=1e-12
        )


class TestBlendedCost:
    def test_headline_value(self):
        assert blended_cost_per_gpu_day(58000, 16000) == pytest.approx(3.625)

    def test_domain(self):
        with pytest.raises(ValueError):
            blended_cost_per_gpu_day(100, 0)

    @given(
        st.floats(min_value=0, max_value=1e9, allow_nan=False),
        st.floats(min_value=1e-6, max_value=1e9, allow_nan=False),
    )
    def test_inverts(self, total, days):
        blended = blended_cost_per_gpu_day(total, days)
        assert blended * days == pytest.approx(total, rel=1e-9, abs=1e-9)


class TestAccrueInstanceCost:
    def test_full_day_is_exact_price(self):
        m = market("2.9")
        assert accrue_instance_cost(m, 1, 86400) == 2_900_000

    def test_half_day_four_gpus(self):
        m = market("2.9")
        assert accrue_instance_cost(m, 4, 43200) == 5_800_000

    def test_zero_seconds(self):
        assert accrue_instance_cost(market("2.9"), 1, 0) == 0

    def test_rounds_half_up(self):
        # price 1 micro-USD/GPU-day: 43200 s is exactly half a micro-USD.
        m = SpotMarket(instance_type=T4, price_micro_per_gpu_day=1, capacity=1)
        assert accrue_instance_cost(m, 1, 43199) == 0
        assert accrue_instance_cost(m, 1, 43200) == 1
        assert accrue_instance_cost(m, 1, 86400) == 1

    def test_domain(self):
        m = market("2.9")
        with pytest.raises(ValueError):
            accrue_instance_cost(m, 1, -1)
        with pytest.raises(ValueError):
            accrue_instance_cost(m, -1, 1)

    @given(
        st.integers(min_value=1, max_value=10_000_000),
        st.integers(min_value=0, max_value=30 * 86400),
        st.integers(min_value=0, max_value=30 * 86400),
        st.integers(min_value=1, max_value=8),
    )
    def test_partition_additivity(self, price_micro, s1, s2, gpus):
        """Splitting an interval loses at most one micro-USD at the cut."""
        m = SpotMarket(instance_type=T4, price_micro_per_gpu_day=price_micro, capacity=1)
        whole = accrue_instance_cost(m, gpus, s1 + s2)
        parts = accrue_instance_cost(m, gpus, s1) + accrue_instance_cost(m, gpus, s2)
        assert abs(whole - parts) <= 1

    @given(
        st.integers(min_value=1, max_value=10_000_000),
        st.integers(min_value=0, max_value=30 * 86400),
        st.integers(min_value=1, max_value=8),
    )
    def test_matches_real_arithmetic(self, price_micro, seconds, gpus):
        m = SpotMarket(instance_type=T4, price_micro_per_gpu_day=price_micro, capacity=1)
        exact = gpus * seconds * price_micro / 86400
        got = accrue_instance_cost(m, gpus, seconds)
        assert abs(got - exact) <= 0.5 + 1e-9


class TestModelInvariants:
    def test_market_rejects_bad_price(self):
        with pytest.raises(ValueError):
            SpotMarket(instance_type=T4, price_micro_per_gpu_day=0, capacity=1)

    def test_market_rejects_negative_rate(self):
        with pytest.raises(ValueError):
            SpotMarket(
                instance_type=T4,
                price_micro_per_gpu_day=1,
                capacity=1,
                preemption_rate_per_day=-0.5,
            )

    def test_region_rejects_zero_nat_timeout(self):
        with pytest.raises(ValueError):
            Region(id="r", provider_id="p", nat_idle_timeout_s=0)

    def test_instance_type_rejects_zero_gpus(self):
        with pytest.raises(ValueError):
            InstanceType(id="x", gpus_per_instance=0)
