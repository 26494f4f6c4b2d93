"""Scenario loading and validation.

A scenario is one human-editable JSON document describing everything a
campaign needs: providers/regions/markets, the ramp plan and allocation
policy, budget and guards, the job workload, overlay tuning, latencies,
scripted disturbances, and the RNG seed. Validation is strict and names
the offending field precisely; a scenario that loads is a scenario that
runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

from cloudburst.budget import DEFAULT_RATE_WINDOW_S, DEFAULT_THRESHOLDS
from cloudburst.model import InstanceType, Provider, Region, SpotMarket, usd_to_micro
from cloudburst.overlay import (
    DEFAULT_KEEPALIVE_INTERVAL_S,
    DEFAULT_PILOT_START_LATENCY_S,
)
from cloudburst.policy import (
    DEFAULT_CONTROL_TICK_S,
    DEFAULT_EWMA_HALF_LIFE_S,
    AllocationPolicy,
    BudgetGuard,
    RampPlan,
    RampStep,
)
from cloudburst.provision import (
    DEFAULT_DEPROVISION_LATENCY_S,
    DEFAULT_PROVISION_LATENCY_S,
)

DEFAULT_ACCRUAL_TICK_S = 3600

COMMANDS = frozenset(
    {"set_desired", "pin_target", "release_target", "emergency_stop", "resume"}
)


class ScenarioError(Exception):
    """Validation failure; the message begins with the offending field path."""


def _err(path: str, msg: str):
    raise ScenarioError(f"{path}: {msg}")


def _get(d: dict, key: str, path: str, required=True, default=None):
    if key not in d:
        if required:
            _err(f"{path}.{key}" if path else key, "required field missing")
        return default
    return d[key]


def _int(value, path: str, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _err(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        _err(path, f"must be >= {minimum}, got {value}")
    return value


def _num(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _err(path, f"expected a number, got {value!r}")
    return float(value)


def _str(value, path: str) -> str:
    if not isinstance(value, str) or not value:
        _err(path, f"expected a non-empty string, got {value!r}")
    return value

def _bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        _err(path, f"expected a boolean, got {value!r}")
    return value


def _list(value, path: str) -> list:
    if not isinstance(value, list):
        _err(path, f"expected a list, got {type(value).__name__}")
    return value


def _dict(value, path: str) -> dict:
    if not isinstance(value, dict):
        _err(path, f"expected an object, got {type(value).__name__}")
    return value


def _usd(value, path: str) -> int:
    try:
        return usd_to_micro(value)
    except (ValueError, TypeError) as e:
        _err(path, f"not a USD amount: {e}")


def _fraction(value, path: str) -> Fraction:
    try:
        f = Fraction(str(value))
    except (ValueError, ZeroDivisionError):
        _err(path, f"not a fraction: {value!r}")
    return f


@dataclass(frozen=True)
class GroupSpec:
    """One scale group: a (region, instance type) pair with its market."""

    id: str
    provider_id: str
    region: Region
    market: SpotMarket


@dataclass(frozen=True)
class WorkloadSpec:
    community: str
    job_count: int
    duration_kind: str  # "uniform_int" | "fixed"
    duration_min_s: int
    duration_max_s: int
    arrival_kind: str  # "at" | "stagger"
    arrival_at_s: int = 0
    arrival_start_s: int = 0
    arrival_end_s: int = 0


@dataclass(frozen=True)
class OverlaySpec:
    keepalive_interval_s: int = DEFAULT_KEEPALIVE_INTERVAL_S
    pilot_start_latency_s: int = DEFAULT_PILOT_START_LATENCY_S
    pilot_restart: bool = True
    log_keepalives: bool = False


@dataclass(frozen=True)
class LatencySpec:
    provision_s: int = DEFAULT_PROVISION_LATENCY_S
    deprovision_s: int = DEFAULT_DEPROVISION_LATENCY_S


@dataclass(frozen=True)
class BudgetSpec:
    total_micro: int
    thresholds: tuple[str, ...] = DEFAULT_THRESHOLDS
    rate_window_s: int = DEFAULT_RATE_WINDOW_S


@dataclass(frozen=True)
class PolicySpec:
    ramp: RampPlan
    allocation: AllocationPolicy
    guards: tuple[BudgetGuard, ...] = ()
    control_tick_s: int = DEFAULT_CONTROL_TICK_S
    ewma_half_life_s: int = DEFAULT_EWMA_HALF_LIFE_S


@dataclass(frozen=True)
class Disturbance:
    kind: str  # "ce_outage" | "degradation"
    begin_s: int
    end_s: int
    factor: Optional[Fraction] = None  # degradation speed multiplier


@dataclass(frozen=True)
class ScriptedCommand:
    at: int
    command: str
    args: dict


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    horizon_s: int
    instance_types: dict[str, InstanceType]
    providers: tuple[Provider, ...]
    groups: tuple[GroupSpec, ...]
    budget: BudgetSpec
    policy: PolicySpec
    workload: WorkloadSpec
    ce_id: str
    accepted_communities: tuple[str, ...]
    overlay: OverlaySpec
    latencies: LatencySpec
    accrual_tick_s: int
    disturbances: tuple[Disturbance, ...]
    operator_script: tuple[ScriptedCommand, ...]
    baseline_onprem_gpu_hours: Optional[float] = None

    def outage_windows(self) -> list[tuple[int, int]]:
        """CE outage intervals, sorted and merged (overlap or touch)."""
        raw = sorted(
            (d.begin_s, d.end_s) for d in self.disturbances if d.kind == "ce_outage"
        )
        merged: list[tuple[int, int]] = []
        for b, e in raw:
            if merged and b <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], e))
            else:
                merged.append((b, e))
        return merged

    def degradation_windows(self) -> list[tuple[int, int, Fraction]]:
        return sorted(
            (d.begin_s, d.end_s, d.factor)
            for d in self.disturbances
            if d.kind == "degradation"
        )


def _parse_instance_types(raw, path) -> dict[str, InstanceType]:
    out: dict[str, InstanceType] = {}
    for i, item in enumerate(_list(raw, path)):
        p = f"{path}[{i}]"
        d = _dict(item, p)
        tid = _str(_get(d, "id", p), f"{p}.id")
        if tid in out:
            _err(f"{p}.id", f"duplicate instance type {tid!r}")
        try:
            out[tid] = InstanceType(
                id=tid,
                gpus_per_instance=_int(
                    _get(d, "gpus_per_instance", p, required=False, default=1),
                    f"{p}.gpus_per_instance",
                    minimum=1,
                ),
                gpu_model=_get(d, "gpu_model", p, required=False, default="NVIDIA T4"),
                fp32_tflops_per_gpu=_num(
                    _get(d, "fp32_tflops_per_gpu", p, required=False, default=8.1),
                    f"{p}.fp32_tflops_per_gpu",
                ),
            )
        except ValueError as e:
            _err(p, str(e))
    if not out:
        _err(path, "at least one instance type required")
    return out


def _parse_providers(raw, path, types: dict[str, InstanceType]):
    providers: list[Provider] = []
    groups: list[GroupSpec] = []
    seen_regions: set[str] = set()
    for i, item in enumerate(_list(raw, path)):
        pp = f"{path}[{i}]"
        d = _dict(item, pp)
        pid = _str(_get(d, "id", pp), f"{pp}.id")
        name = _get(d, "name", pp, required=False, default=pid)
        region_ids = []
        for j, rraw in enumerate(_list(_get(d, "regions", pp), f"{pp}.regions")):
            rp = f"{pp}.regions[{j}]"
            rd = _dict(rraw, rp)
            rid = _str(_get(rd, "id", rp), f"{rp}.id")
            if rid in seen_regions:
                _err(f"{rp}.id", f"duplicate region {rid!r}")
            seen_regions.add(rid)
            nat = _int(
                _get(rd, "nat_idle_timeout_s", rp), f"{rp}.nat_idle_timeout_s"
            )
            if nat <= 0:
                _err(f"{rp}.nat_idle_timeout_s", "must be > 0")
            markets = []
            for k, mraw in enumerate(
                _list(_get(rd, "markets", rp), f"{rp}.markets")
            ):
                mp = f"{rp}.markets[{k}]"
                md = _dict(mraw, mp)
                tname = _str(_get(md, "instance_type", mp), f"{mp}.instance_type")
                if tname not in types:
                    _err(f"{mp}.instance_type", f"unknown instance type {tname!r}")
                price = _usd(
                    _get(md, "price_usd_per_gpu_day", mp),
                    f"{mp}.price_usd_per_gpu_day",
                )
                if price <= 0:
                    _err(f"{mp}.price_usd_per_gpu_day", "must be > 0")
                rate = _num(
                    _get(md, "preemption_rate_per_day", mp, required=False, default=0.0),
                    f"{mp}.preemption_rate_per_day",
                )
                if rate < 0:
                    _err(f"{mp}.preemption_rate_per_day", "must be >= 0")
                try:
                    market = SpotMarket(
                        instance_type=types[tname],
                        price_micro_per_gpu_day=price,
                        capacity=_int(
                            _get(md, "capacity", mp), f"{mp}.capacity", minimum=0
                        ),
                        preemption_rate_per_day=rate,
                    )
                except ValueError as e:
                    _err(mp, str(e))
                markets.append(market)
            region = Region(
                id=rid, provider_id=pid, nat_idle_timeout_s=nat, markets=tuple(markets)
            )
            region_ids.append(rid)
            for market in markets:
                gid = f"{rid}.{market.instance_type.id}"
                groups.append(
                    GroupSpec(id=gid, provider_id=pid, region=region, market=market)
                )
        try:
            providers.append(
                Provider(id=pid, name=name, region_ids=tuple(region_ids))
            )
        except ValueError as e:
            _err(pp, str(e))
    if not groups:
        _err(path, "no markets defined anywhere")
    groups.sort(key=lambda g: g.id)
    ids = [g.id for g in groups]
    if len(ids) != len(set(ids)):
        _err(path, "duplicate scale-group ids (region + instance type)")
    return tuple(providers), tuple(groups)


def _parse_budget(raw, path) -> BudgetSpec:
    d = _dict(raw, path)
    total = _usd(_get(d, "total_usd", path), f"{path}.total_usd")
    if total <= 0:
        _err(f"{path}.total_usd", "must be > 0")
    thresholds = _get(d, "thresholds", path, required=False, default=None)
    if thresholds is None:
        tlist = DEFAULT_THRESHOLDS
    else:
        tlist = tuple(
            str(t) for t in _list(thresholds, f"{path}.thresholds")
        )
        fracs = []
        for i, t in enumerate(tlist):
            f = _fraction(t, f"{path}.thresholds[{i}]")
            if not (0 < f < 1):
                _err(f"{path}.thresholds[{i}]", "must be in (0, 1)")
            fracs.append(f)
        if any(b >= a for a, b in zip(fracs, fracs[1:])):
            _err(f"{path}.thresholds", "must be strictly descending")
    window = _int(
        _get(d, "rate_window_s", path, required=False, default=DEFAULT_RATE_WINDOW_S),
        f"{path}.rate_window_s",
        minimum=1,
    )
    return BudgetSpec(total_micro=total, thresholds=tlist, rate_window_s=window)


def _parse_policy(raw, path) -> PolicySpec:
    d = _dict(raw, path)
    rp = f"{path}.ramp"
    rd = _dict(_get(d, "ramp", path), rp)
    steps = []
    for i, sraw in enumerate(_list(_get(rd, "steps", rp), f"{rp}.steps")):
        sp = f"{rp}.steps[{i}]"
        pair = _list(sraw, sp)
        if len(pair) != 2:
            _err(sp, "expected [activate_at_s, target_gpus]")
        steps.append(
            RampStep(
                activate_at=_int(pair[0], f"{sp}[0]", minimum=0),
                target_gpus=_int(pair[1], f"{sp}[1]", minimum=0),
            )
        )
    if not steps:
        _err(f"{rp}.steps", "at least one step required")
    hold = _int(
        _get(rd, "hold_validation_s", rp, required=False, default=0),
        f"{rp}.hold_validation_s",
        minimum=0,
    )
    try:
        ramp = RampPlan(steps=tuple(steps), hold_validation_s=hold)
    except ValueError as e:
        _err(rp, str(e))

    ap = f"{path}.allocation"
    ad = _dict(_get(d, "allocation", path, required=False, default={}), ap)
    try:
        allocation = AllocationPolicy(
            mode=_get(ad, "mode", ap, required=False, default="weighted"),
            preemption_penalty_usd=_num(
                _get(ad, "preemption_penalty_usd", ap, required=False, default=0.0),
                f"{ap}.preemption_penalty_usd",
            ),
            per_region_cap=(
                None
                if ad.get("per_region_cap") is None
                else _int(ad["per_region_cap"], f"{ap}.per_region_cap", minimum=0)
            ),
        )
    except ValueError as e:
        _err(ap, str(e))

    guards = []
    gpath = f"{path}.guards"
    for i, graw in enumerate(
        _list(_get(d, "guards", path, required=False, default=[]), gpath)
    ):
        gp = f"{gpath}[{i}]"
        pair = _list(graw, gp)
        if len(pair) != 2:
            _err(gp, "expected [remaining_fraction, max_gpus]")
        frac = _fraction(pair[0], f"{gp}[0]")
        if not (0 <= frac < 1):
            _err(f"{gp}[0]", "must be in [0, 1)")
        guards.append(
            BudgetGuard(fraction=frac, max_gpus=_int(pair[1], f"{gp}[1]", minimum=0))
        )
    fracs = [g.fraction for g in guards]
    if any(b >= a for a, b in zip(fracs, fracs[1:])):
        _err(gpath, "must be sorted by fraction, strictly descending")

    return PolicySpec(
        ramp=ramp,
        allocation=allocation,
        guards=tuple(guards),
        control_tick_s=_int(
            _get(d, "control_tick_s", path, required=False, default=DEFAULT_CONTROL_TICK_S),
            f"{path}.control_tick_s",
            minimum=1,
        ),
        ewma_half_life_s=_int(
            _get(
                d,
                "ewma_half_life_s",
                path,
                required=False,
                default=DEFAULT_EWMA_HALF_LIFE_S,
            ),
            f"{path}.ewma_half_life_s",
            minimum=1,
        ),
    )


def _parse_workload(raw, path) -> WorkloadSpec:
    d = _dict(raw, path)
    community = _str(_get(d, "community", path), f"{path}.community")
    count = _int(_get(d, "job_count", path), f"{path}.job_count", minimum=0)

    dp = f"{path}.duration"
    dd = _dict(_get(d, "duration", path), dp)
    dkind = _get(dd, "kind", dp)
    if dkind == "uniform_int":
        dmin = _int(_get(dd, "min_s", dp), f"{dp}.min_s", minimum=0)
        dmax = _int(_get(dd, "max_s", dp), f"{dp}.max_s", minimum=0)
        if dmax < dmin:
            _err(f"{dp}.max_s", "must be >= min_s")
    elif dkind == "fixed":
        dmin = dmax = _int(_get(dd, "seconds", dp), f"{dp}.seconds", minimum=0)
    else:
        _err(f"{dp}.kind", f"unknown duration kind {dkind!r}")

    ap = f"{path}.arrival"
    ad = _dict(_get(d, "arrival", path, required=False, default={"kind": "at", "at_s": 0}), ap)
    akind = _get(ad, "kind", ap)
    at_s = start = end = 0
    if akind == "at":
        at_s = _int(_get(ad, "at_s", ap, required=False, default=0), f"{ap}.at_s", minimum=0)
    elif akind == "stagger":
        start = _int(_get(ad, "start_s", ap), f"{ap}.start_s", minimum=0)
        end = _int(_get(ad, "end_s", ap), f"{ap}.end_s", minimum=0)
        if end <= start:
            _err(f"{ap}.end_s", "must be > start_s")
    else:
        _err(f"{ap}.kind", f"unknown arrival kind {akind!r}")

    return WorkloadSpec(
        community=community,
        job_count=count,
        duration_kind=dkind,
        duration_min_s=dmin,
        duration_max_s=dmax,
        arrival_kind=akind,
        arrival_at_s=at_s,
        arrival_start_s=start,
        arrival_end_s=end,
    )


def _parse_disturbances(raw, path) -> tuple[Disturbance, ...]:
    out = []
    for i, item in enumerate(_list(raw, path)):
        p = f"{path}[{i}]"
        d = _dict(item, p)
        kind = _get(d, "kind", p)
        if kind not in ("ce_outage", "degradation"):
            _err(f"{p}.kind", f"unknown disturbance kind {kind!r}")
        begin = _int(_get(d, "begin_s", p), f"{p}.begin_s", minimum=0)
        end = _int(_get(d, "end_s", p), f"{p}.end_s", minimum=0)
        if end <= begin:
            _err(f"{p}.end_s", "must be > begin_s")
        factor = None
        if kind == "degradation":
            factor = _fraction(_get(d, "factor", p), f"{p}.factor")
            if factor <= 0:
                _err(f"{p}.factor", "must be > 0")
        out.append(Disturbance(kind=kind, begin_s=begin, end_s=end, factor=factor))
    spans = sorted((d.begin_s, d.end_s) for d in out if d.kind == "degradation")
    for (_, e0), (b1, _) in zip(spans, spans[1:]):
        if b1 < e0:
            _err(path, "degradation windows must not overlap")
    return tuple(out)


def _parse_script(raw, path, group_ids: set[str]) -> tuple[ScriptedCommand, ...]:
    out = []
    for i, item in enumerate(_list(raw, path)):
        p = f"{path}[{i}]"
        d = _dict(item, p)
        at = _int(_get(d, "at_s", p), f"{p}.at_s", minimum=0)
        cmd = _get(d, "command", p)
        if cmd not in COMMANDS:
            _err(f"{p}.command", f"unknown command {cmd!r}")
        args: dict[str, Any] = {}
        if cmd == "set_desired":
            gid = _str(_get(d, "group", p), f"{p}.group")
            if gid not in group_ids:
                _err(f"{p}.group", f"unknown scale group {gid!r}")
            args = {"group": gid, "n": _int(_get(d, "n", p), f"{p}.n", minimum=0)}
        elif cmd == "pin_target":
            args = {"gpus": _int(_get(d, "gpus", p), f"{p}.gpus", minimum=0)}
        elif cmd == "emergency_stop":
            args = {"reason": _get(d, "reason", p, required=False, default="")}
        elif cmd == "resume":
            args = {"target": _int(_get(d, "target", p), f"{p}.target", minimum=0)}
        out.append(ScriptedCommand(at=at, command=cmd, args=args))
    out.sort(key=lambda c: c.at)
    return tuple(out)


def scenario_from_dict(data: dict, name_fallback: str = "unnamed") -> Scenario:
    """Validate a parsed scenario document into a Scenario."""
    d = _dict(data, "scenario")
    name = _get(d, "name", "", required=False, default=name_fallback)
    seed = _int(_get(d, "seed", ""), "seed")
    horizon = _int(_get(d, "horizon_s", ""), "horizon_s", minimum=0)

    types = _parse_instance_types(_get(d, "instance_types", ""), "instance_types")
    providers, groups = _parse_providers(_get(d, "providers", ""), "providers", types)
    budget = _parse_budget(_get(d, "budget", ""), "budget")
    policy = _parse_policy(_get(d, "policy", ""), "policy")
    workload = _parse_workload(_get(d, "workload", ""), "workload")

    ce_raw = _dict(_get(d, "ce", "", required=False, default={}), "ce")
    ce_id = _get(ce_raw, "id", "ce", required=False, default="ce")
    communities = tuple(
        _str(c, f"ce.accepted_communities[{i}]")
        for i, c in enumerate(
            _list(
                _get(ce_raw, "accepted_communities", "ce", required=False, default=["icecube"]),
                "ce.accepted_communities",
            )
        )
    )
    if not communities:
        _err("ce.accepted_communities", "must not be empty")

    ov_raw = _dict(_get(d, "overlay", "", required=False, default={}), "overlay")
    overlay = OverlaySpec(
        keepalive_interval_s=_int(
            _get(ov_raw, "keepalive_interval_s", "overlay", required=False,
                 default=DEFAULT_KEEPALIVE_INTERVAL_S),
            "overlay.keepalive_interval_s",
            minimum=1,
        ),
        pilot_start_latency_s=_int(
            _get(ov_raw, "pilot_start_latency_s", "overlay", required=False,
                 default=DEFAULT_PILOT_START_LATENCY_S),
            "overlay.pilot_start_latency_s",
            minimum=0,
        ),
        pilot_restart=_bool(
            _get(ov_raw, "pilot_restart", "overlay", required=False, default=True),
            "overlay.pilot_restart",
        ),
        log_keepalives=_bool(
            _get(ov_raw, "log_keepalives", "overlay", required=False, default=False),
            "overlay.log_keepalives",
        ),
    )

    lat_raw = _dict(_get(d, "latencies", "", required=False, default={}), "latencies")
    latencies = LatencySpec(
        provision_s=_int(
            _get(lat_raw, "provision_s", "latencies", required=False,
                 default=DEFAULT_PROVISION_LATENCY_S),
            "latencies.provision_s",
            minimum=0,
        ),
        deprovision_s=_int(
            _get(lat_raw, "deprovision_s", "latencies", required=False,
                 default=DEFAULT_DEPROVISION_LATENCY_S),
            "latencies.deprovision_s",
            minimum=0,
        ),
    )

    accrual = _int(
        _get(d, "accrual_tick_s", "", required=False, default=DEFAULT_ACCRUAL_TICK_S),
        "accrual_tick_s",
        minimum=1,
    )
    disturbances = _parse_disturbances(
        _get(d, "disturbances", "", required=False, default=[]), "disturbances"
    )
    script = _parse_script(
        _get(d, "operator_script", "", required=False, default=[]),
        "operator_script",
        {g.id for g in groups},
    )
    baseline = _get(d, "baseline_onprem_gpu_hours", "", required=False, default=None)
    if baseline is not None:
        baseline = _num(baseline, "baseline_onprem_gpu_hours")
        if baseline < 0:
            _err("baseline_onprem_gpu_hours", "must be >= 0")

    return Scenario(
        name=name,
        seed=seed,
        horizon_s=horizon,
        instance_types=types,
        providers=providers,
        groups=groups,
        budget=budget,
        policy=policy,
        workload=workload,
        ce_id=ce_id,
        accepted_communities=communities,
        overlay=overlay,
        latencies=latencies,
        accrual_tick_s=accrual,
        disturbances=disturbances,
        operator_script=script,
        baseline_onprem_gpu_hours=baseline,
    )


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fp:
            data = json.load(fp)
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ScenarioError(
            f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}"
        ) from None
    import os

    fallback = os.path.splitext(os.path.basename(str(path)))[0]
    return scenario_from_dict(data, name_fallback=fallback)
