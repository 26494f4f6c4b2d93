"""Pure-Python implementations of the simulation hot kernels.

The compiled module `cloudburst._kernels_c` exposes exactly the same
functions; `cloudburst.kernels` picks one at import time. Both must stay
bit-for-bit interchangeable — every function here is integer or
IEEE-double arithmetic with no platform-dependent behaviour.
"""

from __future__ import annotations

IMPLEMENTATION = "python"

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash, used to derive per-label stream seeds."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & MASK64
    return h


def sm64_next(state: int) -> tuple[int, int]:
    """One SplitMix64 step: returns (new_state, 64-bit output)."""
    state = (state + _GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return state, z ^ (z >> 31)


def sm64_double(state: int) -> tuple[int, float]:
    """One step producing a uniform double in [0, 1) from the top 53 bits."""
    state, z = sm64_next(state)
    return state, (z >> 11) * _INV_2_53


def sample_hits(state: int, n: int, p: float) -> tuple[int, list[int]]:
    """Draw n uniforms; return (new_state, indices where u < p).

    Always consumes exactly n draws so stream positions are independent
    of p. Callers skip the call entirely when p is 0 and nothing can hit.
    """
    hits = []
    for i in range(n):
        state = (state + _GAMMA) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        z ^= z >> 31
        if (z >> 11) * _INV_2_53 < p:
            hits.append(i)
    return state, hits


def accrue_span(price_micro_per_gpu_day: int, gpus: int, seconds: int) -> int:
    """Micro-USD cost of a billing span, rounded half-up."""
    num = gpus * seconds * price_micro_per_gpu_day
    return (num + 43200) // 86400


def drop_time(r: int, k: int, n: int, starts, ends) -> int:
    """Absolute time at which a pilot's NAT mapping expires, or -1 for never.

    The pilot registers (first traffic) at r and emits a keepalive every k
    seconds after that. A keepalive refreshes the mapping only if it lands
    outside every service-outage window [starts[i], ends[i]) — windows must
    be sorted and non-overlapping, and r must not lie inside one. The
    mapping dies at last_traffic + n unless new traffic lands strictly
    earlier; traffic at exactly last_traffic + n is already too late.
    """
    if k >= n:
        return r + n  # the very first keepalive misses the deadline
    last = r
    m = len(starts)
    i = 0
    while i < m and ends[i] <= r:
        i += 1
    while i < m:
        s, e = starts[i], ends[i]
        # every keepalive in (last, s) lands between windows and succeeds
        if s > last:
            cand = r + ((s - 1 - r) // k) * k
            if cand > last:
                last = cand
        # first keepalive at or after this window's end...
        t = r + ((e - r + k - 1) // k) * k
        # ...skipping any later windows it happens to fall into
        i += 1
        while i < m and starts[i] <= t:
            if t < ends[i]:
                t = r + ((ends[i] - r + k - 1) // k) * k
            i += 1
        if t >= last + n:
            return last + n
        last = t
    return -1
