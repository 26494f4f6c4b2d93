# cython: language_level=3
# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the simulation hot kernels.

Must stay bit-for-bit interchangeable with cloudburst._kernels_py: the
same SplitMix64 stepping, the same 53-bit double conversion, the same
integer rounding. Parity is enforced by tests/test_kernels_parity.py.
"""

from libc.stdint cimport uint64_t, int64_t

IMPLEMENTATION = "c"

MASK64 = (1 << 64) - 1

cdef uint64_t _GAMMA = 0x9E3779B97F4A7C15ULL
cdef uint64_t _MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t _MIX2 = 0x94D049BB133111EBULL
cdef double _INV_2_53 = 1.0 / 9007199254740992.0

cdef uint64_t _FNV_OFFSET = 0xCBF29CE484222325ULL
cdef uint64_t _FNV_PRIME = 0x100000001B3ULL


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash, used to derive per-label stream seeds."""
    cdef uint64_t h = _FNV_OFFSET
    cdef unsigned char b
    for b in data:
        h = (h ^ b) * _FNV_PRIME
    return h


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * _MIX1
    z = (z ^ (z >> 27)) * _MIX2
    return z ^ (z >> 31)


def sm64_next(state) -> tuple:
    """One SplitMix64 step: returns (new_state, 64-bit output)."""
    cdef uint64_t s = <uint64_t> state
    s += _GAMMA
    return s, _mix(s)


def sm64_double(state) -> tuple:
    """One step producing a uniform double in [0, 1) from the top 53 bits."""
    cdef uint64_t s = <uint64_t> state
    s += _GAMMA
    return s, <double> (_mix(s) >> 11) * _INV_2_53


def sample_hits(state, n, p) -> tuple:
    """Draw n uniforms; return (new_state, indices where u < p).

    Always consumes exactly n draws so stream positions are independent
    of p. Callers skip the call entirely when p is 0 and nothing can hit.
    """
    cdef uint64_t s = <uint64_t> state
    cdef Py_ssize_t count = n
    cdef double prob = p
    cdef Py_ssize_t i
    cdef list hits = []
    for i in range(count):
        s += _GAMMA
        if <double> (_mix(s) >> 11) * _INV_2_53 < prob:
            hits.append(i)
    return s, hits


def accrue_span(price_micro_per_gpu_day, gpus, seconds) -> int:
    """Micro-USD cost of a billing span, rounded half-up."""
    cdef int64_t num = (
        <int64_t> gpus * <int64_t> seconds * <int64_t> price_micro_per_gpu_day
    )
    return (num + 43200) // 86400


def drop_time(r, k, n, starts, ends) -> int:
    """Absolute time at which a pilot's NAT mapping expires, or -1 for never.

    Same contract as the pure-Python version: outage windows sorted and
    non-overlapping, r outside every window, keepalive landing exactly at
    last_traffic + n is too late.
    """
    cdef int64_t cr = r, ck = k, cn = n
    cdef int64_t last, cand, t, s, e
    cdef Py_ssize_t m, i
    if ck >= cn:
        return cr + cn
    last = cr
    m = len(starts)
    i = 0
    while i < m and <int64_t> ends[i] <= cr:
        i += 1
    while i < m:
        s = <int64_t> starts[i]
        e = <int64_t> ends[i]
        if s > last:
            cand = cr + ((s - 1 - cr) // ck) * ck
            if cand > last:
                last = cand
        t = cr + ((e - cr + ck - 1) // ck) * ck
        i += 1
        while i < m and <int64_t> starts[i] <= t:
            if t < <int64_t> ends[i]:
                t = cr + ((<int64_t> ends[i] - cr + ck - 1) // ck) * ck
            i += 1
        if t >= last + cn:
            return last + cn
        last = t
    return -1
