"""Deterministic random streams.

Every stochastic subsystem draws from its own named stream so that adding
draws in one subsystem never shifts another's sequence. A stream is a
SplitMix64 generator whose starting state is derived from the campaign
seed and a stable label; the same (seed, label) pair always replays the
same sequence on every platform and either kernel implementation.
"""

from __future__ import annotations

from cloudburst import kernels


def stream_state(seed: int, label: str) -> int:
    """Initial SplitMix64 state for a named stream."""
    return (seed ^ kernels.fnv1a64(label.encode("utf-8"))) & kernels.MASK64


class Stream:
    """A named deterministic random stream."""

    __slots__ = ("label", "state")

    def __init__(self, seed: int, label: str):
        self.label = label
        self.state = stream_state(seed, label)

    def next_u64(self) -> int:
        self.state, x = kernels.sm64_next(self.state)
        return x

    def uniform(self) -> float:
        """Uniform double in [0, 1)."""
        self.state, u = kernels.sm64_double(self.state)
        return u

    def uniform_int(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] (inclusive)."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        span = hi - lo + 1
        u = self.uniform()
        v = lo + int(u * span)
        return hi if v > hi else v

    def sample_hits(self, n: int, p: float) -> list[int]:
        """n Bernoulli(p) trials; returns the indices that hit."""
        self.state, hits = kernels.sample_hits(self.state, n, p)
        return list(hits)

    def __repr__(self):
        return f"Stream({self.label!r}, state=0x{self.state:016x})"
