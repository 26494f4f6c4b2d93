"""Compiled-vs-pure kernel benchmark.

Times each hot kernel in both implementations (the Cython extension and
the pure-Python twin), then runs one full campaign per implementation in
a subprocess — the selector binds at import, so a clean process is the
honest way to switch — and checks the two event logs hash identically.

Usage:
    python3 benchmarks/bench_kernels.py [--quick] [--scenario PATH]
"""

from __future__ import annotations

import argparse
import hashlib
import json
import subprocess
import sys
import tempfile
import time
import timeit
from pathlib import Path

from cloudburst import _kernels_py as kpy

try:
    from cloudburst import _kernels_c as kc
except ImportError:  # pragma: no cover - build without the extension
    kc = None

ROOT = Path(__file__).resolve().parent.parent

_CHILD = """
import hashlib, json, sys, tempfile, time
from pathlib import Path
from cloudburst import kernels
from cloudburst.report import run_campaign
from cloudburst.scenario import load_scenario

sc = load_scenario(sys.argv[1])
log = Path(tempfile.mkdtemp()) / "bench.events.jsonl"
t0 = time.perf_counter()
result = run_campaign(sc, log_path=log)
dt = time.perf_counter() - t0
print(json.dumps({
    "impl": kernels.IMPLEMENTATION,
    "seconds": dt,
    "events": len(result.engine.events),
    "sha256": hashlib.sha256(log.read_bytes()).hexdigest(),
}))
"""


def bench(label: str, stmt, number: int) -> float:
    """Best-of-5 wall time for `number` calls of stmt, in seconds."""
    return min(timeit.repeat(stmt, number=number, repeat=5))


def microbenches(quick: bool):
    n = 20_000 if quick else 200_000
    label = b"preempt.azure-eastus.t4x1"
    windows = ([7200, 36000, 72000], [10800, 39600, 75600])

    def sm64_walk(mod):
        def run():
            s = 12345
            for _ in range(50):
                s, _u = mod.sm64_double(s)
        return run

    cases = [
        ("sm64_double x50", sm64_walk, n // 50),
        ("fnv1a64 (26B)", lambda mod: (lambda: mod.fnv1a64(label)), n),
        (
            "sample_hits(200, 0.01)",
            lambda mod: (lambda: mod.sample_hits(99, 200, 0.01)),
            n // 200,
        ),
        (
            "accrue_span",
            lambda mod: (lambda: mod.accrue_span(2_900_000, 4, 86_461)),
            n,
        ),
        (
            "drop_time (3 windows)",
            lambda mod: (lambda: mod.drop_time(60, 300, 600, *windows)),
            n,
        ),
    ]

    print(f"{'kernel':<24} {'python':>12} {'compiled':>12} {'speedup':>9}")
    for name, make, number in cases:
        t_py = bench(name, make(kpy), number)
        if kc is None:
            print(f"{name:<24} {t_py / number * 1e9:>10.0f}ns {'n/a':>12} {'n/a':>9}")
            continue
        t_c = bench(name, make(kc), number)
        print(
            f"{name:<24} {t_py / number * 1e9:>10.0f}ns "
            f"{t_c / number * 1e9:>10.0f}ns {t_py / t_c:>8.1f}x"
        )


def end_to_end(scenario: Path):
    results = {}
    for impl, env_extra in (("c", {}), ("py", {"CLOUDBURST_PURE": "1"})):
        if impl == "c" and kc is None:
            continue
        import os

        env = dict(os.environ, **env_extra)
        out = subprocess.run(
            [sys.executable, "-c", _CHILD, str(scenario)],
            capture_output=True,
            text=True,
            env=env,
            check=True,
        )
        results[impl] = json.loads(out.stdout)

    print()
    for impl, r in results.items():
        print(
            f"full campaign [{r['impl']:>6}]: {r['seconds']:.2f}s, "
            f"{r['events']} events ({r['events'] / r['seconds']:,.0f}/s)"
        )
    hashes = {r["sha256"] for r in results.values()}
    if len(results) == 2:
        status = "identical" if len(hashes) == 1 else "DIFFERENT"
        print(f"event-log sha256 across implementations: {status}")
        if len(hashes) != 1:
            raise SystemExit(1)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quick", action="store_true", help="fewer iterations")
    ap.add_argument(
        "--scenario",
        type=Path,
        default=ROOT / "scenarios" / "reference.json",
        help="scenario for the end-to-end timing",
    )
    args = ap.parse_args()
    print(f"compiled extension available: {kc is not None}")
    microbenches(args.quick)
    end_to_end(args.scenario)


if __name__ == "__main__":
    main()
