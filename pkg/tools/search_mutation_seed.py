"""Offline search for seeded-random schedules under the over-permissive
oracle whose traces break the width bound (or decided-value count).

Development tool only; the found seed gets frozen into the test suite.
"""

import sys
import time

sys.path.insert(0, "src")

from bocast.checker import build_order, width_and_antichain
from bocast.rng import derive
from bocast.scenario import ScenarioConfig, SchedulePolicy, WorkItem
from bocast.sim import run_scenario


def make_cfg(base: int, s: int) -> ScenarioConfig:
    wl = {
        pid: (WorkItem(op="propose", instance=0, value=f"v{pid}"),)
        for pid in (3, 4, 5)
    }
    return ScenarioConfig(
        n=5,
        k=2,
        seed=derive(base, s),
        schedule=SchedulePolicy("seeded-random"),
        crash_plan=(),
        workload=wl,
        step_budget=50000,
        oracle_policy="first-k-plus-one-permissive",
    )


def main():
    base = int(sys.argv[1]) if len(sys.argv) > 1 else 11
    count = int(sys.argv[2]) if len(sys.argv) > 2 else 40000
    t0 = time.perf_counter()
    for s in range(count):
        trace = run_scenario(make_cfg(base, s))
        result = build_order(trace)
        width, antichain = width_and_antichain(result)
        if width > 2:
            print(f"HIT base={base} s={s} width={width} antichain={antichain}", flush=True)
            return 0
        if s and s % 5000 == 0:
            print(f"... {s} seeds, {time.perf_counter() - t0:.0f}s", flush=True)
    print(f"no hit in {count} seeds ({time.perf_counter() - t0:.0f}s)")
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
