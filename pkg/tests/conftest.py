"""Shared fixtures.

The expensive artifacts (bound estimation, minute-long closed-loop runs) are
computed once per session. Each is wrapped in ``Timed`` carrying the wall
time it cost, so acceptance tests that consume a fixture can charge that
time against their own wall-clock budget instead of getting it for free.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Any, Callable

import pytest

from safehold.acc_benchmark import (
    acc_filter,
    build_scenario,
    certified_tuning,
    ride_region,
    wide_band_tuning,
)
from safehold.constants import (
    estimate_bounds,
    practical_sampling_time,
    violation_free_sampling_time,
)
from safehold.simulator import RunSummary, Trace, analyze, run

SWEEP_GRID = (0.5, 1.0, 2.0, 5.0, 10.0)


@dataclass(frozen=True)
class Timed:
    value: Any
    elapsed: float


def timed(fn: Callable[[], Any]) -> Timed:
    t0 = time.perf_counter()
    value = fn()
    return Timed(value, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def ride_bounds() -> Timed:
    """Estimated bounds for the cruise box under the certified tuning."""
    filt = acc_filter()
    return timed(lambda: estimate_bounds(
        ride_region(), filt.dynamics, filt, filt.barrier,
        sigmoid=certified_tuning().sigmoid,
    ))


@pytest.fixture(scope="session")
def ride_budgets(ride_bounds: Timed) -> dict[str, float]:
    cfg = certified_tuning()
    b = ride_bounds.value
    return {
        "t_star": violation_free_sampling_time(b, cfg.epsilon, cfg.margin),
        "t_practical": practical_sampling_time(b, cfg.margin),
    }


@pytest.fixture(scope="session")
def ride_periodic_star(ride_budgets: dict[str, float]) -> Timed:
    """Boosted periodic run on the cruise box at the violation-free period."""
    ts = ride_budgets["t_star"]

    def go() -> tuple[Trace, RunSummary]:
        sc = build_scenario(
            "periodic-boosted", setting="ride", tuning=certified_tuning(),
            period=ts, substep=ts / 2,
        )
        tr = run(sc)
        return tr, analyze(tr)

    return timed(go)


@pytest.fixture(scope="session")
def ride_event(ride_budgets: dict[str, float]) -> Timed:
    """Event-triggered run on the cruise box, same substep as the periodic
    reference so the sample-count comparison is apples to apples."""
    ts = ride_budgets["t_star"]

    def go() -> tuple[Trace, RunSummary]:
        sc = build_scenario(
            "event", setting="ride", tuning=certified_tuning(), substep=ts / 2,
        )
        tr = run(sc)
        return tr, analyze(tr)

    return timed(go)


@pytest.fixture(scope="session")
def plain_sweep() -> Timed:
    """Plain periodic sweep, 6 s horizon, start just inside the boundary."""

    def go() -> dict[float, RunSummary]:
        out = {}
        for f in SWEEP_GRID:
            sc = build_scenario("periodic", period=1.0 / f, horizon=6.0)
            out[f] = analyze(run(sc))
        return out

    return timed(go)


@pytest.fixture(scope="session")
def boosted_sweep() -> Timed:
    """Boosted periodic sweep, 60 s horizon, same start as the plain sweep."""

    def go() -> dict[float, RunSummary]:
        out = {}
        for f in SWEEP_GRID:
            sc = build_scenario("periodic-boosted", period=1.0 / f)
            out[f] = analyze(run(sc))
        return out

    return timed(go)


@pytest.fixture(scope="session")
def plain_at_1hz_60s() -> Timed:
    """Plain periodic at the boosted sweep's threshold frequency, full 60 s."""
    return timed(lambda: analyze(run(build_scenario("periodic", period=1.0))))


@pytest.fixture(scope="session")
def wide_band_cfg():
    return wide_band_tuning()
