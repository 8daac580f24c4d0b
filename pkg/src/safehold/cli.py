"""Command-line front end.

Four subcommands cover the workflow: ``simulate`` runs one configured
scenario and writes its trace and summary; ``sweep`` reruns it as periodic
sampling across a frequency grid and tabulates the outcome per frequency;
``constants`` walks the certification pipeline (assumption checks, regional
bounds, tuning validation, hold-period budgets); ``compare`` runs the
certified periodic schedule and the event-triggered schedule side by side.

Exit codes are part of the contract: 0 for a completed, violation-free run;
1 for configuration or runtime errors; 2 when a run completed but the
barrier went negative (beyond integrator tolerance); 3 when an assumption
check fails in ``constants``.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import yaml

from .cbf_core import ClassKappa
from .config import (
    RunConfig,
    apply_overrides,
    default_region,
    parse_config,
    scenario_from_config,
)
from .constants import (
    BoundSet,
    check_assumptions,
    estimate_bounds,
    practical_sampling_time,
    violation_free_sampling_time,
)
from .errors import ConfigurationError, SafeholdError
from .simulator import RunSummary, Trace, analyze, run
from .acc_benchmark import acc_barrier, acc_dynamics, acc_nominal
from .safety_filter import CbfQpFilter, validate_tuning

__all__ = ["main", "EXIT_OK", "EXIT_CONFIG", "EXIT_VIOLATION", "EXIT_ASSUMPTION"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VIOLATION = 2
EXIT_ASSUMPTION = 3

# Barrier dips smaller than this are integrator noise, not violations: the
# ideal continuous loop rides h = 0 and lands a hair on either side.
VIOLATION_TOL = 1e-9


def _g(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _load(args) -> RunConfig:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {args.config}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config {args.config} is not valid YAML: {exc}") from None
    if args.set:
        doc = apply_overrides(doc, args.set)
    return parse_config(doc)


def _write_trace(trace: Trace, path: str) -> None:
    p = Path(path)
    if p.parent != Path(""):
        p.parent.mkdir(parents=True, exist_ok=True)
    trace.to_csv(p)


def _summary_lines(name: str, summary: RunSummary) -> list[str]:
    return [
        f"name={name}",
        f"min_h={_g(summary.min_h)}",
        f"min_h_time={_g(summary.min_h_time)}",
        f"violation_time={_g(summary.violation_time)}",
        f"num_events={summary.num_events}",
        f"miet={_g(summary.miet)}",
        f"max_hold_error={_g(summary.max_hold_error)}",
    ]


def _emit_summary(lines: list[str], path: str | None) -> None:
    for line in lines:
        print(line)
    if path is not None:
        p = Path(path)
        if p.parent != Path(""):
            p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _barrier_column(trace: Trace) -> int:
    # CSV layout: t, state columns, input columns, then h.
    return 1 + trace.x.shape[1] + trace.u.shape[1] + 1


def _write_plot_script(path: str, traces: list[tuple[str, str]], hcol: int) -> None:
    plots = ", ".join(
        f'"{file}" using 1:{hcol} with lines title "{label}"' for label, file in traces
    )
    text = "\n".join([
        "set datafile separator \",\"",
        "set xlabel \"t [s]\"",
        "set ylabel \"barrier value\"",
        "set grid",
        f"plot {plots}, 0 notitle with lines dashtype 2 linecolor \"gray\"",
        "",
    ])
    Path(path).write_text(text, encoding="utf-8")


def cmd_simulate(args) -> int:
    cfg = _load(args)
    scenario = scenario_from_config(cfg)
    trace = run(scenario)
    summary = analyze(trace, violation_tol=VIOLATION_TOL)
    if cfg.trace_path is not None:
        _write_trace(trace, cfg.trace_path)
        if args.plot_script is not None:
            _write_plot_script(
                args.plot_script, [(scenario.name, cfg.trace_path)], _barrier_column(trace)
            )
    elif args.plot_script is not None:
        raise ConfigurationError("--plot-script needs output.trace set in the config")
    _emit_summary(_summary_lines(scenario.name, summary), cfg.summary_path)
    return EXIT_OK if summary.violation_time is None else EXIT_VIOLATION


def _sweep_trace_path(base: str, freq: float) -> str:
    p = Path(base)
    return str(p.with_name(f"{p.stem}-f{freq:g}{p.suffix or '.csv'}"))


def cmd_sweep(args) -> int:
    cfg = _load(args)
    freqs = list(args.frequencies)
    if not freqs:
        raise ConfigurationError("sweep needs at least one frequency (Hz)")
    for f in freqs:
        if not f > 0.0:
            raise ConfigurationError(f"sweep frequencies must be > 0 Hz, got {f:g}")
    freqs = sorted(set(freqs))

    def one(freq: float) -> tuple[Trace, RunSummary]:
        per_cfg = dataclasses.replace(cfg, mode="periodic", period=1.0 / freq)
        trace = run(scenario_from_config(per_cfg))
        return trace, analyze(trace, violation_tol=VIOLATION_TOL)

    # Frequencies are independent runs; the table below is ordered by
    # frequency regardless of completion order.
    with ThreadPoolExecutor(max_workers=min(4, len(freqs))) as pool:
        results = list(pool.map(one, freqs))

    hcol = None
    plot_refs = []
    for freq, (trace, _) in zip(freqs, results):
        if cfg.trace_path is not None:
            path = _sweep_trace_path(cfg.trace_path, freq)
            _write_trace(trace, path)
            plot_refs.append((f"{freq:g} Hz", path))
            hcol = _barrier_column(trace)
    if args.plot_script is not None:
        if not plot_refs:
            raise ConfigurationError("--plot-script needs output.trace set in the config")
        _write_plot_script(args.plot_script, plot_refs, hcol)

    print(f"{'frequency_hz':>12}  {'min_h':>22}  {'violation_time':>22}  {'num_events':>10}")
    for freq, (_, summary) in zip(freqs, results):
        print(
            f"{freq:>12g}  {summary.min_h:>22.15g}  "
            f"{_g(summary.violation_time):>22}  {summary.num_events:>10}"
        )
    safe = [f for f, (_, s) in zip(freqs, results) if s.min_h >= -VIOLATION_TOL]
    print(f"smallest_safe_frequency_hz={_g(min(safe) if safe else None)}")
    return EXIT_OK


def _config_filter(cfg: RunConfig) -> CbfQpFilter:
    return CbfQpFilter(
        dynamics=acc_dynamics(cfg.plant),
        barrier=acc_barrier(cfg.plant),
        alpha=ClassKappa.linear(cfg.alpha_slope),
        nominal=acc_nominal(cfg.plant),
    )


def _bound_lines(bounds: BoundSet) -> list[str]:
    return [
        f"bounds.{name}={_g(getattr(bounds, name))}"
        for name in (
            "b_f", "b_g", "b_k", "lam", "mu", "m_lip", "l_k", "l_sigma", "safety_factor",
        )
    ]


def cmd_constants(args) -> int:
    cfg = _load(args)
    alpha = ClassKappa.linear(cfg.alpha_slope)
    if cfg.bounds is not None:
        for line in _bound_lines(cfg.bounds):
            print(line)
        print("assumption checks skipped: bounds supplied explicitly")
        bounds = cfg.bounds
        report = validate_tuning(cfg.tuning, bounds, alpha)
    else:
        filt = _config_filter(cfg)
        region = default_region(cfg)
        assumptions = check_assumptions(
            region, filt.dynamics, filt, filt.barrier
        )
        if not assumptions.passed:
            for check in assumptions.checks:
                print(f"assumption {check.name}: {check.status} ({check.detail})")
            failed = ", ".join(c.name for c in assumptions.checks if c.status == "fail")
            print(f"assumption failure: {failed}", file=sys.stderr)
            return EXIT_ASSUMPTION
        # The bounds describe the plain filtered controller; the boosted
        # controller's extra authority enters the budget formulas through
        # epsilon, not through b_k.
        bounds = estimate_bounds(
            region,
            filt.dynamics,
            filt,
            filt.barrier,
            alpha,
            sigmoid=cfg.tuning.sigmoid,
            safety_factor=cfg.safety_factor,
        )
        for line in _bound_lines(bounds):
            print(line)
        for check in assumptions.checks:
            print(f"assumption {check.name}: {check.status} ({check.detail})")
        report = validate_tuning(
            cfg.tuning, bounds, alpha,
            dynamics=filt.dynamics, barrier=filt.barrier, region=region,
        )
    for check in report.checks:
        print(f"tuning {check.name}: {check.status} ({check.detail})")
    print(f"practical_sampling_time={_g(practical_sampling_time(bounds, cfg.tuning.margin))}")
    print(
        "violation_free_sampling_time="
        f"{_g(violation_free_sampling_time(bounds, cfg.tuning.epsilon, cfg.tuning.margin))}"
    )
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load(args)
    if cfg.controller != "boosted":
        raise ConfigurationError(
            "compare requires the boosted controller (set scenario.controller: boosted); "
            "the event trigger's hold-period floor is only certified for it"
        )
    if cfg.bounds is not None:
        bounds = cfg.bounds
    else:
        filt = _config_filter(cfg)
        region = default_region(cfg)
        bounds = estimate_bounds(
            region,
            filt.dynamics,
            filt,
            filt.barrier,
            sigmoid=cfg.tuning.sigmoid,
            safety_factor=cfg.safety_factor,
        )
    t_star = violation_free_sampling_time(bounds, cfg.tuning.epsilon, cfg.tuning.margin)
    substep = min(cfg.substep, t_star / 2.0)
    periodic_cfg = dataclasses.replace(cfg, mode="periodic", period=t_star, substep=substep)
    event_cfg = dataclasses.replace(cfg, mode="event", period=None, substep=substep)

    trace_p = run(scenario_from_config(periodic_cfg))
    sum_p = analyze(trace_p, violation_tol=VIOLATION_TOL)
    trace_e = run(scenario_from_config(event_cfg))
    sum_e = analyze(trace_e, violation_tol=VIOLATION_TOL)

    print(f"violation_free_sampling_time={_g(t_star)}")
    print(f"{'metric':>12}  {'periodic':>22}  {'event':>22}")
    print(f"{'samples':>12}  {sum_p.num_events:>22}  {sum_e.num_events:>22}")
    print(f"{'miet':>12}  {_g(sum_p.miet):>22}  {_g(sum_e.miet):>22}")
    print(f"{'min_h':>12}  {sum_p.min_h:>22.15g}  {sum_e.min_h:>22.15g}")
    if sum_p.violation_time is not None or sum_e.violation_time is not None:
        return EXIT_VIOLATION
    if sum_e.num_events > sum_p.num_events:
        print("event mode used more samples than periodic", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="safehold",
        description="Sampled-data safety filter simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("config", help="path to a YAML run configuration")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="override a config value (repeatable)",
        )

    p = sub.add_parser("simulate", help="run one scenario, write trace and summary")
    common(p)
    p.add_argument(
        "--plot-script", metavar="PATH",
        help="write a gnuplot script plotting the barrier trace",
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="rerun the scenario periodically over a frequency grid")
    common(p)
    p.add_argument("frequencies", nargs="*", type=float, help="sampling frequencies in Hz")
    p.add_argument(
        "--plot-script", metavar="PATH",
        help="write a gnuplot script plotting every frequency's barrier trace",
    )
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("constants", help="assumption checks, bounds, budgets")
    common(p)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("compare", help="periodic-at-budget vs event-triggered")
    common(p)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SafeholdError as exc:
        # Runtime aborts: infeasible filter, divergence, region exit. Each
        # exception type renders its own diagnostic.
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
