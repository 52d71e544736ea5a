"""
forecast - run scenario forecasts and write annual probability maps.
"""

import argparse
import logging

from urban_growth.cli.commands.common import add_run_flags, jobs_of, load, out_dir, seed_of, transactional_output
from urban_growth.core.errors import ArgumentError, ConfigError
from urban_growth.services.dataset import load_stack
from urban_growth.services.reports import (
    comparison_csv,
    forecast_csv,
    read_coefficients,
    write_hillshade_composites,
    write_probability_maps,
)
from urban_growth.services.scenarios import build_exclusion, compare_scenarios, forecast
from urban_growth.services.tracker import run_tracker

logger = logging.getLogger(__name__)


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("forecast", help="forecast one or all configured scenarios")
    add_run_flags(parser)
    parser.add_argument("--scenario", default="all", help="scenario name, or 'all' (default)")
    parser.add_argument("--years", type=int, default=None, help="horizon in years (default: config)")
    parser.add_argument("--mc", type=int, default=None, help="Monte Carlo runs (default: config)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = load(args)
    names = list(config.scenarios)
    if args.scenario == "all":
        selected = names
    elif args.scenario in config.scenarios:
        selected = [args.scenario]
    else:
        raise ArgumentError(f"unknown scenario {args.scenario!r}; configured: {', '.join(names)}")

    horizon = config.forecast.horizon if args.years is None else args.years
    n_mc = config.forecast.mc_runs if args.mc is None else args.mc
    if horizon < 1 or n_mc < 1:
        raise ArgumentError("--years and --mc must be >= 1")

    root = out_dir(args, config)
    coeffs = config.forecast.coefficients
    if coeffs is None:
        summary = root / "best_coefficients.txt"
        if not summary.is_file():
            raise ConfigError(
                f"no forecast coefficients: set them in [forecast] or run calibrate first ({summary} missing)",
                "forecast",
            )
        coeffs = read_coefficients(summary)

    seed = seed_of(args, config)
    jobs = jobs_of(args)
    selfmod = config.engine.self_modification
    data = load_stack(config.dataset)
    start_year, start_urban = data.urban_series[-1]
    roads = data.roads_for(start_year)

    run_id = run_tracker.create_run("forecast", selected)
    reports = []
    with transactional_output(root) as outputs:
        for name in selected:
            spec = config.scenarios[name]
            run_tracker.update_stage(run_id, name, "running", f"{spec.policy}, {horizon} year(s), {n_mc} run(s)")
            excluded = build_exclusion(spec, start_urban, data.excluded, data.slope, selfmod.critical_slope)
            maps, report = forecast(
                start_urban, roads, data.slope, excluded, coeffs, horizon, n_mc, seed,
                start_year=start_year, config=selfmod, scenario=name, jobs=jobs,
            )
            scenario_dir = outputs.path(name)
            scenario_dir.mkdir(exist_ok=True)
            write_probability_maps(maps, scenario_dir, config.output.formats)
            if data.hillshade is not None:
                write_hillshade_composites(maps, data.hillshade, scenario_dir)
            outputs.write_text(forecast_csv(report), name, "report.csv")
            reports.append(report)
            run_tracker.update_stage(run_id, name, "done", f"final grw_rate {report.stats[-1].grw_rate:.3f}")

        if len(reports) >= 2:
            comparison = compare_scenarios(reports)
            outputs.write_text(comparison_csv(comparison), "comparison.csv")
            print("ranking " + " > ".join(comparison.ranking))
    run_tracker.finish(run_id)

    for report in reports:
        final = report.stats[-1]
        print(f"{report.scenario}: {report.years[0]}..{report.years[-1]} "
              f"area {final.area:.2f} grw_rate {final.grw_rate:.4f}")
    return 0
