"""
calibrate - brute-force calibration and derivation of forecast coefficients.
"""

import argparse
import logging

from urban_growth.cli.commands.common import add_run_flags, jobs_of, load, out_dir, seed_of, transactional_output
from urban_growth.core.errors import ArgumentError
from urban_growth.services.calibration import calibrate, derive_forecast_coefficients
from urban_growth.services.dataset import load_stack
from urban_growth.services.reports import calibration_csv, summary_text

logger = logging.getLogger(__name__)


def add_parser(subparsers) -> None:
    parser = subparsers.add_parser("calibrate", help="run the phased calibration sweep")
    add_run_flags(parser)
    parser.add_argument(
        "--phases",
        default=None,
        help="comma-separated phase names to run, in schedule order (default: all configured)",
    )
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = load(args)
    schedule = config.calibration.phases
    if args.phases:
        wanted = [name.strip() for name in args.phases.split(",") if name.strip()]
        known = [phase.name for phase in schedule]
        unknown = [name for name in wanted if name not in known]
        if unknown:
            raise ArgumentError(f"unknown phase(s) {', '.join(unknown)}; configured: {', '.join(known)}")
        schedule = [phase for phase in schedule if phase.name in wanted]

    seed = seed_of(args, config)
    jobs = jobs_of(args)
    selfmod = config.engine.self_modification
    data = load_stack(config.dataset)

    with transactional_output(out_dir(args, config)) as outputs:
        best, reports = calibrate(data, schedule, seed, config=selfmod, jobs=jobs)
        for index, report in enumerate(reports, start=1):
            outputs.write_text(calibration_csv(report), f"phase{index}_report.csv")

        derived = derive_forecast_coefficients(
            best, data, config.calibration.forecast_mc_runs, seed, config=selfmod, jobs=jobs
        )
        outputs.write_text(summary_text(reports, derived), "best_coefficients.txt")

    for index, report in enumerate(reports, start=1):
        print(f"phase{index} {report.phase.name}: best {report.best.coeffs} "
              f"leesallee {report.best.metrics.leesallee:.6f}")
    print(f"forecast coefficients {derived}")
    logger.info(f"✅ Calibration written to {outputs.root}")
    return 0
