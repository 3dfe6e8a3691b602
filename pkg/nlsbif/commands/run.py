import logging
import sys
from argparse import ArgumentParser, Namespace
from typing import List, Optional

from nlsbif.__about__ import __version__
from nlsbif.commands.config import FIGURES, load_config, RunConfig
from nlsbif.commands.scenarios import execute, RunContext, SCENARIOS
from nlsbif.loggers import LoggerType
from nlsbif.utilities.exceptions import ConfigError, NlsBifError

_logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="nlsbif", description="Continuation and symmetry-breaking studies of stationary NLS.")
    parser.add_argument("scenario", choices=sorted(SCENARIOS), help="Scenario to run.")
    parser.add_argument("--config", type=str, default=None, help="YAML run file; defaults apply when omitted.")
    parser.add_argument("--out", type=str, default="nlsbif_out", help="Output directory for the artifacts.")
    parser.add_argument("--workers", type=int, default=None, help="Number of independent stages run at once.")
    parser.add_argument("--figure", type=str, choices=FIGURES, default=None, help="Figure preset for reproduce_figure.")
    parser.add_argument(
        "--allow-unverified",
        action="store_true",
        default=None,
        help="Emit states whose stationarity residual exceeds the tolerance instead of failing.",
    )
    parser.add_argument("--loggers", type=str, default=None, help="Comma separated loggers, e.g. csv,database.")
    parser.add_argument("--verbose", action="store_true", help="Log every Newton iteration and continuation step.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def _logger_names(value: Optional[str]) -> Optional[List[str]]:
    if value is None:
        return None
    names = [name.strip() for name in value.split(",") if name.strip()]
    for name in names:
        try:
            LoggerType(name)
        except ValueError as err:
            choices = [t.value for t in LoggerType]
            raise ConfigError(f"Unknown logger {name!r}; expected one of {choices}.", key="run.loggers") from err
    return names


def _resolve(args: Namespace) -> RunConfig:
    config = load_config(args.config)
    if config.run.scenario is not None and config.run.scenario != args.scenario:
        _logger.warning(f"The run file names scenario {config.run.scenario}; running {args.scenario} as requested.")
    overrides = {"scenario": args.scenario}
    if args.figure is not None:
        overrides["figure"] = args.figure
    if args.workers is not None:
        overrides["workers"] = args.workers
    config = config.updated(run=overrides)
    if args.scenario == "reproduce_figure" and config.run.figure is None:
        raise ConfigError("reproduce_figure needs a figure id (--figure or run.figure).", key="run.figure")
    return config


def _report(err: NlsBifError, stage: str) -> str:
    stage = getattr(err, "stage", None) or stage
    message = f"{stage}: {err}"
    _logger.error(message)
    print(message, file=sys.stderr)
    return stage


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger("nlsbif").setLevel(logging.DEBUG)

    try:
        config = _resolve(args)
        loggers = _logger_names(args.loggers)
    except ConfigError as err:
        _report(err, "config")
        return EXIT_CONFIG

    ctx = RunContext.from_config(config, args.out, allow_unverified=args.allow_unverified, loggers=loggers)
    ctx.start(args.scenario, config)
    status, code, error, stage = "failed", EXIT_OK, None, None
    try:
        execute(args.scenario, config, ctx)
        status = "success"
    except ConfigError as err:
        status, code, error = "config_error", EXIT_CONFIG, str(err)
        stage = _report(err, ctx.current_stage)
    except NlsBifError as err:
        status, code, error = "numerical_failure", EXIT_NUMERICAL, str(err)
        stage = _report(err, ctx.current_stage)
    finally:
        manifest = ctx.finish(args.scenario, config, status, error, stage)
    _logger.info(f"Run {ctx.run_id} finished with status {status} in {manifest['wall_time']:.1f}s ({args.out})")
    return code


if __name__ == "__main__":
    sys.exit(main())
