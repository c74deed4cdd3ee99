import argparse
import logging
import os
import sys

import config
from engine.bounds import BoundsError
from engine.experiments import ResultTable, run_bound, run_simulate, run_threshold
from engine.measure import NonConvergenceError
from engine.mixture import IncompatibleError
from engine.presets import (
    COMMANDS, FIGURES, ConfigError, list_presets, load_config, load_preset, validate,
)
from engine.regions import RegionError
from engine.simulator import BudgetExceeded
from engine.thresholds import NotFoundError
from engine.verification import run_suite
from models import SpecError
from reports.generator import render_svg, write_csv
from tracking.recorder import TrialRecorder

logger = logging.getLogger('tanglebounds')

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NONCONVERGENCE = 4
EXIT_VERIFY = 5

# PreconditionFailed and UnsupportedSetting are BoundsErrors
INFEASIBLE = (BoundsError, NotFoundError, IncompatibleError, BudgetExceeded)


def _threads(value):
    if value is not None:
        return value
    return config.current().THREADS


def _verify_table(results):
    table = ResultTable(['check', 'cases', 'failures', 'passed'])
    for result in results:
        table.add(check=result.name, cases=result.cases, failures=result.failures,
                  passed=result.passed)
    return table


def execute(cfg, out=None, threads=None, verbose=False, name=None, dump_graph=False):
    """Run one validated experiment config and write its outputs.

    With dump_graph, a simulate run also writes the graph of its first trial
    as <name>.graph.txt.

    Returns:
        (exit code, list of files written)
    """
    out = out or config.current().OUTPUT_DIR
    name = name or cfg.figure or cfg.command
    threads = _threads(threads)
    os.makedirs(out, exist_ok=True)
    logger.info("Running %s (%s) with %d thread(s)", cfg.command, name, threads)

    code = EXIT_OK
    graph_dump = None
    if cfg.command == 'threshold':
        table = run_threshold(cfg)
    elif cfg.command == 'bound':
        table = run_bound(cfg, threads)
    elif cfg.command == 'simulate':
        recorder = TrialRecorder(path=os.path.join(out, f"{name}.trials.log")) if verbose else None
        graph_dump = os.path.join(out, f"{name}.graph.txt") if dump_graph else None
        table = run_simulate(cfg, threads, recorder, graph_dump)
    elif cfg.command == 'verify':
        sizes = {key: cfg.verify[key] for key in ('graphs', 'instances', 'trials')
                 if key in cfg.verify}
        results = run_suite(seed=cfg.seed or 0, **sizes)
        table = _verify_table(results)
        if not all(result.passed for result in results):
            code = EXIT_VERIFY
    else:
        raise ConfigError(f"command: {cfg.command} has no runner")

    written = [write_csv(os.path.join(out, f"{name}.csv"), table, cfg.digest, cfg.seed)]
    if cfg.plot:
        written.append(render_svg(os.path.join(out, f"{name}.svg"), table, cfg.plot))
    if graph_dump and os.path.exists(graph_dump):
        written.append(graph_dump)
    return code, written


def _load(args):
    if args.command == 'reproduce':
        return load_preset(args.figure), args.figure
    if args.config is None:
        if args.command == 'verify':
            return validate({'command': 'verify', 'seed': 0}), 'verify'
        raise ConfigError(f"--config: required for {args.command}")
    cfg = load_config(args.config)
    if cfg.command != args.command:
        raise ConfigError(f"command: config says {cfg.command!r} but {args.command!r} was requested")
    stem = os.path.splitext(os.path.basename(args.config))[0]
    return cfg, stem


def build_parser():
    parser = argparse.ArgumentParser(
        prog='tanglebounds',
        description="Bounds and simulations for incomparable clique tangles in Gaussian-mixture "
                    "graphs")
    parser.add_argument('command', choices=COMMANDS)
    parser.add_argument('figure', nargs='?', choices=FIGURES,
                        help="figure panel for reproduce")
    parser.add_argument('--config', help="path to a JSON experiment config")
    parser.add_argument('--out', help="output directory (default: config OUTPUT_DIR)")
    parser.add_argument('--threads', type=int,
                        help="worker threads (default: TANGLEBOUNDS_THREADS or 1)")
    parser.add_argument('--verbose', action='store_true',
                        help="debug logging and per-trial logs")
    parser.add_argument('--dump-graph', action='store_true',
                        help="write the first trial's graph as an edge list (simulate)")
    parser.add_argument('--list', action='store_true',
                        help="list the built-in figure presets (reproduce)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s - %(levelname)s - %(name)s - %(message)s')
    if args.list:
        for figure, group, _ in list_presets():
            print(f"{group}/{figure}")
        return EXIT_OK
    try:
        if args.command == 'reproduce' and args.figure is None:
            raise ConfigError("figure: required for reproduce")
        if args.threads is not None and args.threads < 1:
            raise ConfigError(f"--threads: must be a positive integer, got {args.threads}")
        cfg, name = _load(args)
        code, written = execute(cfg, args.out, args.threads, args.verbose, name,
                                args.dump_graph)
    except ConfigError as exc:
        logger.error("Invalid config: %s", exc)
        return EXIT_CONFIG
    except INFEASIBLE as exc:
        logger.error("Infeasible configuration: %s", exc)
        return EXIT_INFEASIBLE
    except (SpecError, RegionError) as exc:
        logger.error("Invalid config: %s", exc)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        logger.error("Numerical non-convergence: %s", exc)
        return EXIT_NONCONVERGENCE
    for path in written:
        print(path)
    if code == EXIT_VERIFY:
        logger.error("Verification failed")
    return code


if __name__ == '__main__':
    sys.exit(main())
