#!/usr/bin/env python3
"""
Nested search benchmark harness

Usage:
    python bench.py run --problem weakschur --k 3 --no-selective --algorithm gnrpalr -R 0 --restart --out runs/ws3-lr
    python bench.py run --problem tsptw --instance data/rc204.1.txt --algorithm gnrpa -N 100 --out runs/tsptw-g
    python bench.py compare runs/tsptw-g runs/tsptw-lr
"""

import argparse
import sys

from config import Config
from nrpa import configure_logging
from nrpa.bench import ComparisonError, ExperimentSpec, compare, run_experiment
from nrpa.engine import Algorithm, ConfigurationError, SearchConfig
from nrpa.problem import InstanceParseError, SearchError


def build_parser():
    parser = argparse.ArgumentParser(description='NRPA / GNRPA / GNRPALR benchmark harness')
    parser.add_argument('--log-level', default=Config.LOG_LEVEL, help='Logging level (default: NRPA_LOG_LEVEL or INFO)')
    commands = parser.add_subparsers(dest='command', required=True)

    run = commands.add_parser('run', help='Run a seed sweep and write raw.csv and curve.csv')
    run.add_argument('--problem', required=True, choices=['tsptw', 'weakschur'], help='Problem to solve')
    run.add_argument('--instance', help='TSPTW instance file (Solomon-Potvin-Bengio layout)')
    run.add_argument('--k', type=int, help='Weak Schur dimension (number of parts)')
    run.add_argument('--no-selective', dest='selective', action='store_false',
                     help='Weak Schur: consider every admissible part, not only the previous number\'s part')
    run.add_argument('--algorithm', default='gnrpa', choices=[a.value for a in Algorithm], help='Search algorithm')
    run.add_argument('--level', type=int, default=Config.DEFAULT_LEVEL, help=f'Nesting level (default: {Config.DEFAULT_LEVEL})')
    run.add_argument('-N', dest='iterations', type=int, help=f'Iterations per level for nrpa/gnrpa (default: {Config.DEFAULT_N})')
    run.add_argument('-R', dest='repetitions', type=int, help=f'Repetition limit for gnrpalr (default: {Config.DEFAULT_R})')
    run.add_argument('--alpha', type=float, default=Config.DEFAULT_ALPHA, help=f'Adapt step size (default: {Config.DEFAULT_ALPHA})')
    run.add_argument('--bias-sign', choices=['pos', 'neg'], help='TSPTW distance bias sign (default: NRPA_BIAS_SIGN or neg)')
    run.add_argument('--bias-scale', type=float, default=1.0, help='Multiplier applied to every bias (default: 1.0)')
    run.add_argument('--seed-lo', type=int, default=1, help='First seed (default: 1)')
    run.add_argument('--seed-hi', type=int, default=1, help='Last seed, inclusive (default: 1)')
    run.add_argument('--budget-seconds', type=float, default=Config.DEFAULT_BUDGET_SECONDS,
                     help=f'Wall-clock budget per seed (default: {Config.DEFAULT_BUDGET_SECONDS:g})')
    run.add_argument('--iteration-cap', type=int, help='GNRPALR safety cap on iterations per level')
    run.add_argument('--restart', action='store_true', help='Restart the top level until the budget expires')
    run.add_argument('--out', required=True, help='Output directory')

    cmp = commands.add_parser('compare', help='Compare the curves of two runs')
    cmp.add_argument('run_a', help='Directory of the first run')
    cmp.add_argument('run_b', help='Directory of the second run')
    cmp.add_argument('--out', help='Also write the speedup table to this CSV file')
    return parser


def check_combinations(parser, args):
    """Reject flags that do not apply to the chosen problem or algorithm"""
    if args.problem == 'tsptw':
        if not args.instance:
            parser.error('--problem tsptw requires --instance')
        if args.k is not None:
            parser.error('--k only applies to --problem weakschur')
        if not args.selective:
            parser.error('--no-selective only applies to --problem weakschur')
    else:
        if args.k is None:
            parser.error('--problem weakschur requires --k')
        if args.instance:
            parser.error('--instance only applies to --problem tsptw')
        if args.bias_sign:
            parser.error('--bias-sign only applies to --problem tsptw')

    if args.algorithm == Algorithm.GNRPALR.value:
        if args.iterations is not None:
            parser.error('-N does not apply to gnrpalr (use -R)')
    else:
        if args.repetitions is not None:
            parser.error(f'-R only applies to gnrpalr, not {args.algorithm}')
        if args.iteration_cap is not None:
            parser.error('--iteration-cap only applies to gnrpalr')


def build_spec(args):
    search = SearchConfig(
        algorithm=args.algorithm,
        level=args.level,
        iterations=args.iterations if args.iterations is not None else Config.DEFAULT_N,
        repetitions=args.repetitions if args.repetitions is not None else Config.DEFAULT_R,
        alpha=args.alpha,
        bias_scale=args.bias_scale,
        iteration_cap=args.iteration_cap,
        time_budget=args.budget_seconds,
        restart=args.restart,
    )
    if args.bias_sign:
        bias_sign = 1 if args.bias_sign == 'pos' else -1
    else:
        bias_sign = Config.BIAS_SIGN
    return ExperimentSpec(
        problem=args.problem,
        search=search,
        out=args.out,
        instance=args.instance,
        k=args.k,
        selective=args.selective,
        bias_sign=bias_sign,
        seed_lo=args.seed_lo,
        seed_hi=args.seed_hi,
    )


def command_run(args):
    spec = build_spec(args)
    print(f"Running {spec.search.algorithm.value} on {spec.problem}:")
    print(f"  Level: {spec.search.level}")
    if spec.search.uses_repetitions:
        print(f"  Repetitions (R): {spec.search.repetitions}")
    else:
        print(f"  Iterations (N): {spec.search.iterations}")
    print(f"  Alpha: {spec.search.alpha}")
    print(f"  Seeds: {spec.seed_lo}..{spec.seed_hi}")
    print(f"  Budget: {spec.search.time_budget:g}s per seed")
    print("-" * 50)

    result = run_experiment(spec)

    for outcome in result.outcomes:
        if outcome.completed:
            print(f"✓ seed {outcome.seed}: best {outcome.final_score} after {outcome.playouts} playouts")
        else:
            print(f"✗ seed {outcome.seed}: {outcome.error}")
    print(f"Raw records: {spec.out / 'raw.csv'}")
    print(f"Curve: {spec.out / 'curve.csv'}")
    return 0 if result.completed else 1


def command_compare(args):
    result = compare(args.run_a, args.run_b, out=args.out)
    print("Mean best score per checkpoint:")
    print(result.table.to_string(index=False))
    print()
    if result.speedups.empty:
        print("No score level reached by both runs")
    else:
        print("Time to first reach each mean score level (ratio = B / A):")
        print(result.speedups.to_string(index=False))
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level.upper(), trace=Config.TRACE_IMPROVEMENTS)

    try:
        if args.command == 'run':
            check_combinations(parser, args)
            return command_run(args)
        return command_compare(args)
    except (ConfigurationError, ComparisonError, InstanceParseError) as e:
        print(f"✗ {e}", file=sys.stderr)
        return 2
    except SearchError as e:
        print(f"✗ {e}", file=sys.stderr)
        return 1


if __name__ == '__main__':
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\nBenchmark stopped by user")
        sys.exit(130)
