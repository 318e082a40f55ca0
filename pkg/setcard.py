#!/usr/bin/env python3
"""
Set cardinality constraint solver
Main entry point for the CLI application
"""

import sys
import argparse
import json
import time
from pathlib import Path
from typing import Dict, List, Optional

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from src.config_manager import ConfigManager, ConfigError, SolverLimits, limits_from_config
from src.formula import Problem, ProblemTypeError
from src.hardness import (
    MalformedCnf, MalformedInstance, PROFILES, Profile, encode_3sat, encode_subset_sum,
    gen_itree_pair, gen_random, gen_random_itree, parse_dimacs, parse_subset_sum,
)
from src.itree import (
    MalformedTree, UnsatisfiableTree, itree_entails, itree_problem, itree_sat,
    itree_semantics, tighten, witness_model,
)
from src.logger import init_logger, get_logger
from src.oracle import BudgetExceeded, UnassignedVariable, eval_formula, oracle_sat
from src.report import DEFAULT_MAX_LISTED, RunReport, model_from_json
from src.sexpr_parser import ParseError, parse_itree, parse_problem, print_problem
from src.solver import Strategy, Verdict, VerdictKind, entails, solve

EXIT_OK = 0
EXIT_DISAGREEMENT = 1
EXIT_INPUT_ERROR = 2
EXIT_RESOURCE = 3

RESOURCE_REASONS = ("time", "memory", "branch-count", "ilp-nodes", "oracle-ceiling")

INPUT_ERRORS = (ParseError, ProblemTypeError, MalformedTree, MalformedCnf, MalformedInstance,
                ConfigError, UnassignedVariable)


class InputFileError(Exception):
    """A file named on the command line cannot be read or written"""
    pass


def create_parser():
    """Create and configure argument parser

    Returns:
        Configured ArgumentParser instance
    """
    parser = argparse.ArgumentParser(
        prog='setcard',
        description='Decide boolean algebra of sets with cardinality constraints',
        epilog='For more information, see README.md'
    )

    # Global options
    parser.add_argument(
        '-v', '--verbose',
        action='store_true',
        help='Enable verbose (debug) output on stderr'
    )
    parser.add_argument(
        '--config-dir',
        type=Path,
        help='Configuration directory (default: config/<hostname>)'
    )
    parser.add_argument(
        '--timing',
        action='store_true',
        help='Report wall time in stats.ms (otherwise 0 for reproducible output)'
    )

    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    subparsers.add_parser(
        'init',
        help='Initialize configuration for this machine'
    )

    solve_parser = subparsers.add_parser('solve', help='Decide satisfiability of a problem')
    solve_parser.add_argument('file', help='Problem file (.cbs)')
    solve_parser.add_argument('--strategy', choices=['explicit', 'sparse'],
                              help='Region strategy (default from config)')
    solve_parser.add_argument('--sparse-k', type=int,
                              help='Nonzero-region budget for the sparse strategy')
    solve_parser.add_argument('--model', action='store_true', help='Print the model')
    solve_parser.add_argument('--json', action='store_true', help='Print a JSON report')
    solve_parser.add_argument('--time-limit', type=float, help='Wall-clock limit in seconds')

    entail_parser = subparsers.add_parser('entail', help='Decide whether FILE1 entails FILE2')
    entail_parser.add_argument('file1', help='Premise problem')
    entail_parser.add_argument('file2', help='Conclusion problem')
    entail_parser.add_argument('--json', action='store_true', help='Print a JSON report')
    entail_parser.add_argument('--time-limit', type=float, help='Wall-clock limit in seconds')

    itree_sat_parser = subparsers.add_parser('itree-sat', help='Decide satisfiability of an i-tree')
    itree_sat_parser.add_argument('file', help='I-tree file')
    itree_sat_parser.add_argument('--json', action='store_true', help='Print a JSON report')

    itree_entail_parser = subparsers.add_parser('itree-entail', help='Decide i-tree entailment')
    itree_entail_parser.add_argument('file1', help='Premise i-tree')
    itree_entail_parser.add_argument('file2', help='Conclusion i-tree')
    itree_entail_parser.add_argument('--json', action='store_true', help='Print a JSON report')

    tighten_parser = subparsers.add_parser('itree-tighten', help='Strongest intervals of an i-tree')
    tighten_parser.add_argument('file', help='I-tree file')
    tighten_parser.add_argument('--json', action='store_true', help='Print a JSON report')

    oracle_parser = subparsers.add_parser('oracle', help='Bounded brute-force satisfiability')
    oracle_parser.add_argument('file', help='Problem file (.cbs)')
    oracle_parser.add_argument('--region-bound', type=int, required=True, help='Largest region count')
    oracle_parser.add_argument('--int-bound', type=int, required=True, help='Largest integer magnitude')
    oracle_parser.add_argument('--json', action='store_true', help='Print a JSON report')

    encode_parser = subparsers.add_parser('encode', help='Encode a hard instance as a problem')
    encode_parser.add_argument('kind', choices=['3sat', 'subsetsum'], help='Instance kind')
    encode_parser.add_argument('file', help='DIMACS CNF file or subset-sum file')
    encode_parser.add_argument('-o', '--output', help='Output problem file (default: stdout)')

    gen_parser = subparsers.add_parser('gen', help='Generate a random problem')
    gen_parser.add_argument('--seed', type=int, required=True, help='Random seed')
    gen_parser.add_argument('--set-vars', type=int, default=2, help='Number of set variables')
    gen_parser.add_argument('--int-vars', type=int, default=2, help='Number of integer variables')
    gen_parser.add_argument('--depth', type=int, default=3, help='Formula depth')
    gen_parser.add_argument('--const-bits', type=int, default=2, help='Constant width in bits')
    gen_parser.add_argument('-o', '--output', help='Output problem file (default: stdout)')

    check_parser = subparsers.add_parser('check', help='Differential run against the oracle')
    check_parser.add_argument('--seed', type=int, required=True, help='First seed')
    check_parser.add_argument('--count', type=int, required=True, help='Number of instances')
    check_parser.add_argument('--profile', choices=['small', 'itree'], default='small',
                              help='Instance profile')
    check_parser.add_argument('--sparse', action='store_true',
                              help='Also check sparse/explicit strategy coherence')
    check_parser.add_argument('--region-bound', type=int, default=6, help='Oracle region bound')
    check_parser.add_argument('--int-bound', type=int, default=6, help='Oracle integer bound')
    check_parser.add_argument('--json', action='store_true', help='Print a JSON report')

    eval_parser = subparsers.add_parser('eval')
    eval_parser.add_argument('file')
    eval_parser.add_argument('model')

    return parser


def read_file(path: str) -> str:
    try:
        return Path(path).read_text(encoding='utf-8')
    except (OSError, UnicodeDecodeError) as e:
        raise InputFileError(f"cannot read {path}: {e}")


def write_output(text: str, output: Optional[str]):
    if output is None:
        sys.stdout.write(text)
        return
    try:
        Path(output).write_text(text, encoding='utf-8')
    except OSError as e:
        raise InputFileError(f"cannot write {output}: {e}")
    get_logger().info(f"Wrote {output}")


class Session:
    """Configuration, limits and output settings shared by commands"""

    def __init__(self, args, config: Dict):
        self.args = args
        self.config = config
        self.limits = limits_from_config(config)
        if getattr(args, 'time_limit', None):
            self.limits = SolverLimits(args.time_limit, self.limits.ilp_nodes,
                                       self.limits.max_branches,
                                       self.limits.explicit_max_set_vars,
                                       self.limits.oracle_ceiling)
        self.max_listed = config.get("report", {}).get("max_listed_elements", DEFAULT_MAX_LISTED)
        self.started = time.monotonic()

    def elapsed_ms(self) -> int:
        return int((time.monotonic() - self.started) * 1000)

    def emit(self, report: RunReport) -> int:
        """Print the report and return the exit code it implies"""
        elapsed = self.elapsed_ms()
        get_logger().info(f"{self.args.command}: {report.verdict} in {elapsed} ms")
        if self.args.timing:
            report.ms = elapsed
        if getattr(self.args, 'json', False):
            print(report.to_json(self.max_listed))
        else:
            show = getattr(self.args, 'model', False) or report.verdict == "no"
            print(report.to_text(show, self.max_listed))
        if report.verdict == "unknown" and report.reason in RESOURCE_REASONS:
            return EXIT_RESOURCE
        return EXIT_OK


def verdict_report(verdict: Verdict) -> RunReport:
    return RunReport(verdict.token, verdict.model, verdict.strategy,
                     verdict.stats.branches, verdict.stats.ilp_nodes, reason=verdict.reason)


def cmd_init(args, session: Optional[Session]) -> int:
    """Initialize configuration"""
    config_mgr = ConfigManager(config_dir=args.config_dir)

    if config_mgr.config_exists():
        print(f"Configuration already exists at: {config_mgr.config_dir}")
        print(f"Hostname: {config_mgr.hostname}")
        return EXIT_OK

    print("Initializing setcard configuration...")
    print(f"Hostname: {config_mgr.hostname}")
    print(f"Config directory: {config_mgr.config_dir}")

    if config_mgr.initialize():
        print("\n✓ Configuration initialized successfully!")
        print(f"\nEdit {config_mgr.config_file} to change solver limits and defaults.")
        return EXIT_OK
    print("✗ Failed to initialize configuration", file=sys.stderr)
    return EXIT_INPUT_ERROR


def cmd_solve(args, session: Session) -> int:
    """Decide satisfiability of a problem file"""
    problem = parse_problem(read_file(args.file))
    solver_config = session.config.get("solver", {})

    kind = args.strategy or solver_config.get("strategy", "explicit")
    if kind == "sparse":
        k = args.sparse_k if args.sparse_k is not None else solver_config.get("sparse_k", 0)
        strategy = Strategy.sparse(k or None)
    else:
        strategy = Strategy.explicit()

    verdict = solve(problem, strategy, session.limits)
    report = verdict_report(verdict)

    if (verdict.kind is VerdictKind.UNKNOWN and verdict.reason == "sparse-incomplete"
            and solver_config.get("sparse_escalate", True)):
        get_logger().info("Sparse search incomplete, escalating to explicit strategy")
        escalated = solve(problem, Strategy.explicit(), session.limits)
        report = verdict_report(escalated)
        report.strategy = f"{verdict.strategy}->explicit"
        report.branches += verdict.stats.branches
        report.ilp_nodes += verdict.stats.ilp_nodes

    return session.emit(report)


def cmd_entail(args, session: Session) -> int:
    """Decide entailment between two problem files"""
    premise = parse_problem(read_file(args.file1))
    conclusion = parse_problem(read_file(args.file2))
    result = entails(premise, conclusion, session.limits)
    return session.emit(RunReport(result.verdict, result.counter_model, "explicit",
                                  result.stats.branches, result.stats.ilp_nodes,
                                  reason=result.reason))


def cmd_itree_sat(args, session: Session) -> int:
    """Decide satisfiability of an i-tree file"""
    tree = parse_itree(read_file(args.file))
    result = itree_sat(tree)
    if not result.sat:
        return session.emit(RunReport("unsat", strategy="itree", extra={"conflict": result.conflict}))
    witness = {var: str(value) for var, value in result.witness.items()}
    return session.emit(RunReport("sat", witness_model(tree, result.witness), "itree",
                                  extra={"witness": witness}))


def cmd_itree_entail(args, session: Session) -> int:
    """Decide entailment between two i-tree files"""
    t1 = parse_itree(read_file(args.file1))
    t2 = parse_itree(read_file(args.file2))
    result = itree_entails(t1, t2)
    extra = {"failed": result.failed} if result.failed else {}
    return session.emit(RunReport(result.verdict, result.counter_model, "itree", extra=extra))


def cmd_itree_tighten(args, session: Session) -> int:
    """Report the strongest intervals of an i-tree file"""
    tree = parse_itree(read_file(args.file))
    try:
        intervals = tighten(tree)
    except UnsatisfiableTree as e:
        get_logger().debug(str(e))
        return session.emit(RunReport("unsat", strategy="itree"))
    rendered = {var: [str(lo), "inf" if hi is None else str(hi)] for var, (lo, hi) in intervals.items()}
    witness = itree_sat(tree).witness
    return session.emit(RunReport("sat", witness_model(tree, witness), "itree",
                                  extra={"intervals": rendered}))


def cmd_oracle(args, session: Session) -> int:
    """Bounded brute-force satisfiability of a problem file"""
    if args.region_bound < 0 or args.int_bound < 0:
        raise InputFileError("bounds must be natural numbers")
    problem = parse_problem(read_file(args.file))
    bounds = {"region_bound": str(args.region_bound), "int_bound": str(args.int_bound)}
    try:
        result = oracle_sat(problem, args.region_bound, args.int_bound, session.limits.oracle_ceiling)
    except BudgetExceeded as e:
        return session.emit(RunReport("unknown", strategy="oracle", branches=e.candidates,
                                      reason="oracle-ceiling", extra={"bounds": bounds}))
    return session.emit(RunReport(result.verdict, result.model, "oracle", result.candidates,
                                  extra={"bounds": bounds}))


def cmd_encode(args, session: Session) -> int:
    """Encode a 3-SAT or subset-sum instance"""
    text = read_file(args.file)
    if args.kind == '3sat':
        problem = encode_3sat(parse_dimacs(text))
    else:
        problem = encode_subset_sum(parse_subset_sum(text))
    write_output(print_problem(problem), args.output)
    return EXIT_OK


def cmd_gen(args, session: Session) -> int:
    """Generate a random problem"""
    profile = Profile(args.set_vars, args.int_vars, args.depth, args.const_bits)
    try:
        problem = gen_random(args.seed, profile)
    except ValueError as e:
        raise InputFileError(str(e))
    write_output(print_problem(problem), args.output)
    return EXIT_OK


class CheckTally:
    """Aggregate counts of a differential run"""

    def __init__(self):
        self.counts = {"instances": 0, "agree": 0, "disagree": 0, "skipped": 0}
        self.first_model = None
        self.first_seed = None

    def agree(self):
        self.counts["instances"] += 1
        self.counts["agree"] += 1

    def skip(self):
        self.counts["instances"] += 1
        self.counts["skipped"] += 1

    def disagree(self, seed: int, model, what: str):
        self.counts["instances"] += 1
        self.counts["disagree"] += 1
        get_logger().warning(f"seed {seed}: {what}")
        if self.first_model is None and model is not None:
            self.first_model = model
            self.first_seed = seed


def _check_small(args, session: Session, tally: CheckTally):
    profile = PROFILES["small"]
    for seed in range(args.seed, args.seed + args.count):
        problem = gen_random(seed, profile)
        verdict = solve(problem, Strategy.explicit(), session.limits)
        try:
            bounded = oracle_sat(problem, args.region_bound, args.int_bound,
                                 session.limits.oracle_ceiling)
        except BudgetExceeded:
            tally.skip()
            continue
        if verdict.kind is VerdictKind.UNKNOWN:
            tally.skip()
            continue
        if (verdict.kind is VerdictKind.SAT) != bounded.sat:
            tally.disagree(seed, verdict.model or bounded.model,
                           f"solver {verdict.token}, oracle {bounded.verdict}")
            continue
        if args.sparse and not _sparse_coherent(problem, verdict, session, seed, tally):
            continue
        tally.agree()


def _sparse_coherent(problem: Problem, explicit: Verdict, session: Session, seed: int,
                     tally: CheckTally) -> bool:
    n = len(problem.set_vars)
    full = solve(problem, Strategy.sparse(1 << n), session.limits)
    if full.kind is not VerdictKind.UNKNOWN and full.kind is not explicit.kind:
        tally.disagree(seed, full.model or explicit.model,
                       f"sparse(2^n) {full.token}, explicit {explicit.token}")
        return False
    narrow = solve(problem, Strategy.sparse(), session.limits)
    if narrow.kind is VerdictKind.SAT and explicit.kind is VerdictKind.UNSAT:
        tally.disagree(seed, narrow.model, "sparse sat where explicit is unsat")
        return False
    return True


def _check_itree(args, session: Session, tally: CheckTally, extra: Dict):
    entail_counts = {"pairs": 0, "yes": 0, "no": 0, "unknown": 0}
    for seed in range(args.seed, args.seed + args.count):
        tree = gen_random_itree(seed, nodes=1 + seed % 6)
        result = itree_sat(tree)
        verdict = solve(itree_problem(tree), Strategy.explicit(), session.limits)
        if verdict.kind is VerdictKind.UNKNOWN:
            tally.skip()
        elif result.sat != (verdict.kind is VerdictKind.SAT):
            model = witness_model(tree, result.witness) if result.sat else verdict.model
            tally.disagree(seed, model, f"itree {result.verdict}, solver {verdict.token}")
        elif result.sat and not eval_formula(itree_semantics(tree), witness_model(tree, result.witness)):
            tally.disagree(seed, witness_model(tree, result.witness), "itree witness fails evaluation")
        else:
            tally.agree()

        t1, t2 = gen_itree_pair(seed)
        entailment = itree_entails(t1, t2)
        entail_counts["pairs"] += 1
        entail_counts[entailment.verdict] += 1
        p1, p2 = itree_problem(t1), itree_problem(t2)
        if entailment.verdict == "yes":
            refuted = entails(p1, p2, session.limits)
            if refuted.verdict == "no":
                tally.disagree(seed, refuted.counter_model, "itree entailment yes, solver finds counter-model")
        elif entailment.verdict == "no":
            model = entailment.counter_model
            if not eval_formula(p1.formula, model) or eval_formula(p2.formula, model):
                tally.disagree(seed, model, "itree counter-model does not separate the forests")
    extra["entailment"] = entail_counts


def cmd_check(args, session: Session) -> int:
    """Differential run of the solver against independent deciders"""
    if args.count < 0:
        raise InputFileError("--count must be a natural number")
    tally = CheckTally()
    extra: Dict = {}
    if args.profile == 'small':
        _check_small(args, session, tally)
    else:
        _check_itree(args, session, tally, extra)

    extra = {"check": dict(tally.counts, profile=args.profile), **extra}
    if tally.counts["disagree"]:
        extra["check"]["first_disagreement_seed"] = tally.first_seed
        session.emit(RunReport("no", tally.first_model, "explicit", extra=extra))
        return EXIT_DISAGREEMENT
    return session.emit(RunReport("yes", strategy="explicit", extra=extra))


def cmd_eval(args, session: Session) -> int:
    """Evaluate a problem in a JSON model (debug path)"""
    problem = parse_problem(read_file(args.file))
    try:
        model = model_from_json(json.loads(read_file(args.model)))
    except ValueError as e:
        raise InputFileError(f"{args.model}: {e}")
    print("true" if eval_formula(problem.formula, model) else "false")
    return EXIT_OK


COMMANDS = {
    'init': cmd_init,
    'solve': cmd_solve,
    'entail': cmd_entail,
    'itree-sat': cmd_itree_sat,
    'itree-entail': cmd_itree_entail,
    'itree-tighten': cmd_itree_tighten,
    'oracle': cmd_oracle,
    'encode': cmd_encode,
    'gen': cmd_gen,
    'check': cmd_check,
    'eval': cmd_eval,
}


def setup_logging(args) -> Dict:
    """Set up logging based on config and arguments

    Args:
        args: Command line arguments

    Returns:
        Loaded configuration (defaults when none is initialized)

    Raises:
        ConfigError: If an existing configuration is invalid
    """
    config_mgr = ConfigManager(config_dir=args.config_dir)
    config = config_mgr.load_or_defaults()
    log_level = config.get("general", {}).get("log_level", "info")
    log_dir = config_mgr.logs_dir if config_mgr.config_exists() else None
    init_logger(log_dir, log_level, args.verbose)
    return config


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    parser = create_parser()
    args = parser.parse_args(argv)

    # Show help if no command specified
    if args.command is None:
        parser.print_help()
        return EXIT_OK

    try:
        config = setup_logging(args)
        session = Session(args, config)
        get_logger().info(f"Executing command: {args.command} (verbose={args.verbose})")
        return COMMANDS[args.command](args, session)
    except InputFileError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except INPUT_ERRORS as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
