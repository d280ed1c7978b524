"""
Main script for running the quantum while-program verifier from the command line.

    python -m qwhile_verifier.main check --mode tot --pre phi.pred --post ghz.pred qflip.qw

Exit status: 0 when every verdict holds, 1 when some verdict fails (the report
is still printed), 2 for usage, parse and input errors.
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from qwhile_verifier import __version__
from qwhile_verifier.config.tolerances import Settings
from qwhile_verifier.core.errors import QWhileError
from qwhile_verifier.core.operators import basis_vector, projector
from qwhile_verifier.core.report import RunReport
from qwhile_verifier.core.verdict import Verdict, encode_matrix
from qwhile_verifier.flow.invariants import InvariantChecker
from qwhile_verifier.flow.svts import build_svts
from qwhile_verifier.flow.termination import terminate_report
from qwhile_verifier.hoare.derivation import DerivationChecker
from qwhile_verifier.hoare.formulas import CorrectnessFormula, TripleChecker, normalize_mode
from qwhile_verifier.hoare.proof_format import load_proof_file, load_ranking, rule_counts
from qwhile_verifier.hoare.ranking import RankingChecker
from qwhile_verifier.hoare.wp import wp_for_mode
from qwhile_verifier.lang.ast import AnnotatedProgram, While
from qwhile_verifier.lang.declarations import Declarations
from qwhile_verifier.lang.parser import parse_file, parse_predicate, parse_state
from qwhile_verifier.lang.structure import subprograms
from qwhile_verifier.outlines.discharge import OutlineChecker
from qwhile_verifier.outlines.outline import outline_from
from qwhile_verifier.relations.compositions import bullet_comp, circle_comp, diamond_comp, relation_bounds
from qwhile_verifier.semantics.denotational import denote_apply_with_stats
from qwhile_verifier.semantics.operational import run_ensemble

logger = logging.getLogger("qwhile_verifier")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


# --- input helpers ---

def read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def load_program(path: str, settings: Settings):
    """(decls, program, annotated or None)."""
    decls, parsed = parse_file(path, settings)
    if isinstance(parsed, AnnotatedProgram):
        return decls, parsed.program, parsed
    return decls, parsed, None


def load_predicate(path: str, decls: Optional[Declarations]) -> np.ndarray:
    return parse_predicate(read_text(path).strip(), decls)


def load_matrix(path: str) -> np.ndarray:
    """An anonymous operator (no declarations, no bounds check)."""
    return parse_predicate(read_text(path).strip(), None, target=[], check=False)


def load_state(path: Optional[str], decls: Declarations) -> np.ndarray:
    space = decls.space()
    if path is None:
        return projector(basis_vector(0, space.dim))
    return parse_state(read_text(path).strip(), space, decls).matrix


def find_loop(program, key: Optional[str]) -> Tuple[Tuple, While]:
    loops = [(path, node) for path, node in subprograms(program) if isinstance(node, While)]
    if not loops:
        raise QWhileError("Program has no loop")
    if key is None:
        if len(loops) > 1:
            raise QWhileError(f"Program has {len(loops)} loops; choose one with --loop LINE:COL")
        return loops[0]
    for path, node in loops:
        if node.span() == key or "/".join(str(s) for s in path) == key:
            return path, node
    raise QWhileError(f"No loop at {key}; loops are at {[node.span() for _, node in loops]}")


def load_rankings(path: Optional[str], program, decls: Declarations, settings: Settings) -> Dict[Tuple, Any]:
    """Ranking file for outlines: {"LINE:COL": ranking object, ...}."""
    if path is None:
        return {}
    data = json.loads(read_text(path))
    rankings = {}
    for key, value in data.items():
        loop_path, _ = find_loop(program, key)
        rankings[loop_path] = load_ranking(value, decls, settings)[0]
    return rankings


def location_key(text: str):
    if "/" in text:
        return tuple(int(s) if s.isdigit() else s for s in text.split("/") if s)
    return text


# --- subcommands ---

def cmd_run(args, settings: Settings, report: RunReport):
    decls, program, _ = load_program(args.program, settings)
    rho = load_state(args.state, decls)
    output, stats = denote_apply_with_stats(program, rho, decls, settings)
    section = {'trace': float(np.trace(output).real), 'loops': stats.to_dict(), 'state': encode_matrix(output)}
    if args.operational:
        run = run_ensemble(program, rho, decls, settings.budget("max_steps"), settings)
        difference = float(np.max(np.abs(run.terminated_sum() - output), initial=0.0))
        section['operational'] = run.to_dict()
        allowed = settings.tol("eq") + stats.residual + run.residual_trace
        verdict = Verdict("run.agreement", difference <= allowed, allowed - difference,
                          provenance="run.agreement", kind="semantics")
        verdict.add_detail("max_difference", difference)
        verdict.add_detail("pruned_trace", run.pruned_trace)
        report.add_note(f"operational run: {run.steps} steps, stopped by {run.stopped_by}, "
                        f"pruned trace {run.pruned_trace:.3e}")
        report.add_verdict(verdict)
    report.add_section("run", section)


def cmd_wp(args, settings: Settings, report: RunReport):
    decls, program, _ = load_program(args.program, settings)
    post = load_predicate(args.post, decls)
    result, stats = wp_for_mode(program, post, decls, args.mode, settings)
    verdict = Verdict("wp.converged", stats.converged, -stats.gap, provenance="wp.converged", kind="wp")
    verdict.add_detail("iterations", stats.iterations)
    report.add_verdict(verdict)
    report.add_section("wp", {'mode': args.mode, 'stats': stats.to_dict(), 'precondition': encode_matrix(result)})


def cmd_check(args, settings: Settings, report: RunReport):
    decls, program, _ = load_program(args.program, settings)
    formula = CorrectnessFormula(load_predicate(args.pre, decls), program, load_predicate(args.post, decls), args.mode)
    formula.validate(decls, settings)
    checker = TripleChecker(decls, settings)
    checker.run([formula], args.tol)
    report.extend(checker.verdicts)


def cmd_outline(args, settings: Settings, report: RunReport):
    decls, program, annotated = load_program(args.program, settings)
    rankings = load_rankings(args.ranking, program, decls, settings)
    outline = outline_from(annotated, args.mode, rankings)
    states = [load_state(path, decls) for path in args.state or []]
    checker = OutlineChecker(decls, settings)
    checker.run(outline, args.tol, outer=args.outer, states=states)
    report.extend(checker.verdicts)
    report.add_section("outline", checker.results)


def cmd_svts(args, settings: Settings, report: RunReport):
    decls, program, _ = load_program(args.program, settings)
    theta = load_predicate(args.theta, decls) if args.theta else None
    svts = build_svts(program, decls, theta, settings)
    report.add_section("svts", svts.to_dict())
    if args.text:
        print(svts.to_text())


def cmd_invcheck(args, settings: Settings, report: RunReport):
    decls, program, _ = load_program(args.program, settings)
    theta = load_predicate(args.theta, decls) if args.theta else None
    svts = build_svts(program, decls, theta, settings)
    checker = InvariantChecker(settings)
    checker.run(svts, location_key(args.location), load_predicate(args.invariant, decls), args.max_len)
    report.extend(checker.verdicts)
    report.add_section("invariant", checker.results['invariant'])


def cmd_rank(args, settings: Settings, report: RunReport):
    decls, program, _ = load_program(args.program, settings)
    _, loop = find_loop(program, args.loop)
    spec = load_ranking(json.loads(read_text(args.ranking)), decls, settings)[0]
    target = load_predicate(args.target, decls) if args.target else None
    states = [load_state(path, decls) for path in args.state] if args.state else None
    checker = RankingChecker(decls, settings)
    checker.run(loop, spec, states, args.iterations, target)
    report.extend(checker.verdicts)
    report.add_section("ranking", checker.results['report'])


def cmd_terminate(args, settings: Settings, report: RunReport):
    decls, program, _ = load_program(args.program, settings)
    rho = load_state(args.state, decls)
    result = terminate_report(program, rho, decls, args.budget, settings)
    verdict = Verdict("terminate", result.verdict != "inconclusive", -result.remaining,
                      provenance="terminate", kind="termination")
    verdict.add_detail("verdict", result.verdict)
    report.add_verdict(verdict)
    report.add_section("termination", result.to_dict())
    if args.plot:
        from qwhile_verifier.utils.visualization import plot_termination
        plot_termination(result.probabilities, args.plot)


def cmd_relcompose(args, settings: Settings, report: RunReport):
    left, right = load_matrix(args.left), load_matrix(args.right)
    if args.kind == "circle":
        result = circle_comp(left, right, d2=args.d2)
    elif args.kind == "bullet":
        result = bullet_comp(left, right, d2=args.d2)
    else:
        result = diamond_comp(left, right, args.sign, d2=args.d2)
    report.add_section("relation", {'kind': args.kind, 'matrix': encode_matrix(result),
                                    'bounds': relation_bounds(result, settings.tol("psd"))})


def cmd_prove(args, settings: Settings, report: RunReport):
    decls, _, _ = load_program(args.program, settings)
    tree = load_proof_file(args.proof, decls, settings)
    checker = DerivationChecker(decls, settings)
    checker.run(tree, semantic=args.semantic, tol=args.tol)
    report.extend(checker.verdicts)
    report.add_section("derivation", {'rules': rule_counts(tree), **checker.results})


COMMANDS = {
    "run": cmd_run,
    "wp": cmd_wp,
    "check": cmd_check,
    "outline": cmd_outline,
    "svts": cmd_svts,
    "invcheck": cmd_invcheck,
    "rank": cmd_rank,
    "terminate": cmd_terminate,
    "relcompose": cmd_relcompose,
    "prove": cmd_prove,
}


# --- argument parsing ---

def common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, help="Loewner-order slack (psd tolerance)")
    common.add_argument("--fix-tol", type=float, help="Entrywise change that stops wp fixed-point iteration")
    common.add_argument("--max-iters", type=int, help="Fixed-point iteration budget")
    common.add_argument("--max-steps", type=int, help="Operational step budget")
    common.add_argument("--seed", type=int, help="Seed of every random sample")
    common.add_argument("--mode", type=str, default="total", choices=["par", "partial", "tot", "total"],
                        help="Correctness mode")
    output = common.add_mutually_exclusive_group()
    output.add_argument("--json", dest="text", action="store_false", default=False,
                        help="Print the JSON report (default)")
    output.add_argument("--text", dest="text", action="store_true", help="Print a human-readable summary")
    common.add_argument("--output-dir", type=str, help="Also save the JSON report in this directory")
    common.add_argument("--timing", action="store_true", help="Include wall time in the report")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG logging")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = common_options()
    parser = argparse.ArgumentParser(prog="qwhile_verifier",
                                     description="Verify quantum while-programs with quantum Hoare logic")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="Run a program on a state")
    p.add_argument("program")
    p.add_argument("--state", help="Initial state file (default: |0...0>)")
    p.add_argument("--operational", action="store_true", help="Cross-check with the operational semantics")

    p = sub.add_parser("wp", parents=[common], help="Weakest precondition of a postcondition")
    p.add_argument("program")
    p.add_argument("--post", required=True)

    p = sub.add_parser("check", parents=[common], help="Check a correctness formula {pre} P {post}")
    p.add_argument("program")
    p.add_argument("--pre", required=True)
    p.add_argument("--post", required=True)

    p = sub.add_parser("outline", parents=[common], help="Check an annotated proof outline")
    p.add_argument("program")
    p.add_argument("--ranking", help='JSON file {"LINE:COL": ranking object} for total correctness')
    p.add_argument("--state", action="append", help="Initial state for the strong-soundness trace (repeatable)")
    p.add_argument("--outer", action="store_true", help="Also check the outer triple directly")

    p = sub.add_parser("svts", parents=[common], help="Dump the control-flow transition system")
    p.add_argument("program")
    p.add_argument("--theta", help="Initial predicate (default: identity)")

    p = sub.add_parser("invcheck", parents=[common], help="Bounded invariant check at a location")
    p.add_argument("program")
    p.add_argument("--location", required=True, help="l<k>, a location label or a subprogram path a/b/c")
    p.add_argument("--invariant", required=True)
    p.add_argument("--theta")
    p.add_argument("--max-len", type=int)

    p = sub.add_parser("rank", parents=[common], help="Check a ranking function of a loop")
    p.add_argument("program")
    p.add_argument("--ranking", required=True, help="JSON ranking object")
    p.add_argument("--loop", help="LINE:COL of the loop (needed when there are several)")
    p.add_argument("--target", help="Predicate A of the decrease condition")
    p.add_argument("--state", action="append")
    p.add_argument("--iterations", type=int)

    p = sub.add_parser("terminate", parents=[common], help="Termination probability and convergence")
    p.add_argument("program")
    p.add_argument("--state")
    p.add_argument("--budget", type=int)
    p.add_argument("--plot", help="Save a termination plot (PNG) to this path")

    p = sub.add_parser("relcompose", parents=[common], help="Compose two quantum relations")
    p.add_argument("--kind", required=True, choices=["circle", "bullet", "diamond"])
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--d2", type=int, required=True, help="Dimension of the shared middle space")
    p.add_argument("--sign", default="+", choices=["+", "-"])

    p = sub.add_parser("prove", parents=[common], help="Check a derivation (JSON proof object)")
    p.add_argument("proof")
    p.add_argument("program", help="Program file supplying the declarations")
    p.add_argument("--semantic", action="store_true", help="Also check every conclusion semantically")
    return parser


def configure_logging(verbosity: int):
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)


def settings_from(args) -> Settings:
    return Settings.from_overrides(seed=args.seed, psd=args.tol, fix=args.fix_tol,
                                   max_iters=args.max_iters, max_steps=args.max_steps)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main function of the verifier CLI; returns the exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    configure_logging(args.verbose)
    args.mode = normalize_mode(args.mode)

    settings = settings_from(args)
    report = RunReport(argv, settings, include_timing=args.timing)
    try:
        COMMANDS[args.command](args, settings, report)
    except (QWhileError, OSError, json.JSONDecodeError, KeyError) as exc:
        logger.error("%s: %s", args.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report.finish()

    if args.output_dir:
        report.save(args.output_dir)
    print(report.to_text() if args.text else report.to_json())
    return EXIT_OK if report.holds else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
