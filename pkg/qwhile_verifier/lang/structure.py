"""
Structure - Variables, subprograms and control-point remainders of a program.
"""

from typing import Dict, List, Sequence, Set, Tuple

from ..core.errors import InvalidPathError
from .ast import BODY, Case, Init, Path, Program, Seq, Unitary, While


def _collect_vars(program: Program, found: Set[str]):
    if isinstance(program, Init):
        found.add(program.var)
    elif isinstance(program, (Unitary, Case, While)):
        found.update(program.vars)
    for _, child in program.children():
        _collect_vars(child, found)


def vars_of(program: Program, order: Sequence[str] = ()) -> List[str]:
    """
    Variables occurring in `program`.

    Args:
        program: Program to inspect
        order: declaration order; variables outside it are appended sorted

    Returns:
        Ordered variable list
    """
    found: Set[str] = set()
    _collect_vars(program, found)
    ordered = [v for v in order if v in found]
    return ordered + sorted(found - set(ordered))


def subprograms(program: Program, path: Path = ()) -> List[Tuple[Path, Program]]:
    """All (path, subprogram) pairs in preorder, the program itself first."""
    result = [(path, program)]
    for step, child in program.children():
        result.extend(subprograms(child, path + (step,)))
    return result


def resolve(program: Program, path: Path) -> Program:
    node = program
    for depth, step in enumerate(path):
        children = dict(node.children())
        if step not in children:
            raise InvalidPathError(
                f"Path {list(path)} leaves the program at step {depth} ({step!r} under {node.kind})")
        node = children[step]
    return node


def at_remainder(path: Path, program: Program) -> Program:
    """
    The program still to run when control reaches the subprogram at `path`.

    Seq: inside the first half the second half follows; inside the second half
    only the remainder of that half. Case: the remainder of the chosen branch.
    While: the remainder of the body followed by the loop itself.
    """
    if not path:
        return program
    step, rest = path[0], path[1:]
    if isinstance(program, Seq):
        if step == 0:
            return Seq(at_remainder(rest, program.first), program.second, program.loc)
        if step == 1:
            return at_remainder(rest, program.second)
    elif isinstance(program, Case):
        if step in program.labels:
            return at_remainder(rest, program.branch(step))
    elif isinstance(program, While):
        if step == BODY:
            return Seq(at_remainder(rest, program.body), program, program.loc)
    raise InvalidPathError(f"Path step {step!r} does not address a subprogram of {program.kind}")


def remainder_index(program: Program) -> Dict[Program, List[Path]]:
    """Every subprogram path T grouped by the remainder at(T, program), in preorder."""
    index: Dict[Program, List[Path]] = {}
    for path, _ in subprograms(program):
        index.setdefault(at_remainder(path, program), []).append(path)
    return index
