"""
Randomized soundness checks: every rule conclusion built from valid premises
passes check_triple.
"""

import numpy as np
import pytest

from qwhile_verifier.core.operators import dagger, embed, identity, projector
from qwhile_verifier.hoare.formulas import check_triple
from qwhile_verifier.hoare.rules import RuleApplication, apply_rule
from qwhile_verifier.hoare.wp import wp_total
from qwhile_verifier.lang.ast import Unitary, While
from qwhile_verifier.lang.declarations import Declarations
from qwhile_verifier.utils.random_states import random_channel, random_measurement, random_predicate, random_unitary

INSTANCES = 100
TOLERANCE = 1e-7


def random_decls(rng):
    """Three qubits a, b, c with random gates U on two qubits and V on one, a random
    measurement M, and a guard/flip pair (G, F) whose loop runs at most once."""
    decls = Declarations()
    for name in ("a", "b", "c"):
        decls.add_variable(name, 2)
    decls.add_gate("U", random_unitary(4, rng))
    decls.add_gate("V", random_unitary(2, rng))
    decls.add_measurement("M", dict(zip(("0", "1"), random_measurement(2, 2, rng))))
    w = random_unitary(2, rng)
    decls.add_measurement("G", {"0": w @ projector([1, 0]) @ dagger(w), "1": w @ projector([0, 1]) @ dagger(w)})
    decls.add_gate("F", w @ np.array([[0, 1], [1, 0]]) @ dagger(w))
    return decls


def unitary(gate, vars, post, mode=None):
    return RuleApplication("Ax.UT", side={"gate": gate, "vars": vars, "post": post}, mode=mode)


def local(matrix, vars, decls):
    return embed(matrix, list(vars), decls.space())


def pair(rng):
    return ("a", "b") if rng.integers(0, 2) else ("b", "a")


def skip_instance(decls, rng):
    return RuleApplication("Ax.Sk", side={"post": random_predicate(8, rng)})


def init_instance(decls, rng):
    rule = "Ax.In.B" if rng.integers(0, 2) else "Ax.In.I"
    return RuleApplication(rule, side={"var": str(rng.choice(["a", "b", "c"])), "post": random_predicate(8, rng)})


def unitary_instance(decls, rng):
    return unitary("U", pair(rng), random_predicate(8, rng))


def sequence_instance(decls, rng):
    second = unitary("U", pair(rng), random_predicate(8, rng))
    middle = apply_rule(second, decls).pre
    return RuleApplication("R.SC", (unitary("V", ("c",), middle), second))


def case_instance(decls, rng):
    post = random_predicate(8, rng)
    return RuleApplication("R.IF", (RuleApplication("Ax.Sk", side={"post": post}), unitary("U", pair(rng), post)),
                           side={"meas": "M", "vars": (str(rng.choice(["a", "c"])),)})


def loop_instance(decls, rng):
    post = random_predicate(8, rng)
    loop = While("G", ("a",), "1", Unitary("F", ("a",)))
    invariant = wp_total(loop, post, decls)
    body = unitary("F", ("a",), invariant, mode="partial")
    return RuleApplication("R.LP", (body,), side={"meas": "G", "vars": ("a",), "post": post})


def weaken_instance(decls, rng):
    premise = unitary("U", pair(rng), random_predicate(8, rng))
    proved = apply_rule(premise, decls)
    shrink, grow = rng.uniform(0, 1, size=2)
    post = proved.post + grow * (identity(8) - proved.post)
    return RuleApplication("R.Or", (premise,), side={"pre": shrink * proved.pre, "post": post})


def invariance_instance(decls, rng):
    return RuleApplication("Ax.Inv", side={"program": Unitary("U", pair(rng)), "vars": ("c",),
                                           "pred": random_predicate(2, rng)})


def trace_out_instance(decls, rng):
    post = local(random_predicate(4, rng), ("a", "b"), decls)
    return RuleApplication("R.TI", (unitary("U", pair(rng), post),), side={"traced": ("c",)})


def convex_instance(decls, rng):
    vars = pair(rng)
    count = int(rng.integers(1, 4))
    premises = tuple(unitary("U", vars, random_predicate(8, rng)) for _ in range(count))
    weights = rng.dirichlet(np.ones(count)) * rng.uniform(0, 1)
    return RuleApplication("R.CC", premises, side={"weights": list(weights)})


def invariant_mix_instance(decls, rng):
    p, q = rng.dirichlet(np.ones(3))[:2]
    return RuleApplication("R.Inv", (unitary("U", pair(rng), random_predicate(8, rng)),),
                           side={"p": p, "q": q, "pred": random_predicate(2, rng), "vars": ("c",)})


def super_operator_instance(decls, rng):
    channel = random_channel(2, count=int(rng.integers(1, 4)), rng=rng, trace_preserving=bool(rng.integers(0, 2)))
    return RuleApplication("R.SO", (unitary("U", pair(rng), random_predicate(8, rng)),),
                           side={"channel": channel, "vars": ("c",)})


GENERATORS = {
    "Ax.Sk": skip_instance,
    "Ax.In": init_instance,
    "Ax.UT": unitary_instance,
    "R.SC": sequence_instance,
    "R.IF": case_instance,
    "R.LP": loop_instance,
    "R.Or": weaken_instance,
    "Ax.Inv": invariance_instance,
    "R.TI": trace_out_instance,
    "R.CC": convex_instance,
    "R.Inv": invariant_mix_instance,
    "R.SO": super_operator_instance,
}


class TestRuleSoundness:
    """Random rule instances on three qubits."""

    @pytest.mark.parametrize("index, rule", list(enumerate(sorted(GENERATORS))))
    def test_conclusions_hold(self, index, rule):
        rng = np.random.default_rng(2024 + index)
        for _ in range(INSTANCES):
            decls = random_decls(rng)
            conclusion = apply_rule(GENERATORS[rule](decls, rng), decls)
            verdict = check_triple(conclusion, decls, tol=TOLERANCE)
            assert verdict.holds, f"{rule}: {verdict}"
