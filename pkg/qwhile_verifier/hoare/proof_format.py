"""
Proof Format - JSON proof objects for derivations.

A node is

    {"rule": "R.SC", "mode": "total", "label": "...",
     "premises": [<node>, ...], "side": {...},
     "pre": "<predexpr>", "program": "<statements>", "post": "<predexpr>"}

where pre/program/post are optional and, when all three are present, state the
conclusion the node is expected to prove. A hypothesis leaf is
{"formula": {"pre": ..., "program": ..., "post": ..., "mode": ...}}. The file
itself is either a node or {"proof": <node>}.

Side data are decoded against the program's declarations: predicates are
predicate expressions, `program` is a statement list, `channel` is a list of
Kraus matrix literals or {"amplitude_damping": γ}, `ranking` is an object
(or a list of objects) with `observable`, `scale`, `epsilon` and optional
`target`, or with `table` as [[state, value], ...], and `states` is a list of
state expressions.
"""

import json
import logging
from typing import Any, Dict, List, Optional, Sequence, Union

from ..config.tolerances import Settings, resolve
from ..core.errors import QWhileError
from ..core.operators import amplitude_damping
from ..lang.declarations import Declarations
from ..lang.parser import parse_predicate, parse_state, parse_statements
from .formulas import CorrectnessFormula
from .ranking import RankingSpec
from .rules import AXIOMS, RuleApplication

logger = logging.getLogger(__name__)

_WHOLE_SPACE_PREDICATES = ("pre", "post")


class _Loader:
    def __init__(self, decls: Declarations, settings: Settings):
        self.decls = decls
        self.settings = settings

    def predicate(self, text: Any, target: Optional[Sequence[str]], what: str, check: bool = True):
        if not isinstance(text, str):
            raise QWhileError(f"Proof field '{what}' must be a predicate expression string")
        return parse_predicate(text, self.decls, target, check)

    def formula(self, data: Dict[str, Any], mode: Optional[str] = None) -> CorrectnessFormula:
        missing = [k for k in ("pre", "program", "post") if k not in data]
        if missing:
            raise QWhileError(f"Formula is missing {missing}")
        scope = data.get("vars")
        return CorrectnessFormula(
            self.predicate(data["pre"], scope, "pre"),
            parse_statements(data["program"], self.decls),
            self.predicate(data["post"], scope, "post"),
            data.get("mode", mode or "total"),
            None if scope is None else tuple(scope),
        )

    def ranking(self, data: Dict[str, Any]):
        space = self.decls.space()
        target = data.get("target")
        if "table" in data:
            table = [(parse_state(state, space, self.decls).matrix, int(value)) for state, value in data["table"]]
            return RankingSpec(table=tuple(table), epsilon=float(data.get("epsilon", 0.1)),
                               target=None if target is None else self.predicate(target, None, "target"),
                               match_tol=data.get("match_tol"))
        return RankingSpec(
            observable=self.predicate(data["observable"], None, "observable", check=False),
            scale=float(data.get("scale", 1.0)),
            target=None if target is None else self.predicate(target, None, "target"),
            epsilon=float(data.get("epsilon", 0.1)),
        )

    def side(self, rule: str, data: Dict[str, Any]) -> Dict[str, Any]:
        side: Dict[str, Any] = {}
        scope = data.get("scope")
        for key, value in data.items():
            if key in _WHOLE_SPACE_PREDICATES:
                side[key] = self.predicate(value, scope, key)
            elif key == "pred":
                side[key] = self.predicate(value, data.get("vars"), key)
            elif key == "program":
                side[key] = parse_statements(value, self.decls)
            elif key == "channel":
                if isinstance(value, dict) and "amplitude_damping" in value:
                    side[key] = amplitude_damping(float(value["amplitude_damping"]))
                else:
                    side[key] = [self.predicate(k, [], "channel", check=False) for k in value]
            elif key == "ranking":
                specs = [self.ranking(v) for v in (value if isinstance(value, list) else [value])]
                side[key] = specs
            elif key == "states":
                space = self.decls.space()
                side[key] = [parse_state(s, space, self.decls).matrix for s in value]
            elif key in ("vars", "traced", "labels", "scope"):
                side[key] = tuple(str(v) for v in value)
            else:
                side[key] = value
        return side

    def node(self, data: Dict[str, Any]) -> Union[RuleApplication, CorrectnessFormula]:
        if not isinstance(data, dict):
            raise QWhileError(f"Proof nodes must be JSON objects, got {type(data).__name__}")
        if "formula" in data:
            return self.formula(data["formula"])
        if "rule" not in data:
            raise QWhileError(f"Proof node without 'rule': {sorted(data)}")
        rule = data["rule"]
        premises = [self.node(p) for p in data.get("premises", [])]
        if rule in AXIOMS and premises:
            raise QWhileError(f"Axiom {rule} takes no premises, got {len(premises)}")
        claim = None
        if all(k in data for k in ("pre", "program", "post")):
            claim = self.formula(data, data.get("mode"))
        return RuleApplication(rule, tuple(premises), self.side(rule, data.get("side", {})),
                               data.get("mode"), data.get("label", ""), claim)


def load_proof(source: Union[str, Dict[str, Any]], decls: Declarations,
               settings: Optional[Settings] = None) -> Union[RuleApplication, CorrectnessFormula]:
    """
    Build a derivation tree from a proof object.

    Args:
        source: JSON text or an already decoded object
        decls: declarations of the program the proof is about
        settings: tolerances used while parsing predicates

    Returns:
        The root RuleApplication (or a lone hypothesis formula)
    """
    data = json.loads(source) if isinstance(source, str) else source
    if isinstance(data, dict) and "proof" in data:
        data = data["proof"]
    tree = _Loader(decls, resolve(settings)).node(data)
    logger.debug("Loaded proof rooted at %s", getattr(tree, "rule", "formula"))
    return tree


def load_proof_file(path: str, decls: Declarations, settings: Optional[Settings] = None):
    with open(path, "r", encoding="utf-8") as f:
        return load_proof(f.read(), decls, settings)


def rule_counts(tree: Union[RuleApplication, CorrectnessFormula]) -> Dict[str, int]:
    """How often each rule occurs in a tree."""
    counts: Dict[str, int] = {}
    stack: List[Any] = [tree]
    while stack:
        node = stack.pop()
        if isinstance(node, RuleApplication):
            counts[node.rule] = counts.get(node.rule, 0) + 1
            stack.extend(node.premises)
    return dict(sorted(counts.items()))


def load_ranking(data: Union[Dict[str, Any], List[Dict[str, Any]]], decls: Declarations,
                 settings: Optional[Settings] = None) -> List[RankingSpec]:
    """Decode one ranking object (or a list of them) as in a proof's `ranking` side entry."""
    loader = _Loader(decls, resolve(settings))
    return [loader.ranking(v) for v in (data if isinstance(data, list) else [data])]
