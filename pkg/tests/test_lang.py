"""Tests for the program language: lexer, parser, printer and program structure."""

import numpy as np
import pytest

from qwhile_verifier.core.errors import ParseError, PredicateBoundsError, StaticCheckError, UnknownIdentifierError
from qwhile_verifier.lang.ast import BODY, AnnotatedProgram, Case, Init, Seq, Skip, Unitary, While
from qwhile_verifier.lang.parser import parse, parse_predicate, parse_program, parse_state, parse_statements
from qwhile_verifier.lang.printer import format_statement, pretty_print
from qwhile_verifier.lang.structure import at_remainder, remainder_index, resolve, subprograms, vars_of

from conftest import corpus_path, read_corpus


class TestParser:
    """Tests for parse and the static checks it runs."""

    def test_qflip_is_left_nested(self, qflip):
        _, program = qflip
        expected = Seq(Seq(Unitary("H", ("d1",)), Unitary("H", ("d2",))), Unitary("H", ("d3",)))
        assert program == expected

    def test_variables_in_declaration_order(self, qflip, teleport):
        decls, program = qflip
        assert vars_of(program, decls.space().names) == ["d1", "d2", "d3"]
        decls, annotated = teleport
        assert vars_of(annotated.program, decls.space().names) == ["p", "q", "r"]

    def test_loop_and_case(self, qw2, teleport):
        _, program = qw2
        loop = program.second
        assert isinstance(loop, While)
        assert loop.continue_label == "no"
        assert loop.vars == ("p",)
        _, annotated = teleport
        cases = [node for _, node in subprograms(annotated.program) if isinstance(node, Case)]
        assert [c.labels for c in cases] == [("0", "1"), ("0", "1")]

    def test_empty_program_is_skip(self):
        _, program = parse("var q : 2; prog { }")
        assert isinstance(program, Skip)

    def test_initialization_statement(self):
        _, program = parse("var q : 2; var r : 3; prog { q := |0>; r := |0>; }")
        assert program == Seq(Init("q"), Init("r"))

    def test_quantum_walk_starts_with_initializations(self, qw4):
        _, program = qw4
        assert program.first == Seq(Init("c"), Init("p"))

    def test_syntax_error_has_position(self):
        with pytest.raises(ParseError) as info:
            parse("var q : 2;\nprog {\n  apply H(q)\n}")
        assert info.value.line == 4

    def test_non_unitary_gate(self):
        with pytest.raises(StaticCheckError):
            parse("var q : 2; gate U = [[1, 1], [0, 1]]; prog { apply U(q); }")

    def test_incomplete_measurement(self):
        with pytest.raises(StaticCheckError):
            parse("var q : 2; meas M = { 0: [[1, 0], [0, 0]]; }; prog { skip; }")

    def test_arity_mismatch(self):
        with pytest.raises(StaticCheckError):
            parse("var q : 2; prog { apply CNOT(q); }")

    def test_unknown_variable(self):
        with pytest.raises(UnknownIdentifierError):
            parse("var q : 2; prog { r := |0>; }")

    def test_init_must_be_zero(self):
        with pytest.raises(ParseError):
            parse("var q : 2; prog { q := |1>; }")

    def test_statements_against_declarations(self, qflip):
        decls, _ = qflip
        program = parse_statements("apply H(d1); d2 := |0>;", decls)
        assert program == Seq(Unitary("H", ("d1",)), Init("d2"))


class TestAnnotations:
    """Tests for annotation placement."""

    def test_teleport_pre_and_post(self, teleport):
        decls, annotated = teleport
        assert isinstance(annotated, AnnotatedProgram)
        entry = annotated.entry_path()
        assert len(annotated.pre[entry]) == 2
        psi = parse_predicate("Psi", decls)
        assert np.allclose(annotated.postcondition.matrix, psi)

    def test_branch_annotations_are_keyed_by_label(self, teleport):
        _, annotated = teleport
        branch_paths = [path for path in annotated.pre if "1" in path]
        assert branch_paths
        for path in branch_paths:
            assert isinstance(resolve(annotated.program, path), (Skip, Unitary))

    def test_annotation_out_of_bounds(self):
        with pytest.raises(PredicateBoundsError):
            parse("var q : 2; prog { @{ 2 * I(2) } skip; @{ I(2) } }")


class TestPredicates:
    """Tests for predicate expressions and state files."""

    def test_named_predicates_extend_cylindrically(self, teleport):
        decls, _ = teleport
        psi = parse_predicate("Psi", decls)
        vector = np.array([0.6, 0.8])
        expected = np.kron(np.eye(4), np.outer(vector, vector))
        assert np.allclose(psi, expected)

    def test_tensor_and_sum(self, teleport):
        decls, _ = teleport
        matrix = parse_predicate("P0 (x) Psi + P1 (x) Psi", decls)
        assert np.allclose(matrix, parse_predicate("Psi", decls))

    def test_ghz_projector(self, qflip):
        decls, _ = qflip
        ghz = parse_predicate(read_corpus("ghz.pred").strip(), decls)
        assert ghz[0, 0].real == pytest.approx(0.5)
        assert ghz[0, 7].real == pytest.approx(0.5)
        assert np.trace(ghz).real == pytest.approx(1.0)

    def test_symmetrizer_and_swap_literals(self):
        splus = parse_predicate("sym(2, +)", None, target=[], check=True)
        swap = parse_predicate("swap(2)", None, target=[], check=False)
        assert np.allclose(swap @ splus, splus)

    def test_ket_state_is_normalized(self, qflip):
        decls, _ = qflip
        rho = parse_state(read_corpus("w.state").strip(), decls.space(), decls)
        assert rho.trace == pytest.approx(1.0)
        assert rho.matrix[1, 2].real == pytest.approx(1 / 3)

    def test_state_from_named_predicates(self, teleport):
        decls, _ = teleport
        rho = parse_state(read_corpus("tel_input.state").strip(), decls.space(), decls)
        assert rho.trace == pytest.approx(1.0)
        assert np.allclose(rho.matrix @ rho.matrix, rho.matrix)


class TestPrinter:
    """Tests for pretty printing."""

    @pytest.mark.parametrize("name", ["qflip.qw", "qw2.qw", "qw4.qw", "qtel_outline.qw"])
    def test_round_trip(self, name):
        decls, program = parse(read_corpus(name))
        again_decls, again = parse(pretty_print(decls, program))
        if isinstance(program, AnnotatedProgram):
            assert again.program == program.program
            assert sorted(again.pre) == sorted(program.pre)
            for path, chain in program.pre.items():
                for old, new in zip(chain, again.pre[path]):
                    assert np.allclose(old.matrix, new.matrix, atol=1e-12)
        else:
            assert again == program
        assert again_decls.space() == decls.space()

    def test_format_statement_is_one_line(self, qw2):
        _, program = qw2
        text = format_statement(program)
        assert "\n" not in text
        assert "while Mpos(p) == no" in text


class TestStructure:
    """Tests for subprogram paths and control-point remainders."""

    def test_subprograms_preorder(self, qflip):
        _, program = qflip
        paths = [path for path, _ in subprograms(program)]
        assert paths == [(), (0,), (0, 0), (0, 1), (1,)]

    def test_remainder_inside_sequence(self, qflip):
        _, program = qflip
        assert at_remainder((0, 1), program) == Seq(Unitary("H", ("d2",)), Unitary("H", ("d3",)))
        assert at_remainder((1,), program) == Unitary("H", ("d3",))

    def test_remainder_inside_loop_body(self, qw2):
        _, program = qw2
        loop = program.second
        remainder = at_remainder((1, BODY, 1), program)
        assert remainder == Seq(Unitary("Shift", ("c", "p")), loop)

    def test_remainder_index_covers_every_path(self, qw2):
        _, program = qw2
        index = remainder_index(program)
        for path, _ in subprograms(program):
            assert path in index[at_remainder(path, program)]
        assert index[program.second] == [(1,)]
        # the body and its first statement leave the same program to run
        assert index[Seq(program.second.body, program.second)] == [(1, BODY), (1, BODY, 0)]

    def test_parse_program_drops_annotations(self):
        _, program = parse_program(read_corpus("qtel_outline.qw"))
        assert not isinstance(program, AnnotatedProgram)

    def test_corpus_path_exists(self):
        with open(corpus_path("qflip.qw"), "r", encoding="utf-8") as f:
            assert "prog" in f.read()
