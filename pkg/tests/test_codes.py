"""Tests for the code registry and code constructions."""
import json

import numpy as np
import pytest
from scipy.special import comb

from src.codes import (
    CODE_NAMES,
    GraphSpec,
    PauliString,
    SIX_QUBIT_TYPO,
    build_9_12_3_codewords,
    build_code,
    dump_codewords,
    graph_state,
    hamming_bound_satisfiable,
    hamming_weight_profile,
    is_self_complementary,
    resolve_six_qubit_ket,
    six_qubit_typo_candidates,
    verify_stabilizer,
)
from src.linalg import SparseState

SHAPES = {
    "five_qubit": (5, 2),
    "css_seven": (7, 2),
    "six_degenerate": (6, 2),
    "shor_nine": (9, 2),
    "eight_concat": (8, 2),
    "leung_four": (4, 2),
    "erasure_four": (4, 2),
    "gottesman_833": (8, 8),
    "nonadd_11_2_3": (11, 2),
    "nonadd_9_12_3": (9, 12),
    "nonadd_6_5": (6, 5),
    "nonadd_8_12": (8, 12),
}

ADDITIVE = ["five_qubit", "css_seven", "six_degenerate", "shor_nine", "eight_concat",
            "leung_four", "erasure_four", "gottesman_833"]


def test_registry_is_complete():
    assert set(CODE_NAMES) == set(SHAPES)


@pytest.mark.parametrize("name", CODE_NAMES)
def test_shape_and_orthonormality(name):
    code = build_code(name)
    assert (code.n, code.K) == SHAPES[name]
    assert code.orthonormality_error() < 1e-12


def test_unknown_code():
    with pytest.raises(ValueError, match="Unknown code"):
        build_code("seven_qubit_steane")


def test_build_is_cached():
    assert build_code("five_qubit") is build_code("five_qubit")


def test_labels():
    assert build_code("five_qubit").label() == "[[5,1,3]]"
    assert build_code("gottesman_833").label() == "[[8,3,3]]"
    assert build_code("nonadd_9_12_3").label() == "((9,12,3))"
    assert build_code("nonadd_6_5").label() == "((6,5))"
    assert build_code("eight_concat").distance is None


class TestPauliString:
    def test_parse_sign(self):
        g = PauliString.parse("-YIZYX")
        assert g.sign == -1
        assert g.letters == "YIZYX"
        assert str(g) == "-YIZYX"

    def test_invalid_letters(self):
        with pytest.raises(ValueError):
            PauliString("XQZ")

    def test_single_qubit_action(self):
        zero = SparseState.basis(2, 0)
        one = SparseState.basis(2, 1)
        assert PauliString("X").apply(zero).amplitude(1) == pytest.approx(1.0)
        assert PauliString("Z").apply(one).amplitude(1) == pytest.approx(-1.0)
        assert PauliString("Y").apply(zero).amplitude(1) == pytest.approx(1j)
        assert PauliString("Y").apply(one).amplitude(0) == pytest.approx(-1j)


class TestStabilizers:
    @pytest.mark.parametrize("name", ADDITIVE)
    def test_codewords_fixed_by_generators(self, name):
        report = verify_stabilizer(build_code(name))
        assert report.passed, report.failures

    def test_eight_qubit_sign_matters(self):
        code = build_code("eight_concat")
        flipped = [g if g.letters != "ZZIIZZII" else PauliString("ZZIIZZII") for g in code.stabilizer_generators]
        report = verify_stabilizer(code, flipped)
        assert not report.passed
        assert report.per_generator() == {str(g): str(g) != "ZZIIZZII" for g in flipped}

    def test_nonadditive_code_has_no_generators(self):
        with pytest.raises(ValueError, match="no stabilizer generators"):
            verify_stabilizer(build_code("nonadd_11_2_3"))


class TestSixQubitKet:
    def test_candidates(self):
        candidates = six_qubit_typo_candidates()
        assert all(len(c) == 6 for c in candidates)
        assert len(candidates) == len(set(candidates))
        assert len(candidates) < len(SIX_QUBIT_TYPO)

    def test_resolution_is_unique_and_used(self):
        ket = resolve_six_qubit_ket()
        assert ket in six_qubit_typo_candidates()
        one = build_code("six_degenerate").codewords[1]
        assert ket in one.bitstrings()


class TestNonadditive:
    def test_graph_state_two_vertices(self):
        state = graph_state(GraphSpec.from_edges(2, [(0, 1)]))
        np.testing.assert_allclose(state.to_dense(), np.array([1, 1, 1, -1]) / 2)

    def test_graph_spec_validation(self):
        with pytest.raises(ValueError, match="symmetric"):
            GraphSpec(np.array([[0, 1], [0, 0]]))
        with pytest.raises(ValueError, match="diagonal"):
            GraphSpec(np.eye(2, dtype=int))

    def test_nine_twelve_constructions_agree(self):
        graph = build_9_12_3_codewords("graph")
        table = build_9_12_3_codewords("table")
        for a, b in zip(graph, table):
            np.testing.assert_allclose(a.to_dense(), b.to_dense(), atol=1e-12)

    def test_nine_twelve_full_support(self):
        for word in build_code("nonadd_9_12_3").codewords:
            assert hamming_weight_profile(word) == [int(comb(9, m, exact=True)) for m in range(10)]

    def test_unknown_construction(self):
        with pytest.raises(ValueError):
            build_9_12_3_codewords("stabilizer")

    def test_self_complementary(self):
        assert is_self_complementary(build_code("nonadd_6_5"))
        assert is_self_complementary(build_code("nonadd_8_12"))
        assert not is_self_complementary(build_code("five_qubit"))

    def test_eleven_qubit_zero_word(self):
        zero = build_code("nonadd_11_2_3").codewords[0]
        assert zero.nnz == 12
        assert "00000000000" in zero.bitstrings()


def test_hamming_bound():
    assert hamming_bound_satisfiable(5, 1, 1)
    assert not hamming_bound_satisfiable(4, 1, 1)
    with pytest.raises(ValueError):
        hamming_bound_satisfiable(3, 1, 4)


def test_dump_codewords_is_json_ready():
    dumped = dump_codewords(build_code("leung_four"))
    text = json.dumps(dumped)
    assert dumped["K"] == 2
    assert dumped["terms"][0][0][0] == "0000"
    assert json.loads(text)["name"] == "leung_four"
