"""Tests for fidelity evaluation, truncation bounds and sweeps."""
import math

import numpy as np
import pytest

from src.channel import ErrorIndex, GadParams
from src.codes import build_code
from src.fidelity import (
    FidelityEvaluator,
    FidelityResult,
    SweepGrid,
    entanglement_fidelity,
    fidelity_no_qec,
    normalized_fidelity,
    ohat_bound,
    ohat_contribution,
    resolve_max_weight,
    run_sweep,
    scheme_fidelity,
)
from src.recovery import build_recovery, default_correctable_set


def kl_fidelity(code, params, max_weight="full", threads=1):
    recovery = build_recovery(code, default_correctable_set(code), params)
    return entanglement_fidelity(code, recovery, params, max_weight, threads)


class TestResult:
    def test_rejects_negative_contribution(self):
        with pytest.raises(ValueError, match="negative"):
            FidelityResult(0.5, [(0, 0.6), (1, -0.1)], 0.0, 1)

    def test_rejects_bound_above_one(self):
        with pytest.raises(ValueError, match="exceeds 1"):
            FidelityResult(0.9, [(0, 0.9)], 0.2, 0)

    def test_resolve_max_weight(self, five_qubit):
        assert resolve_max_weight(five_qubit, None) == 4
        assert resolve_max_weight(five_qubit, "full") == 5
        assert resolve_max_weight(five_qubit, "2") == 2
        with pytest.raises(ValueError):
            resolve_max_weight(five_qubit, 6)


class TestExactFidelity:
    @pytest.mark.parametrize("name", ["five_qubit", "css_seven", "six_degenerate", "leung_four"])
    def test_noiseless_channel(self, name):
        code = build_code(name)
        result = kl_fidelity(code, GadParams(0.0, 0.0), max_weight=1)
        assert result.value == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("gamma", [1e-3, 2e-3])
    def test_five_qubit_second_order(self, five_qubit, gamma):
        result = kl_fidelity(five_qubit, GadParams(gamma, 0.0))
        assert (1 - result.value) / gamma ** 2 == pytest.approx(2.5, rel=0.01)

    def test_five_qubit_reference_value(self, five_qubit, gad_point):
        result = kl_fidelity(five_qubit, gad_point)
        assert result.mode == "full"
        assert result.remainder_bound == 0.0
        assert result.value == pytest.approx(0.99403870, abs=1e-7)

    def test_truncation_is_sound(self, five_qubit, gad_point):
        full = kl_fidelity(five_qubit, gad_point, "full")
        truncated = kl_fidelity(five_qubit, gad_point, 3)
        assert truncated.mode == "truncated(3)"
        assert truncated.value == pytest.approx(0.99403802, abs=1e-7)
        assert 0.0 <= full.value - truncated.value <= truncated.remainder_bound + 1e-12

    @pytest.mark.parametrize("name", ["five_qubit", "six_degenerate", "leung_four", "erasure_four", "nonadd_6_5"])
    @pytest.mark.parametrize("weight", [1, 2, 3])
    def test_truncation_is_sound_for_small_codes(self, name, weight):
        code = build_code(name)
        params = GadParams(0.08, 0.0 if code.damping_only else 0.01)
        recovery = build_recovery(code, default_correctable_set(code), params)
        full = entanglement_fidelity(code, recovery, params, "full")
        truncated = entanglement_fidelity(code, recovery, params, weight)
        assert 0.0 <= full.value - truncated.value <= truncated.remainder_bound + 1e-12

    def test_per_weight_sums_to_value(self, five_qubit, gad_point):
        result = kl_fidelity(five_qubit, gad_point, 2)
        assert [q for q, _ in result.per_weight] == [0, 1, 2]
        assert math.fsum(c for _, c in result.per_weight) == pytest.approx(result.value, abs=1e-15)

    def test_threads_do_not_change_the_sum(self, gad_point):
        code = build_code("css_seven")
        single = kl_fidelity(code, gad_point, 3)
        threaded = kl_fidelity(code, gad_point, 3, threads=4)
        assert threaded.value == single.value

    def test_qec_beats_no_qec_at_small_gamma(self, five_qubit):
        params = GadParams(0.01, 0.0)
        assert kl_fidelity(five_qubit, params).value > fidelity_no_qec(params, 1)

    def test_recovery_built_elsewhere(self, five_qubit, gad_point):
        recovery = build_recovery(five_qubit, default_correctable_set(five_qubit), GadParams(0.1, 0.0))
        with pytest.raises(ValueError, match="built at"):
            FidelityEvaluator(five_qubit, recovery, gad_point)

    def test_recovery_for_other_code(self, five_qubit, leung_four):
        params = GadParams(0.05)
        recovery = build_recovery(leung_four, default_correctable_set(leung_four), params)
        with pytest.raises(ValueError, match="belongs to"):
            FidelityEvaluator(five_qubit, recovery, params)


class TestComplementTerm:
    def _ohat(self, code, label, gamma):
        params = GadParams(gamma, 0.0)
        recovery = build_recovery(code, default_correctable_set(code), params)
        return ohat_contribution(code, recovery, ErrorIndex.from_label(label), params)

    def test_accepted_error_has_no_complement_term(self, five_qubit):
        assert self._ohat(five_qubit, "10000", 0.01) < 1e-20

    def test_five_qubit_triple_damping_scaling(self, five_qubit):
        gammas = [1e-3, 2e-3, 5e-3, 1e-2]
        values = [self._ohat(five_qubit, "11100", g) for g in gammas]
        slope = np.polyfit(np.log(gammas), np.log(values), 1)[0]
        assert slope == pytest.approx(5.0, abs=0.2)

    def test_css_double_damping_vanishes(self, css_seven):
        assert self._ohat(css_seven, "1100000", 0.01) < 1e-20

    def test_bounded_by_error_probability(self, five_qubit):
        params = GadParams(0.01, 0.0)
        err = ErrorIndex.from_label("11100")
        assert self._ohat(five_qubit, "11100", 0.01) <= ohat_bound(five_qubit, err, params)


class TestSchemeFidelity:
    def test_noiseless(self, five_qubit):
        cs = default_correctable_set(five_qubit)
        result = scheme_fidelity(five_qubit, cs, GadParams(0.0, 0.0))
        assert result.value == pytest.approx(1.0, abs=1e-12)
        assert result.estimator == "scheme"

    def test_bounded(self):
        code = build_code("shor_nine")
        result = scheme_fidelity(code, default_correctable_set(code), GadParams(0.2, 0.05))
        assert 0.0 <= result.value <= 1.0
        assert result.value + result.remainder_bound <= 1.0 + 1e-12

    def test_close_to_exact_at_small_gamma(self, five_qubit):
        params = GadParams(2e-3, 0.0)
        scheme = scheme_fidelity(five_qubit, default_correctable_set(five_qubit), params)
        exact = kl_fidelity(five_qubit, params)
        assert (1 - scheme.value) == pytest.approx(1 - exact.value, rel=0.05)


class TestBaselines:
    @pytest.mark.parametrize("n", [1, 3])
    def test_no_qec_closed_form(self, n):
        params = GadParams(0.19, 0.1)
        # sum_k |Tr A_k|^2 / 4 = ((1 + sqrt(1 - gamma)) / 2)^2 for every epsilon
        assert fidelity_no_qec(params, n) == pytest.approx(((1 + 0.9) / 2) ** (2 * n))

    def test_no_qec_identity_channel(self):
        assert fidelity_no_qec(GadParams(0.0, 0.3), 5) == pytest.approx(1.0)

    def test_no_qec_needs_qubits(self):
        with pytest.raises(ValueError):
            fidelity_no_qec(GadParams(0.1), 0)

    def test_normalized_fidelity(self):
        assert normalized_fidelity(0.99, 2) == pytest.approx(0.99)
        assert normalized_fidelity(0.99, 12) == pytest.approx(0.99720, abs=1e-5)
        with pytest.raises(ValueError):
            normalized_fidelity(1.2, 2)
        with pytest.raises(ValueError):
            normalized_fidelity(0.9, 1)


class TestSweep:
    def test_grid_points(self):
        grid = SweepGrid([0.0, 0.01, 0.02], "prop:0.1")
        assert grid.points() == [(0.0, 0.0), (0.01, pytest.approx(0.001)), (0.02, pytest.approx(0.002))]

    def test_temperature_grid(self):
        grid = SweepGrid([0.0, 0.01], gamma_factor=10.0)
        assert grid.points() == [(0.0, 0.0), (pytest.approx(0.1), 0.01)]

    def test_empty_grid(self):
        with pytest.raises(ValueError, match="empty"):
            SweepGrid([])

    def test_invalid_point_rejected_up_front(self):
        with pytest.raises(ValueError, match="epsilon"):
            SweepGrid([0.1], "fixed:0.6")

    def test_exact_sweep(self, five_qubit):
        rows = run_sweep(five_qubit, SweepGrid([0.0, 0.05, 0.1]), max_weight="full")
        assert [r.gamma for r in rows] == [0.0, 0.05, 0.1]
        assert rows[0].fidelity == pytest.approx(1.0, abs=1e-12)
        assert rows[0].fidelity > rows[1].fidelity > rows[2].fidelity
        assert all(r.estimator == "exact" and r.max_weight == 5 for r in rows)

    def test_scheme_sweep_with_progress(self, leung_four):
        calls = []
        rows = run_sweep(leung_four, SweepGrid([0.01, 0.02]), estimator="scheme", progress=lambda: calls.append(1))
        assert len(calls) == 2
        assert all(r.estimator == "scheme" for r in rows)

    def test_unknown_estimator(self, leung_four):
        with pytest.raises(ValueError, match="Unknown estimator"):
            run_sweep(leung_four, SweepGrid([0.01]), estimator="guess")


def scheme(name, gamma, eps=0.0, first_order=False):
    code = build_code(name)
    correctable = default_correctable_set(code)
    if first_order:
        correctable = correctable.first_order()
    return scheme_fidelity(code, correctable, GadParams(gamma, eps)).value


class TestOrderings:
    GAMMAS = [0.005 * k for k in range(1, 21)]
    SMALL_GAMMAS = [g for g in GAMMAS if g <= 0.05]

    @pytest.mark.parametrize("gamma", GAMMAS)
    def test_higher_temperature_lowers_fidelity(self, gamma):
        f = [scheme("five_qubit", gamma, ratio * gamma) for ratio in (0.0, 0.1, 0.3)]
        assert f[0] >= f[1] >= f[2]

    @pytest.mark.parametrize("gamma", GAMMAS)
    def test_degenerate_six_qubit_code_leads(self, gamma):
        six, five, css = (scheme(n, gamma) for n in ("six_degenerate", "five_qubit", "css_seven"))
        assert six >= five >= css

    @pytest.mark.parametrize("gamma", SMALL_GAMMAS)
    def test_nonadditive_codes_beat_additive_ones(self, gamma):
        nine = normalized_fidelity(scheme("nonadd_9_12_3", gamma), 12)
        assert nine >= scheme("shor_nine", gamma, first_order=True)
        assert normalized_fidelity(scheme("nonadd_6_5", gamma), 5) >= scheme("six_degenerate", gamma)
        eight = normalized_fidelity(scheme("nonadd_8_12", gamma), 12)
        assert eight >= normalized_fidelity(scheme("gottesman_833", gamma), 8)

    def test_dropping_a_recovery_operator_never_helps(self, five_qubit, gad_point):
        full = default_correctable_set(five_qubit)
        reference = entanglement_fidelity(five_qubit, build_recovery(five_qubit, full, gad_point), gad_point, "full").value
        for label in ("10000", "00030"):
            reduced = full.without(ErrorIndex.from_label(label))
            value = entanglement_fidelity(five_qubit, build_recovery(five_qubit, reduced, gad_point), gad_point, "full").value
            assert value <= reference + 1e-12
