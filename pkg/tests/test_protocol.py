import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kerrpurify.hilbert import apply, basis_state, fidelity, partial_trace, tensor
from kerrpurify.kerr import build_phase_table, reference_params, standard_encoding
from kerrpurify.protocol import (Action, MixedPairSpec, RuleSet, bell_phi,
                                 bell_psi, decide, f_ideal, iterate_rounds,
                                 make_mixed_pair, measure_and_correct,
                                 monte_carlo_round, polarization_ket,
                                 purify_exact, purify_with_confusion,
                                 qnd_branches, two_pair_space)

TABLE = build_phase_table(reference_params())
ENC = standard_encoding()


def ket4(p1, p2, p3, p4):
    """Basis state |p1 p2 p3 p4> over (c1, d1, c2, d2)."""
    pol_idx = {"H": 0, "V": 1}
    return basis_state(two_pair_space(), {
        "c1": pol_idx[p1], "d1": pol_idx[p2], "c2": pol_idx[p3], "d2": pol_idx[p4]})


def superpose(*kets):
    amps = sum(k.amplitudes for k in kets)
    from kerrpurify.hilbert import PureState
    return PureState(kets[0].space, amps).normalize()


def branch_map(state, rule_set=RuleSet.WEAK_KERR):
    return {(round(b.theta_alice, 12), round(b.theta_bob, 12)): b
            for b in qnd_branches(state, TABLE, ENC, rule_set)}


T0 = round(TABLE.theta0, 12)
T1 = round(TABLE.theta1, 12)
T2 = round(TABLE.theta2, 12)


class TestMixedPair:
    def test_fidelity_equals_weight(self):
        rho = make_mixed_pair(MixedPairSpec(0.8))
        assert abs(fidelity(rho, bell_phi("c", "d")) - 0.8) < 1e-12
        assert abs(fidelity(rho, bell_psi("c", "d")) - 0.2) < 1e-12

    def test_invalid_weight_rejected(self):
        with pytest.raises(ValueError):
            MixedPairSpec(0.5)
        with pytest.raises(ValueError):
            MixedPairSpec(1.2)


class TestBranchStructure:
    """Term-by-term oracle for the four pure-component expansions."""

    def test_phi_phi(self):
        bm = branch_map(tensor(bell_phi("c1", "d1"), bell_phi("c2", "d2")))
        assert set(bm) == {(T1, T1), (T2, T2), (T0, T0)}
        matched = bm[(T1, T1)]
        assert abs(matched.probability - 0.5) < 1e-12
        expected = superpose(ket4("H", "H", "H", "H"), ket4("V", "V", "V", "V"))
        assert abs(abs(matched.post_state.overlap(expected)) - 1.0) < 1e-10
        assert abs(bm[(T2, T2)].probability - 0.25) < 1e-12
        assert abs(abs(bm[(T2, T2)].post_state.overlap(ket4("H", "H", "V", "V"))) - 1.0) < 1e-10
        assert abs(abs(bm[(T0, T0)].post_state.overlap(ket4("V", "V", "H", "H"))) - 1.0) < 1e-10

    def test_phi_psi(self):
        bm = branch_map(tensor(bell_phi("c1", "d1"), bell_psi("c2", "d2")))
        assert set(bm) == {(T1, T2), (T2, T1), (T0, T1), (T1, T0)}
        for key, expected in [
            ((T1, T2), ket4("H", "H", "H", "V")),
            ((T2, T1), ket4("H", "H", "V", "H")),
            ((T0, T1), ket4("V", "V", "H", "V")),
            ((T1, T0), ket4("V", "V", "V", "H")),
        ]:
            assert abs(bm[key].probability - 0.25) < 1e-12
            assert abs(abs(bm[key].post_state.overlap(expected)) - 1.0) < 1e-10

    def test_psi_phi(self):
        bm = branch_map(tensor(bell_psi("c1", "d1"), bell_phi("c2", "d2")))
        assert set(bm) == {(T1, T0), (T2, T1), (T0, T1), (T1, T2)}
        for key, expected in [
            ((T1, T0), ket4("H", "V", "H", "H")),
            ((T2, T1), ket4("H", "V", "V", "V")),
            ((T0, T1), ket4("V", "H", "H", "H")),
            ((T1, T2), ket4("V", "H", "V", "V")),
        ]:
            assert abs(bm[key].probability - 0.25) < 1e-12
            assert abs(abs(bm[key].post_state.overlap(expected)) - 1.0) < 1e-10

    def test_psi_psi(self):
        bm = branch_map(tensor(bell_psi("c1", "d1"), bell_psi("c2", "d2")))
        assert set(bm) == {(T1, T1), (T2, T0), (T0, T2)}
        matched = bm[(T1, T1)]
        assert abs(matched.probability - 0.5) < 1e-12
        expected = superpose(ket4("H", "V", "H", "V"), ket4("V", "H", "V", "H"))
        assert abs(abs(matched.post_state.overlap(expected)) - 1.0) < 1e-10
        assert abs(abs(bm[(T2, T0)].post_state.overlap(ket4("H", "V", "V", "H"))) - 1.0) < 1e-10
        assert abs(abs(bm[(T0, T2)].post_state.overlap(ket4("V", "H", "H", "V"))) - 1.0) < 1e-10

    def test_probabilities_sum_to_one(self):
        for make in (bell_phi, bell_psi):
            state = tensor(make("c1", "d1"), bell_phi("c2", "d2"))
            total = sum(b.probability for b in qnd_branches(state, TABLE, ENC))
            assert abs(total - 1.0) < 1e-12

    def test_ideal_phase_merges_extreme_branches(self):
        state = tensor(bell_phi("c1", "d1"), bell_phi("c2", "d2"))
        bm = branch_map(state, RuleSet.IDEAL_PHASE)
        assert set(bm) == {(T1, T1), (T0, T0)}
        merged = bm[(T0, T0)]
        assert abs(merged.probability - 0.5) < 1e-12
        expected = superpose(ket4("H", "H", "V", "V"), ket4("V", "V", "H", "H"))
        assert abs(abs(merged.post_state.overlap(expected)) - 1.0) < 1e-10


class TestDecisions:
    def test_matched_theta1_kept_as_is(self):
        bm = branch_map(tensor(bell_phi("c1", "d1"), bell_phi("c2", "d2")))
        assert decide(bm[(T1, T1)], TABLE) is Action.KEEP_AS_IS

    def test_matched_extremes_kept_with_bitflip(self):
        bm = branch_map(tensor(bell_phi("c1", "d1"), bell_phi("c2", "d2")))
        assert decide(bm[(T0, T0)], TABLE) is Action.KEEP_AFTER_BITFLIP_ON_KEPT_PAIR
        assert decide(bm[(T2, T2)], TABLE) is Action.KEEP_AFTER_BITFLIP_ON_KEPT_PAIR

    def test_mismatched_discarded(self):
        bm = branch_map(tensor(bell_phi("c1", "d1"), bell_psi("c2", "d2")))
        for key in bm:
            assert decide(bm[key], TABLE) is Action.DISCARD

    def test_ideal_phase_keeps_merged_branch(self):
        bm = branch_map(tensor(bell_phi("c1", "d1"), bell_phi("c2", "d2")),
                        RuleSet.IDEAL_PHASE)
        assert decide(bm[(T0, T0)], TABLE, RuleSet.IDEAL_PHASE) is \
            Action.KEEP_AFTER_BITFLIP_ON_KEPT_PAIR


class TestMeasureAndCorrect:
    def test_matched_phi_branch_yields_phi(self):
        # |HHHH> + |VVVV> measured diagonally on the second pair -> |Phi+>
        state = superpose(ket4("H", "H", "H", "H"), ket4("V", "V", "V", "V"))
        target = bell_phi("c1", "d1")
        outcomes = measure_and_correct(state)
        assert abs(sum(p for p, _ in outcomes) - 1.0) < 1e-12
        for p, pair in outcomes:
            assert abs(fidelity(pair, target) - 1.0) < 1e-10

    def test_matched_psi_branch_yields_psi(self):
        state = superpose(ket4("H", "V", "H", "V"), ket4("V", "H", "V", "H"))
        target = bell_psi("c1", "d1")
        for p, pair in measure_and_correct(state):
            assert abs(fidelity(pair, target) - 1.0) < 1e-10

    def test_merged_extreme_branch_after_bitflip_yields_phi(self):
        merged = superpose(ket4("H", "H", "V", "V"), ket4("V", "V", "H", "H"))
        from kerrpurify.protocol import apply_action
        corrected, ops = apply_action(merged, Action.KEEP_AFTER_BITFLIP_ON_KEPT_PAIR)
        assert ops == (("sigma_x", "c1"), ("sigma_x", "d1"))
        for p, pair in measure_and_correct(corrected):
            assert abs(fidelity(pair, bell_phi("c1", "d1")) - 1.0) < 1e-10

    def test_kept_pair_reduced_state_matches(self):
        state = superpose(ket4("H", "H", "H", "H"), ket4("V", "V", "V", "V"))
        outcomes = measure_and_correct(state)
        mix = sum(p * pair.to_density().entries for p, pair in outcomes)
        rho = partial_trace(state.to_density(), {"c1", "d1"})
        # the sigma_z repair makes the post-measurement ensemble purer than
        # the raw marginal would suggest; both must give unit Phi+ fidelity here
        from kerrpurify.hilbert import DensityMatrix
        ens = DensityMatrix(outcomes[0][1].space, mix)
        assert abs(fidelity(ens, bell_phi("c1", "d1")) - 1.0) < 1e-10


class TestExactRound:
    def test_ideal_phase_matches_closed_form(self):
        for f in (0.55, 0.6, 0.7, 0.8, 0.9, 0.95):
            res = purify_exact(f, TABLE, ENC, RuleSet.IDEAL_PHASE)
            assert abs(res.kept_fidelity - f_ideal(f)) < 1e-10
            assert abs(res.success_probability - (f * f + (1 - f) ** 2)) < 1e-10

    def test_weak_kerr_keeps_less_and_purifies_less(self):
        res = purify_exact(0.8, TABLE, ENC, RuleSet.WEAK_KERR)
        # matched extreme branches collapse to product states under weak Kerr
        assert abs(res.success_probability - (0.8 ** 2 + 0.5 * 0.2 ** 2)) < 1e-10
        assert res.kept_fidelity < f_ideal(0.8)

    def test_ledger_conserves_probability(self):
        res = purify_exact(0.8, TABLE, ENC, RuleSet.IDEAL_PHASE)
        total = sum(row.component_weight * row.probability for row in res.branch_ledger)
        # each component's branches sum to 1, weights sum to f^2+f(1-f)+... = 1... over 4 comps
        assert abs(total - 1.0) < 1e-10

    def test_pure_input_is_fixed_point(self):
        res = purify_exact(1.0, TABLE, ENC, RuleSet.IDEAL_PHASE)
        assert abs(res.kept_fidelity - 1.0) < 1e-12
        assert abs(res.success_probability - 1.0) < 1e-12

    @settings(deadline=None, max_examples=25)
    @given(f=st.floats(min_value=0.51, max_value=0.999))
    def test_closed_form_property(self, f):
        res = purify_exact(f, TABLE, ENC, RuleSet.IDEAL_PHASE)
        assert abs(res.kept_fidelity - f_ideal(f)) < 1e-10

    def test_iterate_rounds_monotone(self):
        results = iterate_rounds(0.7, 3, TABLE, ENC, RuleSet.IDEAL_PHASE)
        fids = [r.kept_fidelity for r in results]
        assert fids == sorted(fids)
        assert fids[-1] > 0.99


class TestConfusion:
    def test_infinite_alpha_reduces_to_exact(self):
        exact = purify_exact(0.8, TABLE, ENC, RuleSet.IDEAL_PHASE)
        conf = purify_with_confusion(0.8, TABLE, 1e6, ENC, RuleSet.IDEAL_PHASE)
        assert abs(conf.kept_fidelity - exact.kept_fidelity) < 1e-9
        assert abs(conf.success_probability - exact.success_probability) < 1e-9

    def test_finite_alpha_degrades_gracefully(self):
        hi = purify_with_confusion(0.8, TABLE, 30.0, ENC, RuleSet.IDEAL_PHASE)
        lo = purify_with_confusion(0.8, TABLE, 5.0, ENC, RuleSet.IDEAL_PHASE)
        assert lo.kept_fidelity < hi.kept_fidelity <= f_ideal(0.8) + 1e-12

    def test_small_alpha_still_normalized(self):
        res = purify_with_confusion(0.8, TABLE, 3.0, ENC, RuleSet.IDEAL_PHASE)
        assert 0.0 < res.success_probability <= 1.0
        assert 0.0 <= res.kept_fidelity <= 1.0


class TestMonteCarlo:
    def test_matches_exact_within_three_sigma(self):
        rng = np.random.default_rng(2024)
        exact = purify_exact(0.8, TABLE, ENC, RuleSet.IDEAL_PHASE)
        mc = monte_carlo_round(0.8, TABLE, 50_000, rng, rule_set=RuleSet.IDEAL_PHASE)
        assert abs(mc.success_probability - exact.success_probability) \
            <= 3 * mc.success_stderr + 1e-12
        assert abs(mc.kept_fidelity - exact.kept_fidelity) \
            <= 3 * mc.fidelity_stderr + 1e-12

    def test_finite_alpha_matches_confusion_oracle(self):
        rng = np.random.default_rng(7)
        oracle = purify_with_confusion(0.8, TABLE, 10.0, ENC, RuleSet.IDEAL_PHASE)
        mc = monte_carlo_round(0.8, TABLE, 50_000, rng, alpha=10.0,
                               rule_set=RuleSet.IDEAL_PHASE)
        assert abs(mc.success_probability - oracle.success_probability) \
            <= 3 * mc.success_stderr + 1e-12
        assert abs(mc.kept_fidelity - oracle.kept_fidelity) \
            <= 3 * mc.fidelity_stderr + 1e-12

    def test_deterministic_given_seed(self):
        a = monte_carlo_round(0.8, TABLE, 5_000, np.random.default_rng(1))
        b = monte_carlo_round(0.8, TABLE, 5_000, np.random.default_rng(1))
        assert a.kept_fidelity == b.kept_fidelity
        assert a.kept_trials == b.kept_trials

    def test_rejects_zero_trials(self):
        with pytest.raises(ValueError):
            monte_carlo_round(0.8, TABLE, 0, np.random.default_rng(0))
