import math

import numpy as np
import pytest

from kerrpurify.hilbert import (DensityMatrix, HilbertSpace, LinearOperator,
                                PureState, apply, basis_state, contract,
                                enumerate_outcomes, fidelity, measure_projective,
                                partial_trace, tensor)
from kerrpurify.protocol import (MINUS, PLUS, bell_phi, bell_psi,
                                 polarization_ket, sigma_x, sigma_z)


def diag_projectors(label):
    space = HilbertSpace(((label, 2),))
    return [LinearOperator(space, np.outer(v, v.conj())) for v in (PLUS, MINUS)]


class TestSpace:
    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError):
            HilbertSpace((("a", 2), ("a", 2)))

    def test_dimension_cap(self):
        with pytest.raises(ValueError):
            HilbertSpace((("a", 4096), ("b", 2)))

    def test_index_of_row_major(self):
        space = HilbertSpace((("a", 2), ("b", 3)))
        assert space.index_of({"a": 1, "b": 2}) == 5


class TestTensor:
    def test_basis_product(self):
        hv = tensor(polarization_ket("c", "H"), polarization_ket("d", "V"))
        expected = np.zeros(4)
        expected[hv.space.index_of({"c": 0, "d": 1})] = 1.0
        assert np.allclose(hv.amplitudes, expected)

    def test_two_bell_pairs_have_four_half_amplitudes(self):
        st = tensor(bell_phi("c1", "d1"), bell_phi("c2", "d2"))
        nonzero = st.amplitudes[np.abs(st.amplitudes) > 0]
        assert len(nonzero) == 4
        assert np.allclose(nonzero, 0.5)

    def test_sigma_x_maps_phi_to_psi(self):
        phi = bell_phi("c", "d")
        psi = apply(sigma_x("c"), phi)
        assert abs(abs(psi.overlap(bell_psi("c", "d"))) - 1.0) < 1e-12

    def test_label_collision_rejected(self):
        with pytest.raises(ValueError):
            tensor(polarization_ket("c", "H"), polarization_ket("c", "V"))

    def test_associativity_up_to_relabeling(self):
        rng = np.random.default_rng(7)
        a = PureState(HilbertSpace((("a", 2),)), rng.normal(size=2) + 1j * rng.normal(size=2))
        b = PureState(HilbertSpace((("b", 3),)), rng.normal(size=3) + 1j * rng.normal(size=3))
        c = PureState(HilbertSpace((("c", 2),)), rng.normal(size=2) + 1j * rng.normal(size=2))
        left = tensor(tensor(a, b), c)
        right = tensor(a, tensor(b, c))
        assert np.max(np.abs(left.amplitudes - right.amplitudes)) < 1e-12


class TestPartialTrace:
    def test_bell_marginal_is_maximally_mixed(self):
        rho = bell_phi("c", "d").to_density()
        red = partial_trace(rho, {"c"})
        assert np.allclose(red.entries, np.eye(2) / 2, atol=1e-12)

    def test_product_state_factorizes(self):
        rho = bell_phi("c", "d").to_density()
        sigma = polarization_ket("e", "H").to_density()
        joint = tensor(rho, sigma)
        back = partial_trace(joint, {"c", "d"})
        assert np.allclose(back.entries, rho.entries, atol=1e-12)

    def test_trace_preserved_and_hermitian(self):
        rng = np.random.default_rng(3)
        space = HilbertSpace((("a", 2), ("b", 2), ("c", 3)))
        m = rng.normal(size=(space.dim, space.dim)) + 1j * rng.normal(size=(space.dim, space.dim))
        rho_m = m @ m.conj().T
        rho_m /= np.trace(rho_m)
        rho = DensityMatrix(space, rho_m)
        red = partial_trace(rho, {"a", "c"})
        assert abs(red.trace() - 1.0) < 1e-10
        assert np.max(np.abs(red.entries - red.entries.conj().T)) < 1e-10
        assert red.min_eigenvalue() > -1e-9

    def test_unknown_label_rejected(self):
        rho = bell_phi("c", "d").to_density()
        with pytest.raises(KeyError):
            partial_trace(rho, {"nope"})


class TestFidelity:
    def test_self_fidelity_is_one(self):
        phi = bell_phi("c", "d")
        assert abs(fidelity(phi.to_density(), phi) - 1.0) < 1e-12

    def test_maximally_mixed_vs_basis(self):
        space = HilbertSpace((("q", 2),))
        rho = DensityMatrix(space, np.eye(2) / 2)
        assert abs(fidelity(rho, polarization_ket("q", "H")) - 0.5) < 1e-12

    def test_mixture_weight_read_off(self):
        # f|Phi+><Phi+| + (1-f)|Psi+><Psi+| has fidelity f vs Phi+
        f = 0.8
        phi, psi = bell_phi("c", "d"), bell_psi("c", "d")
        rho = DensityMatrix(phi.space,
                            f * phi.to_density().entries + (1 - f) * psi.to_density().entries)
        assert abs(fidelity(rho, phi) - f) < 1e-12

    def test_space_mismatch_rejected(self):
        with pytest.raises(ValueError):
            fidelity(bell_phi("c", "d").to_density(), bell_phi("a", "b"))


class TestApply:
    def test_sigma_x_flips_polarization(self):
        out = apply(sigma_x("q"), polarization_ket("q", "H"))
        assert abs(abs(out.overlap(polarization_ket("q", "V"))) - 1.0) < 1e-12

    def test_sigma_z_flips_diagonal_basis(self):
        space = HilbertSpace((("q", 2),))
        plus = PureState(space, PLUS)
        minus = PureState(space, MINUS)
        out = apply(sigma_z("q"), plus)
        assert abs(abs(out.overlap(minus)) - 1.0) < 1e-12

    def test_embedded_operator_acts_on_named_factor_only(self):
        st = tensor(polarization_ket("c", "H"), polarization_ket("d", "V"))
        out = apply(sigma_x("d"), st)
        expected = tensor(polarization_ket("c", "H"), polarization_ket("d", "H"))
        assert abs(abs(out.overlap(expected)) - 1.0) < 1e-12

    def test_unitary_preserves_trace(self):
        rho = bell_phi("c", "d").to_density()
        out = apply(sigma_x("c"), rho)
        assert abs(out.trace() - 1.0) < 1e-10

    def test_dimension_mismatch_rejected(self):
        big = LinearOperator(HilbertSpace((("c", 3),)), np.eye(3))
        with pytest.raises(ValueError):
            apply(big, bell_phi("c", "d"))


class TestMeasurement:
    def test_eigenstate_is_deterministic(self):
        space = HilbertSpace((("q", 2),))
        plus = PureState(space, PLUS)
        rng = np.random.default_rng(0)
        idx, post, p = measure_projective(plus, diag_projectors("q"), rng)
        assert idx == 0 and abs(p - 1.0) < 1e-12

    def test_h_in_diagonal_basis_is_fifty_fifty(self):
        outcomes = enumerate_outcomes(polarization_ket("q", "H"), diag_projectors("q"))
        probs = [p for p, _ in outcomes]
        assert np.allclose(probs, [0.5, 0.5], atol=1e-12)
        assert abs(sum(probs) - 1.0) < 1e-10

    def test_incomplete_projectors_rejected(self):
        space = HilbertSpace((("q", 2),))
        proj = LinearOperator(space, np.outer(PLUS, PLUS.conj()))
        with pytest.raises(ValueError):
            enumerate_outcomes(polarization_ket("q", "H"), [proj])

    def test_born_statistics_five_sigma(self):
        # amplitudes (0.6, 0.8) in the computational basis
        space = HilbertSpace((("q", 2),))
        psi = PureState(space, [0.6, 0.8])
        projs = [LinearOperator(space, np.diag([1.0, 0.0])),
                 LinearOperator(space, np.diag([0.0, 1.0]))]
        rng = np.random.default_rng(42)
        n = 100_000
        hits = sum(measure_projective(psi, projs, rng)[0] == 0 for _ in range(n))
        p = 0.36
        sigma = math.sqrt(p * (1 - p) / n)
        assert abs(hits / n - p) < 5 * sigma


class TestContract:
    def test_contract_reduces_space(self):
        st = tensor(bell_phi("c1", "d1"), polarization_ket("c2", "H"))
        out = contract(st, "c2", np.array([1.0, 0.0]))
        assert out.space.labels == ("c1", "d1")
        assert abs(abs(out.normalize().overlap(bell_phi("c1", "d1"))) - 1.0) < 1e-12

    def test_plus_contraction_weight(self):
        st = polarization_ket("q", "H")
        out = contract(st, "q", PLUS)
        assert abs(out.amplitudes[0] - 1 / math.sqrt(2)) < 1e-12


class TestBasisState:
    def test_basis_state_index(self):
        space = HilbertSpace((("a", 2), ("b", 2)))
        st = basis_state(space, {"a": 1, "b": 0})
        assert st.amplitudes[2] == 1.0
