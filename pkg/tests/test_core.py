import math

import numpy as np
import pytest
from scipy.linalg import expm as scipy_expm

from qobserver import (
    DimensionError,
    LinearQuantumSystem,
    QuadraticHamiltonian,
    ccr_defect,
    generator_from_hamiltonian,
    make_symplectic_space,
    propagator,
    realizability_defect,
)
from oracles import rk4_expm, rotation

J = np.array([[0.0, 1.0], [-1.0, 0.0]])


def one_mode_system(r):
    space = make_symplectic_space(1)
    return generator_from_hamiltonian(QuadraticHamiltonian(np.asarray(r, float), space))


def example_augmented():
    """Two-mode system of the reference design, nondimensionalized."""
    space = make_symplectic_space(2)
    r_c = np.outer([1.0, 0.0], [0.2, 0.0])
    r = np.zeros((4, 4))
    r[:2, 2:] = r_c
    r[2:, :2] = r_c.T
    r[2:, 2:] = 2.0 * np.eye(2)
    return generator_from_hamiltonian(QuadraticHamiltonian(r, space))


class TestSymplecticSpace:
    def test_one_mode_is_j(self):
        space = make_symplectic_space(1)
        assert np.array_equal(space.theta, J)

    def test_two_modes_block_diagonal(self):
        space = make_symplectic_space(2)
        expected = np.zeros((4, 4))
        expected[:2, :2] = J
        expected[2:, 2:] = J
        assert space.theta.shape == (4, 4)
        assert np.array_equal(space.theta, expected)

    def test_zero_modes_rejected(self):
        with pytest.raises(DimensionError):
            make_symplectic_space(0)

    @pytest.mark.parametrize("modes", [1, 2, 3, 5])
    def test_theta_invariants_exact(self, modes):
        theta = make_symplectic_space(modes).theta
        assert np.array_equal(theta.T, -theta)
        assert np.array_equal(theta @ theta, -np.eye(2 * modes))

    def test_theta_is_read_only(self):
        space = make_symplectic_space(1)
        with pytest.raises(ValueError):
            space.theta[0, 0] = 5.0


class TestQuadraticHamiltonian:
    def test_symmetrized_and_asymmetry_recorded(self):
        space = make_symplectic_space(1)
        with pytest.warns(UserWarning, match="asymmetry"):
            h = QuadraticHamiltonian(np.array([[1.0, 0.5], [0.2, 1.0]]), space)
        assert np.array_equal(h.r, h.r.T)
        assert h.asymmetry == pytest.approx(0.3)

    def test_clean_input_no_warning(self):
        space = make_symplectic_space(1)
        h = QuadraticHamiltonian(2.0 * np.eye(2), space)
        assert h.asymmetry == 0.0

    def test_dimension_mismatch(self):
        space = make_symplectic_space(2)
        with pytest.raises(DimensionError):
            QuadraticHamiltonian(np.eye(2), space)

    def test_tolerance_policy_override(self):
        from qobserver import TolerancePolicy

        loose = make_symplectic_space(1, tol=TolerancePolicy(exact=1e-6))
        # asymmetry below the loosened exact threshold: accepted silently
        h = QuadraticHamiltonian(np.array([[1.0, 1e-8], [0.0, 1.0]]), loose)
        assert h.asymmetry == pytest.approx(1e-8)


class TestGenerator:
    def test_one_mode_harmonic(self):
        # R = 2 I gives A = 2 Theta R = 4 J
        sys = one_mode_system(2.0 * np.eye(2))
        assert np.array_equal(sys.a, 4.0 * J)
        assert sys.origin == "from_hamiltonian"

    def test_static_plant(self):
        sys = one_mode_system(np.zeros((2, 2)))
        assert np.array_equal(sys.a, np.zeros((2, 2)))

    def test_two_mode_blocks(self):
        # A = 2 diag(J, J) R reproduced block by block
        r_c = np.array([[0.2, 0.0], [0.0, 0.0]])
        sys = example_augmented()
        assert np.array_equal(sys.a[:2, 2:], 2.0 * J @ r_c)
        assert np.array_equal(sys.a[2:, :2], 2.0 * J @ r_c.T)
        assert np.array_equal(sys.a[2:, 2:], 4.0 * J)
        assert np.array_equal(sys.a[:2, :2], np.zeros((2, 2)))


class TestRealizability:
    def test_hamiltonian_generated_is_exact_zero(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            r = rng.normal(size=(4, 4))
            space = make_symplectic_space(2)
            sys = generator_from_hamiltonian(QuadraticHamiltonian((r + r.T) / 2, space))
            assert realizability_defect(sys) <= 1e-15 * max(1.0, np.max(np.abs(sys.a)))

    def test_pure_decay_defect_two(self):
        space = make_symplectic_space(1)
        sys = LinearQuantumSystem(np.eye(2), np.zeros((0, 2)), space)
        assert realizability_defect(sys) == pytest.approx(2.0)

    def test_zero_generator(self):
        space = make_symplectic_space(1)
        sys = LinearQuantumSystem(np.zeros((2, 2)), np.zeros((0, 2)), space)
        assert realizability_defect(sys) == 0.0


class TestPropagator:
    def test_identity_at_zero_dynamics(self):
        space = make_symplectic_space(1)
        sys = LinearQuantumSystem(np.zeros((2, 2)), np.zeros((0, 2)), space)
        for t in (0.0, 1.0, -3.5, 17.0):
            assert np.array_equal(propagator(sys, t), np.eye(2))

    @pytest.mark.parametrize("omega", [1.0, 1.3, 4.0])
    @pytest.mark.parametrize("t", [0.1, 1.0, 7.7])
    def test_rotation_closed_form(self, omega, t):
        space = make_symplectic_space(1)
        sys = LinearQuantumSystem(omega * J, np.zeros((0, 2)), space)
        np.testing.assert_allclose(propagator(sys, t), rotation(omega, t), atol=1e-13)

    def test_small_time_expansion(self):
        sys = example_augmented()
        t = 1e-3
        e = propagator(sys, t)
        linear = np.eye(4) + sys.a * t
        assert np.max(np.abs(e - linear)) <= 1.0 * (np.max(np.abs(sys.a)) * t) ** 2

    @pytest.mark.parametrize("t", [0.01, 0.5, 2.0, 5.0])
    def test_matches_rk4_oracle(self, t):
        sys = example_augmented()
        np.testing.assert_allclose(propagator(sys, t), rk4_expm(sys.a, t), atol=1e-9)

    def test_matches_scipy_on_random_generators(self):
        rng = np.random.default_rng(11)
        space = make_symplectic_space(2)
        for _ in range(5):
            r = rng.normal(size=(4, 4))
            sys = generator_from_hamiltonian(QuadraticHamiltonian((r + r.T) / 2, space))
            for t in (0.3, 2.1):
                np.testing.assert_allclose(
                    propagator(sys, t), scipy_expm(sys.a * t), atol=1e-11, rtol=1e-11
                )

    def test_semigroup_property(self):
        sys = example_augmented()
        for s, t in [(0.5, 1.25), (2.0, 3.0), (10.0, 7.5)]:
            prod = propagator(sys, s) @ propagator(sys, t)
            np.testing.assert_allclose(propagator(sys, s + t), prod, atol=1e-10)

    def test_nonfinite_time_rejected(self):
        sys = example_augmented()
        with pytest.raises(ValueError):
            propagator(sys, np.inf)
        with pytest.raises(ValueError):
            propagator(sys, np.nan)


class TestCcrDefect:
    def test_zero_at_time_zero(self):
        assert ccr_defect(example_augmented(), 0.0) == 0.0

    def test_realizable_log_grid(self):
        # positive definite R keeps the flow oscillatory, so the propagator
        # stays bounded out to t = 100 and the defect stays at roundoff
        systems = [example_augmented()]
        rng = np.random.default_rng(13)
        space = make_symplectic_space(2)
        for _ in range(3):
            s = rng.normal(size=(4, 4))
            systems.append(
                generator_from_hamiltonian(QuadraticHamiltonian(s @ s.T / 2, space))
            )
        for sys in systems:
            for t in np.logspace(-3, 2, 26):
                assert ccr_defect(sys, t) <= 1e-9

    def test_pure_decay_value(self):
        # exp(I t) Theta exp(I t) = e^{2t} Theta, so defect is e^2 - 1 at t = 1
        space = make_symplectic_space(1)
        sys = LinearQuantumSystem(np.eye(2), np.zeros((0, 2)), space)
        assert ccr_defect(sys, 1.0) == pytest.approx(math.exp(2.0) - 1.0, rel=1e-12)
