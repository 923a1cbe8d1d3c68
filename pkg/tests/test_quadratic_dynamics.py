import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import heisenberg_generator
from qmem.phase_space import compose, is_complete_memory_map, is_symplectic
from qmem.quadratic_dynamics import (
    BilinearHamiltonian,
    IdealCoupling,
    bch_remainder_bound,
    bch_series_map,
    evolve,
    generator_matrix,
    ideal_map,
    qnd_commutation_check,
    swap_generator,
)

XA, PA, XL, PL = range(4)


def _rows(M):
    return np.round(M, 12)


def test_generator_faraday_form():
    G = generator_matrix(BilinearHamiltonian(s=1.0))
    expected = np.zeros((4, 4))
    expected[XA, PL] = 1.0
    expected[XL, PA] = 1.0
    assert np.array_equal(G, expected)


def test_generator_ideal_xi0_matches_fock_oracle():
    h = BilinearHamiltonian(q=-1.0, r=1.0)
    G = generator_matrix(h)
    expected = np.zeros((4, 4))
    expected[XA, XL] = 1
    expected[PA, PL] = 1
    expected[XL, XA] = -1
    expected[PL, PA] = -1
    assert np.array_equal(G, expected)
    assert np.allclose(heisenberg_generator(h.hessian()), G, atol=1e-10)


@given(st.lists(st.floats(-2, 2), min_size=6, max_size=6))
def test_generator_matches_fock_oracle(c):
    h = BilinearHamiltonian(*c)
    assert np.allclose(heisenberg_generator(h.hessian(), cutoff=7), generator_matrix(h), atol=1e-9)


def test_generator_free_oscillator():
    G = generator_matrix(BilinearHamiltonian(omega_A=1.0))
    assert np.array_equal(G[:2, :2], [[0, 1], [-1, 0]])
    assert not G[2:, :].any() and not G[:, 2:].any()


def test_ideal_generator_is_scaled_swap_generator():
    xi, a = 0.37, 1.9
    assert np.allclose(generator_matrix(BilinearHamiltonian.ideal(xi, a)), a * swap_generator(xi), atol=1e-15)
    C = swap_generator(xi)
    assert np.allclose(C @ C, -np.eye(4), atol=1e-15)


def test_evolve_faraday_shear():
    t = 0.8
    M = evolve(BilinearHamiltonian(s=1.0), t)
    expected = np.eye(4)
    expected[XA, PL] = t
    expected[XL, PA] = t
    assert np.allclose(M, expected, atol=1e-14)


def test_evolve_conjugate_shear():
    t = 1.3
    M = evolve(BilinearHamiltonian(p=1.0), t)
    expected = np.eye(4)
    expected[PA, XL] = -t
    expected[PL, XA] = -t
    assert np.allclose(M, expected, atol=1e-14)


def test_evolve_zero_time():
    assert np.array_equal(evolve(BilinearHamiltonian(1, 2, 3, 4, 5, 6), 0.0), np.eye(4))


@given(st.lists(st.floats(-2, 2), min_size=6, max_size=6), st.floats(-1, 1), st.floats(-1, 1))
def test_evolve_group_property(c, t1, t2):
    h = BilinearHamiltonian(*c)
    lhs = evolve(h, t1 + t2)
    rhs = compose(evolve(h, t2), evolve(h, t1))
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, np.max(np.abs(lhs)))


def test_ideal_map_xi0():
    M = ideal_map(IdealCoupling(0.0, math.pi / 2))
    expected = np.zeros((4, 4))
    expected[XA, XL] = expected[PA, PL] = 1
    expected[XL, XA] = expected[PL, PA] = -1
    assert np.allclose(M, expected, atol=1e-15)
    assert is_complete_memory_map(M)


def test_ideal_map_xi_half_pi():
    M = ideal_map(IdealCoupling(math.pi / 2, math.pi / 2))
    expected = np.zeros((4, 4))
    expected[XA, PL] = 1
    expected[PA, XL] = -1
    expected[XL, PA] = 1
    expected[PL, XA] = -1
    assert np.allclose(M, expected, atol=1e-15)


@pytest.mark.parametrize("xi", [0.0, 0.4, 2.0])
def test_ideal_map_zero_area_identity(xi):
    assert np.array_equal(ideal_map(IdealCoupling(xi, 0.0)), np.eye(4))


@pytest.mark.parametrize("n", [0, 1, 2, 5])
def test_odd_quarter_areas_give_complete_maps(n):
    assert is_complete_memory_map(ideal_map(IdealCoupling(0.3, (2 * n + 1) * math.pi / 2)), 1e-9)


@given(st.floats(0, 2 * math.pi), st.floats(-6, 6))
def test_ideal_map_periodic(xi, phi):
    assert np.allclose(ideal_map(IdealCoupling(xi, phi + 2 * math.pi)), ideal_map(IdealCoupling(xi, phi)), atol=1e-14)


def test_ideal_map_equals_evolved_hamiltonian():
    rng = np.random.default_rng(1)
    for _ in range(100):
        xi, phi, alpha = rng.uniform(0, 2 * math.pi), rng.uniform(-5, 5), rng.uniform(0.2, 3)
        M = evolve(BilinearHamiltonian.ideal(xi, alpha), phi / alpha)
        assert np.max(np.abs(M - ideal_map(IdealCoupling(xi, phi)))) <= 1e-10
        assert is_symplectic(M)


def test_bch_first_term_is_identity():
    assert np.array_equal(bch_series_map(IdealCoupling(0.2, 1.0), 1), np.eye(4))


def test_bch_converges_at_30_terms():
    c = IdealCoupling(0.0, math.pi / 2)
    assert np.max(np.abs(bch_series_map(c, 30) - ideal_map(c))) <= 1e-12


def test_bch_remainder_bound_at_five_terms():
    bound = bch_remainder_bound(math.pi / 2, 5)
    assert bound == pytest.approx((math.pi / 2) ** 5 / 120 * math.exp(math.pi / 2))
    assert bound == pytest.approx(0.38, abs=0.005)
    c = IdealCoupling(0.0, math.pi / 2)
    assert np.max(np.abs(bch_series_map(c, 5) - ideal_map(c))) <= bound


def test_bch_rejects_zero_terms():
    with pytest.raises(ValueError):
        bch_series_map(IdealCoupling(0.0, 1.0), 0)


def test_qnd_commutation_examples():
    xi = 0.6
    base = BilinearHamiltonian.ideal(xi)
    assert qnd_commutation_check(BilinearHamiltonian(base.p, base.q, base.r, base.s, 1.0, 1.0))
    assert not qnd_commutation_check(BilinearHamiltonian(base.p, base.q, base.r, base.s, 1.0, 2.0))
    assert qnd_commutation_check(BilinearHamiltonian(0.3, -1.2, 0.7, 2.0))


def test_bilinear_hamiltonian_rejects_non_finite():
    with pytest.raises(ValueError):
        BilinearHamiltonian(p=math.inf)
