import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from kickedtop.floquet import (
    FloquetParameters,
    evolve,
    fold_evolve,
    kick_rotation_dicke,
    single_qubit_rdm,
    single_qubit_rdm_dicke,
    single_qubit_rdm_register,
    step,
    step_dicke,
    step_register,
    twist_phases,
)
from kickedtop.metrics import entanglement_entropy
from kickedtop.spin_core import (
    DickeVector,
    RegisterVector,
    SphericalDirection,
    coherent_state_dicke,
    coherent_state_register,
    dicke_to_register,
    register_to_dicke,
)

directions = st.builds(SphericalDirection, st.floats(0.0, math.pi), st.floats(-math.pi, math.pi))
KAPPAS = (0.5, 2.5, 5.0)


def proj(psi):
    return np.outer(psi, psi.conj())


# parameters


def test_negative_kappa_is_flagged():
    with pytest.warns(UserWarning):
        FloquetParameters(-1.0)
    with pytest.raises(ValueError):
        FloquetParameters(math.inf)


# twist phases


def test_twist_phases_examples():
    assert np.allclose(twist_phases(2.5, 0.0), 1.0)
    kappa = 1.7
    ph = twist_phases(1.5, kappa)
    assert ph[0] == pytest.approx(np.exp(-3j * kappa / 4))
    assert ph[3] == pytest.approx(np.exp(-3j * kappa / 4))
    assert ph[1] == pytest.approx(np.exp(-1j * kappa / 12))
    assert ph[2] == pytest.approx(np.exp(-1j * kappa / 12))
    half = twist_phases(0.5, kappa)
    assert np.allclose(half, np.exp(-1j * kappa / 4))


@given(st.integers(1, 60), st.floats(-20, 20))
def test_twist_phases_unit_modulus(two_j, kappa):
    ph = twist_phases(two_j / 2, kappa)
    assert np.allclose(np.abs(ph), 1.0, atol=1e-15)
    v = np.random.default_rng(two_j).normal(size=two_j + 1)
    assert np.linalg.norm(ph * v) == pytest.approx(np.linalg.norm(v), rel=1e-14)


# kick rotation


def test_kick_spin_half():
    c = 1 / math.sqrt(2)
    u = kick_rotation_dicke(0.5, math.pi / 2)
    assert np.allclose(u, [[c, -c], [c, c]], atol=1e-15)
    assert np.allclose(u @ u @ [1, 0], [0, 1], atol=1e-15)


def test_kick_maps_pole_to_plus_x():
    psi = kick_rotation_dicke(1.5, math.pi / 2) @ coherent_state_dicke(1.5, SphericalDirection(0, 0)).amplitudes
    target = coherent_state_dicke(1.5, SphericalDirection(math.pi / 2, 0.0)).amplitudes
    assert oracle.state_fidelity(psi, target) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_kick_matches_dense_exponential(n):
    from scipy.linalg import expm

    basis = oracle.dicke_basis(n)
    dense = basis.conj().T @ expm(-1j * 0.83 * oracle.collective(n, "y")) @ basis
    u = kick_rotation_dicke(n / 2, 0.83)
    assert np.allclose(u, dense, atol=1e-12)
    assert np.allclose(u @ u.conj().T, np.eye(n + 1), atol=1e-10)


def test_kick_limit():
    with pytest.raises(ValueError):
        kick_rotation_dicke(513, 0.1)


# step_dicke / step_register


def test_plus_y_is_fixed_without_twist():
    d = SphericalDirection(math.pi / 2, -math.pi / 2)
    for two_j in (1, 2, 3, 6):
        s0 = coherent_state_dicke(two_j / 2, d)
        s1 = step_dicke(s0, FloquetParameters(0.0))
        assert oracle.state_fidelity(s0.amplitudes, s1.amplitudes) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=25)
@given(st.integers(1, 9), directions)
def test_four_untwisted_steps_close_the_orbit(two_j, d):
    s0 = coherent_state_dicke(two_j / 2, d)
    s = s0
    for _ in range(4):
        s = step_dicke(s, FloquetParameters(0.0))
    assert np.allclose(proj(s.amplitudes), proj(s0.amplitudes), atol=1e-12)


def test_step_dicke_j32_one_step_from_pole():
    kappa = 2.5
    psi = oracle.floquet_unitary(3, kappa) @ oracle.product_state(3, 0.0, 0.0)
    expected = oracle.dicke_basis(3).T @ psi
    assert np.linalg.norm(expected) == pytest.approx(1.0)
    got = step_dicke(coherent_state_dicke(1.5, SphericalDirection(0, 0)), FloquetParameters(kappa)).amplitudes
    assert np.allclose(got, expected, atol=1e-12)
    via_register, _ = register_to_dicke(
        step_register(coherent_state_register(3, SphericalDirection(0, 0)), FloquetParameters(kappa))
    )
    assert np.allclose(got, via_register.amplitudes, atol=1e-12)


@given(directions, st.floats(0, 10))
def test_single_qubit_twist_is_global_phase(d, kappa):
    s = step_register(coherent_state_register(1, d), FloquetParameters(kappa)).amplitudes
    r = step_register(coherent_state_register(1, d), FloquetParameters(0.0)).amplitudes
    assert oracle.state_fidelity(s, r) == pytest.approx(1.0, abs=1e-12)


def test_step_register_untwisted_from_pole():
    s = step_register(coherent_state_register(3, SphericalDirection(0, 0)), FloquetParameters(0.0))
    c = 1 / math.sqrt(2)
    expected = oracle.product_state(3, math.pi / 2, 0.0)
    assert np.allclose(s.amplitudes, expected, atol=1e-12)
    assert np.allclose(np.abs(s.amplitudes), c**3)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("kappa", KAPPAS)
def test_step_register_matches_dense_floquet(n, kappa):
    rng = np.random.default_rng(n)
    psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    psi /= np.linalg.norm(psi)
    got = step_register(RegisterVector(n, psi), FloquetParameters(kappa)).amplitudes
    assert np.allclose(got, oracle.floquet_unitary(n, kappa) @ psi, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 10), directions, st.sampled_from(KAPPAS))
def test_backends_agree(n, d, kappa):
    p = FloquetParameters(kappa)
    dk, rg = coherent_state_dicke(n / 2, d), coherent_state_register(n, d)
    for _ in range(8):
        dk, rg = step_dicke(dk, p), step_register(rg, p)
        emb = dicke_to_register(dk).amplitudes
        assert oracle.state_fidelity(emb, rg.amplitudes) > 1 - 1e-9


def test_step_dispatch():
    d = SphericalDirection(0.3, 0.4)
    assert isinstance(step(coherent_state_dicke(1, d), FloquetParameters(1)), DickeVector)
    assert isinstance(step(coherent_state_register(2, d), FloquetParameters(1)), RegisterVector)
    with pytest.raises(TypeError):
        step(np.zeros(2), FloquetParameters(1))


# invariants over long runs


@pytest.mark.parametrize("kappa", KAPPAS)
def test_norm_drift_over_500_steps(kappa):
    d = SphericalDirection(1.1, 0.7)
    p = FloquetParameters(kappa)
    norms = fold_evolve(coherent_state_dicke(4, d), p, 500, lambda acc, k, s: acc + [np.linalg.norm(s.amplitudes)], [])
    assert max(abs(x - 1) for x in norms) < 1e-10
    # the register path renormalizes nothing beyond rounding either
    from kickedtop.floquet import step_register_array

    a = coherent_state_register(6, d).amplitudes
    for _ in range(500):
        a = step_register_array(a, 6, p)
    assert abs(np.linalg.norm(a) - 1) < 1e-10


@settings(max_examples=10, deadline=None)
@given(directions, st.sampled_from(KAPPAS), st.integers(0, 3), st.integers(0, 3))
def test_register_trajectory_is_permutation_symmetric(d, kappa, a, b):
    n = 4
    traj = evolve(coherent_state_register(n, d), FloquetParameters(kappa), 12)
    idx = np.arange(2**n)
    bit_a, bit_b = (idx >> a) & 1, (idx >> b) & 1
    swapped = idx ^ ((bit_a ^ bit_b) << a) ^ ((bit_a ^ bit_b) << b)
    for s in traj.states:
        assert np.max(np.abs(s.amplitudes[swapped] - s.amplitudes)) < 1e-10


@settings(max_examples=25, deadline=None)
@given(directions, st.sampled_from(KAPPAS), st.integers(1, 8))
def test_ry_pi_partner_has_same_entropy_series(d, kappa, n):
    partner = SphericalDirection(math.pi - d.theta, math.pi - d.phi)
    p = FloquetParameters(kappa)
    a = evolve(coherent_state_dicke(n / 2, d), p, 30)
    b = evolve(coherent_state_dicke(n / 2, partner), p, 30)
    for sa, sb in zip(a.states, b.states):
        ea = entanglement_entropy(single_qubit_rdm_dicke(sa))
        eb = entanglement_entropy(single_qubit_rdm_dicke(sb))
        assert abs(ea - eb) < 1e-10


# evolve


def test_evolve_examples():
    s0 = coherent_state_dicke(1.5, SphericalDirection(0.9, -0.4))
    t0 = evolve(s0, FloquetParameters(2.5), 0)
    assert len(t0) == 1 and t0[0] is s0
    t4 = evolve(s0, FloquetParameters(0.0), 4)
    assert t4.steps == 4
    assert np.allclose(proj(t4[4].amplitudes), proj(s0.amplitudes), atol=1e-12)


def test_evolve_respects_memory_budget():
    s0 = coherent_state_register(10, SphericalDirection(0.2, 0.1))
    with pytest.raises(MemoryError):
        evolve(s0, FloquetParameters(1.0), 100, memory_budget=2**16)
    with pytest.raises(ValueError):
        evolve(s0, FloquetParameters(1.0), 10**5 + 1, memory_budget=2**40)


def test_fold_evolve_matches_evolve():
    s0 = coherent_state_dicke(2, SphericalDirection(0.5, 0.5))
    p = FloquetParameters(1.3)
    last = fold_evolve(s0, p, 7, lambda acc, k, s: s)
    assert np.allclose(last.amplitudes, evolve(s0, p, 7)[7].amplitudes)


# reduced density matrices


def test_rdm_register_examples():
    rdm = single_qubit_rdm_register(coherent_state_register(3, SphericalDirection(1.0, 2.0)), 1)
    assert np.trace(rdm.elements @ rdm.elements).real == pytest.approx(1.0, abs=1e-12)
    ghz = np.zeros(8)
    ghz[[0, 7]] = 1 / math.sqrt(2)
    for q in range(3):
        assert np.allclose(single_qubit_rdm_register(RegisterVector(3, ghz), q).elements, np.eye(2) / 2)
    # Bell pair on qubits 0 and 1, qubit 2 left in |0>
    bell = np.zeros(8)
    bell[[0b000, 0b011]] = 1 / math.sqrt(2)
    assert np.allclose(single_qubit_rdm_register(RegisterVector(3, bell), 2).elements, np.diag([1, 0]))
    with pytest.raises(IndexError):
        single_qubit_rdm_register(RegisterVector(3, bell), 3)


@pytest.mark.parametrize("q", [0, 1, 2])
def test_rdm_register_matches_explicit_trace(q):
    rng = np.random.default_rng(q)
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi /= np.linalg.norm(psi)
    got = single_qubit_rdm_register(RegisterVector(3, psi), q).elements
    assert np.allclose(got, oracle.partial_trace_keep(proj(psi), q, 3), atol=1e-14)


def test_rdm_dicke_examples():
    d = SphericalDirection(0.7, 2.2)
    rdm = single_qubit_rdm_dicke(coherent_state_dicke(2.5, d)).elements
    psi = oracle.qubit_state(d.theta, d.phi)
    assert np.allclose(rdm, proj(psi), atol=1e-12)
    assert np.allclose(single_qubit_rdm_dicke(DickeVector(2, [0, 1, 0])).elements, np.eye(2) / 2)


@pytest.mark.parametrize("kappa", KAPPAS)
def test_rdm_backends_agree_after_evolution(kappa):
    s = coherent_state_dicke(1.5, SphericalDirection(1.2, -2.0))
    p = FloquetParameters(kappa)
    for _ in range(6):
        s = step_dicke(s, p)
        reg = dicke_to_register(s)
        for q in range(3):
            assert np.allclose(single_qubit_rdm(s).elements, single_qubit_rdm(reg, q).elements, atol=1e-12)
