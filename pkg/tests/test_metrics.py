import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from kickedtop.floquet import FloquetParameters, evolve
from kickedtop.metrics import (
    binary_entropy_from_bloch,
    entanglement_entropy,
    ergodicity_overlap_series,
    fidelity,
    microcanonical,
    microcanonical_dicke,
    pauli_correlations,
    pauli_matrix,
    pauli_strings,
    purity,
    time_averaged_density,
    trace_distance,
)
from kickedtop.spin_core import SphericalDirection, coherent_state_dicke, coherent_state_register

seeds = st.integers(0, 2**32 - 1)
CHAOTIC = SphericalDirection(math.pi / 6, 2 * math.pi / 3)


def binary_entropy(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


# entropy


def test_entropy_examples():
    assert entanglement_entropy(np.eye(2) / 2) == pytest.approx(1.0, abs=1e-12)
    assert entanglement_entropy(np.diag([1.0, 0.0])) == 0.0
    rho = (np.eye(2) + 0.6 * oracle.Z) / 2
    assert entanglement_entropy(rho) == pytest.approx(binary_entropy(0.8), abs=1e-12)
    assert binary_entropy(0.8) == pytest.approx(0.721928, abs=1e-6)


def test_entropy_rejects_non_psd():
    with pytest.raises(ValueError):
        entanglement_entropy(np.diag([1.1, -0.1]))


@given(st.floats(0, 1))
def test_binary_entropy_from_bloch_matches_eigenvalues(r):
    rho = (np.eye(2) + r * oracle.X) / 2
    assert float(binary_entropy_from_bloch(r)) == pytest.approx(entanglement_entropy(rho), abs=1e-12)


@settings(max_examples=40)
@given(seeds, st.integers(1, 3))
def test_entropy_basis_independent_and_bounded(seed, n):
    rng = np.random.default_rng(seed)
    dim = 2**n
    rho = oracle.random_density(dim, rng)
    u = oracle.random_unitary(dim, rng)
    s = entanglement_entropy(rho)
    assert abs(entanglement_entropy(u @ rho @ u.conj().T) - s) < 1e-10
    assert -1e-9 <= s <= math.log2(dim) + 1e-9
    assert s == pytest.approx(oracle.entropy_bits(rho), abs=1e-12)


# purity


def test_purity_examples():
    psi = coherent_state_register(3, SphericalDirection(0.4, 1.0)).amplitudes
    assert purity(np.outer(psi, psi.conj())) == pytest.approx(1.0, abs=1e-12)
    assert purity(np.eye(8) / 8) == pytest.approx(0.125)
    assert purity((np.eye(2) + 0.6 * oracle.Y) / 2) == pytest.approx(0.68)


@settings(max_examples=10, deadline=None)
@given(st.sampled_from([0.5, 2.5, 5.0]), seeds)
def test_purity_constant_along_unitary_trajectory(kappa, seed):
    rng = np.random.default_rng(seed)
    rho = oracle.random_density(8, rng)
    u = oracle.floquet_unitary(3, kappa)
    p0 = purity(rho)
    for _ in range(20):
        rho = u @ rho @ u.conj().T
        assert abs(purity(rho) - p0) < 1e-10
    traj = evolve(coherent_state_register(3, SphericalDirection(1, 1)), FloquetParameters(kappa), 20)
    for s in traj.states:
        assert abs(purity(np.outer(s.amplitudes, s.amplitudes.conj())) - 1) < 1e-10


# fidelity


def test_fidelity_examples():
    rng = np.random.default_rng(5)
    rho = oracle.random_density(4, rng)
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)
    assert fidelity(np.diag([1, 0]), np.diag([0, 1])) == pytest.approx(0.0, abs=1e-12)
    psi = coherent_state_register(3, SphericalDirection(1.3, 0.2)).amplitudes
    assert fidelity(np.outer(psi, psi.conj()), microcanonical(3)) == pytest.approx(0.5, abs=1e-9)


def test_fidelity_dimension_mismatch():
    with pytest.raises(ValueError):
        fidelity(np.eye(2) / 2, np.eye(4) / 4)


@settings(max_examples=40)
@given(seeds, st.integers(1, 3), st.integers(1, 8))
def test_fidelity_symmetric_and_matches_oracle(seed, n, rank):
    rng = np.random.default_rng(seed)
    dim = 2**n
    a = oracle.random_factor(dim, rng, min(rank, dim))
    b = oracle.random_factor(dim, rng, min(9 - rank, dim))
    rho, sigma = a @ a.conj().T, b @ b.conj().T
    f = fidelity(rho, sigma)
    assert abs(f - fidelity(sigma, rho)) < 1e-9
    assert 0 <= f <= 1
    assert f == pytest.approx(oracle.uhlmann_factored(a, b), abs=1e-9)


@settings(max_examples=40)
@given(seeds, st.floats(0, 1e-3))
def test_fidelity_one_iff_equal(seed, eps):
    rng = np.random.default_rng(seed)
    rho = oracle.random_density(4, rng)
    sigma = (1 - eps) * rho + eps * oracle.random_density(4, rng)
    close = np.max(np.abs(rho - sigma)) < 1e-8
    assert (fidelity(rho, sigma) > 1 - 1e-12) or not close
    if not close and np.max(np.abs(rho - sigma)) > 1e-6:
        assert fidelity(rho, sigma) < 1


def test_trace_distance():
    assert trace_distance(np.diag([1, 0]), np.diag([0, 1])) == pytest.approx(1.0)
    assert trace_distance(np.eye(2) / 2, np.eye(2) / 2) == 0.0


# microcanonical


def test_microcanonical_examples():
    assert np.allclose(microcanonical(1).elements, np.eye(2) / 2)
    rho3 = microcanonical(3).elements
    w = np.linalg.eigvalsh(rho3)
    assert np.allclose(w, [0, 0, 0, 0, 0.25, 0.25, 0.25, 0.25], atol=1e-12)
    assert np.trace(rho3).real == pytest.approx(1.0)
    assert purity(rho3) == pytest.approx(0.25)
    basis = oracle.dicke_basis(2)
    assert np.allclose(microcanonical(2).elements, basis @ basis.conj().T / 3)
    assert np.allclose(microcanonical_dicke(3).elements, np.eye(4) / 4)
    with pytest.raises(ValueError):
        microcanonical(13)


# time averages


def test_time_averaged_density_examples():
    s0 = coherent_state_dicke(1.5, SphericalDirection(0.8, 0.3))
    traj = evolve(s0, FloquetParameters(2.5), 10)
    one = time_averaged_density(traj, 1).elements
    psi = traj[1].amplitudes
    assert np.allclose(one, np.outer(psi, psi.conj()))
    flat = evolve(s0, FloquetParameters(0.0), 8)
    assert np.linalg.matrix_rank(time_averaged_density(flat, 4).elements, tol=1e-10) <= 4
    with pytest.raises(ValueError):
        time_averaged_density(traj, 11)
    with pytest.raises(ValueError):
        time_averaged_density(traj, 0)


def test_time_average_overlap_chaotic_state_register_oracle():
    # brute force on the full register with dense matrices
    psi = oracle.product_state(3, CHAOTIC.theta, CHAOTIC.phi)
    u = oracle.floquet_unitary(3, 2.5)
    visited = []
    for _ in range(10):
        psi = u @ psi
        visited.append(psi)
    expected = oracle.uhlmann_factored(np.stack(visited, axis=1) / math.sqrt(10), oracle.dicke_basis(3) / 2)
    assert expected > 0.9
    traj = evolve(coherent_state_register(3, CHAOTIC), FloquetParameters(2.5), 10)
    got = fidelity(time_averaged_density(traj, 10), microcanonical(3))
    assert got == pytest.approx(expected, abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(1, 12))
def test_time_average_is_density(seed, n, upto):
    rng = np.random.default_rng(seed)
    d = SphericalDirection(rng.uniform(0, math.pi), rng.uniform(-math.pi, math.pi))
    traj = evolve(coherent_state_register(n, d), FloquetParameters(rng.uniform(0, 6)), 12)
    rho = time_averaged_density(traj, upto, include_initial=bool(seed % 2))
    assert rho.dim == 2**n


# Pauli correlations


def test_pauli_strings_order():
    s = pauli_strings(2)
    assert s[:5] == ["II", "IX", "IY", "IZ", "XI"]
    assert len(pauli_strings(3)) == 64


def test_pauli_matrix_acts_on_named_qubit():
    assert np.allclose(pauli_matrix("XII"), oracle.on_qubit(oracle.X, 0, 3))
    assert np.allclose(pauli_matrix("IZY"), oracle.pauli_string_matrix("IZY"))


def test_pauli_examples():
    zero = np.zeros((8, 8))
    zero[0, 0] = 1
    t = pauli_correlations(zero)
    for label, v in t.items():
        expected = 0.0 if ("X" in label or "Y" in label) else 1.0
        assert v == pytest.approx(expected, abs=1e-12)
    ghz = np.zeros(8)
    ghz[[0, 7]] = 1 / math.sqrt(2)
    t = pauli_correlations(np.outer(ghz, ghz))
    assert t["XXX"] == pytest.approx(1.0)
    assert t["ZZI"] == pytest.approx(1.0)
    assert t["ZII"] == pytest.approx(0.0, abs=1e-12)
    assert t["III"] == pytest.approx(1.0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_pauli_matches_explicit_traces(n):
    rng = np.random.default_rng(n)
    rho = oracle.random_density(2**n, rng)
    t = pauli_correlations(rho)
    for label in pauli_strings(n):
        expected = np.trace(rho @ oracle.pauli_string_matrix(label)).real
        assert t[label] == pytest.approx(expected, abs=1e-12)


@settings(max_examples=30)
@given(seeds, st.integers(1, 4))
def test_pauli_sum_rule(seed, n):
    rho = oracle.random_density(2**n, np.random.default_rng(seed))
    t = pauli_correlations(rho)
    assert abs(sum(v**2 for _, v in t.items()) - 2**n * purity(rho)) < 1e-8
    assert t["I" * n] == pytest.approx(1.0, abs=1e-10)
    assert all(-1 - 1e-9 <= v <= 1 + 1e-9 for _, v in t.items())


def test_pauli_low_entropy_inset_points_along_y():
    traj = evolve(coherent_state_register(3, SphericalDirection(math.pi / 2, -math.pi / 2)), FloquetParameters(0.5), 10)
    psi = traj[10].amplitudes
    t = pauli_correlations(np.outer(psi, psi.conj()))
    singles = {k: v for k, v in t.items() if sum(c != "I" for c in k) == 1}
    top3 = sorted(singles, key=lambda k: -abs(singles[k]))[:3]
    assert sorted(top3) == ["IIY", "IYI", "YII"]
    assert t.weight_sum(0) == pytest.approx(8.0)


# ergodicity series


def test_ergodicity_first_entry_is_half():
    for d in (CHAOTIC, SphericalDirection(0.1, 0.2), SphericalDirection(math.pi / 2, -math.pi / 2)):
        s = ergodicity_overlap_series(d, FloquetParameters(2.5), 3, 1, include_initial=False)
        assert list(s.steps) == [1]
        assert s.at(1) == pytest.approx(0.5, abs=1e-9)
        s = ergodicity_overlap_series(d, FloquetParameters(2.5), 3, 1)
        assert s.at(0) == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize("include_initial", [True, False])
def test_ergodicity_series_matches_register_oracle(include_initial):
    s = ergodicity_overlap_series(CHAOTIC, FloquetParameters(2.5), 3, 10, include_initial)
    psi = oracle.product_state(3, CHAOTIC.theta, CHAOTIC.phi)
    u = oracle.floquet_unitary(3, 2.5)
    mc_factor = oracle.dicke_basis(3) / 2
    visited = [psi] if include_initial else []
    for k in range(1, 11):
        psi = u @ psi
        visited.append(psi)
        a = np.stack(visited, axis=1) / math.sqrt(len(visited))
        assert s.at(k) == pytest.approx(oracle.uhlmann_factored(a, mc_factor), abs=1e-10)
    assert all(0 <= v <= 1 + 1e-9 for _, v in s)


def test_ergodicity_series_rejects_sizes():
    with pytest.raises(ValueError):
        ergodicity_overlap_series(CHAOTIC, FloquetParameters(2.5), 13, 3)
    with pytest.raises(ValueError):
        ergodicity_overlap_series(CHAOTIC, FloquetParameters(2.5), 3, 0)
