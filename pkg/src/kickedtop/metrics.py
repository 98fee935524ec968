"""Entropy, purity, fidelity and correlation measures on density matrices."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .floquet import FloquetParameters, Trajectory, step_dicke_array
from .spin_core import (
    PAULI_I,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DensityOperator,
    DickeVector,
    SphericalDirection,
    binomial_sqrt,
    check_density,
    coherent_state_dicke,
    hamming_weights,
)

PAULI_LABELS = "IXYZ"
_PAULIS = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}
EIG_FLOOR = 1e-15


def _as_matrix(rho) -> np.ndarray:
    return np.asarray(rho, dtype=complex)


def _hermitian_eigvals(rho: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh((rho + rho.conj().T) / 2)


def entanglement_entropy(rho) -> float:
    """Von Neumann entropy in bits, -sum(l log2 l) over eigenvalues.

    Eigenvalues below 1e-15 contribute nothing. Works for any dimension; a
    single qubit gives a value in [0, 1].
    """
    rho = _as_matrix(rho)
    check_density(rho)
    lam = _hermitian_eigvals(rho)
    lam = lam[lam > EIG_FLOOR]
    return float(max(0.0, -np.sum(lam * np.log2(lam))))


def binary_entropy_from_bloch(length) -> np.ndarray:
    """Single-qubit entropy from Bloch-vector length, vectorized.

    Equivalent to :func:`entanglement_entropy` on ``(I + r.sigma)/2`` and used
    by the grid scans where thousands of 2x2 RDMs are evaluated at once.
    """
    r = np.clip(np.asarray(length, float), 0.0, 1.0)
    out = np.zeros_like(r)
    for lam in ((1 + r) / 2, (1 - r) / 2):
        safe = np.where(lam > EIG_FLOOR, lam, 1.0)
        out -= np.where(lam > EIG_FLOOR, lam * np.log2(safe), 0.0)
    return out


def purity(rho) -> float:
    rho = _as_matrix(rho)
    # Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
    return float(np.sum(np.abs(rho) ** 2))


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    if w[0] < -1e-9:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    # rounding noise on null eigenvalues would otherwise survive as sqrt(1e-17) ~ 3e-9
    w = np.where(w > EIG_FLOOR * max(1.0, w[-1]), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity Tr sqrt(sqrt(sigma) rho sqrt(sigma)), not squared.

    Evaluated as the nuclear norm of sqrt(rho) sqrt(sigma), which is the same
    quantity without a third square root.
    """
    rho, sigma = _as_matrix(rho), _as_matrix(sigma)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    sv = np.linalg.svd(_psd_sqrt(rho) @ _psd_sqrt(sigma), compute_uv=False)
    return float(min(1.0, sv.sum()))


def trace_distance(rho, sigma) -> float:
    diff = _as_matrix(rho) - _as_matrix(sigma)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2))))


@lru_cache(maxsize=16)
def _symmetric_isometry(n: int) -> np.ndarray:
    """Columns are the normalized Dicke states embedded in the register."""
    iso = np.zeros((2**n, n + 1))
    w = hamming_weights(n)
    iso[np.arange(2**n), w] = 1.0 / binomial_sqrt(n)[w]
    iso.setflags(write=False)
    return iso


def microcanonical(n: int) -> DensityOperator:
    """Uniform mixture over the n + 1 permutation-symmetric states of n qubits."""
    if not 1 <= n <= 12:
        raise ValueError(f"qubit count must be in 1..12, got {n}")
    iso = _symmetric_isometry(n)
    return DensityOperator(iso @ iso.T / (n + 1), "register", n)


def time_averaged_density(traj: Trajectory, upto: int, include_initial: bool = False) -> DensityOperator:
    """Mean projector over steps 1..upto (0..upto with ``include_initial``)."""
    if not 1 <= upto <= len(traj) - 1:
        raise ValueError(f"upto must be in 1..{len(traj) - 1}, got {upto}")
    first = 0 if include_initial else 1
    states = traj.states[first : upto + 1]
    psi = np.stack([s.amplitudes for s in states], axis=1)
    rho = psi @ psi.conj().T / len(states)
    s0 = states[0]
    if isinstance(s0, DickeVector):
        return DensityOperator(rho, "dicke", s0.two_j)
    return DensityOperator(rho, "register", s0.n)


def pauli_strings(n: int) -> list[str]:
    """All length-n strings over IXYZ, base-4 with qubit 0 as the leading symbol."""
    return ["".join(t) for t in itertools.product(PAULI_LABELS, repeat=n)]


def pauli_matrix(label: str) -> np.ndarray:
    """Register operator for a Pauli string; character i acts on qubit i (bit i)."""
    op = np.ones((1, 1), dtype=complex)
    # kron puts its first factor on the most significant bit, i.e. qubit n-1
    for ch in reversed(label):
        op = np.kron(op, _PAULIS[ch])
    return op


@dataclass
class PauliCorrelations:
    n: int
    table: dict

    def __getitem__(self, label: str) -> float:
        return self.table[label]

    def items(self):
        return self.table.items()

    def weight_sum(self, min_weight: int) -> float:
        """Sum of squared expectations over strings with at least ``min_weight`` non-identity factors."""
        return float(
            sum(v**2 for k, v in self.table.items() if sum(c != "I" for c in k) >= min_weight)
        )


def pauli_correlations(rho) -> PauliCorrelations:
    rho = _as_matrix(rho)
    dim = rho.shape[0]
    n = dim.bit_length() - 1
    if 2**n != dim or not 1 <= n <= 8:
        raise ValueError(f"expected a register density matrix on 1..8 qubits, got dim {dim}")
    paulis = np.stack([_PAULIS[c] for c in PAULI_LABELS])  # (4, 2, 2)
    # Row axes come first, most significant bit (qubit n-1) leading; each
    # contraction removes qubit q's row/column pair and appends its Pauli axis.
    t = rho.reshape((2,) * (2 * n))
    for q in range(n):
        left = n - q
        t = np.tensordot(t, paulis, axes=([left - 1, 2 * left - 1], [2, 1]))
    strings = pauli_strings(n)
    return PauliCorrelations(n, dict(zip(strings, (float(v) for v in np.real(t).reshape(-1)))))


def microcanonical_dicke(n: int) -> DensityOperator:
    """The microcanonical ensemble expressed in the Dicke basis (I / (n+1))."""
    return DensityOperator(np.eye(n + 1) / (n + 1), "dicke", n)


@dataclass
class OverlapSeries:
    steps: np.ndarray
    overlaps: np.ndarray
    kappa: float
    initial: SphericalDirection
    include_initial: bool = True

    def __iter__(self):
        return iter(zip(self.steps.tolist(), self.overlaps.tolist()))

    def at(self, step: int) -> float:
        return float(self.overlaps[list(self.steps).index(step)])


def ergodicity_overlap_series(
    initial: SphericalDirection,
    p: FloquetParameters,
    n: int,
    n_max: int,
    include_initial: bool = True,
) -> OverlapSeries:
    """Overlap of the running time average with the microcanonical ensemble.

    Entry ``N`` averages the projectors after steps 0..N (1..N when
    ``include_initial`` is false).  The computation runs in the Dicke basis;
    both operators live in the symmetric sector, so the value equals the
    register-level fidelity.
    """
    if not 1 <= n <= 12:
        raise ValueError(f"qubit count must be in 1..12, got {n}")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    psi = coherent_state_dicke(n / 2, initial).amplitudes
    rho_mc = microcanonical_dicke(n)
    acc = np.zeros((n + 1, n + 1), dtype=complex)
    count = 0
    steps, values = [], []
    if include_initial:
        acc += np.outer(psi, psi.conj())
        count = 1
        steps.append(0)
        values.append(fidelity(acc / count, rho_mc))
    for k in range(1, n_max + 1):
        psi = step_dicke_array(psi, n, p)
        acc += np.outer(psi, psi.conj())
        count += 1
        steps.append(k)
        values.append(fidelity(acc / count, rho_mc))
    return OverlapSeries(np.array(steps), np.array(values), p.kappa, initial, include_initial)
