"""Noisy density-matrix evolution and simulated state tomography.

Density matrices here are register operators on ``n`` qubits with the bit
convention of :mod:`kickedtop.spin_core` (bit ``i`` set = qubit ``i`` in
``|-z>``; ``|+z>`` is the ground state).  Array-level helpers accept a
leading batch axis, ``(..., 2**n, 2**n)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import floquet
from .floquet import FloquetParameters, register_twist_phases, single_qubit_rotation_y
from .metrics import fidelity
from .spin_core import PAULI_X, PAULI_Y, DensityOperator, SphericalDirection, coherent_state_register

MAX_DENSITY_QUBITS = 7
MAX_TOMOGRAPHY_QUBITS = 5


def kappa_from_pulse(g: float, t: float) -> float:
    """Kick strength 3 g T for angular coupling rate ``g`` (rad/s) held for ``t`` seconds."""
    if t < 0:
        raise ValueError("interaction duration must be non-negative")
    return 3.0 * g * t


@dataclass(frozen=True)
class NoiseParameters:
    """Decoherence times and pulse durations, all in nanoseconds.

    ``t1`` may be a scalar or one value per qubit; ``math.inf`` disables a
    channel.
    """

    t1: float | tuple = math.inf
    tphi: float | tuple = math.inf
    rotation_duration: float = 20.0
    interaction_duration: float = 25.0

    def __post_init__(self):
        for name in ("t1", "tphi"):
            val = getattr(self, name)
            if np.ndim(val):
                object.__setattr__(self, name, tuple(float(v) for v in val))
            vals = np.atleast_1d(getattr(self, name))
            if np.any(vals <= 0):
                raise ValueError(f"{name} must be positive")
        if self.rotation_duration <= 0 or self.interaction_duration <= 0:
            raise ValueError("pulse durations must be positive")

    @property
    def step_duration(self) -> float:
        return self.rotation_duration + self.interaction_duration

    def per_qubit(self, name: str, n: int) -> np.ndarray:
        vals = np.atleast_1d(np.asarray(getattr(self, name), float))
        if vals.size == 1:
            return np.full(n, vals[0])
        if vals.size != n:
            raise ValueError(f"{name} has {vals.size} entries for {n} qubits")
        return vals

    @property
    def disabled(self) -> bool:
        return bool(np.all(np.isinf(np.atleast_1d(self.t1))) and np.all(np.isinf(np.atleast_1d(self.tphi))))


def amplitude_damping_kraus(gamma: float) -> list[np.ndarray]:
    return [
        np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex),
        np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex),
    ]


def phase_damping_kraus(lam: float) -> list[np.ndarray]:
    return [
        np.array([[1, 0], [0, math.sqrt(1 - lam)]], dtype=complex),
        np.array([[0, 0], [0, math.sqrt(lam)]], dtype=complex),
    ]


def _split(rho: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """View with qubit's row and column bits as separate axes: (..., A, r, B, C, c, D)."""
    hi, lo = 2 ** (n - 1 - qubit), 2**qubit
    return rho.reshape(rho.shape[:-2] + (hi, 2, lo, hi, 2, lo))


def conjugate_qubit(rho: np.ndarray, op: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """op_q rho op_q^dagger for a 2x2 ``op`` on one qubit."""
    view = _split(rho, qubit, n)
    out = np.einsum("ar,...xrzucw,bc->...xazubw", op, view, op.conj(), optimize=True)
    return out.reshape(rho.shape)


def apply_kraus_qubit(rho: np.ndarray, kraus: Sequence[np.ndarray], qubit: int, n: int) -> np.ndarray:
    return sum(conjugate_qubit(rho, k, qubit, n) for k in kraus)


def apply_channels_array(rho: np.ndarray, noise: NoiseParameters, duration: float, n: int) -> np.ndarray:
    t1 = noise.per_qubit("t1", n)
    tphi = noise.per_qubit("tphi", n)
    out = rho
    for q in range(n):
        gamma = 1.0 - math.exp(-duration / t1[q])
        if gamma > 0:
            out = apply_kraus_qubit(out, amplitude_damping_kraus(gamma), q, n)
    for q in range(n):
        lam = 1.0 - math.exp(-2.0 * duration / tphi[q])
        if lam > 0:
            out = apply_kraus_qubit(out, phase_damping_kraus(lam), q, n)
    return out


def _qubit_count(rho: np.ndarray) -> int:
    dim = rho.shape[-1]
    n = dim.bit_length() - 1
    if 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def apply_channels(rho, noise: NoiseParameters, duration: float) -> DensityOperator:
    """Amplitude then phase damping on every qubit for ``duration`` ns."""
    rho = np.asarray(rho, dtype=complex)
    n = _qubit_count(rho)
    if n > MAX_DENSITY_QUBITS:
        raise ValueError(f"density evolution limited to {MAX_DENSITY_QUBITS} qubits")
    return DensityOperator(apply_channels_array(rho, noise, duration, n), "register", n)


def unitary_step_density(rho: np.ndarray, n: int, p: FloquetParameters, rotate=True, twist=True) -> np.ndarray:
    """U rho U^dagger for one Floquet period, with optional halves switched off."""
    out = rho
    if rotate:
        gate = single_qubit_rotation_y(p.rotation_angle)
        for q in range(n):
            out = conjugate_qubit(out, gate, q, n)
    if twist:
        ph = register_twist_phases(n, p.kappa)
        out = out * np.multiply.outer(ph, ph.conj())
    return out


def noisy_evolve_array(rho0: np.ndarray, n: int, p: FloquetParameters, noise: NoiseParameters | None, steps: int,
                       rotate=True, twist=True):
    """Yield the density matrices after 0, 1, ..., steps periods."""
    rho = rho0
    yield rho
    for _ in range(steps):
        rho = unitary_step_density(rho, n, p, rotate, twist)
        if noise is not None and not noise.disabled:
            rho = apply_channels_array(rho, noise, noise.step_duration, n)
        yield rho


def noisy_evolve(
    initial: SphericalDirection,
    p: FloquetParameters,
    noise: NoiseParameters | None,
    steps: int,
    n: int = 3,
) -> list[DensityOperator]:
    """Density matrices after 0..steps periods (index k = after k steps).

    Each period applies the unitary step followed by the lumped decoherence
    channel of duration ``rotation_duration + interaction_duration``.
    """
    if not 1 <= n <= MAX_DENSITY_QUBITS:
        raise ValueError(f"density evolution limited to 1..{MAX_DENSITY_QUBITS} qubits")
    psi = coherent_state_register(n, initial).amplitudes
    rho0 = np.outer(psi, psi.conj())
    return [DensityOperator(r, "register", n) for r in noisy_evolve_array(rho0, n, p, noise, steps)]


def overlap_with_theory(rho_expmt, rho_thy) -> float:
    return fidelity(rho_expmt, rho_thy)


# --- tomography -----------------------------------------------------------

TOMOGRAPHY_ROTATIONS = ("I", "X/2", "Y/2", "X")


def _rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    return math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * axis


TOMOGRAPHY_UNITARIES = {
    "I": np.eye(2, dtype=complex),
    "X/2": _rotation(PAULI_X, math.pi / 2),
    "Y/2": _rotation(PAULI_Y, math.pi / 2),
    "X": _rotation(PAULI_X, math.pi),
}


@dataclass(frozen=True)
class TomographySetting:
    """Pre-measurement rotation per qubit; entry i acts on qubit i."""

    labels: tuple

    def __post_init__(self):
        labels = tuple(self.labels)
        bad = [lab for lab in labels if lab not in TOMOGRAPHY_UNITARIES]
        if bad or not labels:
            raise ValueError(f"invalid tomography labels {labels!r}")
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return len(self.labels)

    def __str__(self):
        return ",".join(self.labels)


@dataclass(frozen=True, eq=False)
class CountRecord:
    setting: TomographySetting
    shots: int
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.shape != (2**self.setting.n,):
            raise ValueError(f"expected {2 ** self.setting.n} outcome counts, got {counts.shape}")
        if np.any(counts < 0) or int(counts.sum()) != self.shots or self.shots < 1:
            raise ValueError("counts must be non-negative and sum to shots")
        object.__setattr__(self, "counts", counts.astype(np.int64))

    def to_dict(self) -> dict:
        return {"setting": list(self.setting.labels), "shots": int(self.shots), "counts": self.counts.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "CountRecord":
        return cls(TomographySetting(tuple(d["setting"])), int(d["shots"]), np.asarray(d["counts"], dtype=np.int64))


def tomography_settings(n: int) -> list[TomographySetting]:
    if not 1 <= n <= MAX_TOMOGRAPHY_QUBITS:
        raise ValueError(f"tomography supports 1..{MAX_TOMOGRAPHY_QUBITS} qubits")
    return [TomographySetting(t) for t in itertools.product(TOMOGRAPHY_ROTATIONS, repeat=n)]


def setting_unitary(setting: TomographySetting) -> np.ndarray:
    """Full register unitary; kron's leading factor sits on the top qubit."""
    u = np.ones((1, 1), dtype=complex)
    for lab in reversed(setting.labels):
        u = np.kron(u, TOMOGRAPHY_UNITARIES[lab])
    return u


def measurement_projectors(settings: Sequence[TomographySetting]) -> np.ndarray:
    """POVM elements U^dagger |o><o| U, shape (settings, outcomes, dim, dim)."""
    us = np.stack([setting_unitary(s) for s in settings])
    # row o of U gives <o|U; the projector is its outer product with itself
    return np.einsum("soi,soj->soij", us.conj(), us)


def measurement_probabilities(rho, settings: Sequence[TomographySetting]) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    us = np.stack([setting_unitary(s) for s in settings])
    probs = np.einsum("soi,ij,soj->so", us, rho, us.conj()).real
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum(axis=1, keepdims=True)


def simulate_counts(rho, settings: Sequence[TomographySetting], shots: int, seed: int) -> list[CountRecord]:
    """Multinomial z-basis counts after each setting's rotation.

    One ``PCG64`` generator seeded with ``seed`` is consumed in setting order.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = measurement_probabilities(rho, settings)
    rng = np.random.default_rng(seed)
    return [CountRecord(s, shots, rng.multinomial(shots, pr)) for s, pr in zip(settings, probs)]


@dataclass
class MLEResult:
    rho: DensityOperator
    log_likelihood: list
    iterations: int
    converged: bool


class TomographyError(ValueError):
    pass


def _check_complete(projectors: np.ndarray) -> None:
    dim = projectors.shape[-1]
    span = projectors.reshape(-1, dim * dim)
    if np.linalg.matrix_rank(span, tol=1e-9) < dim * dim:
        raise TomographyError("tomographically incomplete")


def mle_fit(
    settings: Sequence[TomographySetting],
    frequencies: np.ndarray,
    initial=None,
    max_iter: int = 10_000,
    tol: float = 1e-10,
) -> MLEResult:
    """Maximum-likelihood density matrix from outcome frequencies.

    ``frequencies[s, o]`` is the observed weight of outcome ``o`` under
    setting ``s`` (counts or probabilities).  Uses the R rho R fixed-point
    iteration, diluting the step whenever the full update would lower the
    log-likelihood, so the likelihood never decreases.
    """
    projectors = measurement_projectors(settings)
    _check_complete(projectors)
    f = np.asarray(frequencies, float)
    f = f / f.sum()
    mask = f > 0
    dim = projectors.shape[-1]
    rho = np.eye(dim, dtype=complex) / dim if initial is None else np.array(initial, dtype=complex)

    def probs(r):
        return np.einsum("soij,ji->so", projectors, r).real

    def loglik(p):
        return float(np.sum(f[mask] * np.log(np.clip(p[mask], 1e-300, None))))

    p = probs(rho)
    history = [loglik(p)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        ratio = np.where(mask, f / np.clip(p, 1e-300, None), 0.0)
        # normalized so that R = I at the maximum
        big_r = np.einsum("so,soij->ij", ratio, projectors)
        eps = math.inf
        while True:
            if math.isinf(eps):
                step_op = big_r
            else:
                step_op = np.eye(dim) + eps * big_r
            new = step_op @ rho @ step_op.conj().T
            new = (new + new.conj().T) / 2
            new /= np.trace(new).real
            p_new = probs(new)
            ll = loglik(p_new)
            if ll >= history[-1] - 1e-12 * abs(history[-1]) - 1e-15:
                break
            eps = 1.0 if math.isinf(eps) else eps / 2
            if eps < 1e-12:
                new, p_new, ll = rho, p, history[-1]
                break
        if ll < history[-1] - 1e-12 * abs(history[-1]) - 1e-15:
            raise RuntimeError("log-likelihood decreased during MLE iteration")
        delta = float(np.max(np.abs(new - rho)))
        rho, p = new, p_new
        history.append(ll)
        if delta < tol:
            converged = True
            break
    n = dim.bit_length() - 1
    w, v = np.linalg.eigh(rho)
    rho = (v * np.clip(w, 0.0, None)) @ v.conj().T
    rho /= np.trace(rho).real
    return MLEResult(DensityOperator((rho + rho.conj().T) / 2, "register", n), history, it, converged)


def mle_reconstruct(records: Sequence[CountRecord], **kwargs) -> DensityOperator:
    """Physical density matrix maximizing the multinomial likelihood of ``records``."""
    if not records:
        raise TomographyError("tomographically incomplete")
    settings = [r.setting for r in records]
    counts = np.stack([r.counts for r in records]).astype(float)
    return mle_fit(settings, counts, **kwargs).rho
