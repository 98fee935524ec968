"""Kicked-top Floquet evolution with two interchangeable backends.

One period is a rotation ``exp(-i angle J_y)`` followed by the twist
``exp(-i kappa J_z**2 / 2j)``.  The Dicke backend works in the ``2j + 1``
dimensional symmetric sector; the register backend acts on all ``2**n``
amplitudes, sweeping the single-qubit rotation over every qubit and applying
the twist as a diagonal phase indexed by Hamming weight.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator, Union

import numpy as np

from .spin_core import (
    MAX_REGISTER_QUBITS,
    DensityOperator,
    DickeVector,
    RegisterVector,
    _two_j,
    collective_operator,
    hamming_weights,
)

State = Union[DickeVector, RegisterVector]

MAX_STEPS = 100_000
MAX_KICK_TWO_J = 1024
DEFAULT_MEMORY_BUDGET = 512 * 2**20  # bytes of stored amplitudes per trajectory


@dataclass(frozen=True)
class FloquetParameters:
    """Kick strength and per-period rotation angle (radians)."""

    kappa: float
    rotation_angle: float = math.pi / 2

    def __post_init__(self):
        if not math.isfinite(self.kappa) or not math.isfinite(self.rotation_angle):
            raise ValueError("kappa and rotation_angle must be finite")
        if self.kappa < 0:
            warnings.warn(
                f"negative kappa={self.kappa} accepted; shipped experiments use kappa >= 0",
                stacklevel=3,
            )


@dataclass
class Trajectory:
    """States after 0, 1, ..., N periods."""

    states: list
    params: FloquetParameters = field(default=None)

    def __len__(self):
        return len(self.states)

    def __getitem__(self, k):
        return self.states[k]

    @property
    def steps(self) -> int:
        return len(self.states) - 1


def twist_phases(j, kappa: float) -> np.ndarray:
    """Diagonal of the twist, ordered m = j, j-1, ..., -j."""
    two_j = _two_j(j)
    m = two_j / 2 - np.arange(two_j + 1)
    return np.exp(-1j * kappa * m**2 / two_j)


@lru_cache(maxsize=256)
def _kick(two_j: int, angle: float) -> np.ndarray:
    jy = collective_operator(two_j / 2, "y")
    w, v = np.linalg.eigh(jy)
    u = (v * np.exp(-1j * angle * w)) @ v.conj().T
    u.setflags(write=False)
    return u


def kick_rotation_dicke(j, angle: float) -> np.ndarray:
    """exp(-i angle J_y) in the Dicke basis, built once per (j, angle)."""
    two_j = _two_j(j)
    if two_j > MAX_KICK_TWO_J:
        raise ValueError(f"j={j} exceeds the supported maximum {MAX_KICK_TWO_J // 2}")
    return _kick(two_j, float(angle))


def single_qubit_rotation_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def apply_single_qubit(amps: np.ndarray, gate: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Apply a 2x2 gate to ``qubit`` of register amplitudes.

    ``amps`` has shape ``(2**n,)`` or ``(2**n, batch)``; qubit ``i`` is bit
    ``i`` of the basis index.
    """
    batch = amps.shape[1:]
    view = amps.reshape((2 ** (n - 1 - qubit), 2, 2**qubit) + batch)
    out = np.einsum("ab,xbz...->xaz...", gate, view)
    return out.reshape(amps.shape)


def register_twist_phases(n: int, kappa: float) -> np.ndarray:
    m = n / 2 - hamming_weights(n)
    return np.exp(-1j * kappa * m**2 / n)


def step_dicke_array(amps: np.ndarray, two_j: int, p: FloquetParameters, rotate=True, twist=True) -> np.ndarray:
    """One period on raw Dicke amplitudes of shape ``(2j+1,)`` or ``(2j+1, batch)``.

    ``rotate``/``twist`` switch the two halves of the period off, which is
    how the pulse-dissection experiments are modelled.
    """
    out = amps
    if rotate:
        out = kick_rotation_dicke(two_j / 2, p.rotation_angle) @ out
    if twist:
        phases = twist_phases(two_j / 2, p.kappa)
        out = phases.reshape((-1,) + (1,) * (out.ndim - 1)) * out
    return out


def step_register_array(amps: np.ndarray, n: int, p: FloquetParameters, rotate=True, twist=True) -> np.ndarray:
    out = amps
    if rotate:
        gate = single_qubit_rotation_y(p.rotation_angle)
        for q in range(n):
            out = apply_single_qubit(out, gate, q, n)
    if twist:
        phases = register_twist_phases(n, p.kappa)
        out = phases.reshape((-1,) + (1,) * (out.ndim - 1)) * out
    return out


def step_dicke(state: DickeVector, p: FloquetParameters) -> DickeVector:
    amps = step_dicke_array(state.amplitudes, state.two_j, p)
    return DickeVector(state.two_j, amps / np.linalg.norm(amps))


def step_register(state: RegisterVector, p: FloquetParameters) -> RegisterVector:
    if state.n > MAX_REGISTER_QUBITS:
        raise ValueError(f"qubit count must be <= {MAX_REGISTER_QUBITS}")
    amps = step_register_array(state.amplitudes, state.n, p)
    return RegisterVector(state.n, amps / np.linalg.norm(amps))


def step(state: State, p: FloquetParameters) -> State:
    """Advance a state of either representation by one period."""
    if isinstance(state, DickeVector):
        return step_dicke(state, p)
    if isinstance(state, RegisterVector):
        return step_register(state, p)
    raise TypeError(f"cannot evolve {type(state).__name__}")


def iterate_states(initial: State, p: FloquetParameters, steps: int) -> Iterator[State]:
    """Yield the initial state and then each of ``steps`` evolved states."""
    if not 0 <= steps <= MAX_STEPS:
        raise ValueError(f"steps must be in 0..{MAX_STEPS}, got {steps}")
    state = initial
    yield state
    for _ in range(steps):
        state = step(state, p)
        yield state


def evolve(
    initial: State,
    p: FloquetParameters,
    steps: int,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> Trajectory:
    """Store the full trajectory of ``steps`` periods.

    Raises ``MemoryError`` when storing every state would exceed
    ``memory_budget`` bytes; use :func:`fold_evolve` or
    :func:`iterate_states` for long runs on large registers.
    """
    needed = (steps + 1) * initial.amplitudes.nbytes
    if needed > memory_budget:
        raise MemoryError(
            f"trajectory needs {needed} bytes (budget {memory_budget}); use fold_evolve instead"
        )
    return Trajectory(list(iterate_states(initial, p, steps)), p)


def fold_evolve(initial: State, p: FloquetParameters, steps: int, fn: Callable, acc=None):
    """Streaming alternative to :func:`evolve`: ``acc = fn(acc, k, state)`` per step."""
    for k, state in enumerate(iterate_states(initial, p, steps)):
        acc = fn(acc, k, state)
    return acc


def rdm_register_array(amps: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Single-qubit reduced density matrices; batch axes follow the register axis."""
    batch = amps.shape[1:]
    view = amps.reshape((2 ** (n - 1 - qubit), 2, 2**qubit) + batch)
    return np.einsum("xaz...,xbz...->...ab", view, view.conj())


def single_qubit_rdm_register(state: RegisterVector, qubit: int) -> DensityOperator:
    if not 0 <= qubit < state.n:
        raise IndexError(f"qubit {qubit} out of range for n={state.n}")
    return DensityOperator(rdm_register_array(state.amplitudes, qubit, state.n), "qubit")


def bloch_dicke_array(amps: np.ndarray, two_j: int) -> np.ndarray:
    """Single-qubit Bloch vectors <J>/j of symmetric states.

    ``amps`` has shape ``(2j+1,) + batch``; the result has shape ``(3,) + batch``.
    """
    j = two_j / 2
    m = j - np.arange(two_j + 1)
    # J+ |k> = c_k |k-1>, c_k = sqrt(j(j+1) - m_k(m_k+1))
    c = np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))
    c = c.reshape((-1,) + (1,) * (amps.ndim - 1))
    jplus = np.sum(amps[:-1].conj() * c * amps[1:], axis=0)
    jz = np.sum(m.reshape((-1,) + (1,) * (amps.ndim - 1)) * np.abs(amps) ** 2, axis=0)
    return np.stack([jplus.real, jplus.imag, jz]) / j


def bloch_to_rdm(b: np.ndarray) -> np.ndarray:
    """Density matrices (..., 2, 2) for Bloch vectors with leading axis 3."""
    x, y, z = b[0], b[1], b[2]
    rho = np.empty(np.shape(x) + (2, 2), dtype=complex)
    rho[..., 0, 0] = (1 + z) / 2
    rho[..., 1, 1] = (1 - z) / 2
    rho[..., 0, 1] = (x - 1j * y) / 2
    rho[..., 1, 0] = (x + 1j * y) / 2
    return rho


def single_qubit_rdm_dicke(state: DickeVector) -> DensityOperator:
    return DensityOperator(bloch_to_rdm(bloch_dicke_array(state.amplitudes, state.two_j)), "qubit")


def single_qubit_rdm(state: State, qubit: int = 0) -> DensityOperator:
    if isinstance(state, DickeVector):
        return single_qubit_rdm_dicke(state)
    return single_qubit_rdm_register(state, qubit)
