"""Spin states and collective operators for n spin-1/2 particles.

Two representations are used throughout the package:

* Dicke vectors, amplitudes over the ``2j + 1`` symmetric states with index
  ``k`` holding magnetic number ``m = j - k`` (``k`` counts flipped spins);
* register vectors, amplitudes over the ``2**n`` computational states where
  bit ``i`` of the index set means qubit ``i`` sits in ``|-z>``.

Angular momentum is measured in units of hbar (hbar = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_REGISTER_QUBITS = 24
NORM_TOL = 1e-10

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class SymmetrySectorError(ValueError):
    """Raised when a register state has no weight in the symmetric sector."""


def wrap_phi(phi: float) -> float:
    """Wrap an azimuth into [-pi, pi)."""
    return float((phi + np.pi) % (2 * np.pi) - np.pi)


@dataclass(frozen=True)
class SphericalDirection:
    """Orientation (theta, phi) of a spin coherent state.

    ``theta`` is clamped to [0, pi] and ``phi`` wrapped to [-pi, pi).
    The single-qubit state is ``cos(theta/2)|+z> + exp(-i phi) sin(theta/2)|-z>``,
    so the Bloch vector lies at polar angle ``theta`` and azimuth ``-phi``
    (see :meth:`to_vector`).
    """

    theta: float
    phi: float

    def __post_init__(self):
        theta = min(max(float(self.theta), 0.0), math.pi)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", wrap_phi(self.phi))

    def to_vector(self) -> np.ndarray:
        """Bloch vector of the single-qubit coherent state."""
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), -st * math.sin(self.phi), math.cos(self.theta)])

    @classmethod
    def from_vector(cls, v) -> "SphericalDirection":
        """Inverse of :meth:`to_vector`; ``v`` need not be normalized."""
        x, y, z = (float(c) for c in v)
        rho = math.hypot(x, y)
        if rho == 0.0 and z == 0.0:
            raise ValueError("zero vector has no direction")
        # atan2 keeps full precision near the poles, where acos(z) does not
        return cls(math.atan2(rho, z), -math.atan2(y, x))


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    @property
    def length(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def _two_j(j) -> int:
    tj = 2 * j
    tj_int = int(round(tj))
    if tj_int < 1 or abs(tj - tj_int) > 1e-12:
        raise ValueError(f"j must be a positive half-integer, got {j!r}")
    return tj_int


def _check_norm(amplitudes: np.ndarray) -> None:
    norm2 = float(np.vdot(amplitudes, amplitudes).real)
    if abs(norm2 - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized: |psi|^2 = {norm2!r}")


@dataclass(frozen=True, eq=False)
class DickeVector:
    """State of total spin ``j = two_j / 2`` in the symmetric (Dicke) basis."""

    two_j: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.two_j + 1,):
            raise ValueError(f"expected {self.two_j + 1} amplitudes, got shape {amps.shape}")
        _check_norm(amps)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def n(self) -> int:
        return self.two_j


@dataclass(frozen=True, eq=False)
class RegisterVector:
    """Pure state of ``n`` qubits in the computational basis."""

    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n <= MAX_REGISTER_QUBITS:
            raise ValueError(f"qubit count must be in 1..{MAX_REGISTER_QUBITS}, got {self.n}")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n,):
            raise ValueError(f"expected {2 ** self.n} amplitudes, got shape {amps.shape}")
        _check_norm(amps)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)


def binomial_sqrt(n: int) -> np.ndarray:
    """sqrt(C(n, k)) for k = 0..n, computed in log space to survive large n."""
    k = np.arange(n + 1)
    logc = np.array([math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1) for i in k])
    return np.exp(0.5 * logc)


def coherent_amplitudes(two_j: int, theta, phi) -> np.ndarray:
    """Dicke amplitudes of coherent states, vectorized over angles.

    ``theta`` and ``phi`` broadcast together; the result has shape
    ``(two_j + 1,) + broadcast_shape``.
    """
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    k = np.arange(two_j + 1).reshape((-1,) + (1,) * theta.ndim)
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    # 0**0 == 1 in numpy, which is what the poles need
    amps = binomial_sqrt(two_j).reshape(k.shape) * c ** (two_j - k) * s**k
    return amps * np.exp(-1j * k * phi)


def coherent_state_dicke(j, direction: SphericalDirection) -> DickeVector:
    two_j = _two_j(j)
    amps = coherent_amplitudes(two_j, direction.theta, direction.phi)
    return DickeVector(two_j, amps / np.linalg.norm(amps))


def single_qubit_state(direction: SphericalDirection) -> np.ndarray:
    return np.array(
        [math.cos(direction.theta / 2), np.exp(-1j * direction.phi) * math.sin(direction.theta / 2)]
    )


def coherent_state_register(n: int, direction: SphericalDirection) -> RegisterVector:
    if not 1 <= n <= MAX_REGISTER_QUBITS:
        raise ValueError(f"qubit count must be in 1..{MAX_REGISTER_QUBITS}, got {n}")
    q = single_qubit_state(direction)
    # Amplitude depends only on the Hamming weight of the index.
    per_weight = q[0] ** (n - np.arange(n + 1)) * q[1] ** np.arange(n + 1)
    return RegisterVector(n, per_weight[hamming_weights(n)])


@lru_cache(maxsize=32)
def hamming_weights(n: int) -> np.ndarray:
    """Number of set bits of every index 0..2**n - 1."""
    w = np.zeros(2**n, dtype=np.int64)
    for i in range(n):
        w += (np.arange(2**n) >> i) & 1
    w.setflags(write=False)
    return w


@lru_cache(maxsize=128)
def _collective(two_j: int, axis: str) -> np.ndarray:
    j = two_j / 2
    m = j - np.arange(two_j + 1)
    if axis == "z":
        op = np.diag(m).astype(complex)
    else:
        # <m+1| J+ |m> sits one row above the diagonal (index k-1 <- k)
        jp = np.diag(np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1)), 1).astype(complex)
        op = (jp + jp.conj().T) / 2 if axis == "x" else (jp - jp.conj().T) / 2j
    op.setflags(write=False)
    return op


def collective_operator(j, axis: str) -> np.ndarray:
    """Angular-momentum matrix J_axis in the Dicke basis (read-only array)."""
    if axis not in ("x", "y", "z"):
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    return _collective(_two_j(j), axis)


def dicke_to_register(state: DickeVector) -> RegisterVector:
    n = state.two_j
    if n > MAX_REGISTER_QUBITS:
        raise ValueError(f"cannot embed j={state.j} into more than {MAX_REGISTER_QUBITS} qubits")
    per_weight = state.amplitudes / binomial_sqrt(n)
    return RegisterVector(n, per_weight[hamming_weights(n)])


def register_to_dicke(state: RegisterVector) -> tuple[DickeVector, float]:
    """Project onto the maximal-spin sector.

    Returns the renormalized Dicke state and the squared norm that was lost.
    """
    n = state.n
    sums = np.bincount(hamming_weights(n), weights=state.amplitudes.real, minlength=n + 1) + 1j * np.bincount(
        hamming_weights(n), weights=state.amplitudes.imag, minlength=n + 1
    )
    # projection onto the normalized Dicke state with k flips
    dicke = sums / binomial_sqrt(n)
    kept = float(np.vdot(dicke, dicke).real)
    if kept < 1e-12:
        raise SymmetrySectorError("state outside symmetric subspace")
    return DickeVector(n, dicke / math.sqrt(kept)), max(0.0, 1.0 - kept)


def bloch_from_density(rho) -> BlochVector:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"expected a 2x2 density matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValueError("density matrix is not Hermitian")
    return BlochVector(
        float(np.trace(rho @ PAULI_X).real),
        float(np.trace(rho @ PAULI_Y).real),
        float(np.trace(rho @ PAULI_Z).real),
    )


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Validated density matrix with a basis label.

    ``basis`` is ``"qubit"`` (dim 2), ``"register"`` (dim 2**size) or
    ``"dicke"`` (dim size + 1); ``size`` is the qubit count for register and
    Dicke bases and 1 otherwise. Instances convert to ndarray via
    ``np.asarray``.
    """

    elements: np.ndarray
    basis: str = "register"
    size: int = 1

    def __post_init__(self):
        rho = np.array(self.elements, dtype=complex)
        expected = {"qubit": 2, "register": 2**self.size, "dicke": self.size + 1}.get(self.basis)
        if expected is None:
            raise ValueError(f"unknown basis tag {self.basis!r}")
        if rho.shape != (expected, expected):
            raise ValueError(f"{self.basis} basis needs a {expected}x{expected} matrix, got {rho.shape}")
        check_density(rho)
        rho.setflags(write=False)
        object.__setattr__(self, "elements", rho)

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.elements if dtype is None else self.elements.astype(dtype)

    @classmethod
    def from_pure(cls, state) -> "DensityOperator":
        if isinstance(state, DickeVector):
            psi, basis, size = state.amplitudes, "dicke", state.two_j
        elif isinstance(state, RegisterVector):
            psi, basis, size = state.amplitudes, "register", state.n
        else:
            raise TypeError(f"expected DickeVector or RegisterVector, got {type(state).__name__}")
        return cls(np.outer(psi, psi.conj()), basis, size)


def check_density(rho, herm_tol: float = 1e-10, trace_tol: float = 1e-10, psd_tol: float = 1e-9) -> None:
    """Raise ValueError unless ``rho`` is Hermitian, unit-trace and PSD."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace is {tr!r}, expected 1")
    lam_min = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0])
    if lam_min < -psd_tol:
        raise ValueError(f"density matrix is not positive semidefinite (min eigenvalue {lam_min:.3e})")
