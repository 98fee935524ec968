"""Ready-made experiments: entropy maps, ergodicity, scaling, purity and tomography inputs.

Every function here is deterministic: grid scans are vectorized over cells
and returned in cell order, and the only random input (the classical cloud)
is drawn from explicitly seeded substreams.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .classical_map import StroboscopicCloud, stroboscopic_map
from .floquet import (
    FloquetParameters,
    bloch_dicke_array,
    rdm_register_array,
    step_dicke_array,
    step_register_array,
)
from .metrics import (
    OverlapSeries,
    PauliCorrelations,
    binary_entropy_from_bloch,
    ergodicity_overlap_series,
    pauli_correlations,
    purity,
)
from .open_system import MAX_DENSITY_QUBITS, NoiseParameters, _split, noisy_evolve, noisy_evolve_array
from .spin_core import (
    MAX_REGISTER_QUBITS,
    BlochVector,
    SphericalDirection,
    coherent_amplitudes,
    coherent_state_dicke,
    coherent_state_register,
    hamming_weights,
)

SCHEMA_VERSION = 1
MODES = ("full", "rotations_only", "interactions_only", "idle")
BACKENDS = ("dicke", "register")
_MODE_SWITCHES = {
    "full": (True, True),
    "rotations_only": (True, False),
    "interactions_only": (False, True),
    "idle": (False, False),
}

# Initial states used by the shipped experiments, as (theta, phi).
PLUS_Y = SphericalDirection(math.pi / 2, -math.pi / 2)
ERGODICITY_INITIALS = (
    SphericalDirection(math.pi / 6, 2 * math.pi / 3),
    SphericalDirection(2 * math.pi / 5, 5 * math.pi / 6),
    PLUS_Y,
)
FINITE_SIZE_INITIAL = SphericalDirection(math.pi / 2 - 0.3, 0.6)
PAULI_INSETS = (PLUS_Y, SphericalDirection(0.0, 0.0))
# (thermalizing, non-thermalizing) pairs per kappa, on the pi/30 lattice
PURITY_INSETS = {
    0.5: (SphericalDirection(2 * math.pi / 30, -23 * math.pi / 30), SphericalDirection(14 * math.pi / 30, -7 * math.pi / 30)),
    2.5: (SphericalDirection(27 * math.pi / 30, -19 * math.pi / 30), SphericalDirection(11 * math.pi / 30, -19 * math.pi / 30)),
}
DEVICE_NOISE = NoiseParameters(t1=15_000.0, tphi=3_000.0, rotation_duration=20.0, interaction_duration=25.0)


class InvariantViolation(RuntimeError):
    """A numerical invariant (norm, entropy range, ...) failed beyond tolerance."""


@dataclass(frozen=True)
class GridSpec:
    """Inclusive theta x phi lattice of initial directions."""

    n_theta: int = 31
    n_phi: int = 61
    theta_range: tuple = (0.0, math.pi)
    phi_range: tuple = (-math.pi, math.pi)

    def __post_init__(self):
        if self.n_theta < 2 or self.n_phi < 2:
            raise ValueError("grid needs at least 2 points per axis")
        if not (self.theta_range[1] > self.theta_range[0] and self.phi_range[1] > self.phi_range[0]):
            raise ValueError("grid ranges must be increasing")

    @property
    def thetas(self) -> np.ndarray:
        return np.linspace(*self.theta_range, self.n_theta)

    @property
    def phis(self) -> np.ndarray:
        return np.linspace(*self.phi_range, self.n_phi)

    @property
    def shape(self) -> tuple:
        return (self.n_theta, self.n_phi)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.thetas, self.phis, indexing="ij")

    def __str__(self):
        return f"{self.n_theta}x{self.n_phi}"

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """Parse ``"31x61"`` (``×`` also accepted)."""
        parts = text.lower().replace("×", "x").split("x")
        if len(parts) != 2:
            raise ValueError(f"grid must look like 31x61, got {text!r}")
        return cls(int(parts[0]), int(parts[1]))


@dataclass
class EntropyMap:
    grid: GridSpec
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} does not match grid {self.grid.shape}")
        if np.any(self.values < -1e-12) or np.any(self.values > 1 + 1e-9):
            raise InvariantViolation("entropy outside [0, 1]")

    def argmin(self) -> tuple[float, float]:
        i, k = np.unravel_index(np.argmin(self.values), self.values.shape)
        return float(self.grid.thetas[i]), float(self.grid.phis[k])


def _mirror_index(grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Cell indices of the R_y(pi) partner (theta, phi) -> (pi - theta, pi - phi)."""
    def nearest(values, targets, period=None):
        d = targets[:, None] - values[None, :]
        if period:
            d = (d + period / 2) % period - period / 2
        return np.argmin(np.abs(d), axis=1)

    ti = nearest(grid.thetas, math.pi - grid.thetas)
    pk = nearest(grid.phis, math.pi - grid.phis, 2 * math.pi)
    return ti, pk


def symmetry_defect(m: EntropyMap) -> float:
    """Largest |S(cell) - S(R_y(pi) cell)| over the grid."""
    ti, pk = _mirror_index(m.grid)
    return float(np.max(np.abs(m.values - m.values[np.ix_(ti, pk)])))


def _qubit_entropies_from_rdms(rdms: np.ndarray) -> np.ndarray:
    lam = np.linalg.eigvalsh(rdms)
    safe = np.where(lam > 1e-15, lam, 1.0)
    return -np.sum(np.where(lam > 1e-15, lam * np.log2(safe), 0.0), axis=-1)


def _rdm_density_array(rho: np.ndarray, qubit: int, n: int) -> np.ndarray:
    view = _split(rho, qubit, n)
    return np.einsum("...xrzxcz->...rc", view)


def entropy_series_cells(
    p: FloquetParameters,
    n: int,
    steps: int,
    thetas: np.ndarray,
    phis: np.ndarray,
    mode: str = "full",
    noise: NoiseParameters | None = None,
    backend: str = "dicke",
) -> np.ndarray:
    """Qubit-averaged single-qubit entropy for each cell after 0..steps periods.

    Returns shape ``(steps + 1, cells)``.  Noiseless runs use pure states on
    the requested backend; noisy runs always use register density matrices.
    """
    if mode not in _MODE_SWITCHES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")
    noisy = noise is not None and not noise.disabled
    if mode == "idle" and not noisy:
        raise ValueError("idle mode requires noise parameters")
    rotate, twist = _MODE_SWITCHES[mode]
    thetas, phis = np.asarray(thetas, float), np.asarray(phis, float)
    out = np.empty((steps + 1, thetas.size))

    if noisy:
        if n > MAX_DENSITY_QUBITS:
            raise ValueError(f"noisy scans are limited to {MAX_DENSITY_QUBITS} qubits")
        psi = _register_coherent_batch(n, thetas, phis).T  # (cells, dim)
        rho0 = np.einsum("ci,cj->cij", psi, psi.conj())
        for k, rho in enumerate(noisy_evolve_array(rho0, n, p, noise, steps, rotate, twist)):
            out[k] = np.mean([_qubit_entropies_from_rdms(_rdm_density_array(rho, q, n)) for q in range(n)], axis=0)
        return out

    if backend == "dicke":
        amps = coherent_amplitudes(n, thetas, phis)
        for k in range(steps + 1):
            if k:
                amps = step_dicke_array(amps, n, p, rotate, twist)
            out[k] = binary_entropy_from_bloch(np.linalg.norm(bloch_dicke_array(amps, n), axis=0))
        return out

    if n > MAX_REGISTER_QUBITS:
        raise ValueError(f"register backend is limited to {MAX_REGISTER_QUBITS} qubits")
    amps = _register_coherent_batch(n, thetas, phis)
    for k in range(steps + 1):
        if k:
            amps = step_register_array(amps, n, p, rotate, twist)
        out[k] = np.mean([_qubit_entropies_from_rdms(rdm_register_array(amps, q, n)) for q in range(n)], axis=0)
    return out


def _register_coherent_batch(n: int, thetas: np.ndarray, phis: np.ndarray) -> np.ndarray:
    """Register amplitudes of product coherent states, shape (2**n, cells)."""
    c = np.cos(thetas / 2)
    s = np.exp(-1j * phis) * np.sin(thetas / 2)
    k = np.arange(n + 1)[:, None]
    per_weight = c[None, :] ** (n - k) * s[None, :] ** k
    return per_weight[hamming_weights(n)]


SCAN_CHUNK = 512  # cells per work item


def _scan(p, n, steps, grid, mode, noise, backend, workers):
    tt, pp = grid.mesh()
    tt, pp = tt.ravel(), pp.ravel()
    # Fixed chunking, independent of the worker count, so that BLAS sees the
    # same batch shapes and the output is bit-identical for any pool size.
    chunks = [np.arange(i, min(i + SCAN_CHUNK, tt.size)) for i in range(0, tt.size, SCAN_CHUNK)]

    def work(idx):
        return entropy_series_cells(p, n, steps, tt[idx], pp[idx], mode, noise, backend)

    if workers and workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(idx) for idx in chunks]
    return np.concatenate(parts, axis=1).reshape((steps + 1,) + grid.shape)


def _meta(command, p, n, steps, grid, mode, backend, noise=None, seed=None, **extra) -> dict:
    meta = {
        "schema_version": SCHEMA_VERSION,
        "artifact_version": __version__,
        "command": command,
        "kappa": p.kappa,
        "qubits": n,
        "steps": steps,
        "backend": "register-density" if noise is not None and not noise.disabled else backend,
        "mode": mode,
        "seed": seed,
        "grid": str(grid) if grid is not None else None,
    }
    if noise is not None:
        meta["noise"] = {
            "t1": noise.t1,
            "tphi": noise.tphi,
            "rotation_duration": noise.rotation_duration,
            "interaction_duration": noise.interaction_duration,
        }
    meta.update(extra)
    return meta


def entropy_map_scan(
    p: FloquetParameters,
    n: int = 3,
    steps: int = 20,
    grid: GridSpec = GridSpec(),
    mode: str = "full",
    noise: NoiseParameters | None = None,
    average: str = "time_average",
    backend: str = "dicke",
    seed: int | None = None,
    workers: int | None = None,
):
    """Entropy over a grid of initial coherent states.

    ``average="time_average"`` returns one map averaged over steps 1..steps;
    ``"per_step_snapshots"`` returns a list of maps for steps 0..steps.
    """
    if average not in ("time_average", "per_step_snapshots"):
        raise ValueError(f"unknown average {average!r}")
    if steps < 1 and average == "time_average":
        raise ValueError("time average needs steps >= 1")
    series = _scan(p, n, steps, grid, mode, noise, backend, workers)
    if average == "time_average":
        meta = _meta("entropy-map", p, n, steps, grid, mode, backend, noise, seed, average=average)
        return EntropyMap(grid, series[1:].mean(axis=0), meta)
    return [
        EntropyMap(grid, series[k], _meta("snapshots", p, n, steps, grid, mode, backend, noise, seed, step=k))
        for k in range(steps + 1)
    ]


def snapshots_experiment(p: FloquetParameters, n: int = 3, steps: int = 20, grid: GridSpec = GridSpec(), **kwargs):
    return entropy_map_scan(p, n, steps, grid, average="per_step_snapshots", **kwargs)


def running_average_maps(snapshots: list) -> list:
    """Maps averaged over steps 1..k for k = 1..len(snapshots)-1."""
    out = []
    acc = np.zeros(snapshots[0].grid.shape)
    for k, snap in enumerate(snapshots[1:], start=1):
        acc += snap.values
        meta = dict(snap.meta, step=k, average="time_average")
        out.append(EntropyMap(snap.grid, acc / k, meta))
    return out


def ergodicity_experiment(
    p: FloquetParameters = FloquetParameters(2.5),
    n: int = 3,
    initials=ERGODICITY_INITIALS,
    n_max: int = 10,
    include_initial: bool = True,
) -> list[OverlapSeries]:
    return [ergodicity_overlap_series(d, p, n, n_max, include_initial) for d in initials]


@dataclass
class ScalingTable:
    qubits: np.ndarray
    sigma: np.ndarray
    window: tuple
    kappa: float
    initial: SphericalDirection
    series: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if np.any(np.diff(self.qubits) <= 0):
            raise ValueError("qubit counts must be strictly increasing")

    def loglog_slope(self) -> float:
        return float(np.polyfit(np.log(self.qubits), np.log(self.sigma), 1)[0])


def entropy_series_dicke(initial: SphericalDirection, p: FloquetParameters, n: int, steps: int) -> np.ndarray:
    """Single-qubit entropy after 0..steps periods (Dicke backend)."""
    amps = coherent_state_dicke(n / 2, initial).amplitudes
    out = np.empty(steps + 1)
    for k in range(steps + 1):
        if k:
            amps = step_dicke_array(amps, n, p)
        out[k] = binary_entropy_from_bloch(np.linalg.norm(bloch_dicke_array(amps, n)))
    return out


def finite_size_experiment(
    p: FloquetParameters = FloquetParameters(2.5),
    n_list=range(4, 11),
    window: tuple = (10, 500),
    initial: SphericalDirection = FINITE_SIZE_INITIAL,
) -> ScalingTable:
    """Temporal standard deviation of the entropy over ``window`` (inclusive) per size."""
    n_list = np.asarray(list(n_list))
    if n_list.max() > 64:
        raise ValueError("finite-size scan supports up to 64 qubits")
    lo, hi = window
    series = {int(n): entropy_series_dicke(initial, p, int(n), hi) for n in n_list}
    sigma = np.array([series[int(n)][lo : hi + 1].std() for n in n_list])
    return ScalingTable(n_list, sigma, (lo, hi), p.kappa, initial, series)


@dataclass
class FullChaosResult:
    maps: dict
    cloud: StroboscopicCloud


def full_chaos_experiment(
    kappa: float = 5.0,
    n_list=(4, 8, 10),
    grid: GridSpec = GridSpec(16, 16),
    steps: int = 100,
    n_traj: int = 500,
    cloud_steps: int = 200,
    seed: int = 0,
) -> FullChaosResult:
    p = FloquetParameters(kappa)
    maps = {int(n): entropy_map_scan(p, int(n), steps, grid, backend="dicke", seed=seed) for n in n_list}
    return FullChaosResult(maps, stroboscopic_map(kappa, n_traj, cloud_steps, seed))


@dataclass
class TrajectoryRecord:
    bloch: list
    entropy: np.ndarray

    @property
    def lengths(self) -> np.ndarray:
        return np.array([b.length for b in self.bloch])


def trajectory_experiment(
    initial: SphericalDirection,
    p: FloquetParameters,
    n: int = 3,
    steps: int = 20,
    backend: str = "dicke",
) -> TrajectoryRecord:
    """Qubit-averaged Bloch vector and entropy after 0..steps periods."""
    if backend == "dicke":
        amps = coherent_state_dicke(n / 2, initial).amplitudes
        vecs = []
        for k in range(steps + 1):
            if k:
                amps = step_dicke_array(amps, n, p)
            vecs.append(bloch_dicke_array(amps, n))
    elif backend == "register":
        amps = coherent_state_register(n, initial).amplitudes
        vecs = []
        for k in range(steps + 1):
            if k:
                amps = step_register_array(amps, n, p)
            rdm = np.mean([rdm_register_array(amps, q, n) for q in range(n)], axis=0)
            vecs.append(np.array([2 * rdm[0, 1].real, -2 * rdm[0, 1].imag, (rdm[0, 0] - rdm[1, 1]).real]))
    else:
        raise ValueError(f"backend must be one of {BACKENDS}")
    vecs = np.array(vecs)
    entropy = binary_entropy_from_bloch(np.linalg.norm(vecs, axis=1))
    return TrajectoryRecord([BlochVector(*map(float, v)) for v in vecs], entropy)


def pauli_bars_experiment(
    insets=PAULI_INSETS,
    kappa: float = 0.5,
    steps: int = 10,
    n: int = 3,
) -> list[PauliCorrelations]:
    p = FloquetParameters(kappa)
    tables = []
    for d in insets:
        amps = coherent_state_register(n, d).amplitudes
        for _ in range(steps):
            amps = step_register_array(amps, n, p)
        tables.append(pauli_correlations(np.outer(amps, amps.conj())))
    return tables


@dataclass
class PuritySeries:
    initial: SphericalDirection
    values: np.ndarray


def purity_experiment(
    p: FloquetParameters,
    noise: NoiseParameters = DEVICE_NOISE,
    steps: int = 10,
    insets=None,
    n: int = 3,
) -> list[PuritySeries]:
    """Purity Tr(rho^2) after 0..steps noisy periods for each inset state.

    Without explicit ``insets`` the shipped (thermalizing, non-thermalizing)
    pair for ``p.kappa`` is used.
    """
    if insets is None:
        if p.kappa not in PURITY_INSETS:
            raise ValueError(f"no default inset states for kappa={p.kappa}; pass insets explicitly")
        insets = PURITY_INSETS[p.kappa]
    return [
        PuritySeries(d, np.array([purity(r) for r in noisy_evolve(d, p, noise, steps, n)])) for d in insets
    ]
