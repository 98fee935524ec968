"""Classical kicked top: a rotation-then-twist map on the unit sphere."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

RNG_ALGORITHM = "PCG64/SeedSequence(seed, trajectory)"
UNIT_TOL = 1e-12


@dataclass(frozen=True)
class UnitVector3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if abs(self.x**2 + self.y**2 + self.z**2 - 1.0) > UNIT_TOL:
            raise ValueError("vector is not of unit length")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def classical_step_array(r: np.ndarray, kappa: float, rotate=True, twist=True) -> np.ndarray:
    """Vectorized map on arrays of shape ``(3,) + batch``.

    Rotation by pi/2 about y takes (x, y, z) to (z, y, -x); the twist then
    rotates about z by ``kappa * z``.
    """
    x, y, z = r[0], r[1], r[2]
    if rotate:
        x, z = z, -x
    if twist:
        a = kappa * z
        c, s = np.cos(a), np.sin(a)
        x, y = x * c - y * s, x * s + y * c
    return np.stack([x, y, z])


def classical_step(r: UnitVector3, kappa: float) -> UnitVector3:
    x, y, z = classical_step_array(r.as_array(), kappa)
    return UnitVector3(float(x), float(y), float(z))


def vector_to_angles(r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(theta, phi) in the coherent-state convention, where Bloch azimuth is -phi."""
    theta = np.arctan2(np.hypot(r[0], r[1]), r[2])
    phi = -np.arctan2(r[1], r[0])
    phi = (phi + np.pi) % (2 * np.pi) - np.pi
    return theta, phi


def angles_to_vector(theta, phi) -> np.ndarray:
    theta, phi = np.asarray(theta, float), np.asarray(phi, float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), -st * np.sin(phi), np.cos(theta)])


def sample_sphere(n: int, seed: int, offset: int = 0) -> np.ndarray:
    """Uniform points on the sphere, one independent substream per trajectory.

    Trajectory ``t`` draws (u, v) from ``PCG64(SeedSequence([seed, t]))`` and
    uses ``cos(theta) = 2u - 1``, ``phi = 2 pi v``, so any subset of
    trajectories can be regenerated in isolation.
    """
    out = np.empty((3, n))
    for t in range(n):
        u, v = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, offset + t]))).random(2)
        cz = 2 * u - 1
        sz = math.sqrt(max(0.0, 1 - cz * cz))
        az = 2 * math.pi * v
        out[:, t] = (sz * math.cos(az), sz * math.sin(az), cz)
    return out


@dataclass
class StroboscopicCloud:
    """Visited orientations; arrays are aligned point by point."""

    traj: np.ndarray
    step: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    kappa: float
    n_traj: int
    n_steps: int
    seed: int
    rng: str = RNG_ALGORITHM

    def __len__(self):
        return len(self.traj)

    def vectors(self) -> np.ndarray:
        return angles_to_vector(self.theta, self.phi)


def iterate_orbits(starts: np.ndarray, kappa: float, n_steps: int) -> np.ndarray:
    """Orbits of shape ``(n_steps + 1, 3, n_traj)``."""
    out = np.empty((n_steps + 1,) + starts.shape)
    out[0] = starts
    r = starts
    for k in range(1, n_steps + 1):
        r = classical_step_array(r, kappa)
        out[k] = r
    return out


def stroboscopic_map(kappa: float, n_traj: int = 500, n_steps: int = 200, seed: int = 0) -> StroboscopicCloud:
    if n_traj < 0 or n_steps < 0:
        raise ValueError("n_traj and n_steps must be non-negative")
    if n_traj * max(n_steps, 1) > 10**8:
        raise ValueError("n_traj * n_steps exceeds 1e8 points")
    orbits = iterate_orbits(sample_sphere(n_traj, seed), kappa, n_steps)
    # flatten trajectory-major so points from one orbit are contiguous
    pts = orbits.transpose(2, 0, 1).reshape(-1, 3).T
    theta, phi = vector_to_angles(pts)
    traj = np.repeat(np.arange(n_traj), n_steps + 1)
    step = np.tile(np.arange(n_steps + 1), n_traj)
    return StroboscopicCloud(traj, step, theta, phi, kappa, n_traj, n_steps, seed)


def max_excursion(orbits: np.ndarray) -> np.ndarray:
    """Largest angle (radians) between each orbit's start and any later point."""
    cosang = np.einsum("kit,it->kt", orbits, orbits[0])
    return np.arccos(np.clip(cosang, -1.0, 1.0)).max(axis=0)

