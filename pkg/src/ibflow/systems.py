"""Benchmark systems: Langevin simulators, featurization, initial labels.

Two concrete systems are provided: a single particle on the 2D three-hole
potential, and a 2D cluster of seven Lennard-Jones particles held together by
a half-harmonic centroid restraint. Both use the BAOAB splitting; the inner
loops live in :mod:`ibflow.kernels`. Random noise is generated in chunks from
a seeded numpy Generator, so trajectories are reproducible bit for bit.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from . import kernels

__all__ = [
    "Trajectory",
    "LangevinConfig",
    "ThreeHoleConfig",
    "LJ7Config",
    "LJ7Features",
    "three_hole_energy",
    "three_hole_grad",
    "baoab_ensemble",
    "simulate_langevin",
    "simulate_three_hole",
    "simulate_lj7",
    "lj7_hexagon",
    "lj7_minimize",
    "lj7_features",
    "kmeans_labels",
]

three_hole_energy = kernels.three_hole_energy
three_hole_grad = kernels.three_hole_grad

_CHUNK_FRAMES = 2000


@dataclass
class Trajectory:
    """Time-ordered frames plus the temperature they were sampled at."""

    frames: np.ndarray  # (n_frames, frame_dim) float64
    temperature: float
    system: str
    config_hash: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frames = np.ascontiguousarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2:
            raise ValueError("frames must be a (n_frames, frame_dim) array")

    @property
    def n_frames(self):
        return self.frames.shape[0]

    @property
    def frame_dim(self):
        return self.frames.shape[1]


@dataclass
class LangevinConfig:
    """Generic BAOAB parameters; friction is in inverse time units."""

    x0: np.ndarray
    kT: float = 1.0
    friction: float = 1.0
    dt: float = 0.001
    n_steps: int = 100_000
    stride: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0 or self.friction <= 0:
            raise ValueError("timestep and friction must be positive")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


@dataclass
class ThreeHoleConfig:
    kT: float = 1.0
    friction: float = 0.5  # inverse time units
    dt: float = 0.001
    n_steps: int = 50_000_000
    stride: int = 50
    seed: int = 0
    burn_in_steps: int = 10_000
    x0: tuple = (1.0, 0.0)

    def __post_init__(self):
        if self.dt <= 0 or self.friction <= 0:
            raise ValueError("timestep and friction must be positive")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


@dataclass
class LJ7Config:
    n_particles: int = 7
    temperature: float = 0.2  # reduced, epsilon / k_B
    friction: float = 0.1  # reduced, sqrt(epsilon / (m sigma^2))
    dt: float = 0.005
    n_steps: int = 10_000_000
    stride: int = 100
    seed: int = 0
    burn_in_steps: int = 50_000
    confine_radius: float = 2.0  # restraint onset, from cluster centroid
    confine_k: float = 100.0
    reject_radius: float = 3.0  # frames with particles beyond this are dropped

    def __post_init__(self):
        if self.dt <= 0 or self.friction <= 0:
            raise ValueError("timestep and friction must be positive")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.n_particles < 2:
            raise ValueError("need at least two particles")


@dataclass
class LJ7Features:
    """Sorted coordination numbers and their central moments per frame."""

    coordination: np.ndarray  # (n_frames, n_particles), sorted descending
    mu2_sq: np.ndarray  # (n_frames,) second central moment
    mu3_cu: np.ndarray  # (n_frames,) third central moment

    @property
    def moments(self):
        return np.column_stack([self.mu2_sq, self.mu3_cu])


def _check_finite(arr, what):
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr).all(axis=tuple(range(1, arr.ndim))))[0]) \
            if arr.ndim > 1 else int(np.flatnonzero(~np.isfinite(arr))[0])
        raise FloatingPointError(f"non-finite {what} at index {bad}")


def baoab_ensemble(energy_fn, grad_fn, x0, kT, friction, dt, n_steps, stride,
                   seed, v0=None):
    """Vectorized BAOAB over an ensemble of independent walkers.

    Parameters
    ----------
    energy_fn, grad_fn : callables mapping (..., dim) -> (...,) and (..., dim)
        Potential and its gradient; must broadcast over the walker axis.
    x0 : (dim,) or (n_walkers, dim) array
        Initial positions.

    Returns
    -------
    frames : (n_frames, n_walkers, dim) array (walker axis kept even for one).
    """
    x = np.atleast_2d(np.asarray(x0, dtype=np.float64)).copy()
    rng = np.random.default_rng(seed)
    if v0 is None:
        v = rng.normal(0.0, math.sqrt(kT), size=x.shape)
    else:
        v = np.atleast_2d(np.asarray(v0, dtype=np.float64)).copy()
    c1 = math.exp(-friction * dt)
    c2 = math.sqrt(kT * (1.0 - c1 * c1))
    half = 0.5 * dt
    f = -np.asarray(grad_fn(x), dtype=np.float64)
    n_frames = n_steps // stride
    frames = np.empty((n_frames, x.shape[0], x.shape[1]))
    idx = 0
    for step in range(n_steps):
        v += half * f
        x += half * v
        v = c1 * v + c2 * rng.standard_normal(x.shape)
        x += half * v
        f = -np.asarray(grad_fn(x), dtype=np.float64)
        if not np.all(np.isfinite(f)):
            raise FloatingPointError(f"non-finite force at step {step}")
        v += half * f
        if (step + 1) % stride == 0:
            frames[idx] = x
            idx += 1
    return frames


def simulate_langevin(config, energy_fn, grad_fn, system="custom"):
    """Single-walker Langevin trajectory on an arbitrary potential."""
    frames = baoab_ensemble(
        energy_fn, grad_fn, config.x0, config.kT, config.friction, config.dt,
        config.n_steps, config.stride, config.seed)
    return Trajectory(frames[:, 0, :], temperature=config.kT, system=system)


def simulate_three_hole(config=None, **overrides):
    """Langevin trajectory on the three-hole potential (JIT chunked loop)."""
    cfg = replace(config or ThreeHoleConfig(), **overrides)
    rng = np.random.default_rng(cfg.seed)
    c1 = math.exp(-cfg.friction * cfg.dt)
    c2 = math.sqrt(cfg.kT * (1.0 - c1 * c1))
    state = np.empty(6)
    state[0], state[1] = cfg.x0
    state[2:4] = rng.normal(0.0, math.sqrt(cfg.kT), size=2)
    gx, gy = kernels.three_hole_grad_scalar(state[0], state[1])
    state[4], state[5] = -gx, -gy

    if cfg.burn_in_steps:
        noise = rng.standard_normal((cfg.burn_in_steps, 2))
        scratch = np.empty((0, 2))
        kernels.three_hole_chunk(state, noise, scratch, cfg.burn_in_steps + 1,
                                 cfg.dt, c1, c2)

    n_frames = cfg.n_steps // cfg.stride
    frames = np.empty((n_frames, 2))
    done = 0
    while done < n_frames:
        todo = min(_CHUNK_FRAMES, n_frames - done)
        noise = rng.standard_normal((todo * cfg.stride, 2))
        kernels.three_hole_chunk(state, noise, frames[done:done + todo],
                                 cfg.stride, cfg.dt, c1, c2)
        done += todo
    _check_finite(frames, "frame")
    return Trajectory(frames, temperature=cfg.kT, system="three_hole",
                      metadata={"dt": cfg.dt, "stride": cfg.stride,
                                "seed": cfg.seed})


def lj7_hexagon(n_particles=7):
    """Hexagonal seed: one particle at the origin, six on the first shell."""
    if n_particles != 7:
        raise ValueError("hexagonal seed is defined for 7 particles")
    d = 2.0 ** (1.0 / 6.0)
    pos = np.zeros((7, 2))
    for k in range(6):
        ang = k * math.pi / 3.0
        pos[k + 1] = (d * math.cos(ang), d * math.sin(ang))
    return pos


def lj7_energy(pos, confine_k=0.0, confine_radius=2.0):
    """Cluster potential energy (restraint included when confine_k > 0)."""
    pos = np.ascontiguousarray(pos, dtype=np.float64).reshape(-1, 2)
    frc = np.empty_like(pos)
    return float(kernels.lj_forces(pos, frc, confine_k, confine_radius))


def lj7_minimize(pos0, confine_k=0.0, confine_radius=2.0, tol=1e-12):
    """Locally minimize the cluster energy; returns (positions, energy)."""
    shape = np.asarray(pos0).shape

    def fun(flat):
        p = flat.reshape(-1, 2)
        frc = np.empty_like(p)
        e = kernels.lj_forces(np.ascontiguousarray(p), frc, confine_k,
                              confine_radius)
        return e, -frc.ravel()

    res = minimize(fun, np.asarray(pos0, dtype=np.float64).ravel(), jac=True,
                   method="L-BFGS-B", tol=tol)
    return res.x.reshape(shape), float(res.fun)


def simulate_lj7(config=None, **overrides):
    """Langevin trajectory of the LJ cluster; escaped frames are dropped.

    The number of rejected frames is reported in ``metadata['n_rejected']``.
    """
    cfg = replace(config or LJ7Config(), **overrides)
    rng = np.random.default_rng(cfg.seed)
    pos, _ = lj7_minimize(lj7_hexagon(cfg.n_particles))
    pos = np.ascontiguousarray(pos)
    vel = rng.normal(0.0, math.sqrt(cfg.temperature), size=pos.shape)
    frc = np.empty_like(pos)
    kernels.lj_forces(pos, frc, cfg.confine_k, cfg.confine_radius)

    c1 = math.exp(-cfg.friction * cfg.dt)
    c2 = math.sqrt(cfg.temperature * (1.0 - c1 * c1))
    ndof = 2 * cfg.n_particles

    if cfg.burn_in_steps:
        noise = rng.standard_normal((cfg.burn_in_steps, ndof))
        scratch = np.empty((0, ndof))
        flags = np.empty(0, dtype=np.bool_)
        kernels.lj7_chunk(pos, vel, frc, noise, scratch, flags,
                          cfg.burn_in_steps + 1, cfg.dt, c1, c2,
                          cfg.confine_k, cfg.confine_radius, cfg.reject_radius)

    n_frames = cfg.n_steps // cfg.stride
    frames = np.empty((n_frames, ndof))
    flags = np.empty(n_frames, dtype=np.bool_)
    done = 0
    while done < n_frames:
        todo = min(_CHUNK_FRAMES, n_frames - done)
        noise = rng.standard_normal((todo * cfg.stride, ndof))
        kernels.lj7_chunk(pos, vel, frc, noise, frames[done:done + todo],
                          flags[done:done + todo], cfg.stride, cfg.dt, c1, c2,
                          cfg.confine_k, cfg.confine_radius, cfg.reject_radius)
        done += todo
    n_rejected = int(flags.sum())
    frames = frames[~flags]
    _check_finite(frames, "frame")
    return Trajectory(frames, temperature=cfg.temperature, system="lj7",
                      metadata={"dt": cfg.dt, "stride": cfg.stride,
                                "seed": cfg.seed, "n_rejected": n_rejected})


def lj7_features(frames, r0=1.5):
    """Coordination-number features for 7-particle frames.

    Coordination numbers are smooth in the pair distances, sorted descending
    (permutation invariance), and summarized by their second and third central
    moments, matching the usual cluster order parameters.
    """
    frames = np.ascontiguousarray(frames, dtype=np.float64)
    if frames.ndim == 1:
        frames = frames[None, :]
    n = frames.shape[1] // 2
    coord = np.empty((frames.shape[0], n))
    kernels.coordination_chunk(frames, float(r0), coord)
    centered = coord - coord.mean(axis=1, keepdims=True)
    mu2 = (centered ** 2).mean(axis=1)
    mu3 = (centered ** 3).mean(axis=1)
    return LJ7Features(coordination=coord, mu2_sq=mu2, mu3_cu=mu3)


def kmeans_labels(points, k, seed, n_iter=300, tol=1e-10):
    """Lloyd's algorithm with k-means++ seeding; deterministic given seed.

    An emptied cluster is re-seeded at the point farthest from its assigned
    centroid, so exactly k clusters survive whenever there are >= k distinct
    points.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if not np.all(np.isfinite(points)):
        raise ValueError("points must be finite")
    if k == 1:
        return np.zeros(n, dtype=np.int64)
    rng = np.random.default_rng(seed)

    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        probs = d2 / d2.sum() if d2.sum() > 0 else np.full(n, 1.0 / n)
        centers[j] = points[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, np.sum((points - centers[j]) ** 2, axis=1))

    labels = np.zeros(n, dtype=np.int64)
    for _ in range(n_iter):
        dists = np.linalg.norm(points[:, None, :] - centers[None, :, :],
                               axis=2) if n * k <= 2_000_000 else None
        if dists is None:
            # chunk the distance matrix to bound memory on large inputs
            labels_new = np.empty(n, dtype=np.int64)
            step = max(1, 2_000_000 // k)
            for s in range(0, n, step):
                block = np.linalg.norm(
                    points[s:s + step, None, :] - centers[None, :, :], axis=2)
                labels_new[s:s + step] = block.argmin(axis=1)
        else:
            labels_new = dists.argmin(axis=1)
        moved = 0.0
        for j in range(k):
            mask = labels_new == j
            if not mask.any():
                far = np.argmax(np.sum((points - centers[labels_new]) ** 2,
                                       axis=1))
                centers_j = points[far]
                labels_new[far] = j
            else:
                centers_j = points[mask].mean(axis=0)
            moved = max(moved, float(np.sum((centers_j - centers[j]) ** 2)))
            centers[j] = centers_j
        labels = labels_new
        if moved < tol:
            break
    return labels
