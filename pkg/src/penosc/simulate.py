"""Euler-Maruyama simulation: paths, ensembles, histograms, integrals.

Paths are deterministic functions of (model, seed): the Brownian increments
of a path come from a PCG64 stream owned by that path alone.  Ensemble
member ``i`` derives its stream from the base seed through
``SeedSequence(base_seed, spawn_key=(i,))``, a documented collision-resistant
mixing of the base seed and the member index, so ensembles are reproducible
and independent of batching or thread scheduling.

Built-in model/noise/potential combinations run through compiled kernels;
custom callables take a plain Python stepping loop with the same draw order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .models import (
    HamiltonianNoise,
    ModelKind,
    ModelSpec,
    OrnsteinUhlenbeckNoise,
    WhiteNoise,
)

__all__ = [
    "SimConfig",
    "Trajectory",
    "EnsembleStat",
    "Histogram",
    "SimulationDivergedError",
    "default_dt",
    "member_rng",
    "thread_count",
    "em_step",
    "simulate_path",
    "ensemble_mean",
    "empirical_invariant_density",
    "crossing_statistic",
]


class SimulationDivergedError(RuntimeError):
    """State became non-finite during integration."""

    def __init__(self, step: int):
        self.step = step
        super().__init__("state became non-finite at step %d" % step)


def default_dt(n: int) -> float:
    """Default step size: 1e-3 up to n = 100, 1e-4 beyond.

    The penalty term scales with n, so the stability heuristic n*dt <= 0.1
    drives the default down for sharp penalties.
    """
    return 1e-3 if n <= 100 else 1e-4


def member_rng(base_seed: int, index: int) -> np.random.Generator:
    """Stream of ensemble member ``index``: PCG64 over
    SeedSequence(base_seed, spawn_key=(index,))."""
    return np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(index,)))


def thread_count(requested: int | None = None) -> int:
    """Worker count: explicit argument, else PENOSC_THREADS, else cpu count."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("PENOSC_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SimConfig:
    """Time stepping, horizon, seeding and sampling stride for one run.

    ``dt=None`` resolves to :func:`default_dt` for the model's sharpness.
    ``z0=None`` starts at the origin.
    """

    t_final: float
    dt: float | None = None
    seed: int = 0
    z0: tuple | None = None
    stride: int = 1

    def __post_init__(self):
        if self.t_final <= 0:
            raise ValueError("t_final must be positive")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")

    def resolve(self, spec: ModelSpec) -> tuple[float, int, np.ndarray]:
        """Return (dt, n_steps, z0) with defaults materialized and checked."""
        dt = self.dt if self.dt is not None else default_dt(spec.n)
        if dt > self.t_final:
            raise ValueError("dt exceeds the horizon")
        if self.stride * dt > self.t_final:
            raise ValueError("sampling stride exceeds the horizon")
        n_steps = int(round(self.t_final / dt))
        z0 = np.zeros(spec.dim) if self.z0 is None else np.asarray(self.z0, dtype=float)
        if z0.shape != (spec.dim,):
            raise ValueError("initial state must have dimension %d" % spec.dim)
        return dt, n_steps, z0


@dataclass(frozen=True)
class Trajectory:
    """Sampled states of one path; ``times[0] = 0`` holds the initial state."""

    times: np.ndarray
    states: np.ndarray
    model_digest: str
    dt: float
    stride: int
    seed: int

    @property
    def n_samples(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class EnsembleStat:
    estimate: float
    stderr: float
    samples: int


def em_step(spec: ModelSpec, z, dt: float, gaussian: float) -> np.ndarray:
    """One Euler-Maruyama step with a supplied standard normal draw.

    The noise enters the first component only, with coefficient sqrt(dt).
    """
    z = np.asarray(z, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        out = z + spec.drift(z) * dt
        out[..., 0] = out[..., 0] + math.sqrt(dt) * gaussian
    if not np.all(np.isfinite(out)):
        raise SimulationDivergedError(step=0)
    return out


def _kernel_params(spec: ModelSpec):
    """Map a built-in configuration onto kernel flags, or None for custom."""
    if spec.potential.name == "zero":
        pot_k = 0.0
    elif spec.potential.name == "quadratic":
        pot_k = spec.potential.kappa
    else:
        return None
    model = {"epp": _kernels.EPP, "fp": _kernels.FP, "op": _kernels.OP}[spec.kind.value]
    theta_v = kt_k = kt_gamma0 = 0.0
    if isinstance(spec.noise, WhiteNoise):
        noise = _kernels.WHITE
    elif isinstance(spec.noise, OrnsteinUhlenbeckNoise):
        if spec.noise.theta_v is None:
            return None
        noise = _kernels.OU
        theta_v = spec.noise.theta_v
    elif isinstance(spec.noise, HamiltonianNoise):
        if spec.noise.kt_params is None:
            return None
        noise = _kernels.KT
        kt_k, kt_gamma0, _ = spec.noise.kt_params
    else:
        return None
    return model, noise, float(spec.n), float(spec.cb), pot_k, theta_v, kt_k, kt_gamma0


def _path_states(spec: ModelSpec, cfg: SimConfig,
                 rng: np.random.Generator) -> np.ndarray:
    """Sampled states for one path driven by ``rng`` (one draw per step)."""
    dt, n_steps, z0 = cfg.resolve(spec)
    n_samples = n_steps // cfg.stride + 1
    out = np.empty((n_samples, spec.dim))
    params = _kernel_params(spec)
    if params is not None:
        model, noise, nf, cb, pot_k, theta_v, kt_k, kt_gamma0 = params
        status = _kernels.sim_path(rng, z0, dt, n_steps, cfg.stride, model,
                                   noise, nf, cb, pot_k, theta_v, kt_k,
                                   kt_gamma0, out)
        if status != -1:
            raise SimulationDivergedError(step=int(status))
        return out
    z = z0.copy()
    out[0] = z
    s = 1
    sq = math.sqrt(dt)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n_steps + 1):
            z = z + spec.drift(z) * dt
            z[0] += sq * rng.standard_normal()
            if not np.all(np.isfinite(z)):
                raise SimulationDivergedError(step=k)
            if k % cfg.stride == 0:
                out[s] = z
                s += 1
    return out


def simulate_path(spec: ModelSpec, cfg: SimConfig) -> Trajectory:
    """Simulate one path; bit-identical for identical (spec, cfg)."""
    dt, n_steps, _ = cfg.resolve(spec)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    states = _path_states(spec, cfg, rng)
    times = np.arange(states.shape[0]) * (cfg.stride * dt)
    return Trajectory(times=times, states=states, model_digest=spec.digest(),
                      dt=dt, stride=cfg.stride, seed=cfg.seed)


def _ensemble_run(worker: Callable[[int], object], m: int,
                  threads: int | None) -> list:
    """Run per-member workers, returning results in member order."""
    nw = min(thread_count(threads), m)
    if nw <= 1:
        return [worker(i) for i in range(m)]
    with ThreadPoolExecutor(max_workers=nw) as ex:
        return list(ex.map(worker, range(m)))


def ensemble_mean(spec: ModelSpec, cfg: SimConfig, m: int,
                  functional: Callable[[Trajectory], float],
                  threads: int | None = None) -> EnsembleStat:
    """Mean and standard error of a trajectory functional over ``m`` members.

    Member i runs with the stream of :func:`member_rng`; the standard error
    is the sample standard deviation divided by sqrt(m).
    """
    if m < 2:
        raise ValueError("need at least 2 ensemble members")
    dt, n_steps, _ = cfg.resolve(spec)

    def worker(i: int) -> float:
        states = _path_states(spec, cfg, member_rng(cfg.seed, i))
        times = np.arange(states.shape[0]) * (cfg.stride * dt)
        traj = Trajectory(times=times, states=states,
                          model_digest=spec.digest(), dt=dt,
                          stride=cfg.stride, seed=cfg.seed)
        return float(functional(traj))

    values = np.asarray(_ensemble_run(worker, m, threads), dtype=float)
    return EnsembleStat(
        estimate=float(np.mean(values)),
        stderr=float(np.std(values, ddof=1) / math.sqrt(m)),
        samples=m,
    )


@dataclass(frozen=True)
class Histogram:
    """Normalized histogram with per-bin batch-means standard errors.

    ``density`` estimates the invariant density at bin centers using all
    post-burn-in samples as the denominator (mass outside the binned window
    is not renormalized away).  ``density_se`` comes from splitting the
    sample sequence into contiguous time blocks, which absorbs the serial
    correlation of a single path.
    """

    components: tuple[str, ...]
    edges: list
    centers: list
    counts: np.ndarray
    density: np.ndarray
    density_se: np.ndarray
    n_samples: int
    n_blocks: int


def empirical_invariant_density(spec: ModelSpec, cfg: SimConfig,
                                burn_in: float,
                                components: Sequence[str],
                                bounds: Sequence[tuple[float, float]],
                                nbins: int | Sequence[int],
                                n_blocks: int = 50) -> Histogram:
    """Histogram of post-burn-in samples of selected state components.

    ``components`` name state coordinates ("zeta", "eta", "y", "x") present
    in the model.  Raises if every sample falls outside the binned window.
    """
    if burn_in >= cfg.t_final:
        raise ValueError("burn_in must be smaller than the horizon")
    names = spec.components
    try:
        idx = [names.index(c) for c in components]
    except ValueError as exc:
        raise ValueError("component not in model state %s" % (names,)) from exc

    traj = simulate_path(spec, cfg)
    keep = traj.times >= burn_in
    data = traj.states[keep][:, idx]
    if data.shape[0] < n_blocks * 2:
        raise ValueError("too few post-burn-in samples for %d blocks" % n_blocks)

    ndim = len(idx)
    if isinstance(nbins, int):
        nbins = [nbins] * ndim
    edges = [np.linspace(lo, hi, nb + 1) for (lo, hi), nb in zip(bounds, nbins)]
    centers = [0.5 * (e[1:] + e[:-1]) for e in edges]
    vol = float(np.prod([e[1] - e[0] for e in edges]))

    counts, _ = np.histogramdd(data, bins=edges)
    n_total = data.shape[0]
    if counts.sum() == 0:
        raise ValueError("all samples fall outside the histogram window")
    density = counts / (n_total * vol)

    block_edges = np.linspace(0, n_total, n_blocks + 1).astype(int)
    block_dens = np.empty((n_blocks,) + counts.shape)
    for b in range(n_blocks):
        seg = data[block_edges[b]:block_edges[b + 1]]
        c, _ = np.histogramdd(seg, bins=edges)
        block_dens[b] = c / (max(seg.shape[0], 1) * vol)
    density_se = np.std(block_dens, axis=0, ddof=1) / math.sqrt(n_blocks)

    return Histogram(
        components=tuple(components), edges=edges, centers=centers,
        counts=counts, density=density, density_se=density_se,
        n_samples=int(n_total), n_blocks=n_blocks,
    )


def crossing_statistic(spec: ModelSpec, cfg: SimConfig,
                       g: Callable[[np.ndarray], np.ndarray]) -> float:
    """Running-maximum statistic max over t <= T of |integral of g along the path|.

    The integral is the left-endpoint Riemann sum matching the Euler
    discretization order; ``g`` must be vectorized over states of shape
    (..., dim).  Requires the full-resolution path (stride 1).
    """
    cfg1 = SimConfig(t_final=cfg.t_final, dt=cfg.dt, seed=cfg.seed,
                     z0=cfg.z0, stride=1)
    dt, _, _ = cfg1.resolve(spec)
    traj = simulate_path(spec, cfg1)
    gv = np.asarray(g(traj.states), dtype=float)
    if gv.shape != (traj.n_samples,):
        raise ValueError("observable must map (m, dim) states to (m,) values")
    delta = np.concatenate(([0.0], np.cumsum(gv[:-1]) * dt))
    return float(np.max(np.abs(delta)))
