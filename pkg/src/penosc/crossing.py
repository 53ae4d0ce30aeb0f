"""Threshold-crossing probabilities: exact series, Monte Carlo and asymptotics.

``wiener_max_crossing_prob`` evaluates the classical alternating series for
the probability that |W| reaches a level b before time T.  The Monte Carlo
estimators measure the same quantity for the integrated observable of the
penalized friction model under diffusive rescaling (threshold sqrt(p)*b,
horizon p*T); as p grows they approach the Wiener value at the rescaled
level b/gamma, where gamma is the diffusion coefficient extracted from the
variance growth rate.

``wiener_max_mc`` is a deliberately separate brute-force path used only to
validate the series; it shares no stepping code with ``estimate_crossing``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .models import ModelKind, ModelSpec, WhiteNoise
from .observables import Observable, identity
from .pde import GammaEstimate
from .simulate import default_dt, member_rng, thread_count

__all__ = [
    "CrossingQuery",
    "CrossingEstimate",
    "wiener_max_crossing_prob",
    "asymptotic_crossing",
    "estimate_crossing",
    "crossing_curve",
    "integral_variance_curve",
    "wiener_max_mc",
]

# Below this value of pi^2*T/(8 b^2) the true probability is far beneath
# double precision (the exponent scales like -b^2/T); every partial sum
# rounds to the zero-crossing limit, so the series is short-circuited to
# exactly 0 instead of summing rounding noise.
_SERIES_CUTOFF = 1e-6


@dataclass(frozen=True)
class CrossingQuery:
    """Threshold b, horizon t_final and diffusive scaling power p.

    The estimators simulate over horizon p*t_final against threshold
    sqrt(p)*b.  b = 0 is the trivial certain-crossing edge.
    """

    b: float
    t_final: float
    p: float = 1.0
    observable: Observable = field(default_factory=identity)

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("threshold must be nonnegative")
        if self.t_final <= 0:
            raise ValueError("horizon must be positive")
        if self.p < 1:
            raise ValueError("scaling power p must be >= 1")


@dataclass(frozen=True)
class CrossingEstimate:
    """Probability in [0, 1] with either a statistical or truncation error.

    ``stderr`` is zero for the series method, which reports the magnitude of
    the first neglected term as ``truncation_bound`` instead.
    """

    probability: float
    stderr: float
    samples: int
    method: str
    truncation_bound: float | None = None


def wiener_max_crossing_prob(b: float, t_final: float,
                             tol: float = 1e-12) -> CrossingEstimate:
    """P(max over [0, T] of |W| >= b) by the alternating exponential series.

    Terms decrease in magnitude and alternate in sign, so truncating when
    the next term drops below ``tol`` bounds the error by ``tol``.  The
    result depends on (b, T) only through T/b^2 and is clamped to [0, 1].
    """
    if b <= 0 or t_final <= 0:
        raise ValueError("threshold and horizon must be positive")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    c = math.pi**2 * t_final / (8.0 * b * b)
    if c < _SERIES_CUTOFF:
        return CrossingEstimate(0.0, 0.0, 0, "series", truncation_bound=tol)
    total = 0.0
    k = 0
    while True:
        m = 2 * k + 1
        total += (-1.0) ** k / m * math.exp(-c * m * m)
        m_next = 2 * k + 3
        # the first neglected term bounds the alternating tail; the 4/pi
        # prefactor converts it to a bound on the probability itself
        bound = (4.0 / math.pi) * math.exp(-c * m_next * m_next) / m_next
        if bound < tol:
            break
        k += 1
    prob = 1.0 - (4.0 / math.pi) * total
    return CrossingEstimate(min(1.0, max(0.0, prob)), 0.0, 0, "series",
                            truncation_bound=bound)


def asymptotic_crossing(gamma, b: float, t_final: float,
                        tol: float = 1e-12) -> CrossingEstimate:
    """Diffusive-limit approximation: the Wiener value at level b/gamma.

    ``gamma`` is a :class:`~penosc.pde.GammaEstimate` or a plain squared
    coefficient; a vanishing coefficient makes the limit degenerate.
    """
    gamma_sq = gamma.gamma_sq if isinstance(gamma, GammaEstimate) else float(gamma)
    if gamma_sq <= 0:
        raise ValueError("gamma squared must be positive for the diffusive limit")
    est = wiener_max_crossing_prob(b / math.sqrt(gamma_sq), t_final, tol)
    return CrossingEstimate(est.probability, 0.0, 0, "asymptotic",
                            truncation_bound=est.truncation_bound)


# ---------------------------------------------------------------------------
# Monte Carlo estimators
# ---------------------------------------------------------------------------


def _require_friction_1d(spec: ModelSpec) -> None:
    if not (spec.kind is ModelKind.FRICTION
            and isinstance(spec.noise, WhiteNoise)
            and spec.potential.name == "zero"):
        raise ValueError(
            "fast integral estimators support the white-noise friction model "
            "with zero potential; use simulate.crossing_statistic for other models"
        )


def _parallel_blocks(fill, m: int, threads: int | None) -> None:
    """Run fill(lo, hi) over path-index blocks, possibly across threads.

    Workers write into disjoint preallocated slices, so results do not
    depend on scheduling.
    """
    nw = thread_count(threads)
    if nw <= 1 or m < 2:
        fill(0, m)
        return
    block = max(1, math.ceil(m / (nw * 8)))
    spans = [(lo, min(lo + block, m)) for lo in range(0, m, block)]
    with ThreadPoolExecutor(max_workers=nw) as ex:
        list(ex.map(lambda s: fill(*s), spans))


def first_crossing_times(spec: ModelSpec, query: CrossingQuery, m_paths: int,
                         dt: float | None = None, seed: int = 0,
                         threads: int | None = None) -> np.ndarray:
    """First times |integral of g| reaches sqrt(p)*b, NaN if never.

    Times are expressed on the unscaled clock (divided by p), so the
    crossing curve over any sub-horizon grid is their empirical CDF.
    """
    _require_friction_1d(spec)
    if dt is None:
        dt = default_dt(spec.n)
    horizon = query.p * query.t_final
    n_steps = int(round(horizon / dt))
    threshold = math.sqrt(query.p) * query.b
    g = query.observable
    out = np.empty(m_paths)

    def fill(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            k = _kernels.friction1d_first_crossing(
                member_rng(seed, i), 0.0, dt, n_steps, threshold,
                g.kernel_flag, g.a, g.b, float(spec.n), spec.cb)
            out[i] = np.nan if k < 0 else k * dt / query.p

    _parallel_blocks(fill, m_paths, threads)
    return out


def _is_friction_1d(spec: ModelSpec) -> bool:
    return (spec.kind is ModelKind.FRICTION
            and isinstance(spec.noise, WhiteNoise)
            and spec.potential.name == "zero")


def estimate_crossing(spec: ModelSpec, query: CrossingQuery, m_paths: int,
                      dt: float | None = None, seed: int = 0,
                      threads: int | None = None) -> CrossingEstimate:
    """Fraction of paths whose rescaled integral statistic crosses the level.

    Simulates over horizon p*t_final against threshold sqrt(p)*b and reports
    the binomial standard error.  The white-noise friction model runs
    through the early-exit first-crossing kernel; any other model falls
    back to full-path simulation of the running-maximum statistic (the
    observable is applied to the velocity component), which is much slower.
    """
    if m_paths < 100:
        raise ValueError("need at least 100 paths")
    if query.b == 0.0:
        return CrossingEstimate(1.0, 0.0, m_paths, "monte-carlo")
    if _is_friction_1d(spec):
        times = first_crossing_times(spec, query, m_paths, dt, seed, threads)
        crossed = int(np.sum(~np.isnan(times)))
    else:
        from .simulate import SimConfig

        threshold = math.sqrt(query.p) * query.b
        obs = query.observable

        def one(i: int) -> bool:
            cfg = SimConfig(t_final=query.p * query.t_final, dt=dt,
                            seed=seed, stride=1)
            # member stream routed through the path seed derivation
            stat = _member_crossing_statistic(spec, cfg, obs, i)
            return stat >= threshold

        flags = np.empty(m_paths, dtype=bool)

        def fill(lo: int, hi: int) -> None:
            for i in range(lo, hi):
                flags[i] = one(i)

        _parallel_blocks(fill, m_paths, threads)
        crossed = int(np.sum(flags))
    p_hat = crossed / m_paths
    se = math.sqrt(p_hat * (1.0 - p_hat) / m_paths)
    return CrossingEstimate(p_hat, se, m_paths, "monte-carlo")


def _member_crossing_statistic(spec: ModelSpec, cfg, obs: Observable,
                               index: int) -> float:
    """Running-maximum statistic for one ensemble member of a general model."""
    from .simulate import _path_states

    dt, _, _ = cfg.resolve(spec)
    states = _path_states(spec, cfg, member_rng(cfg.seed, index))
    gv = np.asarray(obs.fn(states[:, -2]), dtype=float)
    delta = np.concatenate(([0.0], np.cumsum(gv[:-1]) * dt))
    return float(np.max(np.abs(delta)))


def crossing_curve(times: np.ndarray, t_grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Crossing probabilities over a horizon grid from first-crossing times.

    ``times`` are the (unscaled-clock) outputs of
    :func:`first_crossing_times`; the probability at horizon T is the
    fraction of paths with crossing time <= T.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    m = times.size
    finite = times[~np.isnan(times)]
    counts = np.searchsorted(np.sort(finite), t_grid, side="right")
    probs = counts / m
    ses = np.sqrt(probs * (1.0 - probs) / m)
    return probs, ses


def integral_variance_curve(spec: ModelSpec, g: Observable, taus: np.ndarray,
                            m_paths: int, dt: float | None = None,
                            seed: int = 0, threads: int | None = None
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Ensemble variance of the integrated observable at given times.

    Returns (variance, stderr) arrays over ``taus``.  The ensemble mean is
    subtracted per time point, and the standard error of the sample
    variance uses the fourth central moment.
    """
    _require_friction_1d(spec)
    if m_paths < 2:
        raise ValueError("need at least 2 paths")
    if dt is None:
        dt = default_dt(spec.n)
    taus = np.asarray(taus, dtype=float)
    steps = np.round(taus / dt).astype(np.int64)
    if np.any(np.abs(steps * dt - taus) > 1e-9 * np.maximum(1.0, taus)):
        raise ValueError("checkpoint times must be multiples of dt")
    order = np.argsort(steps)
    steps_sorted = steps[order]
    n_steps = int(steps_sorted[-1])
    integrals = np.empty((m_paths, taus.size))

    def fill(lo: int, hi: int) -> None:
        buf = np.empty(taus.size)
        for i in range(lo, hi):
            _kernels.friction1d_integrals(
                member_rng(seed, i), 0.0, dt, n_steps, steps_sorted,
                g.kernel_flag, g.a, g.b, float(spec.n), spec.cb, buf)
            integrals[i, order] = buf

    _parallel_blocks(fill, m_paths, threads)

    centered = integrals - integrals.mean(axis=0)
    s2 = np.sum(centered**2, axis=0) / (m_paths - 1)
    m4 = np.mean(centered**4, axis=0)
    var_of_s2 = (m4 - (m_paths - 3) / (m_paths - 1) * s2**2) / m_paths
    return s2, np.sqrt(np.maximum(var_of_s2, 0.0))


def wiener_max_mc(queries: list[tuple[float, float]], m_paths: int,
                  dt: float = 1e-4, seed: int = 0,
                  threads: int | None = None) -> list[CrossingEstimate]:
    """Brute-force P(max |W| >= b by T) for a list of (b, T) pairs.

    Validation oracle for the series, sharing no stepping code with the
    model estimators.  Barrier hits between grid points are sampled from
    the exact Brownian-bridge touch probability, so the estimator targets
    the continuous-path maximum without the O(sqrt(dt)) deficit of a
    plain sampled maximum (that deficit is ~10 standard errors at the
    default settings; see :func:`wiener_max_mc_discrete`).  All pairs
    reuse the same paths, evaluated at their respective horizons.
    """
    if m_paths < 2:
        raise ValueError("need at least 2 paths")
    barriers = np.unique([b for b, _ in queries]).astype(float)
    t_unique = np.unique([t for _, t in queries])
    steps = np.round(t_unique / dt).astype(np.int64)
    if np.any(steps < 1):
        raise ValueError("horizons must be at least one step")
    if np.any(barriers <= 0):
        raise ValueError("barriers must be positive")
    n_steps = int(steps[-1])
    cross_step = np.empty((m_paths, barriers.size), dtype=np.int64)

    def fill(lo: int, hi: int) -> None:
        buf = np.empty(barriers.size, dtype=np.int64)
        for i in range(lo, hi):
            _kernels.wiener_barrier_crossings(member_rng(seed, i), dt,
                                              n_steps, barriers, buf)
            cross_step[i] = buf

    _parallel_blocks(fill, m_paths, threads)

    out = []
    for b, t in queries:
        col = int(np.searchsorted(barriers, b))
        horizon = int(steps[int(np.searchsorted(t_unique, t))])
        hits = (cross_step[:, col] > 0) & (cross_step[:, col] <= horizon)
        p_hat = float(np.mean(hits))
        se = math.sqrt(p_hat * (1.0 - p_hat) / m_paths)
        out.append(CrossingEstimate(p_hat, se, m_paths, "monte-carlo"))
    return out


def wiener_max_mc_discrete(b: float, t_final: float, m_paths: int,
                           dt: float = 1e-4, seed: int = 0,
                           threads: int | None = None) -> CrossingEstimate:
    """Plain sampled-maximum variant, kept to document its known deficit.

    The maximum over grid samples misses between-sample excursions, which
    lowers the crossing probability by about 0.58*sqrt(dt) in barrier
    units; tests assert this bias rather than hiding it.
    """
    if m_paths < 2:
        raise ValueError("need at least 2 paths")
    steps = np.array([int(round(t_final / dt))], dtype=np.int64)
    maxima = np.empty(m_paths)

    def fill(lo: int, hi: int) -> None:
        buf = np.empty(1)
        for i in range(lo, hi):
            _kernels.wiener_running_max(member_rng(seed, i), dt, steps, buf)
            maxima[i] = buf[0]

    _parallel_blocks(fill, m_paths, threads)
    p_hat = float(np.mean(maxima >= b))
    return CrossingEstimate(p_hat, math.sqrt(p_hat * (1 - p_hat) / m_paths),
                            m_paths, "monte-carlo")
