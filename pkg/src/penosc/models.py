"""Model definitions for penalized non-smooth stochastic oscillators.

Three mechanical models are supported, each obtained by replacing a
non-smooth convex term with its Moreau-Yosida smoothing of sharpness ``n``:

* elasto-plastic oscillator: the box penalty acts on the displacement
  equation (``model="epp"``),
* dry-friction oscillator: the smoothed absolute value acts on the
  velocity equation (``model="fp"``),
* obstacle oscillator: the box penalty is folded into the potential
  (``model="op"``).

Each model can be driven by white noise, by an overdamped-Langevin colored
noise (Ornstein-Uhlenbeck class), or by a Hamiltonian colored noise
(Kanai-Tajimi class).  The full state is ``(zeta, eta, y, x)`` truncated to
dimension 2, 3 or 4 depending on the noise; the Brownian forcing always
enters through the first component only, with unit coefficient.
"""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.integrate import cumulative_simpson

__all__ = [
    "proj_interval",
    "box_penalty",
    "box_penalty_prime",
    "smooth_abs",
    "smooth_abs_prime",
    "Potential",
    "zero_potential",
    "quadratic_potential",
    "WhiteNoise",
    "OrnsteinUhlenbeckNoise",
    "HamiltonianNoise",
    "ou_noise",
    "kanai_tajimi",
    "ModelKind",
    "ModelSpec",
    "STATE_COMPONENTS",
    "PenaltyBoundsReport",
    "penalty_bounds_check",
    "StationaryDensity1D",
    "ou_stationary_density",
    "gibbs_density_obstacle",
]

# Component names of the full 4d state; smaller states drop leading entries.
STATE_COMPONENTS = ("zeta", "eta", "y", "x")


def _scalar_like(x, value):
    """Return ``value`` as a Python float when ``x`` was scalar input."""
    if np.ndim(x) == 0:
        return float(value)
    return value


def proj_interval(x, lo: float = -1.0, hi: float = 1.0):
    """Euclidean projection onto the interval [lo, hi] (componentwise)."""
    return _scalar_like(x, np.clip(x, lo, hi))


def box_penalty(x, n: int):
    """Quadratic penalty (n/2) * dist(x, [-1, 1])^2.

    This is the Moreau-Yosida smoothing of the convex indicator of the
    box [-1, 1]; it vanishes inside the box and grows quadratically with
    the distance to it.
    """
    d = np.asarray(x, dtype=float) - np.clip(x, -1.0, 1.0)
    return _scalar_like(x, 0.5 * n * d * d)


def box_penalty_prime(x, n: int):
    """Exact derivative of :func:`box_penalty`: n * (x - proj(x))."""
    d = np.asarray(x, dtype=float) - np.clip(x, -1.0, 1.0)
    return _scalar_like(x, n * d)


def smooth_abs(y, n: int):
    """Moreau-Yosida smoothing of ``abs``: |y| - 1/(2n) outside the
    quadratic core ``n|y| < 1``, and (n/2) y^2 inside it.

    Uniformly within 1/(2n) of ``abs`` and continuously differentiable.
    """
    ya = np.abs(np.asarray(y, dtype=float))
    out = np.where(n * ya >= 1.0, ya - 0.5 / n, 0.5 * n * ya * ya)
    return _scalar_like(y, out)


def smooth_abs_prime(y, n: int):
    """Derivative of :func:`smooth_abs`: sign(y) outside the core, n*y inside.

    Continuous across the matching points |y| = 1/n (both branches give
    sign(y) there).
    """
    ya = np.asarray(y, dtype=float)
    out = np.where(n * np.abs(ya) >= 1.0, np.sign(ya), n * ya)
    return _scalar_like(y, out)


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------


class AssumptionError(ValueError):
    """A declared model constant fails its required inequality."""


@dataclass(frozen=True)
class Potential:
    """Confining potential with user-declared growth constants.

    The constants are *declared*, not derived: ``kappa`` is a Lipschitz
    constant for ``du``, and ``(lambda1, beta1)``, ``(lambda2, beta2)``
    are the quadratic-growth and self-bounding constants
    ``U(x) >= lambda1 x^2 - beta1`` and ``x U'(x) >= lambda2 U(x) - beta2``.
    :meth:`validate` checks the inequalities on a grid; it does not prove
    them.
    """

    u: Callable[[np.ndarray], np.ndarray]
    du: Callable[[np.ndarray], np.ndarray]
    kappa: float
    lambda1: float
    beta1: float
    lambda2: float
    beta2: float
    name: str = "custom"

    @property
    def lambda3(self) -> float:
        return self.lambda1 * self.lambda2 / (1.0 + self.lambda1)

    @property
    def beta3(self) -> float:
        return self.beta2 + self.lambda2 * self.beta1 / (1.0 + self.lambda1)

    def validate(self, grid: np.ndarray, atol: float = 1e-12) -> list[str]:
        """Check the declared inequalities at every grid point.

        Returns a list of human-readable violation descriptions (empty if
        all checks pass).  Lipschitz continuity of ``du`` is checked on
        consecutive grid pairs only.
        """
        g = np.asarray(grid, dtype=float)
        uu = np.asarray(self.u(g), dtype=float)
        du = np.asarray(self.du(g), dtype=float)
        bad: list[str] = []
        if np.any(uu < -atol):
            bad.append("potential is negative at %d grid points" % int(np.sum(uu < -atol)))
        r2 = uu - (self.lambda1 * g * g - self.beta1)
        if np.any(r2 < -atol):
            bad.append("quadratic lower bound fails at %d points" % int(np.sum(r2 < -atol)))
        r3 = g * du - (self.lambda2 * uu - self.beta2)
        if np.any(r3 < -atol):
            bad.append("self-bounding inequality fails at %d points" % int(np.sum(r3 < -atol)))
        if g.size >= 2:
            dd = np.abs(np.diff(du)) - self.kappa * np.abs(np.diff(g))
            if np.any(dd > atol):
                bad.append("Lipschitz bound on derivative fails at %d pairs" % int(np.sum(dd > atol)))
        lam3, bet3 = self.lambda3, self.beta3
        r5 = g * du - (lam3 * (uu + g * g) - bet3)
        if np.any(r5 < -atol):
            bad.append("combined growth inequality fails at %d points" % int(np.sum(r5 < -atol)))
        return bad


def zero_potential() -> Potential:
    """U == 0: used by the one-dimensional friction application.

    The growth constants are all zero, so this potential fails the
    quadratic lower bound; drift certification rejects it (use
    :func:`quadratic_potential` there).
    """
    return Potential(
        u=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        du=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        kappa=0.0,
        lambda1=0.0,
        beta1=0.0,
        lambda2=0.0,
        beta2=0.0,
        name="zero",
    )


def quadratic_potential(k: float = 1.0) -> Potential:
    """U(x) = k x^2 / 2 with its exact constants."""
    if k <= 0:
        raise ValueError("stiffness k must be positive")
    return Potential(
        u=lambda x, _k=k: 0.5 * _k * np.asarray(x, dtype=float) ** 2,
        du=lambda x, _k=k: _k * np.asarray(x, dtype=float),
        kappa=k,
        lambda1=0.5 * k,
        beta1=0.0,
        lambda2=2.0,
        beta2=0.0,
        name="quadratic",
    )


# ---------------------------------------------------------------------------
# Noise classes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WhiteNoise:
    """Direct Brownian forcing on the velocity equation."""

    extra_dim = 0


@dataclass(frozen=True)
class OrnsteinUhlenbeckNoise:
    """Overdamped-Langevin colored noise d(eta) = -v'(eta) dt + dW.

    ``v_prime`` must satisfy v'(eta) * eta >= r * eta^2 (checked on a grid
    by :meth:`validate`).  ``beta`` parameterizes the stationary density
    exp(-beta * v) used by density oracles; the coupled simulation always
    drives eta with unit noise, which corresponds to beta = 2.
    ``theta_v`` is set when v is the quadratic v(eta) = theta_v eta^2 / 2
    (enables closed-form fast paths); it is None for custom potentials.
    """

    v_prime: Callable[[np.ndarray], np.ndarray]
    r: float
    beta: float = 2.0
    theta_v: float | None = None

    extra_dim = 1

    def validate(self, grid: np.ndarray, atol: float = 1e-12) -> list[str]:
        g = np.asarray(grid, dtype=float)
        resid = g * np.asarray(self.v_prime(g), dtype=float) - self.r * g * g
        if np.any(resid < -atol):
            return ["confinement bound v'(eta)*eta >= r*eta^2 fails at %d points"
                    % int(np.sum(resid < -atol))]
        return []


def ou_noise(theta_v: float = 1.0, beta: float = 2.0) -> OrnsteinUhlenbeckNoise:
    """Ornstein-Uhlenbeck noise with v(eta) = theta_v * eta^2 / 2."""
    if theta_v <= 0:
        raise ValueError("theta_v must be positive")
    return OrnsteinUhlenbeckNoise(
        v_prime=lambda e, _t=theta_v: _t * np.asarray(e, dtype=float),
        r=theta_v,
        beta=beta,
        theta_v=theta_v,
    )


@dataclass(frozen=True)
class HamiltonianNoise:
    """Second-order colored noise driven through a Hamiltonian pair.

    The forcing is the ``eta`` component of
    ``d(zeta) = b1(eta, zeta) dt + dW``, ``d(eta) = b2(eta, zeta) dt`` with
    ``b1 = -dH/d(eta) - F * dH/d(zeta)`` and ``b2 = dH/d(zeta)``.

    ``r_fn`` is a correction function entering only the Lyapunov machinery
    (never the dynamics).  ``delta_tilde`` and ``big_m`` are the declared
    constants of the coercivity and dissipation inequalities for H + R;
    ``ell`` bounds d(b2)/d(zeta) away from zero and ``alpha``,
    ``holder_kappa`` are its Hoelder data.  All partial derivatives must be
    supplied explicitly; the Lyapunov generator refuses to run without them.
    """

    h: Callable
    h_eta: Callable
    h_zeta: Callable
    h_zetazeta: Callable
    dissipation: Callable  # F(eta, zeta)
    r_fn: Callable | None = None
    r_eta: Callable | None = None
    r_zeta: Callable | None = None
    r_zetazeta: Callable | None = None
    delta_tilde: float = 0.2
    big_m: float = 3.0
    ell: float = 1.0
    alpha: float = 1.0
    holder_kappa: float = 1.0
    kt_params: tuple[float, float, float] | None = None  # (k, gamma0, coupling)

    extra_dim = 2

    def b1(self, eta, zeta):
        return -np.asarray(self.h_eta(eta, zeta)) - np.asarray(
            self.dissipation(eta, zeta)
        ) * np.asarray(self.h_zeta(eta, zeta))

    def b2(self, eta, zeta):
        return np.asarray(self.h_zeta(eta, zeta))

    def has_lyapunov_partials(self) -> bool:
        if self.r_fn is None:
            return True  # correction defaults to zero with zero partials
        return None not in (self.r_eta, self.r_zeta, self.r_zetazeta)

    def h_plus_r(self, eta, zeta):
        total = np.asarray(self.h(eta, zeta), dtype=float)
        if self.r_fn is not None:
            total = total + np.asarray(self.r_fn(eta, zeta), dtype=float)
        return total

    def validate(self, eta_grid: np.ndarray, zeta_grid: np.ndarray,
                 atol: float = 1e-12) -> list[str]:
        """Check the declared coercivity/dissipation/sign conditions on the
        tensor grid eta_grid x zeta_grid."""
        if not self.has_lyapunov_partials():
            raise AssumptionError("correction partial derivatives are missing")
        ee, zz = np.meshgrid(np.asarray(eta_grid, float),
                             np.asarray(zeta_grid, float), indexing="ij")
        hr = self.h_plus_r(ee, zz)
        bad: list[str] = []
        coercive = hr + self.big_m - self.delta_tilde * (ee * ee + zz * zz)
        if np.any(coercive < -atol):
            bad.append("coercivity bound fails at %d points" % int(np.sum(coercive < -atol)))
        gen = self._generator_on_h_plus_r(ee, zz)
        dissip = -self.delta_tilde * hr + self.big_m - gen
        if np.any(dissip < -atol):
            bad.append("dissipation bound fails at %d points" % int(np.sum(dissip < -atol)))
        # sign condition on d(b2)/d(zeta) == d2H/d(zeta)2, checked via h_zetazeta
        db2 = np.asarray(self.h_zetazeta(ee, zz), dtype=float)
        if not (np.all(db2 >= self.ell - atol) or np.all(db2 <= -self.ell + atol)):
            bad.append("uniform sign bound on d(b2)/d(zeta) fails")
        return bad

    def _generator_on_h_plus_r(self, eta, zeta):
        """Apply (1/2) d2/d(zeta)2 + b1 d/d(zeta) + b2 d/d(eta) to H + R."""
        hz = np.asarray(self.h_zeta(eta, zeta), dtype=float)
        he = np.asarray(self.h_eta(eta, zeta), dtype=float)
        hzz = np.asarray(self.h_zetazeta(eta, zeta), dtype=float)
        if self.r_fn is not None:
            hz = hz + np.asarray(self.r_zeta(eta, zeta), dtype=float)
            he = he + np.asarray(self.r_eta(eta, zeta), dtype=float)
            hzz = hzz + np.asarray(self.r_zetazeta(eta, zeta), dtype=float)
        return 0.5 * hzz + self.b1(eta, zeta) * hz + self.b2(eta, zeta) * he


def kanai_tajimi(k: float = 1.0, gamma0: float = 1.0,
                 coupling: float | None = None,
                 delta_tilde: float = 0.2, big_m: float = 3.0) -> HamiltonianNoise:
    """Kanai-Tajimi seismic noise: H = (k/2) eta^2 + zeta^2 / 2, F = gamma0.

    ``eta`` is then the response of a white-noise driven linear oscillator
    with stiffness ``k`` and damping ``gamma0``.  The Lyapunov correction
    defaults to R = (gamma0/2) * eta * zeta: with R = 0 the dissipation
    inequality cannot hold (the generator does not contract in eta), so a
    cross term is required for the drift certificates.  ``delta_tilde`` and
    ``big_m`` defaults satisfy the declared inequalities for k = gamma0 = 1.
    """
    if k <= 0 or gamma0 <= 0:
        raise ValueError("stiffness and damping must be positive")
    c = 0.5 * gamma0 if coupling is None else float(coupling)
    return HamiltonianNoise(
        h=lambda e, z, _k=k: 0.5 * _k * np.asarray(e, float) ** 2 + 0.5 * np.asarray(z, float) ** 2,
        h_eta=lambda e, z, _k=k: _k * np.asarray(e, dtype=float),
        h_zeta=lambda e, z: np.asarray(z, dtype=float) + np.zeros_like(np.asarray(e, float)),
        h_zetazeta=lambda e, z: np.ones_like(np.asarray(e, float) + np.asarray(z, float)),
        dissipation=lambda e, z, _g=gamma0: _g + np.zeros_like(np.asarray(e, float) + np.asarray(z, float)),
        r_fn=(lambda e, z, _c=c: _c * np.asarray(e, float) * np.asarray(z, float)) if c != 0.0 else None,
        r_eta=(lambda e, z, _c=c: _c * np.asarray(z, float) + np.zeros_like(np.asarray(e, float))) if c != 0.0 else None,
        r_zeta=(lambda e, z, _c=c: _c * np.asarray(e, float) + np.zeros_like(np.asarray(z, float))) if c != 0.0 else None,
        r_zetazeta=(lambda e, z: np.zeros_like(np.asarray(e, float) + np.asarray(z, float))) if c != 0.0 else None,
        delta_tilde=delta_tilde,
        big_m=big_m,
        ell=1.0,
        alpha=1.0,
        holder_kappa=1.0,
        kt_params=(k, gamma0, c),
    )


NoiseSpec = Union[WhiteNoise, OrnsteinUhlenbeckNoise, HamiltonianNoise]


# ---------------------------------------------------------------------------
# Model specification and drift assembly
# ---------------------------------------------------------------------------


class ModelKind(enum.Enum):
    ELASTO_PLASTIC = "epp"
    FRICTION = "fp"
    OBSTACLE = "op"


class DimensionMismatchError(ValueError):
    """State vector dimension does not match the model's noise class."""


@dataclass(frozen=True)
class ModelSpec:
    """Full specification of one penalized oscillator SDE.

    ``kind`` selects where the penalty acts, ``n`` its sharpness, ``cb``
    the viscous damping, and ``noise`` the forcing class.  For the obstacle
    model the box penalty is folded into the potential, so the effective
    potential returned by :meth:`u_eff` is U + penalty.
    """

    kind: ModelKind
    n: int
    cb: float
    potential: Potential
    noise: NoiseSpec = field(default_factory=WhiteNoise)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("penalization level n must be >= 1")
        if self.cb <= 0:
            raise ValueError("damping cb must be positive")

    @property
    def dim(self) -> int:
        return 2 + self.noise.extra_dim

    @property
    def components(self) -> tuple[str, ...]:
        return STATE_COMPONENTS[4 - self.dim:]

    def f_ny(self, y):
        """Velocity-equation penalty term (friction model only)."""
        if self.kind is ModelKind.FRICTION:
            return smooth_abs_prime(y, self.n)
        return _scalar_like(y, np.zeros_like(np.asarray(y, dtype=float)))

    def f_nx(self, x):
        """Displacement-equation penalty term (elasto-plastic model only)."""
        if self.kind is ModelKind.ELASTO_PLASTIC:
            return box_penalty_prime(x, self.n)
        return _scalar_like(x, np.zeros_like(np.asarray(x, dtype=float)))

    def u_eff(self, x):
        """Effective potential: U plus the box penalty for the obstacle model."""
        if self.kind is ModelKind.OBSTACLE:
            return self.potential.u(x) + box_penalty(x, self.n)
        return self.potential.u(x)

    def du_eff(self, x):
        if self.kind is ModelKind.OBSTACLE:
            return self.potential.du(x) + box_penalty_prime(x, self.n)
        return self.potential.du(x)

    def drift(self, z) -> np.ndarray:
        """Drift of the extended SDE at state(s) ``z`` of shape (..., dim).

        The diffusion is not part of this function; it is always the unit
        vector on the first component.
        """
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.dim:
            raise DimensionMismatchError(
                "state has dimension %d, model requires %d" % (z.shape[-1], self.dim)
            )
        y = z[..., -2]
        x = z[..., -1]
        dy = -np.asarray(self.du_eff(x), float) - self.cb * y - np.asarray(self.f_ny(y), float)
        dx = y - np.asarray(self.f_nx(x), float)
        if isinstance(self.noise, WhiteNoise):
            return np.stack([dy, dx], axis=-1)
        if isinstance(self.noise, OrnsteinUhlenbeckNoise):
            eta = z[..., 0]
            deta = -np.asarray(self.noise.v_prime(eta), dtype=float)
            return np.stack([deta, dy + eta, dx], axis=-1)
        zeta, eta = z[..., 0], z[..., 1]
        dzeta = np.asarray(self.noise.b1(eta, zeta), dtype=float)
        deta = np.asarray(self.noise.b2(eta, zeta), dtype=float)
        return np.stack([dzeta, deta, dy + eta, dx], axis=-1)

    def digest(self) -> str:
        """Short stable identifier of the model configuration."""
        parts = [self.kind.value, str(self.n), repr(self.cb), self.potential.name,
                 repr(self.potential.kappa), type(self.noise).__name__]
        if isinstance(self.noise, OrnsteinUhlenbeckNoise):
            parts += [repr(self.noise.r), repr(self.noise.beta), repr(self.noise.theta_v)]
        elif isinstance(self.noise, HamiltonianNoise):
            parts += [repr(self.noise.delta_tilde), repr(self.noise.big_m),
                      repr(self.noise.kt_params)]
        return hashlib.sha1("|".join(parts).encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# Structural checks on the penalty terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PenaltyBoundsReport:
    """Result of checking the structural penalty bounds on a grid.

    ``max_slack_y``/``max_slack_x`` are the largest margins by which the
    bounds |f_y| <= 1 and 0 <= sign(x) f_x(x) <= n |x| hold; the
    violation lists hold (point, amount) pairs where they fail.
    """

    max_slack_y: float
    max_slack_x: float
    violations_y: list
    violations_x: list

    @property
    def passed(self) -> bool:
        return not self.violations_y and not self.violations_x


def penalty_bounds_check(spec: ModelSpec, grid, fny=None, fnx=None,
                         atol: float = 1e-12) -> PenaltyBoundsReport:
    """Check that the penalty terms satisfy their structural bounds on a grid.

    ``fny``/``fnx`` override the model's own terms; the override hooks exist
    so tests can verify the detector catches ill-formed penalties.
    """
    g = np.asarray(grid, dtype=float)
    fy = np.asarray(fny(g) if fny is not None else spec.f_ny(g), dtype=float)
    fx = np.asarray(fnx(g) if fnx is not None else spec.f_nx(g), dtype=float)

    slack_y = 1.0 - np.abs(fy)
    viol_y = [(float(p), float(-s)) for p, s in zip(g, slack_y) if s < -atol]

    signed = np.sign(g) * fx
    lower = signed  # must be >= 0
    upper = spec.n * np.abs(g) - signed  # must be >= 0
    slack_x = np.minimum(lower, upper)
    viol_x = [(float(p), float(-s)) for p, s in zip(g, slack_x) if s < -atol]

    return PenaltyBoundsReport(
        max_slack_y=float(np.max(slack_y)) if g.size else 0.0,
        max_slack_x=float(np.max(slack_x)) if g.size else 0.0,
        violations_y=viol_y,
        violations_x=viol_x,
    )


# ---------------------------------------------------------------------------
# Stationary densities used as oracles
# ---------------------------------------------------------------------------


class NonIntegrableDensityError(ValueError):
    """The unnormalized density does not decay on the truncation window."""


@dataclass(frozen=True)
class StationaryDensity1D:
    """Normalized density on a truncation window, tabulated on a fine grid."""

    grid: np.ndarray
    values: np.ndarray
    z_norm: float
    beta: float

    def __call__(self, eta):
        e = np.asarray(eta, dtype=float)
        if np.any(np.abs(e) > self.grid[-1]):
            raise ValueError("evaluation point outside the truncation window")
        return _scalar_like(eta, np.interp(e, self.grid, self.values))


def ou_stationary_density(v_prime: Callable, beta: float,
                          half_width: float = 12.0,
                          num: int = 20001) -> StationaryDensity1D:
    """Stationary density exp(-beta * v) / Z of the overdamped Langevin noise.

    ``v`` is reconstructed from ``v_prime`` by cumulative Simpson quadrature
    with v(0) = 0 (the additive constant cancels in the normalization), and
    Z by Simpson quadrature of exp(-beta v) on [-half_width, half_width].
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if num % 2 == 0:
        num += 1
    grid = np.linspace(-half_width, half_width, num)
    dv = np.asarray(v_prime(grid), dtype=float)
    mid = num // 2
    v = np.empty(num)
    v[mid] = 0.0
    v[mid:] = np.concatenate(([0.0], cumulative_simpson(dv[mid:], x=grid[mid:])))
    # integrate leftwards: v(-a) = -int_{-a}^{0} v'
    v[: mid + 1] = -np.concatenate(([0.0], cumulative_simpson(dv[mid::-1], x=-grid[mid::-1])))[::-1]
    unnorm = np.exp(-beta * v)
    peak = float(np.max(unnorm))
    if max(unnorm[0], unnorm[-1]) > 1e-8 * peak:
        raise NonIntegrableDensityError(
            "density does not decay on the truncation window; widen it or "
            "check the confining potential"
        )
    from scipy.integrate import simpson

    z = float(simpson(unnorm, x=grid))
    if not math.isfinite(z) or z <= 0:
        raise NonIntegrableDensityError("normalization constant is not finite")
    return StationaryDensity1D(grid=grid, values=unnorm / z, z_norm=z, beta=beta)


def gibbs_density_obstacle(spec: ModelSpec, half_width: float = 8.0,
                           num: int = 4001) -> Callable:
    """Explicit invariant density of the white-noise obstacle model.

    For the obstacle oscillator with white noise the invariant law of
    (x, y) is the Gibbs measure with energy y^2/2 + U_eff(x) at inverse
    temperature 2*cb: substituting exp(-beta * energy) into the stationary
    Fokker-Planck equation for unit diffusion forces beta = 2*cb exactly.
    Returns a vectorized callable rho(x, y); the normalization factorizes
    and is computed by 1d Simpson quadrature.
    """
    if spec.kind is not ModelKind.OBSTACLE or not isinstance(spec.noise, WhiteNoise):
        raise ValueError("closed-form Gibbs density requires the white-noise obstacle model")
    from scipy.integrate import simpson

    beta = 2.0 * spec.cb
    xs = np.linspace(-half_width, half_width, num)
    zx = float(simpson(np.exp(-beta * np.asarray(spec.u_eff(xs), dtype=float)), x=xs))
    zy = math.sqrt(2.0 * math.pi / beta)

    def rho(x, y):
        xx = np.asarray(x, dtype=float)
        yy = np.asarray(y, dtype=float)
        e = 0.5 * yy * yy + np.asarray(spec.u_eff(xx), dtype=float)
        return np.exp(-beta * e) / (zx * zy)

    return rho
