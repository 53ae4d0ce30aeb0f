"""Explicit Lyapunov functions and numerical drift certification.

For each noise class the library carries a quadratic-type Lyapunov
function

* d = 2:  V(y, x) = delta * (y^2/2 + U(x)) + x*y + c_v
* d = 3:  V = (xi/2) * eta^2 + V(y, x)
* d = 4:  V = k_weight * (H + R + M) + V(y, x)

whose generator drift ``A V + eps V`` admits closed-form upper bounds with
explicit constants.  :func:`select_constants` picks admissible constants a
fixed multiplicative margin above their strict lower bounds, so that
repeated runs are deterministic, and :func:`certify_drift` verifies the
closed-form bounds pointwise on a grid.  The certification is numerical
evidence on a bounded region, not a proof.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .models import (
    AssumptionError,
    HamiltonianNoise,
    ModelKind,
    ModelSpec,
    OrnsteinUhlenbeckNoise,
    WhiteNoise,
)

__all__ = [
    "LyapunovConstants",
    "DriftReport",
    "select_constants",
    "lyapunov_value",
    "drift_form_value",
    "certified_bound",
    "certify_drift",
    "drift_term_potential",
    "drift_term_potential_bound",
    "drift_term_cross",
    "drift_term_cross_bound",
    "drift_term_ou",
    "drift_term_ou_bound",
    "drift_term_hamiltonian",
    "drift_term_hamiltonian_bound",
]


@dataclass(frozen=True)
class LyapunovConstants:
    """Admissible Lyapunov constants plus every derived bound constant.

    ``xi``/``k3*`` are populated only for the Ornstein-Uhlenbeck noise and
    ``k_weight``/``k4*`` only for the Hamiltonian noise; unused entries are
    None.  ``margin`` records the factor applied above the strict lower
    bounds.
    """

    delta: float
    c_v: float
    epsilon: float
    margin: float
    lambda3: float
    beta3: float
    beta4: float
    gamma_tilde: float
    gamma_big: float
    k2: float
    k2_y: float
    k2_x: float
    xi: float | None = None
    k3: float | None = None
    k3_eta: float | None = None
    k3_y: float | None = None
    k3_x: float | None = None
    k_weight: float | None = None
    k4: float | None = None
    k4_zeta: float | None = None
    k4_eta: float | None = None
    k4_y: float | None = None
    k4_x: float | None = None


def _beta4(spec: ModelSpec, beta3: float, samples: int = 10001) -> float:
    """max(beta3, sup of |U'| on [-1, 1]) by dense sampling.

    The Lipschitz constant of U' caps the sampling error at
    kappa / samples, which is negligible against the margin factor.
    """
    z = np.linspace(-1.0, 1.0, samples)
    return float(max(beta3, np.max(np.abs(np.asarray(spec.du_eff(z), dtype=float)))))


def select_constants(spec: ModelSpec, margin: float = 1.01) -> LyapunovConstants:
    """Pick admissible constants at ``margin`` times their strict lower bounds.

    The floor for ``c_v`` is not strict, so it is taken exactly; ``epsilon``
    sits at 1/(2*margin) of its upper bound.  Raises
    :class:`~penosc.models.AssumptionError` when the potential constants make
    a bound non-finite (e.g. the zero potential) or when a declared
    inequality fails on the validation grid.
    """
    if margin < 1.0:
        raise ValueError("margin must be >= 1")
    pot = spec.potential
    lam3 = pot.lambda3
    if not np.isfinite(lam3) or lam3 <= 0.0:
        raise AssumptionError(
            "potential %r has lambda3 = %r; drift bounds are non-finite"
            % (pot.name, lam3)
        )
    grid = np.linspace(-10.0, 10.0, 2001)
    problems = pot.validate(grid)
    if spec.kind is ModelKind.OBSTACLE:
        # the obstacle model folds the penalty into the potential; the
        # declared constants must hold for the effective potential too
        eff = _effective_potential_view(spec)
        problems += eff.validate(grid)
    if problems:
        raise AssumptionError("; ".join(problems))

    beta3 = pot.beta3
    b4 = _beta4(spec, beta3)
    n, cb = spec.n, spec.cb

    delta_floor = max(1.0 / np.sqrt(pot.lambda1),
                      (2.0 / cb) * (2.0 + 4.0 * (cb + n) ** 2 / (3.0 * lam3)))
    delta = margin * delta_floor
    c_v = 1.0 + delta * pot.beta1

    eps_caps = [lam3 / delta, cb]
    xi = k3 = k3_eta = k3_y = k3_x = None
    k_weight = k4 = k4_zeta = k4_eta = k4_y = k4_x = None

    gamma_tilde = 0.75 * lam3
    gamma_big = beta3 + (delta * b4 * n) ** 2 / lam3
    k2 = c_v + gamma_big + delta / 2.0
    k2_y = cb * delta / 4.0
    k2_x = gamma_tilde / 2.0

    if isinstance(spec.noise, OrnsteinUhlenbeckNoise):
        r = spec.noise.r
        if r <= 0:
            raise AssumptionError("confinement rate r must be positive")
        eps_caps.append(r)
        xi = margin * (8.0 / r) * (delta / cb + 2.0 / (3.0 * lam3))
        k3 = c_v + gamma_big + xi / 2.0
        k3_eta = xi * r / 4.0
        k3_y = k2_y / 2.0
        k3_x = k2_x / 2.0
    elif isinstance(spec.noise, HamiltonianNoise):
        noise = spec.noise
        if not noise.has_lyapunov_partials():
            raise AssumptionError(
                "Hamiltonian noise requires correction partial derivatives"
            )
        dt_, m_ = noise.delta_tilde, noise.big_m
        if dt_ <= 0 or m_ < 0:
            raise AssumptionError("delta_tilde must be positive, big_m nonnegative")
        k_weight = margin * (4.0 / dt_**2) * (delta / cb + 2.0 / (3.0 * lam3))
        k4 = c_v + gamma_big + m_ * (1.0 + k_weight * dt_)
        k4_zeta = k_weight * dt_**2
        k4_eta = k_weight * dt_**2 / 2.0
        k4_y = k2_y / 2.0
        k4_x = k2_x / 2.0

    epsilon = min(eps_caps) / (2.0 * margin)

    return LyapunovConstants(
        delta=float(delta), c_v=float(c_v), epsilon=float(epsilon),
        margin=float(margin), lambda3=float(lam3), beta3=float(beta3),
        beta4=float(b4), gamma_tilde=float(gamma_tilde),
        gamma_big=float(gamma_big), k2=float(k2), k2_y=float(k2_y),
        k2_x=float(k2_x), xi=xi, k3=k3, k3_eta=k3_eta, k3_y=k3_y, k3_x=k3_x,
        k_weight=k_weight, k4=k4, k4_zeta=k4_zeta, k4_eta=k4_eta,
        k4_y=k4_y, k4_x=k4_x,
    )


def _effective_potential_view(spec: ModelSpec):
    """Potential object exposing U_eff with the declared constants, used
    only for validation of the obstacle model."""
    from .models import Potential

    return Potential(
        u=spec.u_eff, du=spec.du_eff,
        kappa=spec.potential.kappa + spec.n,
        lambda1=spec.potential.lambda1, beta1=spec.potential.beta1,
        lambda2=spec.potential.lambda2, beta2=spec.potential.beta2,
        name=spec.potential.name + "+penalty",
    )


# ---------------------------------------------------------------------------
# Lyapunov value and exact generator drift
# ---------------------------------------------------------------------------


def _split(spec: ModelSpec, z: np.ndarray):
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != spec.dim:
        from .models import DimensionMismatchError

        raise DimensionMismatchError(
            "state has dimension %d, model requires %d" % (z.shape[-1], spec.dim)
        )
    return z


def lyapunov_value(c: LyapunovConstants, spec: ModelSpec, z) -> np.ndarray | float:
    """Evaluate the model's Lyapunov function at state(s) ``z``.

    The result is verified to be >= 1 (it is for any admissible constants);
    a smaller value signals inconsistent constants and raises.
    """
    z = _split(spec, z)
    y, x = z[..., -2], z[..., -1]
    val = c.delta * (0.5 * y * y + np.asarray(spec.u_eff(x), dtype=float)) + x * y + c.c_v
    if isinstance(spec.noise, OrnsteinUhlenbeckNoise):
        eta = z[..., 0]
        val = val + 0.5 * c.xi * eta * eta
    elif isinstance(spec.noise, HamiltonianNoise):
        zeta, eta = z[..., 0], z[..., 1]
        val = val + c.k_weight * (
            np.asarray(spec.noise.h_plus_r(eta, zeta), dtype=float) + spec.noise.big_m
        )
    if np.min(val) < 1.0 - 1e-9:
        raise AssumptionError(
            "Lyapunov value %.6g < 1; constants are inconsistent" % float(np.min(val))
        )
    if np.ndim(z) == 1:
        return float(val)
    return val


def drift_form_value(c: LyapunovConstants, spec: ModelSpec, z) -> np.ndarray | float:
    """Exact (A V + eps V)(z) from closed-form partial derivatives of V.

    No finite differences are involved; the second derivative acts on the
    first (noise-carrying) component only.
    """
    z = _split(spec, z)
    y, x = z[..., -2], z[..., -1]
    du = np.asarray(spec.du_eff(x), dtype=float)
    fy = np.asarray(spec.f_ny(y), dtype=float)
    fx = np.asarray(spec.f_nx(x), dtype=float)
    vy = c.delta * y + x
    vx = c.delta * du + y
    base_v = c.delta * (0.5 * y * y + np.asarray(spec.u_eff(x), dtype=float)) + x * y + c.c_v

    if isinstance(spec.noise, WhiteNoise):
        drift_y = -du - spec.cb * y - fy
        drift_x = y - fx
        out = 0.5 * c.delta + drift_y * vy + drift_x * vx + c.epsilon * base_v
    elif isinstance(spec.noise, OrnsteinUhlenbeckNoise):
        eta = z[..., 0]
        drift_y = eta - du - spec.cb * y - fy
        drift_x = y - fx
        veta = c.xi * eta
        out = (0.5 * c.xi
               - np.asarray(spec.noise.v_prime(eta), dtype=float) * veta
               + drift_y * vy + drift_x * vx
               + c.epsilon * (base_v + 0.5 * c.xi * eta * eta))
    else:
        noise = spec.noise
        if not noise.has_lyapunov_partials():
            raise AssumptionError(
                "Hamiltonian noise requires correction partial derivatives"
            )
        zeta, eta = z[..., 0], z[..., 1]
        drift_y = eta - du - spec.cb * y - fy
        drift_x = y - fx
        gen_hr = noise._generator_on_h_plus_r(eta, zeta)
        gamma2 = c.k_weight * (np.asarray(noise.h_plus_r(eta, zeta), dtype=float)
                               + noise.big_m)
        out = (c.k_weight * np.asarray(gen_hr, dtype=float)
               + drift_y * vy + drift_x * vx
               + c.epsilon * (base_v + gamma2))
    if np.ndim(z) == 1:
        return float(out)
    return out


def certified_bound(c: LyapunovConstants, spec: ModelSpec, z) -> np.ndarray | float:
    """Closed-form upper bound for (A V + eps V)(z) with the selected constants."""
    z = _split(spec, z)
    y, x = z[..., -2], z[..., -1]
    tail = c.delta * np.abs(y) + np.abs(x)
    if isinstance(spec.noise, WhiteNoise):
        out = c.k2 - c.k2_y * y * y - c.k2_x * x * x + tail
    elif isinstance(spec.noise, OrnsteinUhlenbeckNoise):
        eta = z[..., 0]
        out = c.k3 - c.k3_eta * eta * eta - c.k3_y * y * y - c.k3_x * x * x + tail
    else:
        zeta, eta = z[..., 0], z[..., 1]
        out = (c.k4 - c.k4_zeta * zeta * zeta - c.k4_eta * eta * eta
               - c.k4_y * y * y - c.k4_x * x * x + tail)
    if np.ndim(z) == 1:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Closed-form pieces of the drift expansion (unit-testable in isolation)
# ---------------------------------------------------------------------------


def drift_term_potential(c: LyapunovConstants, spec: ModelSpec, x):
    """Potential part of the drift expansion:
    delta*eps*U(x) - U'(x) * (x + delta * f_x(x))."""
    x = np.asarray(x, dtype=float)
    du = np.asarray(spec.du_eff(x), dtype=float)
    return (c.delta * c.epsilon * np.asarray(spec.u_eff(x), dtype=float)
            - du * (x + c.delta * np.asarray(spec.f_nx(x), dtype=float)))


def drift_term_potential_bound(c: LyapunovConstants, x):
    x = np.asarray(x, dtype=float)
    return c.gamma_big - c.gamma_tilde * x * x


def drift_term_cross(c: LyapunovConstants, spec: ModelSpec, y, x):
    """Mixed part of the drift expansion:
    -y*(x*(cb - eps) + f_x(x)) - f_y(y)*(delta*y + x)."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    return (-y * (x * (spec.cb - c.epsilon) + np.asarray(spec.f_nx(x), dtype=float))
            - np.asarray(spec.f_ny(y), dtype=float) * (c.delta * y + x))


def drift_term_cross_bound(c: LyapunovConstants, spec: ModelSpec, y, x):
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    return ((spec.cb + spec.n) ** 2 / (2.0 * c.gamma_tilde) * y * y
            + 0.5 * c.gamma_tilde * x * x
            + c.delta * np.abs(y) + np.abs(x))


def drift_term_ou(c: LyapunovConstants, spec: ModelSpec, eta):
    """Colored-noise part: (1/2)G1'' - v'(eta) G1' + eps G1 for G1 = (xi/2) eta^2."""
    eta = np.asarray(eta, dtype=float)
    vp = np.asarray(spec.noise.v_prime(eta), dtype=float)
    return 0.5 * c.xi - vp * c.xi * eta + 0.5 * c.epsilon * c.xi * eta * eta


def drift_term_ou_bound(c: LyapunovConstants, spec: ModelSpec, eta):
    eta = np.asarray(eta, dtype=float)
    return 0.5 * c.xi - 0.5 * c.xi * spec.noise.r * eta * eta


def drift_term_hamiltonian(c: LyapunovConstants, spec: ModelSpec, zeta, eta):
    """Hamiltonian-noise part:
    generator applied to k_weight*(H+R+M) plus eps times it."""
    noise = spec.noise
    gen = np.asarray(noise._generator_on_h_plus_r(eta, zeta), dtype=float)
    g2 = c.k_weight * (np.asarray(noise.h_plus_r(eta, zeta), dtype=float) + noise.big_m)
    return c.k_weight * gen + c.epsilon * g2


def drift_term_hamiltonian_bound(c: LyapunovConstants, spec: ModelSpec, zeta, eta):
    noise = spec.noise
    zeta = np.asarray(zeta, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return (noise.big_m * (1.0 + c.k_weight * noise.delta_tilde)
            - c.k_weight * noise.delta_tilde**2 * zeta * zeta
            - c.k_weight * noise.delta_tilde**2 * eta * eta)


# ---------------------------------------------------------------------------
# Grid certification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DriftReport:
    """Outcome of the pointwise drift certification on a rectangular grid.

    ``sup_value`` is the grid supremum of (A V + eps V); it is the inferred
    drift constant, finite on any bounded grid.  ``violations`` lists up to
    ``max_recorded`` points where the value exceeds the closed-form bound.
    """

    grid_shape: tuple[int, ...]
    n_points: int
    sup_value: float
    min_slack: float
    mean_slack: float
    n_violations: int
    violations: list

    @property
    def inferred_c(self) -> float:
        return self.sup_value

    @property
    def passed(self) -> bool:
        return self.n_violations == 0


def certify_drift(c: LyapunovConstants, spec: ModelSpec,
                  axes: Sequence[np.ndarray], rtol: float = 1e-9,
                  max_recorded: int = 20) -> DriftReport:
    """Check (A V + eps V)(z) <= closed-form bound on the tensor grid ``axes``.

    ``axes`` holds one 1d coordinate array per state component, ordered as
    the state (zeta, eta, y, x) truncated to the model dimension.  The
    comparison allows relative rounding slop ``rtol`` scaled by the bound
    magnitude.  Evaluation is chunked along the first axis to bound memory.
    """
    axes = [np.asarray(a, dtype=float) for a in axes]
    if len(axes) != spec.dim:
        raise ValueError("expected %d axes, got %d" % (spec.dim, len(axes)))
    shape = tuple(a.size for a in axes)
    n_points = int(np.prod(shape))

    sup_value = -np.inf
    min_slack = np.inf
    slack_sum = 0.0
    n_viol = 0
    recorded: list = []

    rest = axes[1:]
    mesh_rest = np.meshgrid(*rest, indexing="ij") if rest else []
    for a0 in axes[0]:
        pts = np.empty(mesh_rest[0].shape + (spec.dim,)) if rest else np.empty((1, spec.dim))
        if rest:
            pts[..., 0] = a0
            for j, m in enumerate(mesh_rest):
                pts[..., j + 1] = m
        else:
            pts[0, 0] = a0
        flat = pts.reshape(-1, spec.dim)
        val = np.asarray(drift_form_value(c, spec, flat))
        bound = np.asarray(certified_bound(c, spec, flat))
        slack = bound - val
        tol = rtol * np.maximum(1.0, np.abs(bound))
        bad = slack < -tol
        sup_value = max(sup_value, float(np.max(val)))
        min_slack = min(min_slack, float(np.min(slack)))
        slack_sum += float(np.sum(slack))
        nb = int(np.sum(bad))
        if nb:
            n_viol += nb
            for idx in np.flatnonzero(bad)[: max(0, max_recorded - len(recorded))]:
                recorded.append((tuple(flat[idx]), float(val[idx]), float(bound[idx])))

    return DriftReport(
        grid_shape=shape,
        n_points=n_points,
        sup_value=sup_value,
        min_slack=min_slack,
        mean_slack=slack_sum / n_points,
        n_violations=n_viol,
        violations=recorded,
    )
