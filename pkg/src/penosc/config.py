"""Flat key=value configuration files describing a model.

Recognized keys (all optional; missing keys take the documented defaults):

===========  =======================================  =========
key          meaning                                  default
===========  =======================================  =========
model        epp | fp | op                            fp
n            penalization sharpness (integer >= 1)    100
cb           viscous damping (positive)               1.0
potential    zero | quadratic                         quadratic
k            quadratic potential stiffness            1.0
noise        white | ou | kt                          white
theta_v      OU potential curvature                   1.0
beta         inverse temperature of density oracles   2.0
kt_k         Kanai-Tajimi stiffness                   1.0
kt_gamma0    Kanai-Tajimi damping                     1.0
===========  =======================================  =========

Lines starting with ``#`` and blank lines are ignored.  Unknown keys are an
error, as are malformed lines.
"""

from __future__ import annotations

from pathlib import Path

from .models import (
    ModelKind,
    ModelSpec,
    kanai_tajimi,
    ou_noise,
    quadratic_potential,
    zero_potential,
    WhiteNoise,
)

__all__ = ["ConfigError", "DEFAULTS", "parse_config", "load_config", "build_model"]


class ConfigError(ValueError):
    """Malformed configuration file or unknown key."""


DEFAULTS: dict[str, object] = {
    "model": "fp",
    "n": 100,
    "cb": 1.0,
    "potential": "quadratic",
    "k": 1.0,
    "noise": "white",
    "theta_v": 1.0,
    "beta": 2.0,
    "kt_k": 1.0,
    "kt_gamma0": 1.0,
}

_CASTS = {
    "model": str,
    "n": int,
    "cb": float,
    "potential": str,
    "k": float,
    "noise": str,
    "theta_v": float,
    "beta": float,
    "kt_k": float,
    "kt_gamma0": float,
}

_CHOICES = {
    "model": {"epp", "fp", "op"},
    "potential": {"zero", "quadratic"},
    "noise": {"white", "ou", "kt"},
}


def parse_config(text: str) -> dict:
    """Parse key=value text into a fully-defaulted configuration dict."""
    cfg = dict(DEFAULTS)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError("line %d: expected key=value, got %r" % (lineno, raw))
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CASTS:
            raise ConfigError("line %d: unknown key %r" % (lineno, key))
        try:
            cfg[key] = _CASTS[key](value)
        except ValueError as exc:
            raise ConfigError("line %d: bad value for %s: %s" % (lineno, key, exc)) from exc
        if key in _CHOICES and cfg[key] not in _CHOICES[key]:
            raise ConfigError(
                "line %d: %s must be one of %s" % (lineno, key, sorted(_CHOICES[key]))
            )
    return cfg


def load_config(path: str | Path) -> dict:
    return parse_config(Path(path).read_text())


def build_model(cfg: dict) -> ModelSpec:
    """Construct a :class:`ModelSpec` from a (possibly partial) config dict."""
    full = dict(DEFAULTS)
    full.update(cfg)
    for key in full:
        if key not in _CASTS:
            raise ConfigError("unknown key %r" % key)
    if full["potential"] == "zero":
        potential = zero_potential()
    else:
        potential = quadratic_potential(float(full["k"]))
    if full["noise"] == "white":
        noise = WhiteNoise()
    elif full["noise"] == "ou":
        noise = ou_noise(theta_v=float(full["theta_v"]), beta=float(full["beta"]))
    else:
        noise = kanai_tajimi(k=float(full["kt_k"]), gamma0=float(full["kt_gamma0"]))
    return ModelSpec(
        kind=ModelKind(full["model"]),
        n=int(full["n"]),
        cb=float(full["cb"]),
        potential=potential,
        noise=noise,
    )
