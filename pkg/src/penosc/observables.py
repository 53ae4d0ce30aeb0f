"""Scalar observables g(y) shared by the PDE and Monte Carlo paths."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels

__all__ = ["Observable", "identity", "square", "indicator", "parse_observable"]


@dataclass(frozen=True)
class Observable:
    """Named observable with both a vectorized callable and kernel codes."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    kernel_flag: int
    a: float = 0.0
    b: float = 0.0


def identity() -> Observable:
    return Observable("identity", lambda y: np.asarray(y, dtype=float),
                      _kernels.G_IDENTITY)


def square() -> Observable:
    return Observable("square", lambda y: np.asarray(y, dtype=float) ** 2,
                      _kernels.G_SQUARE)


def indicator(a: float, b: float) -> Observable:
    if not a < b:
        raise ValueError("indicator requires a < b")
    return Observable(
        "indicator:%g,%g" % (a, b),
        lambda y: ((np.asarray(y, dtype=float) >= a)
                   & (np.asarray(y, dtype=float) <= b)).astype(float),
        _kernels.G_INDICATOR, a, b,
    )


def parse_observable(text: str) -> Observable:
    """Parse 'identity', 'square' or 'indicator:a,b'."""
    if text == "identity":
        return identity()
    if text == "square":
        return square()
    if text.startswith("indicator:"):
        try:
            a_str, b_str = text.split(":", 1)[1].split(",")
            return indicator(float(a_str), float(b_str))
        except ValueError as exc:
            raise ValueError("expected indicator:a,b with numbers: %r" % text) from exc
    raise ValueError("unknown observable %r" % text)
