"""Parametric transformations between the horizon [0, inf) and [-1, 1).

Two families are provided, both strictly increasing with T(-1) = 0 and a
pole at tau = 1:

    algebraic:     T(tau) = L (1 + tau) / (1 - tau)
    logarithmic:   T(tau) = L ln(2 / (1 - tau))

Their derivatives of every order are available in closed form,

    algebraic:     T^(m)(tau) = 2 L m! / (1 - tau)^(m + 1)
    logarithmic:   T^(m)(tau) = L (m - 1)! / (1 - tau)^m,

which is what makes the growth/conditioning studies near tau = 1 cheap to
evaluate.  The classical unit-scale maps are the special cases L = 1 and
(for the logarithmic family) L = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = ["MapKind", "DomainMap", "map_forward", "map_inverse", "map_derivative"]

_FACTORIAL_DIRECT_MAX = 20


class MapKind(str, Enum):
    ALGEBRAIC = "algebraic"
    LOGARITHMIC = "logarithmic"


@dataclass(frozen=True)
class DomainMap:
    """A horizon map of the given kind with scale parameter L > 0."""

    kind: MapKind
    L: float

    def __post_init__(self):
        object.__setattr__(self, "kind", MapKind(self.kind))
        if not (self.L > 0.0 and math.isfinite(self.L)):
            raise ValueError(f"map scale must be positive, got {self.L}")

    def forward(self, tau):
        t, scalar = _checked(tau)
        if self.kind is MapKind.ALGEBRAIC:
            out = self.L * (1.0 + t) / (1.0 - t)
        else:
            out = self.L * np.log(2.0 / (1.0 - t))
        return out.item() if scalar else out

    def inverse(self, time):
        t = np.asarray(time, dtype=float)
        scalar = t.ndim == 0
        if np.any(t < 0.0):
            raise ValueError("horizon times must be nonnegative")
        if self.kind is MapKind.ALGEBRAIC:
            out = (t - self.L) / (t + self.L)
        else:
            out = 1.0 - 2.0 * np.exp(-t / self.L)
        return out.item() if scalar else out

    def derivative(self, order: int, tau):
        """Closed-form derivative of the given order (order >= 1)."""
        if order < 1:
            raise ValueError("derivative order must be positive")
        t, scalar = _checked(tau)
        one_minus = 1.0 - t
        if self.kind is MapKind.ALGEBRAIC:
            out = 2.0 * self.L * _factorial(order) / one_minus ** (order + 1)
        else:
            out = self.L * _factorial(order - 1) / one_minus**order
        if not np.all(np.isfinite(out)):
            raise OverflowError(
                f"order-{order} map derivative overflows near tau = 1"
            )
        return out.item() if scalar else out


def _checked(tau):
    t = np.asarray(tau, dtype=float)
    if np.any(t >= 1.0):
        raise ValueError("map arguments must satisfy tau < 1")
    return t, t.ndim == 0


def _factorial(m: int) -> float:
    if m <= _FACTORIAL_DIRECT_MAX:
        return float(math.factorial(m))
    return math.exp(math.lgamma(m + 1.0))


def map_forward(m: DomainMap, tau):
    """Horizon time t = T(tau)."""
    return m.forward(tau)


def map_inverse(m: DomainMap, time):
    """Collocation coordinate tau = T^{-1}(t)."""
    return m.inverse(time)


def map_derivative(m: DomainMap, order: int, tau):
    """Closed-form m-th derivative T^(order)(tau)."""
    return m.derivative(order, tau)
