"""Switched-rational barycentric interpolation on Gauss-Radau grids.

The barycentric weights attached to a Radau grid come in closed form from
the grid's Christoffel numbers:

    xi_0 = -sqrt((2 a + 1) w_0),
    xi_i = (-1)^(i-1) sqrt((1 - tau_i) w_i),    i >= 1.

Because the nodes cluster toward +1, the factor (1 - tau_i) loses digits
there; the switching variants replace it, for nodes within ``epsilon`` of 1,
by one of two trigonometric identities

    sqrt(1 - tau) = sqrt(2) sin(arccos(tau) / 2)
                  = sin(arccos(tau)) / sqrt(1 + tau).

All weight vectors are defined up to a common nonzero scalar; the "true"
barycentric evaluation formula is invariant under that rescaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .gegenbauer import RadauGrid

__all__ = [
    "WeightScheme",
    "BarycentricWeights",
    "RationalInterpolant",
    "weights_thm",
    "weights_switch",
    "direct_weights",
    "interp_eval",
    "lagrange_matrix",
    "lebesgue_function",
    "lebesgue_constant",
]

#: half-width of the window around a node treated as an exact hit
NODE_HIT_TOL = 1e-15

#: right end of the Lebesgue maximization domain (the grid excludes tau = 1)
_LEBESGUE_RIGHT = 1.0 - 1e-12


class WeightScheme(Enum):
    DIRECT = "direct"
    THEOREM = "theorem"
    SWITCH_B1 = "switch-b1"
    SWITCH_B2 = "switch-b2"


@dataclass(frozen=True)
class BarycentricWeights:
    """Barycentric weight vector ``xi`` attached to a Radau grid."""

    grid: RadauGrid
    xi: np.ndarray
    scheme: WeightScheme
    epsilon: float = 0.1

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        if xi.shape != (self.grid.n + 1,):
            raise ValueError("weight vector length must match the grid")
        if not np.all(np.isfinite(xi)) or np.any(xi == 0.0):
            raise ValueError("barycentric weights must be finite and nonzero")
        signs = np.sign(xi)
        if np.any(signs[:-1] * signs[1:] >= 0.0):
            raise ValueError("barycentric weight signs must strictly alternate")
        if self.scheme is not WeightScheme.DIRECT and xi[0] >= 0.0:
            raise ValueError("closed-form weights must start negative")

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes


def weights_thm(grid: RadauGrid) -> BarycentricWeights:
    """Closed-form weights from the Christoffel numbers, no switching."""
    a = grid.alpha
    radicand0 = (2.0 * a + 1.0) * grid.christoffel[0]
    radicands = (1.0 - grid.nodes[1:]) * grid.christoffel[1:]
    if radicand0 < 0.0 or np.any(radicands < 0.0):
        raise ValueError("negative radicand: corrupted Christoffel numbers")
    xi = np.empty(grid.n + 1)
    xi[0] = -math.sqrt(radicand0)
    xi[1:] = np.where(np.arange(1, grid.n + 1) % 2 == 1, 1.0, -1.0) * np.sqrt(radicands)
    return BarycentricWeights(grid=grid, xi=xi, scheme=WeightScheme.THEOREM, epsilon=0.0)


def weights_switch(
    grid: RadauGrid, epsilon: float = 0.1, variant: str = "B2"
) -> BarycentricWeights:
    """Closed-form weights with a trigonometric branch near tau = 1.

    ``variant`` selects the half-angle form ("B1") or the sine/ratio form
    ("B2", the default used everywhere else in the package).
    """
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"switching parameter must lie in (0, 1), got {epsilon}")
    variant = variant.upper()
    if variant not in ("B1", "B2"):
        raise ValueError(f"unknown switching variant {variant!r}")
    a = grid.alpha
    nodes = grid.nodes
    w = grid.christoffel
    xi = np.empty(grid.n + 1)
    xi[0] = -math.sqrt((2.0 * a + 1.0) * w[0])
    for i in range(1, grid.n + 1):
        sign = 1.0 if (i - 1) % 2 == 0 else -1.0
        if abs(1.0 - nodes[i]) > epsilon:
            xi[i] = sign * math.sqrt((1.0 - nodes[i]) * w[i])
        elif variant == "B1":
            xi[i] = sign * math.sin(0.5 * math.acos(nodes[i])) * math.sqrt(2.0 * w[i])
        else:
            xi[i] = sign * math.sin(math.acos(nodes[i])) * math.sqrt(
                w[i] / (1.0 + nodes[i])
            )
    scheme = WeightScheme.SWITCH_B1 if variant == "B1" else WeightScheme.SWITCH_B2
    return BarycentricWeights(grid=grid, xi=xi, scheme=scheme, epsilon=epsilon)


def _pairwise_products(factors: np.ndarray) -> float:
    """Product of ``factors`` accumulated pairwise (tree order)."""
    v = factors
    while v.size > 1:
        head = v[: (v.size // 2) * 2].reshape(-1, 2).prod(axis=1)
        v = np.append(head, v[-1]) if v.size % 2 else head
    return float(v[0])


def direct_weights(grid: RadauGrid) -> BarycentricWeights:
    """Product-formula weights xi_i = 1 / prod_{j != i} (tau_j - tau_i).

    Serves as the formula-level reference for the closed-form weights; the
    factor products are accumulated pairwise to keep rounding at the
    log-depth level.
    """
    nodes = grid.nodes
    xi = np.empty(grid.n + 1)
    for i in range(grid.n + 1):
        diffs = np.delete(nodes - nodes[i], i)
        xi[i] = 1.0 / _pairwise_products(diffs)
    return BarycentricWeights(grid=grid, xi=xi, scheme=WeightScheme.DIRECT, epsilon=0.0)


@dataclass(frozen=True)
class RationalInterpolant:
    """Data interpolant evaluated through the true barycentric formula."""

    weights: BarycentricWeights
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.weights.grid.n + 1,):
            raise ValueError("value vector length must match the grid")

    def __call__(self, tau):
        return interp_eval(self, tau)


def lagrange_matrix(weights: BarycentricWeights, points) -> np.ndarray:
    """Matrix B with B[k, i] = L_i(points[k]) for the cardinal basis.

    Rows for points within ``NODE_HIT_TOL`` of a grid node short-circuit to
    the corresponding unit vector, so evaluation is well defined everywhere.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    nodes = weights.nodes
    diff = pts[:, None] - nodes[None, :]
    hits = np.abs(diff) <= NODE_HIT_TOL
    safe = np.where(hits, 1.0, diff)
    terms = weights.xi[None, :] / safe
    basis = terms / terms.sum(axis=1, keepdims=True)
    hit_rows = hits.any(axis=1)
    if np.any(hit_rows):
        basis[hit_rows] = 0.0
        rows, cols = np.nonzero(hits)
        basis[rows, cols] = 1.0
    return basis


def interp_eval(ip: RationalInterpolant, tau):
    """Evaluate the interpolant at ``tau`` (scalar or array)."""
    scalar = np.ndim(tau) == 0
    basis = lagrange_matrix(ip.weights, tau)
    out = basis @ np.asarray(ip.values, dtype=float)
    return out.item() if scalar else out


def lebesgue_function(weights: BarycentricWeights, points) -> np.ndarray:
    """Sum of absolute cardinal-basis values at ``points``."""
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    nodes = weights.nodes
    diff = pts[:, None] - nodes[None, :]
    hits = np.abs(diff) <= NODE_HIT_TOL
    safe = np.where(hits, 1.0, diff)
    terms = weights.xi[None, :] / safe
    out = np.abs(terms).sum(axis=1) / np.abs(terms.sum(axis=1))
    out[hits.any(axis=1)] = 1.0
    return out


def _golden_section_max(fun, a: float, b: float, iters: int = 70) -> float:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - inv_phi * (b - a)
    x2 = a + inv_phi * (b - a)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_phi * (b - a)
            f2 = fun(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_phi * (b - a)
            f1 = fun(x1)
        if b - a < 1e-14:
            break
    return max(f1, f2)


def lebesgue_constant(weights: BarycentricWeights, grid_density: int) -> float:
    """Maximum of the Lebesgue function over [-1, 1 - 1e-12].

    A dense sample (uniform in arccos, which resolves the node clustering)
    provides candidates; every inter-node gap is then refined by golden
    section, since the Lebesgue function has one local maximum per gap.
    """
    n = weights.grid.n
    if grid_density < 10 * (n + 1):
        raise ValueError(
            f"grid_density must be at least 10 (n + 1) = {10 * (n + 1)}"
        )
    thetas = np.linspace(math.acos(_LEBESGUE_RIGHT), math.pi, grid_density)
    sample_best = float(lebesgue_function(weights, np.cos(thetas)).max())
    nodes = weights.nodes

    def point_val(t: float) -> float:
        return float(lebesgue_function(weights, t)[0])

    best = sample_best
    edges = np.append(nodes, _LEBESGUE_RIGHT)
    for k in range(len(edges) - 1):
        best = max(best, _golden_section_max(point_val, edges[k], edges[k + 1]))
    return best
