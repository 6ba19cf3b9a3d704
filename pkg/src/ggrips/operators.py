"""Barycentric integration and differentiation matrices on Radau grids.

The integration matrix Q maps nodal values f(tau_i) to approximations of
the running integrals int_{-1}^{tau_j} f.  Row j is assembled by mapping an
inner Gauss-Legendre rule onto [-1, tau_j] through the affine change of
variable

    tau = ((tau_j + 1) t + tau_j - 1) / 2,

and evaluating the cardinal basis there barycentrically; since the basis
polynomials have degree n and the inner rule is exact through degree
2N + 1 >= n + 1 with N = ceil((n + 1) / 2), every row integrates the
interpolant exactly.  The extra cost row integrates over all of [-1, 1]
with the same rule, unmapped.

The differentiation matrix uses the classical barycentric formulas

    d[j, i] = (xi_i / xi_j) / (tau_j - tau_i),   i != j,
    d[j, j] = -sum_{i != j} d[j, i].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .barycentric import BarycentricWeights, lagrange_matrix
from .gegenbauer import LegendreGaussRule, RadauGrid, lg_rule

__all__ = [
    "IntegrationMatrix",
    "DifferentiationMatrix",
    "build_grim",
    "apply_grim",
    "build_grdm",
]


@dataclass(frozen=True)
class IntegrationMatrix:
    """Running-integral matrix Q plus the full-interval cost row."""

    grid: RadauGrid
    Q: np.ndarray
    qcost: np.ndarray
    lg: LegendreGaussRule


@dataclass(frozen=True)
class DifferentiationMatrix:
    grid: RadauGrid
    D: np.ndarray


def build_grim(grid: RadauGrid, weights: BarycentricWeights) -> IntegrationMatrix:
    """Assemble the integration matrix for ``grid``.

    Row 0 is identically zero (the integral from -1 to tau_0 = -1).  A
    mapped inner node landing on a grid node is handled by the barycentric
    evaluator's short-circuit, never an error.
    """
    if weights.grid is not grid and not np.array_equal(weights.nodes, grid.nodes):
        raise ValueError("weights were built on a different grid")
    n = grid.n
    rule = lg_rule((n + 2) // 2)
    Q = np.zeros((n + 1, n + 1))
    for j in range(1, n + 1):
        half_span = 0.5 * (grid.nodes[j] + 1.0)
        mapped = half_span * rule.nodes + 0.5 * (grid.nodes[j] - 1.0)
        basis = lagrange_matrix(weights, mapped)
        Q[j] = half_span * (rule.weights @ basis)
    qcost = rule.weights @ lagrange_matrix(weights, rule.nodes)
    return IntegrationMatrix(grid=grid, Q=Q, qcost=qcost, lg=rule)


def apply_grim(matrix: IntegrationMatrix, values) -> np.ndarray:
    """Running integrals of the data ``values`` at the grid nodes."""
    vals = np.asarray(values, dtype=float)
    if vals.shape != (matrix.grid.n + 1,):
        raise ValueError(
            f"expected {matrix.grid.n + 1} nodal values, got shape {vals.shape}"
        )
    return matrix.Q @ vals


def build_grdm(grid: RadauGrid, weights: BarycentricWeights) -> DifferentiationMatrix:
    """Assemble the differentiation matrix for ``grid``."""
    if weights.grid is not grid and not np.array_equal(weights.nodes, grid.nodes):
        raise ValueError("weights were built on a different grid")
    nodes = grid.nodes
    xi = weights.xi
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    D = (xi[None, :] / xi[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return DifferentiationMatrix(grid=grid, D=D)
