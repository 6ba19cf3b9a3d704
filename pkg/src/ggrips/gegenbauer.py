"""Gegenbauer polynomials, Gauss-Radau grids, and Legendre-Gauss rules.

The polynomial family used throughout is normalized so that G_n(1) = 1 for
every degree n.  Under that normalization the three-term recurrence

    (m + 2a - 1) G_m(t) = 2 (m + a - 1) t G_{m-1}(t) - (m - 1) G_{m-2}(t),

with G_0 = 1 and G_1 = t, is valid on the whole admissible index range
a > -1/2 (including a = 0, where the classically normalized ultraspherical
family degenerates).  Setting a = 1/2 recovers the Legendre polynomials and
a = 0 the Chebyshev polynomials of the first kind.

A Radau grid of index n consists of tau_0 = -1 together with the n simple
roots of the combined polynomial  G_n + G_{n+1}  inside (-1, 1); the
quadrature weights (Christoffel numbers) of that grid integrate against the
weight function (1 - t^2)^(a - 1/2) exactly for polynomials of degree up to
2n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln

__all__ = [
    "ConvergenceError",
    "GegenbauerBasis",
    "RadauGrid",
    "LegendreGaussRule",
    "eval_gegenbauer",
    "lambda_norm",
    "ggr_nodes",
    "lg_rule",
]

#: absolute tolerance on the combined polynomial at refined Radau nodes
NODE_RESIDUAL_TOL = 1e-13

#: Newton stopping tolerance on the relative node update
_NEWTON_TOL = 4.0 * np.finfo(float).eps
_NEWTON_MAX_ITER = 100

#: residual past which a stalled Newton iteration is considered failed
_NEWTON_STALL_RESIDUAL = 1e-9


class ConvergenceError(RuntimeError):
    """An iterative node computation failed to converge."""


class GridOrderingError(RuntimeError):
    """Refined nodes violate the strict ascending-order requirement."""


def _as_float_array(tau):
    t = np.asarray(tau, dtype=float)
    return t, t.ndim == 0


@dataclass(frozen=True)
class GegenbauerBasis:
    """Gegenbauer family of index ``alpha`` normalized so G_n(1) = 1.

    Requires alpha > -1/2.  Instances are immutable and safe to share
    between threads.
    """

    alpha: float

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha <= -0.5:
            raise ValueError(
                f"Gegenbauer index must satisfy alpha > -1/2, got {self.alpha}"
            )

    # -- polynomial evaluation ------------------------------------------------

    def eval(self, n: int, tau):
        """Evaluate G_n at ``tau`` (scalar or array) by the recurrence."""
        if n < 0:
            raise ValueError("degree must be nonnegative")
        t, scalar = _as_float_array(tau)
        g_n, _ = self._pair(n, t)
        return g_n.item() if scalar else g_n

    def eval_pair(self, n: int, tau):
        """Return (G_n(tau), G_{n+1}(tau))."""
        t, scalar = _as_float_array(tau)
        g_n, g_np1 = self._pair(n, t)
        if scalar:
            return g_n.item(), g_np1.item()
        return g_n, g_np1

    def _pair(self, n: int, t: np.ndarray):
        a = self.alpha
        g_prev = np.ones_like(t)
        g_curr = t.copy()
        if n == 0:
            return g_prev, g_curr
        for m in range(2, n + 2):
            g_prev, g_curr = g_curr, (
                2.0 * (m + a - 1.0) * t * g_curr - (m - 1.0) * g_prev
            ) / (m + 2.0 * a - 1.0)
        return g_prev, g_curr

    def _pair_with_derivative(self, n: int, t: np.ndarray):
        """(G_n, G_{n+1}, G'_n, G'_{n+1}) via the differentiated recurrence."""
        a = self.alpha
        g_prev = np.ones_like(t)
        g_curr = t.copy()
        d_prev = np.zeros_like(t)
        d_curr = np.ones_like(t)
        if n == 0:
            return g_prev, g_curr, d_prev, d_curr
        for m in range(2, n + 2):
            denom = m + 2.0 * a - 1.0
            coef = 2.0 * (m + a - 1.0)
            g_next = (coef * t * g_curr - (m - 1.0) * g_prev) / denom
            d_next = (coef * (g_curr + t * d_curr) - (m - 1.0) * d_prev) / denom
            g_prev, g_curr = g_curr, g_next
            d_prev, d_curr = d_curr, d_next
        return g_prev, g_curr, d_prev, d_curr

    def radau_poly(self, n: int, tau):
        """Evaluate the combined polynomial G_n + G_{n+1} whose roots form the grid."""
        t, scalar = _as_float_array(tau)
        g_n, g_np1 = self._pair(n, t)
        out = g_n + g_np1
        return out.item() if scalar else out

    def radau_poly_with_derivative(self, n: int, tau):
        t, scalar = _as_float_array(tau)
        g_n, g_np1, d_n, d_np1 = self._pair_with_derivative(n, t)
        val = g_n + g_np1
        der = d_n + d_np1
        if scalar:
            return val.item(), der.item()
        return val, der

    def derivative(self, n: int, tau):
        """Evaluate G'_n at ``tau``."""
        t, scalar = _as_float_array(tau)
        _, _, d_n, _ = self._pair_with_derivative(n, t)
        return d_n.item() if scalar else d_n

    # -- normalization constants ----------------------------------------------

    def lambda_norm(self, j: int) -> float:
        """Squared weighted L2 norm of G_j; G_j / sqrt(lambda_j) is orthonormal.

        Evaluated through log-gamma differences so large degrees do not
        overflow.  The j = 0 ratio is taken in its exact limit (the naive
        expression is 0/0 at alpha = 0).
        """
        if j < 0:
            raise ValueError("degree must be nonnegative")
        a = self.alpha
        if j == 0:
            log_ratio = math.log(2.0)
        else:
            log_ratio = math.log(j + 2.0 * a) - math.log(j + a)
        log_val = (
            (2.0 * a - 1.0) * math.log(2.0)
            + gammaln(j + 1.0)
            + 2.0 * gammaln(a + 0.5)
            + log_ratio
            - gammaln(j + 2.0 * a + 1.0)
        )
        val = math.exp(log_val)
        if not math.isfinite(val):
            raise OverflowError(f"lambda_{j} overflows for alpha={a}")
        return val

    def leading_coefficient(self, n: int) -> float:
        """Leading coefficient of G_n (equals that of the combined polynomial
        G_{n-1} + G_n)."""
        if n < 0:
            raise ValueError("degree must be nonnegative")
        if n == 0:
            return 1.0
        a = self.alpha
        log_val = (
            (n - 1.0) * math.log(2.0)
            + gammaln(n + a)
            + gammaln(2.0 * a + 1.0)
            - gammaln(n + 2.0 * a)
            - gammaln(a + 1.0)
        )
        val = math.exp(log_val)
        if not math.isfinite(val):
            raise OverflowError(f"leading coefficient overflows for n={n}")
        return val


@dataclass(frozen=True)
class RadauGrid:
    """Gauss-Radau grid of n+1 ascending nodes with tau_0 = -1 pinned.

    ``christoffel`` holds the positive quadrature weights of the rule and
    ``theta`` the shared prefactor values they are derived from (the two
    differ only at the pinned node).
    """

    basis: GegenbauerBasis
    n: int
    nodes: np.ndarray
    christoffel: np.ndarray
    theta: np.ndarray

    @property
    def alpha(self) -> float:
        return self.basis.alpha


@dataclass(frozen=True)
class LegendreGaussRule:
    """Gauss-Legendre rule with N+1 nodes (roots of the degree-(N+1) Legendre
    polynomial), exact for polynomials of degree up to 2N+1."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray


# -- operations ----------------------------------------------------------------


def eval_gegenbauer(basis: GegenbauerBasis, n: int, tau) -> float:
    """Value of the degree-n polynomial of ``basis`` at ``tau``."""
    return basis.eval(n, tau)


def lambda_norm(basis: GegenbauerBasis, j: int) -> float:
    """Orthonormalization constant of the degree-j polynomial of ``basis``."""
    return basis.lambda_norm(j)


def ggr_nodes(basis: GegenbauerBasis, n: int) -> RadauGrid:
    """Build the Radau grid of index n for ``basis``.

    tau_0 = -1 is pinned analytically (it is an exact root of the combined
    polynomial by parity); the interior nodes are found by safeguarded
    Newton iteration on sign-bracketing intervals, seeded from the
    Chebyshev-Gauss-Radau points cos(2 k pi / (2n + 1)).
    """
    if n < 0:
        raise ValueError("grid index must be nonnegative")
    if n == 0:
        nodes = np.array([-1.0])
    else:
        interior = _interior_radau_roots(basis, n)
        nodes = np.concatenate(([-1.0], interior))
        if np.any(np.diff(nodes) <= 0.0) or nodes[-1] >= 1.0:
            raise GridOrderingError(
                f"refined Radau nodes are not strictly increasing (n={n}, "
                f"alpha={basis.alpha})"
            )
    residual, slope = basis.radau_poly_with_derivative(n, nodes)
    # the achievable residual is limited by the node representation itself:
    # one ulp of tau moves the polynomial by |slope| * ulp, which near
    # alpha = -1/2 dwarfs any fixed absolute tolerance
    limit = NODE_RESIDUAL_TOL + 32.0 * np.finfo(float).eps * np.abs(slope) * np.maximum(
        1.0, np.abs(nodes)
    )
    if np.any(np.abs(residual) > limit):
        worst = int(np.argmax(np.abs(residual) - limit))
        raise ConvergenceError(
            f"Radau node residual {abs(residual[worst]):.3e} exceeds its "
            f"rounding-level limit {limit[worst]:.3e} at node {worst} "
            f"(n={n}, alpha={basis.alpha})"
        )
    christoffel, theta = _christoffel_numbers(basis, n, nodes)
    if np.any(christoffel <= 0.0):
        raise ConvergenceError(
            f"nonpositive Christoffel number encountered (n={n}, alpha={basis.alpha})"
        )
    return RadauGrid(basis=basis, n=n, nodes=nodes, christoffel=christoffel, theta=theta)


def _interior_radau_roots(basis: GegenbauerBasis, n: int) -> np.ndarray:
    """The n simple roots of G_n + G_{n+1} inside (-1, 1), ascending."""
    brackets = None
    for attempt in range(5):
        scale = 2**attempt
        m = 8 * (n + 1) * scale
        # scan uniformly in theta = arccos(tau); node clustering at both ends
        # is roughly uniform in theta, so a fixed oversampling rate suffices
        theta_lo = 0.02 / ((n + 1) * scale)
        theta_hi = np.pi - 1.2 / ((n + 2) * scale)
        taus = np.cos(np.linspace(theta_hi, theta_lo, m))
        vals = basis.radau_poly(n, taus)
        signs = np.sign(vals)
        flips = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
        if flips.size == n:
            brackets = [(taus[i], taus[i + 1], vals[i], vals[i + 1]) for i in flips]
            break
    if brackets is None:
        raise ConvergenceError(
            f"could not bracket {n} interior Radau roots (alpha={basis.alpha})"
        )

    seeds = np.cos(2.0 * np.arange(n, 0, -1) * np.pi / (2.0 * n + 1.0))
    roots = np.empty(n)
    for k, (a, b, fa, fb) in enumerate(brackets):
        roots[k] = _safeguarded_newton(basis, n, a, b, fa, fb, seeds[k])
    return roots


def _safeguarded_newton(basis, n, a, b, fa, fb, seed):
    """Newton iteration kept inside the bracketing interval [a, b].

    Iterates to rounding level rather than a fixed update tolerance: near
    alpha = -1/2 the combined polynomial's slope at a root reaches ~1e4, so
    meeting an absolute residual target requires the root at full
    precision.  Returns the iterate with the smallest observed residual.
    """
    x = seed if a < seed < b else 0.5 * (a + b)
    best_x, best_f = x, np.inf
    for _ in range(_NEWTON_MAX_ITER):
        fx, dfx = basis.radau_poly_with_derivative(n, x)
        if abs(fx) < best_f:
            best_x, best_f = x, abs(fx)
        if fx == 0.0:
            return x
        if np.sign(fx) == np.sign(fa):
            a, fa = x, fx
        else:
            b, fb = x, fx
        x_new = x - fx / dfx if dfx != 0.0 else 0.5 * (a + b)
        if not (a < x_new < b) or not np.isfinite(x_new):
            x_new = 0.5 * (a + b)
        step = abs(x_new - x)
        x = x_new
        if step <= _NEWTON_TOL * abs(x):
            break
    else:
        if best_f > _NEWTON_STALL_RESIDUAL:
            raise ConvergenceError(
                f"Newton iteration for a Radau node did not converge "
                f"(n={n}, alpha={basis.alpha}, bracket=({a}, {b}))"
            )
    fx, _ = basis.radau_poly_with_derivative(n, x)
    if abs(fx) < best_f:
        best_x, best_f = x, abs(fx)
    # scan the few floats around the converged iterate for the smallest
    # computed residual; the evaluation itself is the accuracy limit here
    for neighbor in _ulp_neighbors(best_x):
        fn = basis.radau_poly(n, neighbor)
        if abs(fn) < best_f:
            best_x, best_f = neighbor, abs(fn)
    return best_x


def _ulp_neighbors(x: float, radius: int = 3):
    lo = hi = x
    for _ in range(radius):
        lo = np.nextafter(lo, -np.inf)
        hi = np.nextafter(hi, np.inf)
        yield lo
        yield hi


def _christoffel_numbers(basis: GegenbauerBasis, n: int, nodes: np.ndarray):
    """Quadrature weights of the Radau grid.

    The gamma-function ratio in the prefactor is evaluated via log-gamma
    differences; the naive form overflows around n of a few hundred.
    """
    a = basis.alpha
    log_c = (
        (2.0 * a - 1.0) * math.log(2.0)
        + 2.0 * gammaln(a + 0.5)
        + gammaln(n + 1.0)
        - math.log(n + a + 0.5)
        - gammaln(n + 2.0 * a + 1.0)
    )
    g_vals = basis.eval(n, nodes)
    theta = np.exp(log_c) * (1.0 - nodes) / g_vals**2
    christoffel = theta.copy()
    christoffel[0] *= a + 0.5
    return christoffel, theta


def lg_rule(N: int) -> LegendreGaussRule:
    """Gauss-Legendre rule with N+1 points.

    Nodes come from the companion-matrix eigenvalue method and are polished
    with one Newton step on the Legendre polynomial; the weights are then
    computed from the derivative formula 2 / ((1 - t^2) L'(t)^2).
    """
    if N < 0:
        raise ValueError("rule order must be nonnegative")
    nodes, _ = leggauss(N + 1)
    legendre = GegenbauerBasis(0.5)
    _, g_np1, _, d_np1 = legendre._pair_with_derivative(N, nodes)
    nodes = nodes - g_np1 / d_np1
    _, g_np1, _, d_np1 = legendre._pair_with_derivative(N, nodes)
    if np.max(np.abs(g_np1)) > 1e-12:
        raise ConvergenceError(f"Legendre nodes failed to converge for N={N}")
    weights = 2.0 / ((1.0 - nodes**2) * d_np1**2)
    return LegendreGaussRule(order=N, nodes=nodes, weights=weights)
