"""Equality-constrained solver: augmented-Lagrangian outer loop, BFGS inner.

The merit function for multipliers r and penalty rho is

    L_A(z; r, rho) = J(z) + r . c(z) + (rho / 2) ||c(z)||^2,

whose gradient equals the plain Lagrangian gradient evaluated at the
first-order multiplier estimate r + rho c(z).  Each outer iteration runs an
inner BFGS minimization of L_A with a strong-Wolfe line search, then applies
the multiplier update r <- r + rho c; the penalty grows whenever the
constraint violation fails to shrink by a factor of four.  Everything is
deterministic: identical inputs produce bitwise-identical reports.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .transcription import NlpFunctions

__all__ = ["SolverConfig", "SolveStatus", "SolveReport", "solve", "DegeneratePenaltyWarning"]

#: infinity-norm bound the Lagrangian gradient must meet at convergence
KKT_GRADIENT_TOL = 1e-6

#: hard cap on the penalty parameter
_PENALTY_CAP = 1e12

_WOLFE_C1 = 1e-4
_WOLFE_C2 = 0.9
_CURVATURE_FLOOR = 1e-12


class DegeneratePenaltyWarning(UserWarning):
    """The penalty parameter hit its cap; the cost signal may be lost."""


class SolveStatus(Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max-iterations"
    LINE_SEARCH_FAILURE = "line-search-failure"


@dataclass(frozen=True)
class SolverConfig:
    outer_tol: float = 1e-12
    inner_grad_tol: float = 1e-9
    max_outer: int = 50
    max_inner: int = 500
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    constraint_tol: float = 1e-10

    def __post_init__(self):
        for name in ("outer_tol", "inner_grad_tol", "penalty_init", "constraint_tol"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.penalty_growth <= 1.0:
            raise ValueError("penalty_growth must exceed 1")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration limits must be positive")


@dataclass(frozen=True)
class SolveReport:
    z_opt: np.ndarray
    multipliers: np.ndarray
    cost: float
    outer_iters: int
    inner_iters_total: int
    max_constraint_violation: float
    status: SolveStatus
    kkt_residual: float

    @property
    def converged(self) -> bool:
        return self.status is SolveStatus.CONVERGED


# -- inner minimizer ------------------------------------------------------------


def _finite(v: float) -> float:
    return v if np.isfinite(v) else np.inf


def _zoom(phi, dphi, a_lo, a_hi, f_lo, f0, d0, max_iter=40):
    """Wolfe zoom phase: shrink [a_lo, a_hi] until both conditions hold.

    If the bracket collapses at rounding level before the curvature
    condition can be certified, the best simple-decrease point seen is
    returned instead; the caller's curvature guard handles such steps.
    """
    best = None
    if f_lo < f0 and a_lo > 0.0:
        best = (a_lo, f_lo)
    for _ in range(max_iter):
        # bisection keeps the bracket shrinking regardless of curvature scale
        a = 0.5 * (a_lo + a_hi)
        fa = _finite(phi(a))
        if fa > f0 + _WOLFE_C1 * a * d0 or fa >= f_lo:
            a_hi = a
        else:
            da, ga = dphi(a)
            if abs(da) <= -_WOLFE_C2 * d0:
                return a, fa, ga
            if da * (a_hi - a_lo) >= 0.0:
                a_hi = a_lo
            a_lo, f_lo = a, fa
            best = (a_lo, f_lo)
        if abs(a_hi - a_lo) < 1e-18 * max(1.0, abs(a_lo)):
            break
    if best is not None:
        a, fa = best
        return a, fa, None
    return None


def _line_search(fun, grad, x, p, f0, g0):
    """Strong-Wolfe search along p from x.

    Returns (alpha, f, g) on success; g is None when only a simple-decrease
    step could be certified.  Returns None when no decrease exists at
    machine limits.
    """
    d0 = float(g0 @ p)
    if d0 >= 0.0:
        return None

    def phi(a):
        return fun(x + a * p)

    def dphi(a):
        g = grad(x + a * p)
        return float(g @ p), g

    a_prev, f_prev = 0.0, f0
    a = 1.0
    for i in range(60):
        fa = _finite(phi(a))
        if fa > f0 + _WOLFE_C1 * a * d0 or (i > 0 and fa >= f_prev):
            return _zoom(phi, dphi, a_prev, a, f_prev, f0, d0)
        da, ga = dphi(a)
        if abs(da) <= -_WOLFE_C2 * d0:
            return a, fa, ga
        if da >= 0.0:
            return _zoom(phi, dphi, a, a_prev, fa, f0, d0)
        a_prev, f_prev = a, fa
        a = min(2.0 * a, 1e10)
    return None


def _bfgs(fun, grad, x0, gtol, max_iter):
    """Inverse-Hessian BFGS with identity restarts.

    Returns (x, f, g, iterations, hit_line_search_failure).
    """
    x = np.array(x0, dtype=float)
    f = fun(x)
    g = grad(x)
    dim = x.size
    H = np.eye(dim)
    identity_h = True
    iters = 0
    ls_failed = False
    while iters < max_iter and np.max(np.abs(g)) > gtol:
        p = -(H @ g)
        if float(p @ g) >= 0.0:
            H = np.eye(dim)
            identity_h = True
            p = -g
        result = _line_search(fun, grad, x, p, f, g)
        if result is None and not identity_h:
            H = np.eye(dim)
            identity_h = True
            p = -g
            result = _line_search(fun, grad, x, p, f, g)
        if result is None:
            ls_failed = True
            break
        alpha, f_new, g_new = result
        if g_new is None:
            g_new = grad(x + alpha * p)
        s = alpha * p
        y = g_new - g
        sy = float(s @ y)
        if sy > _CURVATURE_FLOOR * np.linalg.norm(s) * np.linalg.norm(y):
            rho = 1.0 / sy
            Hy = H @ y
            H += (sy + float(y @ Hy)) * rho * rho * np.outer(s, s)
            H -= rho * (np.outer(Hy, s) + np.outer(s, Hy))
            identity_h = False
        else:
            H = np.eye(dim)
            identity_h = True
        x = x + s
        f, g = f_new, g_new
        iters += 1
    return x, f, g, iters, ls_failed


# -- outer loop -----------------------------------------------------------------


def solve(nlp: NlpFunctions, z0, cfg: SolverConfig | None = None) -> SolveReport:
    """Minimize the NLP cost subject to its equality constraints."""
    cfg = cfg if cfg is not None else SolverConfig()
    z = np.asarray(z0, dtype=float).copy()
    if z.shape != (nlp.dim,):
        raise ValueError(f"initial guess must have length {nlp.dim}")
    m = nlp.n_constraints

    if m == 0:
        z, f, g, iters, ls_failed = _bfgs(
            nlp.cost, nlp.cost_gradient, z, cfg.inner_grad_tol, cfg.max_inner
        )
        g_inf = float(np.max(np.abs(g))) if g.size else 0.0
        if g_inf <= KKT_GRADIENT_TOL:
            status = SolveStatus.CONVERGED
        elif ls_failed:
            status = SolveStatus.LINE_SEARCH_FAILURE
        else:
            status = SolveStatus.MAX_ITERATIONS
        return SolveReport(
            z_opt=z,
            multipliers=np.zeros(0),
            cost=f,
            outer_iters=1,
            inner_iters_total=iters,
            max_constraint_violation=0.0,
            status=status,
            kkt_residual=g_inf,
        )

    r = np.zeros(m)
    rho = cfg.penalty_init
    prev_viol = np.inf
    total_inner = 0
    status = SolveStatus.MAX_ITERATIONS
    stagnant = 0
    outer = 0
    for outer in range(1, cfg.max_outer + 1):
        merit, merit_grad = _augmented_lagrangian(nlp, r, rho)
        f_start = merit(z)
        z, f_end, g_end, iters, ls_failed = _bfgs(
            merit, merit_grad, z, cfg.inner_grad_tol, cfg.max_inner
        )
        total_inner += iters
        c = nlp.constraints(z)
        viol = float(np.max(np.abs(c)))
        r = r + rho * c
        g_inf = float(np.max(np.abs(g_end)))
        improvement = f_start - f_end

        if viol <= cfg.constraint_tol and g_inf <= KKT_GRADIENT_TOL:
            status = SolveStatus.CONVERGED
            break
        if viol <= cfg.constraint_tol and improvement <= cfg.outer_tol:
            # z has converged; the multipliers are refined after the loop
            break
        # a stagnant merit step alone is not terminal: the multiplier update
        # changes the merit function, so progress can resume next round
        if improvement <= cfg.outer_tol and viol >= 0.9 * prev_viol:
            stagnant += 1
            if stagnant >= 2:
                status = (
                    SolveStatus.LINE_SEARCH_FAILURE
                    if ls_failed
                    else SolveStatus.MAX_ITERATIONS
                )
                break
        else:
            stagnant = 0
        if viol > 0.25 * prev_viol and viol > cfg.constraint_tol:
            rho = rho * cfg.penalty_growth
            if rho > _PENALTY_CAP:
                rho = _PENALTY_CAP
                warnings.warn(
                    "penalty parameter capped at 1e12; constraints may dominate "
                    "the cost signal",
                    DegeneratePenaltyWarning,
                    stacklevel=2,
                )
        prev_viol = viol

    # the first-order multiplier estimate lags the primal iterate; the
    # least-squares estimate from the final point is what stationarity is
    # judged against
    r = _best_multipliers(nlp, z, r)
    kkt = float(np.max(np.abs(nlp.lagrangian_gradient(z, r))))
    c = nlp.constraints(z)
    viol = float(np.max(np.abs(c)))
    if viol <= cfg.constraint_tol and kkt <= KKT_GRADIENT_TOL:
        status = SolveStatus.CONVERGED
    return SolveReport(
        z_opt=z,
        multipliers=r,
        cost=nlp.cost(z),
        outer_iters=outer,
        inner_iters_total=total_inner,
        max_constraint_violation=viol,
        status=status,
        kkt_residual=kkt,
    )


def _best_multipliers(nlp: NlpFunctions, z: np.ndarray, r_alm: np.ndarray) -> np.ndarray:
    """Least-squares multiplier estimate at z, if better than the running one."""
    jac = nlp.constraint_jacobian(z)
    cost_grad = nlp.cost_gradient(z)
    r_ls, *_ = np.linalg.lstsq(jac.T, -cost_grad, rcond=None)
    res_ls = np.max(np.abs(cost_grad + jac.T @ r_ls))
    res_alm = np.max(np.abs(cost_grad + jac.T @ r_alm))
    return r_ls if res_ls < res_alm else r_alm


def _augmented_lagrangian(nlp: NlpFunctions, r: np.ndarray, rho: float):
    def merit(z):
        c = nlp.constraints(z)
        return nlp.cost(z) + float(r @ c) + 0.5 * rho * float(c @ c)

    def merit_grad(z):
        c = nlp.constraints(z)
        return nlp.lagrangian_gradient(z, r + rho * c)

    return merit, merit_grad
