"""Infinite-horizon control problem definitions and the benchmark registry.

A problem bundles the dynamics f, the running cost g, the initial state,
and (optionally) analytic stage derivatives and a closed-form optimal
solution.  All callables are vectorized over a trailing node axis: states
arrive as (n_x, m) arrays, controls as (n_u, m), and the dynamics return
(n_x, m).  Callables must be pure.

Two benchmarks are registered:

* ``example1-a`` / ``example1-b`` -- a scalar problem with logarithmic
  running cost; form B applies the substitution z = ln x, which turns it
  into a linear-quadratic problem with the same optimal cost.
* ``example2`` -- a planar linear-quadratic regulator whose optimal
  trajectories follow a closed-form 2x2 matrix exponential.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "DomainClampWarning",
    "ExactSolution",
    "IhocProblem",
    "example1",
    "example2",
    "get_problem",
    "problem_names",
    "check_problem",
    "eval_exact",
]

_SQRT2 = math.sqrt(2.0)
_LN2 = math.log(2.0)

#: optimal cost of example 1 (both forms): (ln 2)^2 (sqrt 2 + 1) / 2
EXAMPLE1_COST = _LN2**2 * (_SQRT2 + 1.0) / 2.0

#: optimal cost of example 2
EXAMPLE2_COST = 19.85335656362790

#: closed-loop system matrix of example 2
EXAMPLE2_M = np.array([[0.0, 1.0], [-2.82842712474619, -3.557647291327851]])

#: optimal feedback gain of example 2
EXAMPLE2_K = np.array([4.828427124746193, 2.557647291327851])

#: states below this are clamped before logarithms in example 1 form A
_STATE_FLOOR = 1e-12


class DomainClampWarning(UserWarning):
    """An iterate left the domain of a logarithmic term and was clamped."""


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form optimal state/control trajectories and cost."""

    state: Callable[[np.ndarray], np.ndarray]
    control: Callable[[np.ndarray], np.ndarray]
    cost: float


@dataclass(frozen=True)
class IhocProblem:
    name: str
    n_x: int
    n_u: int
    x0: np.ndarray
    dynamics: Callable[[np.ndarray, np.ndarray], np.ndarray]
    running_cost: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dynamics_jacobian: Optional[Callable] = None
    cost_gradient: Optional[Callable] = None
    exact: Optional[ExactSolution] = None


# -- example 1 ------------------------------------------------------------------


def _clamped(x_row: np.ndarray) -> np.ndarray:
    if np.any(x_row < _STATE_FLOOR):
        warnings.warn(
            "state clamped to the domain of ln(x) during evaluation",
            DomainClampWarning,
            stacklevel=3,
        )
        return np.maximum(x_row, _STATE_FLOOR)
    return x_row


def _ex1a_dynamics(x, u):
    xs = _clamped(x[0])
    return (xs * np.log(xs) + xs * u[0])[None, :]


def _ex1a_cost(x, u):
    xs = _clamped(x[0])
    return 0.5 * (np.log(xs) ** 2 + u[0] ** 2)


def _ex1a_dynamics_jacobian(x, u):
    xs = _clamped(x[0])
    df_dx = (np.log(xs) + 1.0 + u[0])[None, None, :]
    df_du = xs[None, None, :]
    return df_dx, df_du


def _ex1a_cost_gradient(x, u):
    xs = _clamped(x[0])
    return (np.log(xs) / xs)[None, :], u[0][None, :]


def _ex1b_dynamics(x, u):
    return x + u


def _ex1b_cost(x, u):
    return 0.5 * (x[0] ** 2 + u[0] ** 2)


def _ex1b_dynamics_jacobian(x, u):
    m = x.shape[1]
    ones = np.ones((1, 1, m))
    return ones, ones.copy()


def _ex1b_cost_gradient(x, u):
    return x.copy(), u.copy()


def _ex1_decay(t: np.ndarray) -> np.ndarray:
    return _LN2 * np.exp(-_SQRT2 * np.asarray(t, dtype=float))


def _ex1a_exact_state(t):
    return np.exp(_ex1_decay(t))[None, :]


def _ex1b_exact_state(t):
    return _ex1_decay(t)[None, :]


def _ex1_exact_control(t):
    return (-(1.0 + _SQRT2) * _ex1_decay(t))[None, :]


def example1(form: str = "b") -> IhocProblem:
    """The scalar benchmark, in its original form ("a") or after the
    logarithmic change of variables ("b")."""
    form = form.lower()
    if form == "a":
        return IhocProblem(
            name="example1-a",
            n_x=1,
            n_u=1,
            x0=np.array([2.0]),
            dynamics=_ex1a_dynamics,
            running_cost=_ex1a_cost,
            dynamics_jacobian=_ex1a_dynamics_jacobian,
            cost_gradient=_ex1a_cost_gradient,
            exact=ExactSolution(_ex1a_exact_state, _ex1_exact_control, EXAMPLE1_COST),
        )
    if form == "b":
        return IhocProblem(
            name="example1-b",
            n_x=1,
            n_u=1,
            x0=np.array([_LN2]),
            dynamics=_ex1b_dynamics,
            running_cost=_ex1b_cost,
            dynamics_jacobian=_ex1b_dynamics_jacobian,
            cost_gradient=_ex1b_cost_gradient,
            exact=ExactSolution(_ex1b_exact_state, _ex1_exact_control, EXAMPLE1_COST),
        )
    raise ValueError(f"unknown form {form!r}, expected 'a' or 'b'")


# -- example 2 ------------------------------------------------------------------


def _ex2_dynamics(x, u):
    return np.vstack([x[1], 2.0 * x[0] - x[1] + u[0]])


def _ex2_cost(x, u):
    return x[0] ** 2 + 0.5 * x[1] ** 2 + 0.25 * u[0] ** 2


def _ex2_dynamics_jacobian(x, u):
    m = x.shape[1]
    df_dx = np.broadcast_to(
        np.array([[0.0, 1.0], [2.0, -1.0]])[:, :, None], (2, 2, m)
    ).copy()
    df_du = np.broadcast_to(np.array([[0.0], [1.0]])[:, :, None], (2, 1, m)).copy()
    return df_dx, df_du


def _ex2_cost_gradient(x, u):
    return np.vstack([2.0 * x[0], x[1]]), 0.5 * u


def _ex2_propagator(t: np.ndarray) -> np.ndarray:
    """exp(M t) for the 2x2 closed-loop matrix, via its eigendecomposition.

    The eigenvalues are real, distinct, and negative, so the spectral
    formula exp(Mt) = (e^{l1 t}(M - l2 I) - e^{l2 t}(M - l1 I)) / (l1 - l2)
    applies directly.
    """
    tr = EXAMPLE2_M[0, 0] + EXAMPLE2_M[1, 1]
    det = EXAMPLE2_M[0, 0] * EXAMPLE2_M[1, 1] - EXAMPLE2_M[0, 1] * EXAMPLE2_M[1, 0]
    disc = math.sqrt(tr * tr - 4.0 * det)
    l1 = 0.5 * (tr + disc)
    l2 = 0.5 * (tr - disc)
    t = np.asarray(t, dtype=float)
    e1 = np.exp(l1 * t)
    e2 = np.exp(l2 * t)
    eye = np.eye(2)
    m1 = EXAMPLE2_M - l2 * eye
    m2 = EXAMPLE2_M - l1 * eye
    return (
        e1[None, None, :] * m1[:, :, None] - e2[None, None, :] * m2[:, :, None]
    ) / (l1 - l2)


_EX2_X0 = np.array([-4.0, 4.0])


def _ex2_exact_state(t):
    return np.einsum("ijt,j->it", _ex2_propagator(t), _EX2_X0)


def _ex2_exact_control(t):
    return -(EXAMPLE2_K @ _ex2_exact_state(t))[None, :]


def example2() -> IhocProblem:
    """The planar linear-quadratic regulator benchmark."""
    return IhocProblem(
        name="example2",
        n_x=2,
        n_u=1,
        x0=_EX2_X0.copy(),
        dynamics=_ex2_dynamics,
        running_cost=_ex2_cost,
        dynamics_jacobian=_ex2_dynamics_jacobian,
        cost_gradient=_ex2_cost_gradient,
        exact=ExactSolution(_ex2_exact_state, _ex2_exact_control, EXAMPLE2_COST),
    )


# -- registry -------------------------------------------------------------------

_REGISTRY: dict[str, Callable[[], IhocProblem]] = {
    "example1-a": lambda: example1("a"),
    "example1-b": lambda: example1("b"),
    "example2": example2,
}

_CHECKED: set[str] = set()


def problem_names() -> list[str]:
    return sorted(_REGISTRY)


def get_problem(name: str) -> IhocProblem:
    """Look up a registered problem; consistency-checks it on first access."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KeyError(
            f"unknown problem {name!r}; registered: {', '.join(problem_names())}"
        ) from None
    problem = factory()
    if name not in _CHECKED:
        check_problem(problem)
        _CHECKED.add(name)
    return problem


def check_problem(problem: IhocProblem, points: int = 20, seed: int = 0) -> None:
    """Registration checks: output shapes and, when supplied, agreement of the
    analytic stage derivatives with central finite differences."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.5, 1.5, size=(problem.n_x, points))
    u = rng.uniform(-1.0, 1.0, size=(problem.n_u, points))
    f = problem.dynamics(x, u)
    if f.shape != (problem.n_x, points):
        raise ValueError(
            f"dynamics of {problem.name} returned shape {f.shape}, "
            f"expected {(problem.n_x, points)}"
        )
    g = problem.running_cost(x, u)
    if np.shape(g) != (points,):
        raise ValueError(f"running cost of {problem.name} must return one value per node")
    if problem.x0.shape != (problem.n_x,):
        raise ValueError(f"x0 of {problem.name} has wrong length")

    if problem.dynamics_jacobian is not None:
        df_dx, df_du = problem.dynamics_jacobian(x, u)
        fd_dx, fd_du = _fd_dynamics_jacobian(problem, x, u)
        _assert_close(df_dx, fd_dx, problem.name, "df/dx")
        _assert_close(df_du, fd_du, problem.name, "df/du")
    if problem.cost_gradient is not None:
        dg_dx, dg_du = problem.cost_gradient(x, u)
        fd_gx, fd_gu = _fd_cost_gradient(problem, x, u)
        _assert_close(dg_dx, fd_gx, problem.name, "dg/dx")
        _assert_close(dg_du, fd_gu, problem.name, "dg/du")

    if problem.exact is not None:
        x0_check = problem.exact.state(np.array([0.0]))[:, 0]
        if np.max(np.abs(x0_check - problem.x0)) > 1e-12:
            raise ValueError(f"exact state of {problem.name} does not start at x0")


def _assert_close(analytic, numeric, name, label, tol=1e-5):
    scale = np.maximum(1.0, np.abs(numeric))
    err = np.max(np.abs(analytic - numeric) / scale)
    if err > tol:
        raise ValueError(
            f"analytic {label} of {name} disagrees with finite differences "
            f"(relative error {err:.2e})"
        )


_FD_STEP = float(np.cbrt(np.finfo(float).eps))


def _fd_dynamics_jacobian(problem, x, u):
    n_x, m = x.shape
    n_u = u.shape[0]
    df_dx = np.empty((n_x, n_x, m))
    df_du = np.empty((n_x, n_u, m))
    for k in range(n_x):
        h = _FD_STEP * np.maximum(1.0, np.abs(x[k]))
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        df_dx[:, k, :] = (problem.dynamics(xp, u) - problem.dynamics(xm, u)) / (2.0 * h)
    for k in range(n_u):
        h = _FD_STEP * np.maximum(1.0, np.abs(u[k]))
        up, um = u.copy(), u.copy()
        up[k] += h
        um[k] -= h
        df_du[:, k, :] = (problem.dynamics(x, up) - problem.dynamics(x, um)) / (2.0 * h)
    return df_dx, df_du


def _fd_cost_gradient(problem, x, u):
    n_x, m = x.shape
    n_u = u.shape[0]
    dg_dx = np.empty((n_x, m))
    dg_du = np.empty((n_u, m))
    for k in range(n_x):
        h = _FD_STEP * np.maximum(1.0, np.abs(x[k]))
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        dg_dx[k] = (problem.running_cost(xp, u) - problem.running_cost(xm, u)) / (2.0 * h)
    for k in range(n_u):
        h = _FD_STEP * np.maximum(1.0, np.abs(u[k]))
        up, um = u.copy(), u.copy()
        up[k] += h
        um[k] -= h
        dg_du[k] = (problem.running_cost(x, up) - problem.running_cost(x, um)) / (2.0 * h)
    return dg_dx, dg_du


def eval_exact(sol: ExactSolution, t_grid) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized exact states and controls on a grid of horizon times."""
    t = np.asarray(t_grid, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("horizon times must be nonnegative")
    return sol.state(t), sol.control(t)
