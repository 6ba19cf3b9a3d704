"""Direct transcription of a horizon-mapped control problem to a finite NLP.

Given a problem, a Radau grid, and a domain map, the integral form of the
dynamics is collocated at the grid nodes:

    x_k(tau_j) = sum_i q[j, i] T'(tau_i) f_k(x_i, u_i) + x_k(−1),

and the cost is quadratured with the full-interval row:

    J_n = sum_i qcost[i] T'(tau_i) g(x_i, u_i).

The decision vector stacks the free states (node 0 is pinned to the initial
state) ahead of the controls,

    z = [x_{1,1..n}, ..., x_{nx,1..n}, u_{1,0..n}, ..., u_{nu,0..n}],

and the constraint vector follows the same state-major ordering; row j = 0
of the integration matrix is identically zero, so that row is never
emitted.  The "factored" form folds the map derivative into a Hadamard
division by powers of (1 - tau) with a constant prefactor (2L and
(1 - tau)^2 for the algebraic map, L and (1 - tau) for the logarithmic
map); it is algebraically identical to the generic form and exists because
the divided formulation is the one whose conditioning the analysis module
studies.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .barycentric import BarycentricWeights, lagrange_matrix, weights_switch
from .gegenbauer import RadauGrid
from .maps import DomainMap, MapKind
from .operators import IntegrationMatrix, build_grim
from .problems import IhocProblem

__all__ = [
    "TranscriptionForm",
    "Transcription",
    "NlpFunctions",
    "Trajectory",
    "transcribe",
    "recover",
]

_FD_STEP = float(np.cbrt(np.finfo(float).eps))


class TranscriptionForm(Enum):
    GENERIC = "generic"
    FACTORED = "factored"


@dataclass(frozen=True)
class NlpFunctions:
    """Callable bundle consumed by the solver."""

    dim: int
    n_constraints: int
    cost: Callable[[np.ndarray], float]
    cost_gradient: Callable[[np.ndarray], np.ndarray]
    constraints: Callable[[np.ndarray], np.ndarray]
    constraint_jacobian: Callable[[np.ndarray], np.ndarray]
    lagrangian_gradient: Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Trajectory:
    """Nodal solution data plus continuous re-evaluation support."""

    tau_nodes: np.ndarray
    t_nodes: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    J_n: float
    weights: BarycentricWeights
    domain_map: DomainMap
    t_eval: Optional[np.ndarray] = None
    states_eval: Optional[np.ndarray] = None
    controls_eval: Optional[np.ndarray] = None

    def state_at(self, t) -> np.ndarray:
        basis = self._basis_at(t)
        return self.states @ basis.T

    def control_at(self, t) -> np.ndarray:
        basis = self._basis_at(t)
        return self.controls @ basis.T

    def _basis_at(self, t) -> np.ndarray:
        taus = self.domain_map.inverse(np.atleast_1d(np.asarray(t, dtype=float)))
        return lagrange_matrix(self.weights, taus)


class Transcription:
    """All discrete machinery for one (problem, grid, map) triple."""

    def __init__(
        self,
        problem: IhocProblem,
        grid: RadauGrid,
        domain_map: DomainMap,
        form: TranscriptionForm = TranscriptionForm.GENERIC,
        weights: Optional[BarycentricWeights] = None,
        operators: Optional[IntegrationMatrix] = None,
    ):
        self.problem = problem
        self.grid = grid
        self.domain_map = domain_map
        self.form = TranscriptionForm(form)
        self.weights = weights if weights is not None else weights_switch(grid)
        self.operators = operators if operators is not None else build_grim(grid, self.weights)

        self.n = grid.n
        self.n_x = problem.n_x
        self.n_u = problem.n_u
        self.dim_x = self.n_x * self.n
        self.dim_u = self.n_u * (self.n + 1)
        self.dim = self.dim_x + self.dim_u
        self.n_constraints = self.n_x * self.n

        self.Q = self.operators.Q
        self.qcost = self.operators.qcost
        self.tprime = domain_map.derivative(1, grid.nodes)
        if self.form is TranscriptionForm.FACTORED:
            if domain_map.kind is MapKind.ALGEBRAIC:
                self._prefactor = 2.0 * domain_map.L
                self._divisor = (1.0 - grid.nodes) ** 2
            else:
                self._prefactor = domain_map.L
                self._divisor = 1.0 - grid.nodes

    # -- layout -----------------------------------------------------------------

    def unpack(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Decision vector -> (states (n_x, n+1), controls (n_u, n+1)); state
        column 0 is the pinned initial state."""
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise ValueError(f"decision vector must have length {self.dim}")
        X = np.empty((self.n_x, self.n + 1))
        X[:, 0] = self.problem.x0
        X[:, 1:] = z[: self.dim_x].reshape(self.n_x, self.n)
        U = z[self.dim_x :].reshape(self.n_u, self.n + 1)
        return X, U

    def pack(self, X: np.ndarray, U: np.ndarray) -> np.ndarray:
        return np.concatenate([np.asarray(X)[:, 1:].ravel(), np.asarray(U).ravel()])

    def initial_guess(self, preset="ones") -> np.ndarray:
        if isinstance(preset, str):
            if preset == "ones":
                return np.ones(self.dim)
            if preset == "half":
                return np.full(self.dim, 0.5)
            raise ValueError(f"unknown initial-guess preset {preset!r}")
        z0 = np.asarray(preset, dtype=float)
        if z0.shape != (self.dim,):
            raise ValueError(f"initial guess must have length {self.dim}")
        return z0.copy()

    # -- stage evaluations --------------------------------------------------------

    def _stages(self, z):
        X, U = self.unpack(z)
        F = self.problem.dynamics(X, U)
        g = self.problem.running_cost(X, U)
        return X, U, F, g

    def _weighted_integral(self, F: np.ndarray) -> np.ndarray:
        """Rows j=1..n of the collocated running integral of T' * f."""
        if self.form is TranscriptionForm.GENERIC:
            return (F * self.tprime) @ self.Q[1:].T
        return self._prefactor * ((F / self._divisor) @ self.Q[1:].T)

    # -- NLP callables --------------------------------------------------------------

    def cost(self, z) -> float:
        _, _, _, g = self._stages(z)
        if self.form is TranscriptionForm.GENERIC:
            value = float(self.qcost @ (self.tprime * g))
        else:
            value = float(self._prefactor * (self.qcost @ (g / self._divisor)))
        if not np.isfinite(value):
            bad = np.nonzero(~np.isfinite(np.asarray(g)))[0]
            raise FloatingPointError(
                f"running cost is non-finite at node(s) {bad.tolist()}"
            )
        return value

    def constraints(self, z) -> np.ndarray:
        """Collocation residuals, oriented as (integral term + x0) - state."""
        X, _, F, _ = self._stages(z)
        integral = self._weighted_integral(F)
        c = integral + self.problem.x0[:, None] - X[:, 1:]
        return c.ravel()

    def _stage_derivatives(self, X, U):
        if self.problem.dynamics_jacobian is not None:
            df_dx, df_du = self.problem.dynamics_jacobian(X, U)
        else:
            df_dx, df_du = self._fd_dynamics(X, U)
        if self.problem.cost_gradient is not None:
            dg_dx, dg_du = self.problem.cost_gradient(X, U)
        else:
            dg_dx, dg_du = self._fd_cost(X, U)
        return dg_dx, dg_du, df_dx, df_du

    def _fd_dynamics(self, X, U):
        m = X.shape[1]
        df_dx = np.empty((self.n_x, self.n_x, m))
        df_du = np.empty((self.n_x, self.n_u, m))
        for k in range(self.n_x):
            h = _FD_STEP * np.maximum(1.0, np.abs(X[k]))
            Xp, Xm = X.copy(), X.copy()
            Xp[k] += h
            Xm[k] -= h
            df_dx[:, k, :] = (self.problem.dynamics(Xp, U) - self.problem.dynamics(Xm, U)) / (
                2.0 * h
            )
        for k in range(self.n_u):
            h = _FD_STEP * np.maximum(1.0, np.abs(U[k]))
            Up, Um = U.copy(), U.copy()
            Up[k] += h
            Um[k] -= h
            df_du[:, k, :] = (self.problem.dynamics(X, Up) - self.problem.dynamics(X, Um)) / (
                2.0 * h
            )
        return df_dx, df_du

    def _fd_cost(self, X, U):
        m = X.shape[1]
        dg_dx = np.empty((self.n_x, m))
        dg_du = np.empty((self.n_u, m))
        for k in range(self.n_x):
            h = _FD_STEP * np.maximum(1.0, np.abs(X[k]))
            Xp, Xm = X.copy(), X.copy()
            Xp[k] += h
            Xm[k] -= h
            dg_dx[k] = (self.problem.running_cost(Xp, U) - self.problem.running_cost(Xm, U)) / (
                2.0 * h
            )
        for k in range(self.n_u):
            h = _FD_STEP * np.maximum(1.0, np.abs(U[k]))
            Up, Um = U.copy(), U.copy()
            Up[k] += h
            Um[k] -= h
            dg_du[k] = (self.problem.running_cost(X, Up) - self.problem.running_cost(X, Um)) / (
                2.0 * h
            )
        return dg_dx, dg_du

    @property
    def _omega(self) -> np.ndarray:
        """Effective integrand weights T'(tau_i) regardless of form."""
        if self.form is TranscriptionForm.GENERIC:
            return self.tprime
        return self._prefactor / self._divisor

    def cost_gradient(self, z) -> np.ndarray:
        X, U, _, _ = self._stages(z)
        dg_dx, dg_du, _, _ = self._stage_derivatives(X, U)
        wq = self.qcost * self._omega
        gx = wq * dg_dx
        gu = wq * dg_du
        return np.concatenate([gx[:, 1:].ravel(), gu.ravel()])

    def constraint_jacobian(self, z) -> np.ndarray:
        """Dense Jacobian of ``constraints`` in the documented ordering."""
        X, U, _, _ = self._stages(z)
        _, _, df_dx, df_du = self._stage_derivatives(X, U)
        qw = self.Q[1:] * self._omega  # (n, n+1)
        # d c[k, j] / d x[m, p] = qw[j, p] df_dx[k, m, p] - delta_{km} delta_{jp}
        Jx = np.einsum("jp,kmp->kjmp", qw[:, 1:], df_dx[:, :, 1:])
        eye_x = np.eye(self.n_x)[:, None, :, None] * np.eye(self.n)[None, :, None, :]
        Jx = (Jx - eye_x).reshape(self.n_constraints, self.dim_x)
        Ju = np.einsum("jp,kmp->kjmp", qw, df_du).reshape(self.n_constraints, self.dim_u)
        return np.hstack([Jx, Ju])

    def kkt_gradient(self, z, multipliers) -> np.ndarray:
        """Gradient of cost + r . constraints with respect to z."""
        r = np.asarray(multipliers, dtype=float)
        if r.shape != (self.n_constraints,):
            raise ValueError(
                f"multiplier vector must have length {self.n_constraints}"
            )
        X, U, _, _ = self._stages(z)
        dg_dx, dg_du, df_dx, df_du = self._stage_derivatives(X, U)
        omega = self._omega
        wq = self.qcost * omega
        R = r.reshape(self.n_x, self.n)
        S = (R @ self.Q[1:]) * omega  # (n_x, n+1): sum_j r_{kj} q_{jp} omega_p
        gx = wq * dg_dx + np.einsum("kp,kmp->mp", S, df_dx)
        gu = wq * dg_du + np.einsum("kp,kmp->mp", S, df_du)
        gx = gx[:, 1:] - R
        return np.concatenate([gx.ravel(), gu.ravel()])

    def lagrangian(self, z, multipliers) -> float:
        return self.cost(z) + float(np.dot(multipliers, self.constraints(z)))

    def nlp_functions(self) -> NlpFunctions:
        return NlpFunctions(
            dim=self.dim,
            n_constraints=self.n_constraints,
            cost=self.cost,
            cost_gradient=self.cost_gradient,
            constraints=self.constraints,
            constraint_jacobian=self.constraint_jacobian,
            lagrangian_gradient=self.kkt_gradient,
        )

    # -- recovery -------------------------------------------------------------------

    def recover(self, z, t_eval=None) -> Trajectory:
        """Trajectory object for the decision vector ``z``.

        Continuous values are obtained by interpolating nodal data
        barycentrically in tau at tau = T^{-1}(t); grid nodes reproduce the
        nodal values exactly.
        """
        X, U = self.unpack(z)
        traj = Trajectory(
            tau_nodes=self.grid.nodes.copy(),
            t_nodes=self.domain_map.forward(self.grid.nodes),
            states=X,
            controls=U,
            J_n=self.cost(z),
            weights=self.weights,
            domain_map=self.domain_map,
        )
        if t_eval is None:
            return traj
        t_eval = np.asarray(t_eval, dtype=float)
        return Trajectory(
            tau_nodes=traj.tau_nodes,
            t_nodes=traj.t_nodes,
            states=X,
            controls=U,
            J_n=traj.J_n,
            weights=self.weights,
            domain_map=self.domain_map,
            t_eval=t_eval,
            states_eval=traj.state_at(t_eval),
            controls_eval=traj.control_at(t_eval),
        )


def transcribe(
    problem: IhocProblem,
    grid: RadauGrid,
    domain_map: DomainMap,
    form: TranscriptionForm = TranscriptionForm.GENERIC,
    weights: Optional[BarycentricWeights] = None,
    operators: Optional[IntegrationMatrix] = None,
) -> Transcription:
    """Assemble the NLP data for one (problem, grid, map) triple."""
    return Transcription(problem, grid, domain_map, form, weights, operators)


def recover(transcription: Transcription, z, t_eval=None) -> Trajectory:
    """Module-level alias for :meth:`Transcription.recover`."""
    return transcription.recover(z, t_eval)
