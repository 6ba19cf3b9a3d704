"""Error metrics, truncation-bound evaluators, stability studies, and sweeps.

This module packages the experiment layer: absolute-error reports against
closed-form solutions, evaluation of the a-priori truncation error bounds
(with the supremum of the driving derivative supplied by the caller, since
it is not computable in general), the Lebesgue-constant study with its
logarithmic fit, the divergence profile over growing grid sizes, and the
Cartesian-product sweep engine with incremental persistence.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .barycentric import lebesgue_constant, weights_switch
from .gegenbauer import GegenbauerBasis, ggr_nodes
from .maps import DomainMap, MapKind
from .problems import IhocProblem, eval_exact, get_problem
from .solver import SolveReport, SolverConfig, solve
from .transcription import Transcription, TranscriptionForm, transcribe

__all__ = [
    "ErrorReport",
    "BoundEvaluation",
    "SweepAxes",
    "SweepRecord",
    "SweepResult",
    "error_report",
    "g_combined_sup_norm",
    "truncation_bound",
    "cost_truncation_bound",
    "evaluate_bounds",
    "estimate_sup_derivative",
    "run_point",
    "divergence_profile",
    "divergence_study",
    "sweep",
    "lebesgue_study",
    "log_linear_fit",
]

#: number of uniform evaluation points used for figure-style error reports
UNIFORM_GRID_POINTS = 101

#: right end of the default uniform evaluation window
UNIFORM_GRID_HORIZON = 10.0


@dataclass(frozen=True)
class ErrorReport:
    """Absolute trajectory / cost errors against a closed-form solution."""

    mae_xu: float
    ae_j: float
    eval_grid: str


def error_report(trajectory, exact, grid_spec: str = "uniform") -> ErrorReport:
    """Max-abs state/control error and cost error on the requested grid.

    ``grid_spec`` is either "nodes" (compare at the collocation images) or
    "uniform" (101 evenly spaced horizon times on [0, 10]).
    """
    if grid_spec == "nodes":
        t = trajectory.t_nodes
        states = trajectory.states
        controls = trajectory.controls
        desc = "collocation nodes"
    elif grid_spec == "uniform":
        t = np.linspace(0.0, UNIFORM_GRID_HORIZON, UNIFORM_GRID_POINTS)
        states = trajectory.state_at(t)
        controls = trajectory.control_at(t)
        desc = f"{UNIFORM_GRID_POINTS} uniform points on [0, {UNIFORM_GRID_HORIZON:g}]"
    else:
        raise ValueError(f"unknown grid spec {grid_spec!r}")
    exact_states, exact_controls = eval_exact(exact, t)
    mae = max(
        float(np.max(np.abs(states - exact_states))),
        float(np.max(np.abs(controls - exact_controls))),
    )
    return ErrorReport(
        mae_xu=mae, ae_j=abs(trajectory.J_n - exact.cost), eval_grid=desc
    )


# -- truncation bounds ------------------------------------------------------------


def g_combined_sup_norm(n: int, alpha: float) -> float:
    """Supremum norm of the combined polynomial G_n + G_{n+1} on [-1, 1).

    Equals 2 for alpha >= 0; for -1/2 < alpha < 0 a parity-dependent
    gamma-ratio expression applies.
    """
    if alpha <= -0.5:
        raise ValueError("alpha must exceed -1/2")
    if n < 0:
        raise ValueError("n must be nonnegative")
    if alpha >= 0.0:
        return 2.0
    if n % 2 == 0:
        log_core = (
            gammaln(alpha + 0.5)
            + gammaln((n + 1.0) / 2.0)
            - 0.5 * math.log(math.pi)
            - gammaln(alpha + (n + 1.0) / 2.0)
        )
        return math.exp(log_core) * (1.0 + math.sqrt((n + 1.0) / (2.0 * alpha + n + 1.0)))
    log_core = (
        gammaln(alpha + 0.5)
        + gammaln(n / 2.0)
        - math.log(2.0)
        - 0.5 * math.log(math.pi)
        - gammaln(n / 2.0 + alpha + 1.0)
    )
    return math.exp(log_core) * (math.sqrt(n * (2.0 * alpha + n)) + n)


def _bound_log_prefactor(n: int, alpha: float) -> float:
    """log of Gamma(n+2a+1) Gamma(a+1) / ((n+1)! Gamma(n+a+1) Gamma(2a+1))."""
    return (
        gammaln(n + 2.0 * alpha + 1.0)
        + gammaln(alpha + 1.0)
        - gammaln(n + 2.0)
        - gammaln(n + alpha + 1.0)
        - gammaln(2.0 * alpha + 1.0)
    )


def truncation_bound(n: int, alpha: float, a_sup: float, tau_j: float) -> float:
    """Upper bound on the running-integral truncation error at node tau_j,
    given a_sup >= sup |psi^(n+1)| of the integrand."""
    if a_sup <= 0.0:
        raise ValueError("a_sup must be positive")
    if alpha <= -0.5:
        raise ValueError("alpha must exceed -1/2")
    log_val = (
        math.log(a_sup)
        - n * math.log(2.0)
        + _bound_log_prefactor(n, alpha)
        + math.log(g_combined_sup_norm(n, alpha))
    )
    value = math.exp(log_val) * (tau_j + 1.0)
    if not math.isfinite(value):
        raise OverflowError("truncation bound overflows")
    return value


def cost_truncation_bound(n: int, alpha: float, a_sup: float) -> float:
    """Companion bound for the full-interval cost quadrature."""
    if a_sup <= 0.0:
        raise ValueError("a_sup must be positive")
    if alpha <= -0.5:
        raise ValueError("alpha must exceed -1/2")
    log_val = (
        math.log(a_sup)
        - (n - 1.0) * math.log(2.0)
        + _bound_log_prefactor(n, alpha)
        + math.log(g_combined_sup_norm(n, alpha))
    )
    value = math.exp(log_val)
    if not math.isfinite(value):
        raise OverflowError("truncation bound overflows")
    return value


@dataclass(frozen=True)
class BoundEvaluation:
    n: int
    alpha: float
    k_combined: float
    gnorm: float
    bound_at_node: np.ndarray


def evaluate_bounds(n: int, alpha: float, a_sup: float, nodes) -> BoundEvaluation:
    """Truncation bounds at every node, plus the associated constants."""
    basis = GegenbauerBasis(alpha)
    nodes = np.asarray(nodes, dtype=float)
    bounds = np.array([truncation_bound(n, alpha, a_sup, t) for t in nodes])
    return BoundEvaluation(
        n=n,
        alpha=alpha,
        k_combined=basis.leading_coefficient(n + 1),
        gnorm=g_combined_sup_norm(n, alpha),
        bound_at_node=bounds,
    )


def estimate_sup_derivative(
    fun: Callable[[np.ndarray], np.ndarray],
    order: int,
    lo: float = -1.0,
    hi: float = 1.0,
    step: float = 0.1,
) -> float:
    """Crude sup-norm estimate of an iterated-difference derivative.

    Applies the forward difference ``order`` times on a uniform grid of
    spacing ``step``; adequate for the small orders used in the certified
    bound checks.
    """
    x = np.arange(lo, hi + step / 2.0, step)
    vals = fun(x)
    d = np.diff(vals, n=order) / step**order
    return float(np.max(np.abs(d)))


# -- single experiment points -------------------------------------------------------


@dataclass(frozen=True)
class SweepRecord:
    n: int
    alpha: float
    L: float
    map_kind: str
    guess: str
    status: str
    outer_iters: int
    inner_iters: int
    max_violation: float
    j_n: float
    mae_xu: float
    ae_j: float
    message: str = ""

    CSV_FIELDS = (
        "n",
        "alpha",
        "L",
        "map",
        "guess",
        "status",
        "iters",
        "mae_xu",
        "ae_j",
        "J_n",
    )

    def csv_row(self) -> list[str]:
        fmt = lambda v: format(v, ".17g")
        return [
            str(self.n),
            fmt(self.alpha),
            fmt(self.L),
            self.map_kind,
            self.guess,
            self.status,
            str(self.inner_iters),
            fmt(self.mae_xu),
            fmt(self.ae_j),
            fmt(self.j_n),
        ]


def run_point(
    problem: IhocProblem,
    n: int,
    alpha: float,
    L: float,
    map_kind: MapKind | str,
    guess="ones",
    cfg: Optional[SolverConfig] = None,
    error_grid: str = "nodes",
    form: TranscriptionForm = TranscriptionForm.GENERIC,
) -> tuple[SweepRecord, SolveReport, Transcription]:
    """Build, solve, and score a single (n, alpha, L, map, guess) point."""
    basis = GegenbauerBasis(alpha)
    grid = ggr_nodes(basis, n)
    domain_map = DomainMap(MapKind(map_kind), L)
    trans = transcribe(problem, grid, domain_map, form=form)
    z0 = trans.initial_guess(guess)
    report = solve(trans.nlp_functions(), z0, cfg)
    mae = math.nan
    ae_j = math.nan
    if problem.exact is not None:
        traj = trans.recover(report.z_opt)
        err = error_report(traj, problem.exact, error_grid)
        mae, ae_j = err.mae_xu, err.ae_j
    record = SweepRecord(
        n=n,
        alpha=alpha,
        L=L,
        map_kind=MapKind(map_kind).value,
        guess=guess if isinstance(guess, str) else "custom",
        status=report.status.value,
        outer_iters=report.outer_iters,
        inner_iters=report.inner_iters_total,
        max_violation=report.max_constraint_violation,
        j_n=report.cost,
        mae_xu=mae,
        ae_j=ae_j,
    )
    return record, report, trans


# -- divergence profile --------------------------------------------------------------


@dataclass(frozen=True)
class DivergenceRow:
    n: int
    L: float
    map_kind: str
    status: str
    mae_xu: float
    ae_j: float
    max_tprime: float
    min_gap: float
    message: str = ""


def divergence_profile(
    problem: IhocProblem,
    map_kind: MapKind | str,
    alpha: float,
    L: float,
    n_list: Sequence[int],
    cfg: Optional[SolverConfig] = None,
) -> list[DivergenceRow]:
    """Solve at each grid size and tabulate errors with conditioning markers.

    Individual failures are recorded per row instead of aborting the study.
    """
    if list(n_list) != sorted(n_list):
        raise ValueError("n_list must be ascending")
    kind = MapKind(map_kind)
    rows = []
    for n in n_list:
        basis = GegenbauerBasis(alpha)
        grid = ggr_nodes(basis, n)
        domain_map = DomainMap(kind, L)
        tprime = domain_map.derivative(1, grid.nodes)
        min_gap = float(np.min(1.0 - grid.nodes))
        try:
            record, _, _ = run_point(problem, n, alpha, L, kind, "ones", cfg)
            rows.append(
                DivergenceRow(
                    n=n,
                    L=L,
                    map_kind=kind.value,
                    status=record.status,
                    mae_xu=record.mae_xu,
                    ae_j=record.ae_j,
                    max_tprime=float(np.max(tprime)),
                    min_gap=min_gap,
                )
            )
        except Exception as exc:  # pragma: no cover - defensive per-row capture
            rows.append(
                DivergenceRow(
                    n=n,
                    L=L,
                    map_kind=kind.value,
                    status="error",
                    mae_xu=math.nan,
                    ae_j=math.nan,
                    max_tprime=float(np.max(tprime)),
                    min_gap=min_gap,
                    message=str(exc),
                )
            )
    return rows


def divergence_study(
    problem: IhocProblem,
    map_kind: MapKind | str,
    alpha: float,
    L_values: Sequence[float],
    n_list: Sequence[int],
    cfg: Optional[SolverConfig] = None,
) -> dict[int, DivergenceRow]:
    """Best-effort row per grid size: the smallest error over the L grid."""
    best: dict[int, DivergenceRow] = {}
    for L in L_values:
        for row in divergence_profile(problem, map_kind, alpha, L, n_list, cfg):
            current = best.get(row.n)
            if current is None or _better_row(row, current):
                best[row.n] = row
    return best


def _better_row(candidate: DivergenceRow, incumbent: DivergenceRow) -> bool:
    if math.isnan(candidate.mae_xu):
        return False
    if math.isnan(incumbent.mae_xu):
        return True
    return candidate.mae_xu < incumbent.mae_xu


# -- sweep engine ---------------------------------------------------------------------


@dataclass(frozen=True)
class SweepAxes:
    n_values: Sequence[int]
    alpha_values: Sequence[float]
    L_values: Sequence[float]
    map_kinds: Sequence[str] = (MapKind.LOGARITHMIC.value,)
    guesses: Sequence[str] = ("ones",)

    def points(self) -> list[tuple]:
        pts = []
        for n in self.n_values:
            for alpha in self.alpha_values:
                for L in self.L_values:
                    for kind in self.map_kinds:
                        for guess in self.guesses:
                            pts.append((n, alpha, L, kind, guess))
        if not pts:
            raise ValueError("sweep axes describe no points")
        return pts


@dataclass
class SweepResult:
    axes: SweepAxes
    records: list[SweepRecord] = field(default_factory=list)
    error_grid: str = "nodes"

    def best_by_n(self) -> dict[int, SweepRecord]:
        best: dict[int, SweepRecord] = {}
        for rec in self.records:
            if math.isnan(rec.mae_xu):
                continue
            cur = best.get(rec.n)
            if cur is None or rec.mae_xu < cur.mae_xu:
                best[rec.n] = rec
        return best

    @property
    def all_failed(self) -> bool:
        return all(r.status == "error" for r in self.records)


def _sweep_worker(args) -> SweepRecord:
    problem_name, point, cfg, error_grid = args
    problem = get_problem(problem_name)
    n, alpha, L, kind, guess = point
    try:
        record, _, _ = run_point(problem, n, alpha, L, kind, guess, cfg, error_grid)
        return record
    except Exception as exc:
        return SweepRecord(
            n=n,
            alpha=alpha,
            L=L,
            map_kind=str(kind),
            guess=str(guess),
            status="error",
            outer_iters=0,
            inner_iters=0,
            max_violation=math.nan,
            j_n=math.nan,
            mae_xu=math.nan,
            ae_j=math.nan,
            message=str(exc),
        )


def sweep(
    problem: IhocProblem,
    axes: SweepAxes,
    cfg: Optional[SolverConfig] = None,
    jobs: int = 1,
    error_grid: str = "nodes",
    on_record: Optional[Callable[[SweepRecord], None]] = None,
) -> SweepResult:
    """Cartesian-product runs over the axes.

    With ``jobs`` > 1 the points run in worker processes (the problem is
    re-resolved by name in each worker).  Records are delivered to
    ``on_record`` incrementally, always in deterministic point order.
    """
    points = axes.points()
    tasks = [(problem.name, p, cfg, error_grid) for p in points]
    result = SweepResult(axes=axes, error_grid=error_grid)
    if jobs <= 1:
        for task in tasks:
            record = _sweep_worker(task)
            result.records.append(record)
            if on_record is not None:
                on_record(record)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for record in pool.map(_sweep_worker, tasks):
                result.records.append(record)
                if on_record is not None:
                    on_record(record)
    return result


# -- stability study -----------------------------------------------------------------


def lebesgue_study(
    alpha: float, n_values: Sequence[int], density_factor: int = 12
) -> dict:
    """Lebesgue constants over ``n_values`` plus the logarithmic fit."""
    ns = list(n_values)
    lams = []
    for n in ns:
        grid = ggr_nodes(GegenbauerBasis(alpha), n)
        w = weights_switch(grid)
        lams.append(lebesgue_constant(w, density_factor * (n + 1)))
    c1, c2, r2 = log_linear_fit(np.array(ns, dtype=float), np.array(lams))
    return {
        "alpha": alpha,
        "n": ns,
        "lebesgue": lams,
        "c1": c1,
        "c2": c2,
        "r_squared": r2,
    }


def log_linear_fit(ns: np.ndarray, values: np.ndarray) -> tuple[float, float, float]:
    """Least-squares fit values ~ c1 + c2 ln(n); returns (c1, c2, R^2)."""
    design = np.column_stack([np.ones_like(ns), np.log(ns)])
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    fitted = design @ coef
    ss_res = float(np.sum((values - fitted) ** 2))
    ss_tot = float(np.sum((values - values.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    return float(coef[0]), float(coef[1]), r2
