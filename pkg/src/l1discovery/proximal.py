"""Proximal-gradient solvers for ``min_w f(w) + alpha ||w||_1`` with smooth ``f``.

The smooth part is described by a :class:`SmoothObjective` (value and
gradient callables). ISTA iterates ``w <- prox(w - step * grad f(w))`` where
the L1 prox is soft-thresholding; the pathwise variant sweeps a linearly
decreasing ``alpha`` schedule with warm starts. Finite-difference helpers
certify hand-written gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core_sparse import Path, PathKnot, QuadraticProblem
from .exceptions import (
    DivergedError,
    LengthMismatchError,
    NonFiniteObjectiveError,
    NotConvergedError,
    StageError,
)

__all__ = [
    "SmoothObjective",
    "IstaConfig",
    "IstaInfo",
    "GradientCheckReport",
    "prox_l1",
    "alpha_max_general",
    "fixed_point_residual",
    "estimate_step",
    "ista_solve",
    "pathwise_ista",
    "finite_diff_gradient",
    "check_gradient",
    "quadratic_objective",
]

# backtracking gives up after this many consecutive halvings
_MAX_HALVINGS = 80


@dataclass(frozen=True)
class SmoothObjective:
    """Value/gradient contract for a differentiable mismatch ``f``.

    Parameters
    ----------
    dim : int
        Length of the parameter vector.
    value, gradient : callable
        ``f(w)`` and ``grad f(w)``. Non-finite values are allowed as a
        signal of an infeasible iterate; solvers turn them into errors.
    value_and_gradient : callable, optional
        Fused evaluation, used when provided.
    lipschitz : float, optional
        Known Lipschitz constant of the gradient (``1/lipschitz`` is a safe
        fixed step).
    positive_coords : tuple of int
        Coordinates with a positive natural domain; gradient checks sample
        them in ``[0.5, 9]`` instead of ``[-2, 2]``.
    """

    dim: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    value_and_gradient: Callable[[np.ndarray], tuple[float, np.ndarray]] | None = None
    lipschitz: float | None = None
    positive_coords: tuple[int, ...] = ()

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")

    def evaluate(self, w: np.ndarray) -> tuple[float, np.ndarray]:
        if self.value_and_gradient is not None:
            f, g = self.value_and_gradient(w)
        else:
            f, g = self.value(w), self.gradient(w)
        return float(f), np.asarray(g, dtype=float)


@dataclass(frozen=True)
class IstaConfig:
    step: float = 1e-3
    max_steps: int = 200_000
    tol: float = 1e-10
    backtracking: bool = True
    backtrack_factor: float = 0.5
    divergence_cap: float = 1e12

    def __post_init__(self):
        for name in ("step", "max_steps", "tol", "divergence_cap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"IstaConfig.{name} must be strictly positive")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")


@dataclass(frozen=True)
class IstaInfo:
    """Diagnostics of an ISTA run: iterations, final step, fixed-point residual."""

    n_iter: int
    step: float
    residual: float
    objective: float


@dataclass(frozen=True)
class GradientCheckReport:
    passed: bool
    max_rel_error: float
    trials: int
    threshold: float
    errors: tuple[float, ...] = field(default=(), repr=False)


def prox_l1(v, theta: float) -> np.ndarray:
    """Proximal map of ``theta * ||.||_1``: componentwise soft-thresholding."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    v = np.asarray(v, dtype=float)
    # "+ 0.0" turns the -0.0 of thresholded negatives into +0.0
    return np.sign(v) * np.maximum(np.abs(v) - theta, 0.0) + 0.0


def alpha_max_general(objective: SmoothObjective) -> float:
    """``max_i |df/dw_i(0)|``: the smallest ``alpha`` making 0 an ISTA fixed point."""
    g = np.asarray(objective.gradient(np.zeros(objective.dim)), dtype=float)
    return float(np.max(np.abs(g)))


def fixed_point_residual(objective: SmoothObjective, w, alpha: float, step: float) -> float:
    """``||w - prox(w - step * grad f(w), step * alpha)||_inf``."""
    w = np.asarray(w, dtype=float)
    g = np.asarray(objective.gradient(w), dtype=float)
    return float(np.max(np.abs(w - prox_l1(w - step * g, step * alpha))))


def estimate_step(objective: SmoothObjective, w, iters: int = 30, seed: int = 0) -> float:
    """Reciprocal of the largest local curvature of ``f`` near ``w``.

    Power iteration on finite-difference Hessian-vector products; a cheap
    starting step for backtracking ISTA. Uses ``objective.lipschitz`` when
    known.
    """
    if objective.lipschitz:
        return 1.0 / objective.lipschitz
    w = np.asarray(w, dtype=float)
    v = np.random.default_rng(seed).standard_normal(objective.dim)
    v /= np.linalg.norm(v)
    h = 1e-6 * max(1.0, float(np.linalg.norm(w)))
    lam = 0.0
    for _ in range(iters):
        hv = (np.asarray(objective.gradient(w + h * v)) - np.asarray(objective.gradient(w - h * v))) / (2 * h)
        lam = float(np.linalg.norm(hv))
        if not np.isfinite(lam) or lam == 0.0:
            break
        v = hv / lam
    if not np.isfinite(lam) or lam <= 0.0:
        return 1.0
    return 1.0 / lam


def _l1(w):
    return float(np.sum(np.abs(w)))


def ista_solve(
    objective: SmoothObjective,
    alpha: float,
    w0,
    config: IstaConfig | None = None,
    return_info: bool = False,
):
    """Iterative soft-thresholding for ``f(w) + alpha ||w||_1``.

    Parameters
    ----------
    objective : SmoothObjective
    alpha : float
        Nonnegative regularisation weight.
    w0 : array_like
        Starting point.
    config : IstaConfig, optional
        Defaults to :class:`IstaConfig` with ``step = 1 / objective.lipschitz``
        when the objective knows its Lipschitz constant.
    return_info : bool
        Also return an :class:`IstaInfo`.

    Returns
    -------
    w : ndarray
        An ISTA fixed point within ``10 * tol`` (sup-norm) for the final
        step size.

    Notes
    -----
    With backtracking the step is multiplied by ``backtrack_factor`` until
    the composite objective does not increase; the reduced step is kept for
    later iterations. Iteration stops once the iterate change or the
    composite-objective change drops below ``tol`` *and* the fixed-point
    residual is within ``10 * tol``.

    Raises
    ------
    NonFiniteObjectiveError
        ``f`` is NaN or infinite at the start point, or (fixed-step mode) at
        an iterate.
    DivergedError
        Fixed-step mode only: objective or iterate norm beyond the cap.
    NotConvergedError
        ``max_steps`` exhausted; ``last_iterate`` holds the final vector.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if config is None:
        config = IstaConfig(step=1.0 / objective.lipschitz) if objective.lipschitz else IstaConfig()
    cfg = config
    w = np.array(w0, dtype=float)
    if w.shape != (objective.dim,):
        raise LengthMismatchError(f"w0 has shape {w.shape}, expected ({objective.dim},)")
    if not np.all(np.isfinite(w)):
        raise ValueError("w0 must be finite")

    step = cfg.step
    f, g = objective.evaluate(w)
    if not math.isfinite(f):
        raise NonFiniteObjectiveError(w.copy())
    F = f + alpha * _l1(w)

    for it in range(1, cfg.max_steps + 1):
        for _ in range(_MAX_HALVINGS):
            w_new = prox_l1(w - step * g, step * alpha)
            with np.errstate(over="ignore", invalid="ignore"):
                f_new, g_new = objective.evaluate(w_new)
            F_new = f_new + alpha * _l1(w_new)
            if not cfg.backtracking:
                if not math.isfinite(F_new):
                    raise NonFiniteObjectiveError(w_new)
                if abs(F_new) > cfg.divergence_cap or np.linalg.norm(w_new) > cfg.divergence_cap:
                    raise DivergedError(
                        f"iterate diverged at step {it} (objective {F_new:.3e}); reduce the step"
                    )
                break
            if math.isfinite(F_new) and F_new <= F + 4 * np.finfo(float).eps * abs(F):
                break
            step *= cfg.backtrack_factor
        else:
            raise NotConvergedError(
                cfg.max_steps, last_iterate=w, message="step size underflow in backtracking"
            )

        small = np.linalg.norm(w_new - w) < cfg.tol or abs(F_new - F) < cfg.tol
        w, f, g, F = w_new, f_new, g_new, F_new
        if small:
            res = float(np.max(np.abs(w - prox_l1(w - step * g, step * alpha))))
            if res <= 10 * cfg.tol:
                if return_info:
                    return w, IstaInfo(it, step, res, F)
                return w
    raise NotConvergedError(cfg.max_steps, last_iterate=w)


def pathwise_ista(
    objective: SmoothObjective,
    n_alpha: int,
    config: IstaConfig | None = None,
) -> Path:
    """ISTA along ``alpha_l = (1 - l / n_alpha) * alpha_0``, ``l = 0..n_alpha-1``.

    ``alpha_0 = alpha_max_general(objective)`` and the knot at ``l = 0`` is
    the zero vector. Each solve is warm-started from the previous knot and
    inherits its (possibly backtracked) step size. ``Path.steps`` is empty;
    per-knot step sizes and residuals are in ``path.info``.

    Raises
    ------
    StageError
        Wraps the solver error of the failing knot, stage ``"pathwise l=<l>"``.
    """
    if n_alpha < 2:
        raise ValueError("n_alpha must be at least 2")
    cfg = config or IstaConfig()
    alpha0 = alpha_max_general(objective)
    w = np.zeros(objective.dim)
    knots = [PathKnot(alpha0, w.copy(), (), float(objective.value(w)))]
    info = [IstaInfo(0, cfg.step, 0.0, knots[0].mismatch)]
    step = cfg.step
    for l in range(1, n_alpha):
        alpha = (1 - l / n_alpha) * alpha0
        local = IstaConfig(
            step, cfg.max_steps, cfg.tol, cfg.backtracking, cfg.backtrack_factor, cfg.divergence_cap
        )
        try:
            w, rec = ista_solve(objective, alpha, w, local, return_info=True)
        except Exception as exc:
            raise StageError(f"pathwise l={l}", exc) from exc
        step = rec.step
        active = tuple(int(i) for i in np.flatnonzero(w))
        knots.append(PathKnot(alpha, w.copy(), active, float(objective.value(w))))
        info.append(rec)
    return Path(tuple(knots), (), stopped_early=False, method="pathwise-ista", info=tuple(info))


def finite_diff_gradient(objective: SmoothObjective, w, h=1e-6) -> np.ndarray:
    """Central differences ``(f(w + h e_i) - f(w - h e_i)) / (2 h)``.

    ``h`` may be a scalar or a per-coordinate array.
    """
    w = np.asarray(w, dtype=float)
    h = np.broadcast_to(np.asarray(h, dtype=float), w.shape)
    if np.any(h <= 0):
        raise ValueError("h must be positive")
    g = np.empty_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h[i]
        fp, fm = objective.value(w + e), objective.value(w - e)
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise NonFiniteObjectiveError(w.copy(), f"objective not finite near coordinate {i}")
        g[i] = (fp - fm) / (2 * h[i])
    return g


def _relative_discrepancy(analytic: np.ndarray, numeric: np.ndarray) -> float:
    # componentwise relative error; components far below the gradient's
    # overall scale are judged against that scale instead of themselves
    floor = 1e-3 * max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-12)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def check_gradient(
    objective: SmoothObjective,
    trials: int = 20,
    seed: int = 0,
    threshold: float = 1e-6,
) -> GradientCheckReport:
    """Compare the analytic gradient with central differences at random points.

    Points have entries uniform in ``[-2, 2]`` (``[0.5, 9]`` on
    ``positive_coords``); the difference step is ``1e-6 * max(1, |w_i|)``.
    Failures are reported, never raised.
    """
    rng = np.random.default_rng(seed)
    errors = []
    for _ in range(trials):
        w = rng.uniform(-2.0, 2.0, objective.dim)
        for i in objective.positive_coords:
            w[i] = rng.uniform(0.5, 9.0)
        try:
            g = np.asarray(objective.gradient(w), dtype=float)
            g_fd = finite_diff_gradient(objective, w, 1e-6 * np.maximum(1.0, np.abs(w)))
            err = _relative_discrepancy(g, g_fd)
        except (FloatingPointError, ValueError):
            err = math.inf
        errors.append(err if math.isfinite(err) else math.inf)
    worst = max(errors) if errors else 0.0
    return GradientCheckReport(worst < threshold, worst, trials, threshold, tuple(errors))


def quadratic_objective(problem: QuadraticProblem) -> SmoothObjective:
    """``f(w) = ||y - X w||^2 / (2n)`` as a :class:`SmoothObjective`."""
    X, y, n = problem.X, problem.y, problem.n_samples

    def value_and_gradient(w):
        r = X @ w - y
        return float(r @ r) / (2 * n), X.T @ r / n

    def value(w):
        r = X @ w - y
        return float(r @ r) / (2 * n)

    def gradient(w):
        return X.T @ (X @ w - y) / n

    L = float(np.linalg.eigvalsh(X.T @ X)[-1]) / n
    return SmoothObjective(problem.n_features, value, gradient, value_and_gradient, lipschitz=L)
