"""Solvers for the L1-regularised least-squares problem

    min_w  1/(2n) ||y - X w||_2^2 + alpha ||w||_1

where the columns of ``X`` have unit Euclidean norm.

Provided here: soft-thresholding, column normalisation and the matching
parameter rescaling, ordinary least squares (optionally restricted to a
support), coordinate descent at a fixed ``alpha``, and the homotopy-type
path algorithms LARS and LARS-LASSO, whose knots can be linearly
interpolated to recover the LASSO solution at any ``alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy import linalg

from .exceptions import (
    CorrelationTieError,
    LengthMismatchError,
    NotConvergedError,
    OutOfRangeError,
    RankDeficientError,
    SingularGramError,
    ZeroColumnError,
)

__all__ = [
    "FLOAT32_EPS",
    "SolverConfig",
    "QuadraticProblem",
    "PathKnot",
    "LarsStep",
    "Path",
    "soft_threshold",
    "normalize_columns",
    "rescale_solution",
    "ols_solve",
    "alpha_max_quadratic",
    "kkt_violation",
    "cd_solve",
    "lars_path",
    "lars_lasso_path",
    "interpolate_path",
]

FLOAT32_EPS = float(np.finfo(np.float32).eps)

_UNIT_NORM_TOL = 1e-12
_ZERO_COLUMN_TOL = 1e-14
# candidates this close (relatively) to the full least-squares step are the
# degenerate "every correlation vanishes together" case, not entering events
_TERMINAL_RTOL = 1e-9


@dataclass(frozen=True)
class SolverConfig:
    """Iteration limits and numerical tolerances shared by the quadratic solvers.

    ``equality_tol`` decides when two reals count as equal (active-set
    membership, zero tests); ``alpha_floor`` is the early-stopping threshold
    for the path algorithms (float32 machine epsilon by default).
    """

    max_steps: int = 100_000
    tol: float = 1e-10
    equality_tol: float = 1e-12
    alpha_floor: float = FLOAT32_EPS

    def __post_init__(self):
        for name in ("max_steps", "tol", "equality_tol", "alpha_floor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"SolverConfig.{name} must be strictly positive")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


class QuadraticProblem:
    """Normalised least-squares data ``(X, y)`` plus the column scales.

    Parameters
    ----------
    X : array, shape (n, m)
        Feature matrix with unit-norm, linearly independent columns.
    y : array, shape (n,)
        Target vector.
    column_scales : array, shape (m,), optional
        Norms of the columns before normalisation; physical parameters are
        ``w / column_scales``. Defaults to ones.

    Use :meth:`from_features` to build a problem from raw columns.
    """

    def __init__(self, X, y, column_scales=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2:
            raise ValueError("X must be two-dimensional")
        n, m = X.shape
        if y.shape != (n,):
            raise LengthMismatchError(f"y has shape {y.shape}, expected ({n},)")
        if m == 0:
            raise ValueError("X has no columns")
        scales = np.ones(m) if column_scales is None else np.asarray(column_scales, dtype=float)
        if scales.shape != (m,):
            raise LengthMismatchError("column_scales must have one entry per column")
        if not np.all(scales > 0):
            raise ValueError("column_scales must be strictly positive")
        norms = np.linalg.norm(X, axis=0)
        bad = np.flatnonzero(np.abs(norms - 1.0) > _UNIT_NORM_TOL)
        if bad.size:
            raise ValueError(f"columns {bad.tolist()} are not unit-norm")
        if n < m:
            raise RankDeficientError(f"underdetermined problem: {n} samples < {m} features")
        r_diag = np.abs(np.diag(np.linalg.qr(X, mode="r")))
        if r_diag.min() <= max(n, m) * np.finfo(float).eps * r_diag.max():
            raise RankDeficientError("feature columns are linearly dependent")
        self.X = _readonly(X)
        self.y = _readonly(y)
        self.column_scales = _readonly(scales)

    @classmethod
    def from_features(cls, X_tilde, y) -> "QuadraticProblem":
        X, scales = normalize_columns(X_tilde)
        return cls(X, y, scales)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def mismatch(self, w) -> float:
        r = self.y - self.X @ np.asarray(w, dtype=float)
        return float(r @ r) / (2 * self.n_samples)

    def objective(self, w, alpha: float) -> float:
        return self.mismatch(w) + alpha * float(np.sum(np.abs(w)))

    def correlations(self, w) -> np.ndarray:
        """``X^T (y - X w)``; equals ``-n`` times the gradient of the mismatch."""
        return self.X.T @ (self.y - self.X @ np.asarray(w, dtype=float))

    def __repr__(self):
        return f"QuadraticProblem(n_samples={self.n_samples}, n_features={self.n_features})"


@dataclass(frozen=True)
class PathKnot:
    """One point of a regularisation path.

    ``w`` lives in normalised-parameter space. ``active`` lists the indices
    the path algorithm treats as active at this knot, in entry order.
    """

    alpha: float
    w: np.ndarray
    active: tuple[int, ...]
    mismatch: float
    is_drop_step: bool = False

    @property
    def n_nonzero(self) -> int:
        return int(np.count_nonzero(self.w))


@dataclass(frozen=True)
class LarsStep:
    """Diagnostics of one LARS / LARS-LASSO step (from knot ``k`` to ``k + 1``).

    ``kind`` is ``"enter"`` (a feature joins), ``"drop"`` (step truncated at a
    sign change) or ``"terminal"`` (no entering candidate left, full step to
    the least-squares fit of the active set).
    """

    k: int
    gamma: float
    A: float
    c_max: float
    correlations: np.ndarray
    active: tuple[int, ...]
    kind: str
    entering: int | None = None
    dropped: int | None = None


@dataclass(frozen=True)
class Path:
    knots: tuple[PathKnot, ...]
    steps: tuple[LarsStep, ...] = ()
    stopped_early: bool = False
    method: str = ""
    info: tuple = ()

    def __len__(self) -> int:
        return len(self.knots)

    def __iter__(self) -> Iterator[PathKnot]:
        return iter(self.knots)

    def __getitem__(self, i) -> PathKnot:
        return self.knots[i]

    @property
    def alphas(self) -> np.ndarray:
        return np.array([k.alpha for k in self.knots])

    @property
    def coefs(self) -> np.ndarray:
        """Knot coefficients stacked as shape (n_knots, n_features)."""
        return np.vstack([k.w for k in self.knots])

    @property
    def mismatches(self) -> np.ndarray:
        return np.array([k.mismatch for k in self.knots])


def soft_threshold(x, theta):
    """``sign(x) * max(|x| - theta, 0)``, elementwise for arrays."""
    if theta < 0:
        raise ValueError("threshold must be nonnegative")
    if np.ndim(x) == 0:
        x = float(x)
        return math.copysign(max(abs(x) - theta, 0.0), x) if abs(x) > theta else 0.0
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - theta, 0.0)


def normalize_columns(X_tilde) -> tuple[np.ndarray, np.ndarray]:
    """Scale each column to unit norm. Returns ``(X, scales)``."""
    X_tilde = np.asarray(X_tilde, dtype=float)
    scales = np.linalg.norm(X_tilde, axis=0)
    for i, s in enumerate(scales):
        if s < _ZERO_COLUMN_TOL:
            raise ZeroColumnError(i)
    return X_tilde / scales, scales


def rescale_solution(w, scales) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    scales = np.asarray(scales, dtype=float)
    if w.shape != scales.shape:
        raise LengthMismatchError(f"w has shape {w.shape}, scales {scales.shape}")
    if not np.all(scales > 0):
        raise ValueError("scales must be strictly positive")
    return w / scales


def _spd_solve(G: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cholesky solve with one jittered retry."""
    try:
        return linalg.cho_solve(linalg.cho_factor(G, lower=False), b)
    except linalg.LinAlgError:
        pass
    jitter = 1e-12 * np.trace(G) / G.shape[0]
    try:
        return linalg.cho_solve(linalg.cho_factor(G + jitter * np.eye(G.shape[0])), b)
    except linalg.LinAlgError as exc:
        raise SingularGramError("Gram matrix is not positive definite") from exc


def _triangular_factor(Xa: np.ndarray) -> np.ndarray | None:
    """Upper factor R with R^T R = Xa^T Xa, or None when numerically singular."""
    R = np.linalg.qr(Xa, mode="r")
    d = np.abs(np.diag(R))
    if d.size == 0 or d.min() <= max(Xa.shape) * np.finfo(float).eps * d.max():
        return None
    return R


def _gram_inverse_apply(Xa: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``(Xa^T Xa) q = b``.

    The Cholesky factor is taken from a QR factorisation of ``Xa`` (same
    factor, better conditioned to compute); the plain Gram route with jitter
    is the fallback.
    """
    R = _triangular_factor(Xa)
    if R is None:
        return _spd_solve(Xa.T @ Xa, b)
    z = linalg.solve_triangular(R, b, trans="T")
    return linalg.solve_triangular(R, z)


def ols_solve(problem: QuadraticProblem, support: Sequence[int] | None = None) -> np.ndarray:
    """Least-squares coefficients, optionally restricted to ``support``.

    Off-support entries of the result are exactly zero.
    """
    m = problem.n_features
    idx = np.arange(m) if support is None else np.unique(np.asarray(list(support), dtype=int))
    w = np.zeros(m)
    if idx.size == 0:
        return w
    if idx.min() < 0 or idx.max() >= m:
        raise IndexError("support index out of range")
    Xs = problem.X[:, idx]
    Q, R = np.linalg.qr(Xs)
    d = np.abs(np.diag(R))
    if d.min() > max(Xs.shape) * np.finfo(float).eps * d.max():
        w[idx] = linalg.solve_triangular(R, Q.T @ problem.y)
    else:
        w[idx] = _spd_solve(Xs.T @ Xs, Xs.T @ problem.y)
    return w


def alpha_max_quadratic(problem: QuadraticProblem) -> float:
    """Smallest ``alpha`` for which the zero vector solves the LASSO problem."""
    return float(np.max(np.abs(problem.X.T @ problem.y))) / problem.n_samples


def kkt_violation(problem: QuadraticProblem, w, alpha: float) -> float:
    """Largest violation of the subgradient optimality conditions at ``alpha``."""
    w = np.asarray(w, dtype=float)
    g = problem.correlations(w) / problem.n_samples
    nz = w != 0
    viol = np.where(nz, np.abs(g - alpha * np.sign(w)), np.maximum(np.abs(g) - alpha, 0.0))
    return float(viol.max(initial=0.0))


def cd_solve(
    problem: QuadraticProblem,
    alpha: float,
    w0=None,
    config: SolverConfig | None = None,
    return_n_iter: bool = False,
):
    """Cyclic coordinate descent for the LASSO problem at fixed ``alpha``.

    Starts from the OLS solution unless ``w0`` is given (pass zeros for the
    bottom-up variant). A sweep stops the iteration when the parameter change
    or the objective change drops below ``tol`` and the subgradient
    conditions hold to within ``10 * tol``. With ``return_n_iter`` the
    number of sweeps is returned as well.

    Raises
    ------
    NotConvergedError
        After ``max_steps`` sweeps; ``last_iterate`` carries the final vector.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    cfg = config or SolverConfig()
    n, m = problem.X.shape
    G = problem.X.T @ problem.X
    b = problem.X.T @ problem.y
    if w0 is None:
        w = ols_solve(problem)
    else:
        w = np.array(w0, dtype=float)
        if w.shape != (m,):
            raise LengthMismatchError(f"w0 has shape {w.shape}, expected ({m},)")
    curvature = np.diag(G) / n
    F_old = problem.objective(w, alpha)
    for sweep in range(1, cfg.max_steps + 1):
        w_prev = w.copy()
        for l in range(m):
            S = (G[l] @ w - G[l, l] * w[l] - b[l]) / n
            w[l] = -soft_threshold(S, alpha) / curvature[l]
        F_new = problem.objective(w, alpha)
        small_step = np.linalg.norm(w - w_prev) < cfg.tol
        if (small_step or abs(F_new - F_old) < cfg.tol) and kkt_violation(
            problem, w, alpha
        ) <= 10 * cfg.tol:
            return (w, sweep) if return_n_iter else w
        F_old = F_new
    raise NotConvergedError(cfg.max_steps, last_iterate=w)


def _check_initial_tie(c: np.ndarray, c_max: float, tol: float) -> int:
    winners = np.flatnonzero(np.abs(np.abs(c) - c_max) <= tol)
    if winners.size > 1:
        raise CorrelationTieError(winners.tolist(), step=0)
    return int(np.argmax(np.abs(c)))


def _lars(problem: QuadraticProblem, config: SolverConfig | None, lasso: bool) -> Path:
    cfg = config or SolverConfig()
    X = problem.X
    n, m = X.shape
    eq_tol = cfg.equality_tol

    w_ols = ols_solve(problem)
    y_par = X @ w_ols
    w = np.zeros(m)
    c = X.T @ y_par
    c_max = float(np.max(np.abs(c)))
    alpha = c_max / n

    active: list[int] = []
    if alpha >= cfg.alpha_floor:
        active.append(_check_initial_tie(c, c_max, eq_tol))
    knots = [PathKnot(alpha, w.copy(), tuple(active), problem.mismatch(w))]
    steps: list[LarsStep] = []
    stopped_early = False

    for k in range(cfg.max_steps):
        if alpha < cfg.alpha_floor:
            stopped_early = True
            break
        idx = np.array(active)
        s = np.sign(c[idx])
        Xa_bar = X[:, idx] * s
        q = _gram_inverse_apply(Xa_bar, np.ones(idx.size))
        A = 1.0 / math.sqrt(float(q.sum()))
        u = A * (Xa_bar @ q)
        a = X.T @ u
        d = A * s * q
        gamma_full = c_max / A

        candidates = []
        for j in range(m):
            if j in active:
                continue
            for num, den in ((c_max - c[j], A - a[j]), (c_max + c[j], A + a[j])):
                if num <= eq_tol or den <= 0:
                    continue
                g = num / den
                if g < gamma_full * (1 - _TERMINAL_RTOL):
                    candidates.append((g, j))
        entering = dropped = None
        if candidates:
            gamma, entering = min(candidates)
            rivals = {j for g, j in candidates if j != entering and abs(g - gamma) <= eq_tol * max(1.0, gamma)}
            if rivals:
                raise CorrelationTieError([entering, *rivals], step=k)
            kind = "enter"
        else:
            gamma, kind = gamma_full, "terminal"

        if lasso:
            wa = w[idx]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(wa != 0, -wa / d, -np.inf)
            pos = ratios > 0
            if pos.any():
                i_min = int(np.argmin(np.where(pos, ratios, np.inf)))
                if ratios[i_min] < gamma:
                    gamma, kind = float(ratios[i_min]), "drop"
                    entering, dropped = None, int(idx[i_min])

        steps.append(
            LarsStep(k, float(gamma), A, c_max, c.copy(), tuple(active), kind, entering, dropped)
        )
        w = w.copy()
        w[idx] += gamma * d
        if dropped is not None:
            w[dropped] = 0.0
            active.remove(dropped)
        if kind == "terminal" and len(active) == m:
            w = w_ols.copy()
        c = X.T @ (y_par - X @ w)
        c_max = float(np.max(np.abs(c)))
        alpha = 0.0 if kind == "terminal" and len(active) == m else c_max / n
        if entering is not None:
            active.append(entering)
        knots.append(PathKnot(alpha, w, tuple(active), problem.mismatch(w), kind == "drop"))
        if kind == "terminal":
            break
    else:
        raise NotConvergedError(cfg.max_steps, last_iterate=w)

    return Path(
        tuple(knots),
        tuple(steps),
        stopped_early=stopped_early,
        method="lars-lasso" if lasso else "lars",
    )


def lars_path(problem: QuadraticProblem, config: SolverConfig | None = None) -> Path:
    """Least angle regression from ``w = 0`` to the full OLS fit.

    Each step adds exactly one feature. Stops early (``stopped_early``) when
    the maximal correlation divided by ``n`` falls below ``alpha_floor``.

    Raises
    ------
    CorrelationTieError
        Two inactive features would enter at the same step.
    SingularGramError
        The active Gram matrix cannot be factorised.
    """
    if problem.n_features < 2:
        raise ValueError("LARS needs at least two features")
    return _lars(problem, config, lasso=False)


def lars_lasso_path(problem: QuadraticProblem, config: SolverConfig | None = None) -> Path:
    """LARS with the LASSO sign-change modification.

    Whenever an active coefficient would cross zero within a step the step
    is truncated there, the coefficient is set to exactly zero and its
    feature leaves the active set. Every knot is then a LASSO solution at
    ``knot.alpha = max|c| / n``.
    """
    return _lars(problem, config, lasso=True)


def interpolate_path(path: Path, alpha: float) -> np.ndarray:
    """LASSO solution at ``alpha`` by linear interpolation between knots.

    Below the last knot of an early-stopped path the last knot is returned.
    """
    alphas = path.alphas
    if len(alphas) == 0:
        raise OutOfRangeError("empty path")
    top = alphas[0]
    if alpha < 0 or alpha > top * (1 + 1e-12) + 1e-300:
        raise OutOfRangeError(f"alpha={alpha} outside [0, {top}]")
    if alpha >= top:
        return path.knots[0].w.copy()
    if alpha <= alphas[-1]:
        if alpha < alphas[-1] and not path.stopped_early:
            raise OutOfRangeError(f"alpha={alpha} below the last knot {alphas[-1]}")
        return path.knots[-1].w.copy()
    k = int(np.flatnonzero(alphas >= alpha)[-1])
    if alphas[k] == alpha:
        return path.knots[k].w.copy()
    a0, a1 = alphas[k], alphas[k + 1]
    t = (a0 - alpha) / (a0 - a1)
    w0, w1 = path.knots[k].w, path.knots[k + 1].w
    return w0 + t * (w1 - w0)
