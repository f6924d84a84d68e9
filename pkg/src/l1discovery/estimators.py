"""scikit-learn compatible wrappers around the solvers and the discovery pipeline.

Features are scaled to unit norm internally and coefficients are reported
for the original columns. No intercept is fitted: the models are meant for
data whose zero input maps to a zero response (stress-free reference
state).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .core_sparse import (
    QuadraticProblem,
    SolverConfig,
    cd_solve,
    interpolate_path,
    lars_lasso_path,
    rescale_solution,
)
from .discovery import (
    CD,
    Ista,
    LarsLasso as _LarsLassoMethod,
    Pathwise,
    parse_selection,
    run_linear_discovery,
    run_nonlinear_discovery,
)
from .hyperelastic import Dataset, HyperelasticLibrary, LoadCase, model_stress

__all__ = ["LassoCD", "LarsLasso", "HyperelasticDiscovery", "split_load_cases"]


def _problem(estimator, X, y) -> QuadraticProblem:
    X, y = validate_data(estimator, X, y, dtype=float, y_numeric=True)
    return QuadraticProblem.from_features(X, y)


class _LinearPredictMixin:
    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, dtype=float, reset=False)
        return X @ self.coef_


class LassoCD(_LinearPredictMixin, RegressorMixin, BaseEstimator):
    """LASSO fitted by cyclic coordinate descent.

    Parameters
    ----------
    alpha : float
        Regularisation weight of ``||y - Xw||^2 / (2n) + alpha ||w||_1`` in
        the unit-norm feature space.
    tol : float
        Convergence tolerance.
    max_iter : int
        Maximum number of sweeps.
    start : {"ols", "zeros"}
        Starting point (top-down or bottom-up).

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
        Coefficients for the original (unnormalised) features.
    scales_ : ndarray of shape (n_features,)
        Column norms of the training features.
    n_iter_ : int
        Coordinate-descent sweeps used.
    """

    def __init__(self, alpha=1.0, tol=1e-10, max_iter=100_000, start="ols"):
        self.alpha = alpha
        self.tol = tol
        self.max_iter = max_iter
        self.start = start

    def fit(self, X, y):
        if self.start not in ("ols", "zeros"):
            raise ValueError("start must be 'ols' or 'zeros'")
        problem = _problem(self, X, y)
        w0 = None if self.start == "ols" else np.zeros(problem.n_features)
        cfg = SolverConfig(max_steps=self.max_iter, tol=self.tol)
        w, self.n_iter_ = cd_solve(problem, self.alpha, w0, cfg, return_n_iter=True)
        self.scales_ = np.array(problem.column_scales)
        self.coef_ = rescale_solution(w, self.scales_)
        return self


class LarsLasso(_LinearPredictMixin, RegressorMixin, BaseEstimator):
    """Full LASSO regularisation path by LARS with the sign-drop rule.

    Parameters
    ----------
    alpha : float or None
        Where to read off ``coef_`` (linear interpolation between knots);
        ``None`` takes the last knot.

    Attributes
    ----------
    alphas_ : ndarray of shape (n_knots,)
    coef_path_ : ndarray of shape (n_knots, n_features)
        Knot coefficients for the original features.
    coef_ : ndarray of shape (n_features,)
    path_ : Path
        Knots in the normalised feature space, with step diagnostics.
    """

    def __init__(self, alpha=None):
        self.alpha = alpha

    def fit(self, X, y):
        problem = _problem(self, X, y)
        path = lars_lasso_path(problem)
        scales = np.array(problem.column_scales)
        self.path_ = path
        self.scales_ = scales
        self.alphas_ = path.alphas
        self.coef_path_ = path.coefs / scales
        w = path.knots[-1].w if self.alpha is None else interpolate_path(path, self.alpha)
        self.coef_ = rescale_solution(w, scales)
        return self


def split_load_cases(X, y=None) -> tuple:
    """Split ``X = [[flag, control], ...]`` (flag 0 = UTC, 1 = SS) into per-case arrays."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValueError("X must have two columns: load-case flag (0 UTC, 1 SS) and control")
    flag = X[:, 0]
    if not np.all(np.isin(flag, (0.0, 1.0))):
        raise ValueError("load-case flag must be 0 (UTC) or 1 (SS)")
    utc, ss = flag == 0, flag == 1
    if y is None:
        return X[utc, 1], X[ss, 1], utc, ss
    return X[utc, 1], y[utc], X[ss, 1], y[ss]


class HyperelasticDiscovery(RegressorMixin, BaseEstimator):
    """Sparse discovery of an incompressible hyperelastic strain-energy function.

    ``fit`` takes ``X`` with columns ``[load_case_flag, control]`` (flag 0
    for uniaxial tension/compression with control ``F11``, 1 for simple
    shear with control ``F12``) and the measured Piola stresses ``y``.

    Parameters
    ----------
    method : {"lars-lasso", "cd", "ista", "pathwise"}
    order : int
        Mooney-Rivlin polynomial order.
    include_ogden : bool
        Add the Ogden pair (requires ``"ista"`` or ``"pathwise"``).
    alpha : float or None
        Required by ``"cd"`` and ``"ista"``.
    n_alpha : int
        Schedule length for ``"pathwise"``.
    selection : str or None
        ``"sparsity:<k>"``, ``"plateau[:<r>]"`` or ``"last"``.
    w0 : str
        Start vector: ``"ols"``/``"zeros"`` for CD, ``"ones"``/``"zeros"`` for ISTA.

    Attributes
    ----------
    report_ : DiscoveryReport
    params_ : MaterialParams
        Refit parameters.
    coef_ : ndarray
        Flat refit parameter vector.
    energy_ : str
        Rendered strain energy.
    """

    def __init__(
        self,
        method="lars-lasso",
        order=4,
        include_ogden=False,
        alpha=None,
        n_alpha=1000,
        selection=None,
        w0=None,
    ):
        self.method = method
        self.order = order
        self.include_ogden = include_ogden
        self.alpha = alpha
        self.n_alpha = n_alpha
        self.selection = selection
        self.w0 = w0

    def _method(self):
        if self.method in ("cd", "ista") and self.alpha is None:
            raise ValueError(f"method {self.method!r} needs alpha")
        if self.method == "cd":
            return CD(self.alpha, self.w0 or "ols")
        if self.method == "lars-lasso":
            return _LarsLassoMethod()
        if self.method == "ista":
            return Ista(self.alpha, self.w0 or "ones")
        if self.method == "pathwise":
            return Pathwise(self.n_alpha)
        raise ValueError(f"unknown method {self.method!r}")

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=float, y_numeric=True)
        return self.fit_dataset(Dataset(*split_load_cases(X, y)))

    def fit_dataset(self, dataset: Dataset):
        method = self._method()
        selection = parse_selection(self.selection) if self.selection else None
        if isinstance(method, (CD, _LarsLassoMethod)):
            if self.include_ogden:
                raise ValueError("the Ogden pair needs method 'ista' or 'pathwise'")
            report = run_linear_discovery(dataset, self.order, method, selection)
        else:
            library = HyperelasticLibrary(self.order, self.include_ogden)
            report = run_nonlinear_discovery(dataset, library, method, selection)
        self.report_ = report
        self.params_ = report.refit
        self.coef_ = report.refit.as_vector()
        self.energy_ = report.energy
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        if hasattr(self, "n_features_in_"):
            X = validate_data(self, X, dtype=float, reset=False)
        f11, f12, utc, ss = split_load_cases(X)
        out = np.empty(len(utc))
        out[utc] = model_stress(self.params_, LoadCase.UTC, f11)
        out[ss] = model_stress(self.params_, LoadCase.SS, f12)
        return out
