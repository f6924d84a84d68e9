import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from l1discovery import (
    QuadraticProblem,
    SolverConfig,
    cd_solve,
    interpolate_path,
    kkt_violation,
    lars_lasso_path,
    lars_path,
    normalize_columns,
    ols_solve,
    soft_threshold,
)
from l1discovery.core_sparse import alpha_max_quadratic, rescale_solution
from l1discovery.exceptions import (
    CorrelationTieError,
    LengthMismatchError,
    NotConvergedError,
    OutOfRangeError,
    RankDeficientError,
    ZeroColumnError,
)

from oracles import kkt_gap, lars_lasso_reference, lasso_reference, normal_equations, random_problem


def make(rng, n=40, m=None):
    return QuadraticProblem(*random_problem(rng, n=n, m=m))


# -- elementary maps --------------------------------------------------------


@pytest.mark.parametrize(
    "x, theta, expected",
    [(3.0, 1.0, 2.0), (-3.0, 1.0, -2.0), (0.5, 1.0, 0.0), (-1.0, 1.0, 0.0), (2.0, 0.0, 2.0)],
)
def test_soft_threshold_scalar(x, theta, expected):
    assert soft_threshold(x, theta) == expected


def test_soft_threshold_rejects_negative_threshold():
    with pytest.raises(ValueError):
        soft_threshold(1.0, -0.1)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=20), st.floats(0, 1e3))
def test_soft_threshold_shrinks_towards_zero(xs, theta):
    x = np.array(xs)
    s = soft_threshold(x, theta)
    assert np.all(np.abs(s) <= np.abs(x))
    assert np.all(s * x >= 0)
    assert_allclose(np.abs(x) - np.abs(s), np.minimum(np.abs(x), theta), atol=1e-9 * (1 + abs(x).max()))


def test_normalize_columns_345():
    X, scales = normalize_columns([[3.0, 1.0], [4.0, 0.0]])
    assert_allclose(X[:, 0], [0.6, 0.8])
    assert_allclose(scales, [5.0, 1.0])


def test_normalize_columns_reproduces_input(rng):
    Xt = rng.standard_normal((12, 4)) * [1e-3, 1.0, 50.0, 1e4]
    X, scales = normalize_columns(Xt)
    assert_allclose(np.linalg.norm(X, axis=0), 1.0, atol=1e-14)
    assert_allclose(X * scales, Xt, rtol=1e-14)


def test_normalize_columns_zero_column():
    with pytest.raises(ZeroColumnError) as err:
        normalize_columns([[1.0, 0.0], [2.0, 0.0]])
    assert err.value.column == 1


@pytest.mark.parametrize(
    "w, scales, expected",
    [((2.0, 0.0), (4.0, 5.0), (0.5, 0.0)), ((0.0, 0.0), (3.0, 2.0), (0.0, 0.0)), ((1.0, 1.0), (1.0, 1.0), (1.0, 1.0))],
)
def test_rescale_solution(w, scales, expected):
    assert_array_equal(rescale_solution(w, scales), expected)


def test_rescale_solution_length_mismatch():
    with pytest.raises(LengthMismatchError):
        rescale_solution([1.0, 2.0], [1.0])


# -- problem validation -----------------------------------------------------


def test_problem_requires_unit_columns():
    with pytest.raises(ValueError, match="unit"):
        QuadraticProblem([[2.0, 0.0], [0.0, 1.0]], [1.0, 1.0])


def test_problem_rejects_underdetermined():
    with pytest.raises((ValueError, RankDeficientError)):
        QuadraticProblem(np.ones((2, 3)) / np.sqrt(2), [1.0, 1.0])


def test_problem_rejects_collinear_columns():
    c = np.array([1.0, 2.0, 2.0]) / 3.0
    with pytest.raises(RankDeficientError):
        QuadraticProblem(np.column_stack([c, c]), [1.0, 0.0, 0.0])


def test_problem_arrays_are_read_only(identity_problem):
    with pytest.raises(ValueError):
        identity_problem.X[0, 0] = 2.0


def test_from_features_keeps_scales(rng):
    Xt = rng.standard_normal((10, 3)) * [2.0, 3.0, 4.0]
    p = QuadraticProblem.from_features(Xt, rng.standard_normal(10))
    assert_allclose(p.column_scales, np.linalg.norm(Xt, axis=0))


# -- OLS and alpha bound ----------------------------------------------------


def test_ols_identity(identity_problem):
    assert_allclose(ols_solve(identity_problem), [3.0, 1.0])


def test_ols_matches_normal_equations(rng):
    X, y = random_problem(rng, n=10, m=3)
    assert_allclose(ols_solve(QuadraticProblem(X, y)), normal_equations(X, y), atol=1e-10)


def test_ols_restricted_support_residual_orthogonal(rng):
    p = make(rng, m=6)
    w = ols_solve(p, support=[0, 2, 5])
    assert_array_equal(w[[1, 3, 4]], 0.0)
    assert np.abs(p.correlations(w)[[0, 2, 5]]).max() < 1e-10


def test_alpha_max_identity(identity_problem):
    assert alpha_max_quadratic(identity_problem) == 1.5


def test_alpha_max_zero_data():
    p = QuadraticProblem(np.eye(2), np.zeros(2))
    assert alpha_max_quadratic(p) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_zero_is_optimal_at_alpha_max(seed):
    p = make(np.random.default_rng(seed))
    assert kkt_violation(p, np.zeros(p.n_features), alpha_max_quadratic(p)) <= 1e-15


# -- coordinate descent -----------------------------------------------------


def test_cd_identity(identity_problem):
    assert_allclose(cd_solve(identity_problem, 0.5), [2.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("start", [None, "zeros"])
def test_cd_above_alpha_max_is_zero(rng, start):
    p = make(rng)
    w0 = None if start is None else np.zeros(p.n_features)
    assert_array_equal(cd_solve(p, alpha_max_quadratic(p) * 1.01, w0), 0.0)


def test_cd_alpha_zero_is_ols(rng):
    p = make(rng)
    assert_allclose(cd_solve(p, 0.0, np.zeros(p.n_features)), ols_solve(p), atol=1e-8)


@pytest.mark.parametrize("seed", range(8))
def test_cd_matches_reference_lasso(seed):
    rng = np.random.default_rng(seed)
    X, y = random_problem(rng)
    p = QuadraticProblem(X, y)
    alpha = rng.uniform(0.05, 0.9) * alpha_max_quadratic(p)
    w = cd_solve(p, alpha)
    assert kkt_gap(X, y, w, alpha) <= 1e-8
    assert_allclose(w, lasso_reference(X, y, alpha), atol=1e-7)


def test_cd_brute_force_small(rng):
    # m = 2: grid scan of the objective followed by a local polish
    from scipy.optimize import minimize

    p = make(rng, n=15, m=2)
    alpha = 0.3 * alpha_max_quadratic(p)
    grid = np.linspace(-3, 3, 601)
    W = np.stack(np.meshgrid(grid, grid), -1).reshape(-1, 2)
    F = [p.objective(w, alpha) for w in W]
    best = minimize(lambda w: p.objective(w, alpha), W[int(np.argmin(F))], method="Nelder-Mead",
                    options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 10_000}).fun
    assert p.objective(cd_solve(p, alpha), alpha) <= best + 1e-4


def test_cd_not_converged_carries_iterate(rng):
    p = make(rng, m=6)
    with pytest.raises(NotConvergedError) as err:
        cd_solve(p, 0.01, np.zeros(6), SolverConfig(max_steps=1))
    assert err.value.last_iterate.shape == (6,)


def test_cd_rejects_negative_alpha(identity_problem):
    with pytest.raises(ValueError):
        cd_solve(identity_problem, -1.0)


# -- LARS ---------------------------------------------------------------------


def test_lars_identity(identity_problem):
    path = lars_path(identity_problem)
    assert_allclose(path.coefs, [[0, 0], [2, 0], [3, 1]], atol=1e-14)
    assert path.steps[0].gamma == pytest.approx(2.0)


def test_lars_lasso_identity(identity_problem):
    path = lars_lasso_path(identity_problem)
    assert_allclose(path.alphas, [1.5, 0.5, 0.0], atol=1e-14)
    assert_allclose(path.coefs, [[0, 0], [2, 0], [3, 1]], atol=1e-14)
    assert not path.stopped_early


def test_lars_single_dominant_feature():
    X = np.column_stack([[1.0, 0.0, 0.0], np.array([1.0, 1.0, 1.0]) / np.sqrt(3)])
    y = np.array([2.0, 0.0, 0.0])
    path = lars_path(QuadraticProblem(X, y))
    assert_allclose(path.knots[-1].w, ols_solve(QuadraticProblem(X, y)), atol=1e-12)
    assert path.knots[-1].mismatch < 1e-30


def test_lars_needs_two_features():
    with pytest.raises(ValueError):
        lars_path(QuadraticProblem(np.ones((3, 1)) / np.sqrt(3), [1.0, 1.0, 1.0]))


def test_lars_tie_raises():
    X = np.eye(3)[:, :2]
    with pytest.raises(CorrelationTieError):
        lars_path(QuadraticProblem(X, [1.0, 1.0, 0.0]))


@pytest.mark.parametrize("seed", range(5))
def test_lars_equal_correlation_invariant(seed):
    p = make(np.random.default_rng(seed), n=20, m=5)
    path = lars_path(p)
    for knot in path.knots[:-1]:
        c = np.abs(p.correlations(knot.w))
        act = list(knot.active)
        assert np.ptp(c[act]) < 1e-8
        assert c.max() - c[act].max() < 1e-8


@pytest.mark.parametrize("seed", range(10))
def test_lars_lasso_matches_reference_path(seed):
    X, y = random_problem(np.random.default_rng(seed))
    path = lars_lasso_path(QuadraticProblem(X, y))
    for knot in path.knots:
        assert_allclose(knot.w, lasso_reference(X, y, knot.alpha), atol=1e-7)
    ref_alphas, ref_coefs = lars_lasso_reference(X, y)
    if len(ref_alphas) == len(path):
        assert_allclose(path.alphas, ref_alphas, atol=1e-10)
        assert_allclose(path.coefs, ref_coefs, atol=1e-8)


@pytest.mark.parametrize("seed", range(10))
def test_lars_lasso_alphas_strictly_decrease(seed):
    path = lars_lasso_path(make(np.random.default_rng(seed)))
    assert np.all(np.diff(path.alphas) < 0)
    assert path.alphas[-1] == 0.0


def test_drop_step_snaps_to_zero():
    # search random instances for one with a sign-change drop
    for seed in range(400):
        p = make(np.random.default_rng(seed), n=12)
        path = lars_lasso_path(p)
        drops = [s for s in path.steps if s.kind == "drop"]
        if drops:
            break
    else:
        pytest.skip("no drop step found")
    step = drops[0]
    knot = path.knots[step.k + 1]
    assert knot.is_drop_step
    assert knot.w[step.dropped] == 0.0
    assert step.dropped not in knot.active
    assert kkt_violation(p, knot.w, knot.alpha) <= 1e-8


def test_early_stop_flag(rng):
    p = make(rng)
    path = lars_lasso_path(p, SolverConfig(alpha_floor=0.5 * alpha_max_quadratic(p)))
    assert path.stopped_early
    assert path.alphas[-1] < 0.5 * alpha_max_quadratic(p)


# -- interpolation ----------------------------------------------------------


def test_interpolate_identity(identity_problem):
    path = lars_lasso_path(identity_problem)
    assert_allclose(interpolate_path(path, 1.0), [1.0, 0.0])
    assert kkt_violation(identity_problem, interpolate_path(path, 1.0), 1.0) <= 1e-12


def test_interpolate_endpoints(identity_problem):
    path = lars_lasso_path(identity_problem)
    assert_array_equal(interpolate_path(path, 0.5), path.knots[1].w)
    assert_array_equal(interpolate_path(path, 0.0), [3.0, 1.0])


@pytest.mark.parametrize("alpha", [-0.1, 1.6])
def test_interpolate_out_of_range(identity_problem, alpha):
    with pytest.raises(OutOfRangeError):
        interpolate_path(lars_lasso_path(identity_problem), alpha)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), frac=st.floats(0.0, 1.0))
def test_interpolated_path_is_optimal(seed, frac):
    p = make(np.random.default_rng(seed))
    path = lars_lasso_path(p)
    alpha = frac * path.alphas[0]
    assert kkt_violation(p, interpolate_path(path, alpha), alpha) <= 1e-8
