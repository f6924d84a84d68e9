"""Material-model discovery pipelines.

A pipeline assembles the problem for a dataset, runs a sparse solver or
path algorithm, picks a knot, refits the picked support without
regularisation (removing L1 shrinkage but keeping the model structure) and
renders the resulting strain-energy function.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import optimize

from .core_sparse import (
    Path,
    PathKnot,
    cd_solve,
    lars_lasso_path,
    ols_solve,
    rescale_solution,
)
from .exceptions import EmptySupportError, NoQualifyingKnotError, StageError
from .hyperelastic import (
    Dataset,
    HyperelasticLibrary,
    MaterialParams,
    StressResiduals,
    assemble_linear_problem,
    nonlinear_objective,
)
from .proximal import IstaConfig, SmoothObjective, estimate_step, ista_solve, pathwise_ista

__all__ = [
    "SparsityTarget",
    "MismatchPlateau",
    "LastKnot",
    "sparsity_target",
    "mismatch_plateau",
    "parse_selection",
    "CD",
    "LarsLasso",
    "Ista",
    "Pathwise",
    "DiscoveryReport",
    "select_knot",
    "format_energy",
    "n_terms",
    "debias_refit",
    "run_linear_discovery",
    "run_nonlinear_discovery",
    "path_to_csv",
]


@dataclass(frozen=True)
class SparsityTarget:
    """Last knot with at most ``k`` nonzero parameters."""

    k: int


@dataclass(frozen=True)
class MismatchPlateau:
    """First knot whose successor lowers the mismatch by a relative amount below ``rel_drop``."""

    rel_drop: float = 0.05


@dataclass(frozen=True)
class LastKnot:
    pass


Selection = Union[SparsityTarget, MismatchPlateau, LastKnot]


def sparsity_target(k: int) -> SparsityTarget:
    return SparsityTarget(int(k))


def mismatch_plateau(rel_drop: float = 0.05) -> MismatchPlateau:
    return MismatchPlateau(float(rel_drop))


def parse_selection(text: str) -> Selection:
    """``"sparsity:<k>"``, ``"plateau[:<r>]"`` or ``"last"``."""
    name, _, arg = text.partition(":")
    try:
        if name == "sparsity" and arg:
            k = int(arg)
            if k >= 0:
                return SparsityTarget(k)
        elif name == "plateau":
            r = float(arg) if arg else 0.05
            if r > 0:
                return MismatchPlateau(r)
        elif name == "last" and not arg:
            return LastKnot()
    except ValueError:
        pass
    raise ValueError(f"invalid selection {text!r}; use sparsity:<k>, plateau[:<r>] or last")


@dataclass(frozen=True)
class CD:
    alpha: float
    w0: str = "ols"


@dataclass(frozen=True)
class LarsLasso:
    pass


@dataclass(frozen=True)
class Ista:
    alpha: float
    w0: str = "ones"
    step: float | None = None


@dataclass(frozen=True)
class Pathwise:
    n_alpha: int = 1000
    step: float | None = None


def _method_record(method) -> dict:
    names = {CD: "cd", LarsLasso: "lars-lasso", Ista: "ista", Pathwise: "pathwise"}
    rec = {"name": names[type(method)]}
    rec.update({k: v for k, v in vars(method).items() if v is not None})
    return rec


def select_knot(path: Path, criterion: Selection | None = None) -> int:
    """Index of the knot picked by ``criterion`` (last knot when ``None``).

    Raises
    ------
    NoQualifyingKnotError
        No knot satisfies the criterion.
    """
    n = len(path)
    if n == 0:
        raise NoQualifyingKnotError("empty path")
    if criterion is None or isinstance(criterion, LastKnot):
        return n - 1
    if isinstance(criterion, SparsityTarget):
        ok = [i for i, k in enumerate(path.knots) if k.n_nonzero <= criterion.k]
        if not ok:
            raise NoQualifyingKnotError(f"no knot with at most {criterion.k} nonzeros")
        return ok[-1]
    if isinstance(criterion, MismatchPlateau):
        m = path.mismatches
        for i in range(n - 1):
            if m[i] == 0 or (m[i] - m[i + 1]) / m[i] < criterion.rel_drop:
                return i
        raise NoQualifyingKnotError(
            f"mismatch never plateaus below relative drop {criterion.rel_drop}"
        )
    raise TypeError(f"unknown selection criterion {criterion!r}")


def _ogden_active(params: MaterialParams) -> bool:
    return bool(params.has_ogden and params.ogden_D != 0 and params.ogden_delta != 0)


def n_terms(params: MaterialParams) -> int:
    """Number of non-inert strain-energy terms (the Ogden pair counts once)."""
    return int(np.count_nonzero(params.mooney)) + int(_ogden_active(params))


def _mooney_term(c: float, p: int, q: int) -> str:
    parts = [f"{c:.2f}"]
    for base, e in (("(I1-3)", p), ("(I2-3)", q)):
        if e == 1:
            parts.append(base)
        elif e > 1:
            parts.append(f"{base}^{e}")
    return "*".join(parts)


def format_energy(params: MaterialParams, library: HyperelasticLibrary | None = None) -> str:
    """Render the strain energy, e.g. ``40.00*(I1-3) + 10.00*(I1-3)^2``.

    Terms follow library order with two-decimal coefficients; zero and
    inert terms are omitted, and an empty model renders as ``0.00``.
    """
    library = library or params.library
    terms = []
    for c, (p, q) in zip(params.mooney, library.exponents):
        if c != 0:
            terms.append((c, lambda a, p=p, q=q: _mooney_term(a, p, q)))
    if _ogden_active(params):
        d = params.ogden_delta
        terms.append(
            (params.ogden_D, lambda a, d=d: f"{a:.2f}*(l1^{d:.2f} + l2^{d:.2f} + l3^{d:.2f} - 3)")
        )
    if not terms:
        return "0.00"
    out = ""
    for i, (c, render) in enumerate(terms):
        if i == 0:
            out = render(c)
        else:
            out += (" - " if c < 0 else " + ") + render(abs(c))
    return out


def _support_mask(library: HyperelasticLibrary, support) -> np.ndarray:
    mask = np.zeros(library.n_params, dtype=bool)
    idx = np.asarray(sorted(set(int(i) for i in support)), dtype=int)
    if idx.size == 0:
        raise EmptySupportError("refit support is empty")
    if idx.min() < 0 or idx.max() >= library.n_params:
        raise IndexError("support index out of range")
    mask[idx] = True
    if library.include_ogden and mask[-2] != mask[-1]:
        raise ValueError("the Ogden pair (D, delta) must be refit jointly")
    return mask


def masked_objective(objective: SmoothObjective, mask) -> SmoothObjective:
    """``objective`` with coordinates outside ``mask`` frozen at zero."""
    m = np.asarray(mask, dtype=float)

    def value(w):
        return objective.value(np.asarray(w) * m)

    def value_and_gradient(w):
        f, g = objective.evaluate(np.asarray(w) * m)
        return f, g * m

    return SmoothObjective(
        objective.dim,
        value,
        lambda w: value_and_gradient(w)[1],
        value_and_gradient,
        positive_coords=objective.positive_coords,
    )


def _lm_refit(dataset, library, mask, w0) -> np.ndarray:
    res = StressResiduals(dataset, library)
    idx = np.flatnonzero(mask)

    def expand(z):
        w = np.zeros(library.n_params)
        w[idx] = z
        return w

    sol = optimize.least_squares(
        lambda z: res(expand(z)),
        w0[idx],
        jac=lambda z: res.jacobian(expand(z))[:, idx],
        method="lm",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=20_000,
    )
    return expand(sol.x)


def debias_refit(
    dataset: Dataset,
    library: HyperelasticLibrary,
    support,
    w_start=None,
    config: IstaConfig | None = None,
    solver: str = "lm",
) -> tuple[MaterialParams, float]:
    """Unregularised refit restricted to ``support`` (flat parameter indices).

    Mooney-only libraries use restricted least squares on the normalised
    problem. With the Ogden pair the refit is a nonlinear least-squares
    problem over the support, started from ``w_start`` (physical
    parameters; ones on the support when omitted) and solved by
    Levenberg-Marquardt (``solver="lm"``) or by ISTA at ``alpha = 0`` with
    off-support coordinates frozen at zero (``solver="ista"``). The refit
    never returns a worse fit than its start.

    Returns
    -------
    params : MaterialParams
    mismatch : float
        Recomputed from ``params``.
    """
    mask = _support_mask(library, support)
    objective = nonlinear_objective(dataset, library)
    if not library.include_ogden:
        problem = assemble_linear_problem(dataset, library.mooney_order)
        w = rescale_solution(ols_solve(problem, np.flatnonzero(mask)), problem.column_scales)
    else:
        w0 = np.ones(library.n_params) if w_start is None else np.array(w_start, dtype=float)
        w0 = np.where(mask, w0, 0.0)
        if solver == "lm":
            w = _lm_refit(dataset, library, mask, w0)
        elif solver == "ista":
            target = masked_objective(objective, mask)
            if config is None:
                config = IstaConfig(step=estimate_step(target, w0), max_steps=5_000_000)
            w = ista_solve(target, 0.0, w0, config) * mask
        else:
            raise ValueError(f"unknown refit solver {solver!r}")
        f_start, f_new = objective.value(w0), objective.value(w)
        if not np.isfinite(f_new) or f_new > f_start:
            w = w0
    params = MaterialParams.from_vector(w, library)
    return params, float(objective.value(params.as_vector()))


@dataclass(frozen=True)
class DiscoveryReport:
    """Outcome of a discovery run.

    ``path`` holds knots in physical-parameter space; ``selected`` indexes
    the knot whose support was refit.
    """

    library: HyperelasticLibrary
    method: dict
    path: Path
    selected: int
    refit: MaterialParams
    refit_mismatch: float
    energy: str
    notes: tuple[str, ...] = field(default=())

    @property
    def selected_knot(self) -> PathKnot:
        return self.path.knots[self.selected]

    @property
    def n_terms(self) -> int:
        return n_terms(self.refit)

    def to_dict(self) -> dict:
        names = self.library.parameter_names
        return {
            "library": {
                "mooney_order": self.library.mooney_order,
                "include_ogden": self.library.include_ogden,
                "parameters": list(names),
            },
            "method": dict(self.method),
            "path": [
                {
                    "alpha": k.alpha,
                    "w": [float(v) for v in k.w],
                    "active": [int(i) for i in k.active],
                    "mismatch": k.mismatch,
                }
                for k in self.path.knots
            ],
            "selected": self.selected,
            "refit": {"params": self.refit.as_dict(), "mismatch": self.refit_mismatch},
            "energy": self.energy,
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def path_to_csv(path: Path, library: HyperelasticLibrary) -> str:
    """Plot-ready ``alpha,<parameter names>,mismatch`` table, one row per knot."""
    buf = io.StringIO()
    buf.write(",".join(["alpha", *library.parameter_names, "mismatch"]) + "\n")
    for k in path.knots:
        vals = [k.alpha, *k.w, k.mismatch]
        buf.write(",".join(f"{v:.17g}" for v in vals) + "\n")
    return buf.getvalue()


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def _finish(dataset, library, method, path, selection, refit_options=None, notes=()):
    selected = _stage("select", select_knot, path, selection)
    knot = path.knots[selected]
    w = knot.w
    if library.include_ogden and (w[-2] == 0 or w[-1] == 0):
        # inert Ogden pair: contributes nothing, so it leaves the support
        w = w.copy()
        w[-2:] = 0.0
    support = np.flatnonzero(w)
    if support.size == 0:
        params = MaterialParams.from_vector(np.zeros(library.n_params), library)
        mismatch = float(nonlinear_objective(dataset, library).value(params.as_vector()))
    else:
        params, mismatch = _stage(
            "refit", debias_refit, dataset, library, support, w, **(refit_options or {})
        )
    return DiscoveryReport(
        library,
        _method_record(method),
        path,
        selected,
        params,
        mismatch,
        format_energy(params, library),
        tuple(notes),
    )


def run_linear_discovery(
    dataset: Dataset,
    order: int = 4,
    method: CD | LarsLasso = LarsLasso(),
    selection: Selection | None = None,
    config=None,
) -> DiscoveryReport:
    """Discovery with the Mooney-Rivlin library via CD or LARS-LASSO.

    A CD run becomes a one-knot path at its ``alpha``.

    Raises
    ------
    StageError
        Wrapping the failure of ``assemble``, ``solve``, ``select`` or ``refit``.
    """
    library = HyperelasticLibrary(order, include_ogden=False)
    problem = _stage("assemble", assemble_linear_problem, dataset, order)
    scales = problem.column_scales
    if isinstance(method, CD):
        if method.w0 not in ("ols", "zeros"):
            raise ValueError("CD start must be 'ols' or 'zeros'")
        w0 = None if method.w0 == "ols" else np.zeros(problem.n_features)
        w = _stage("solve", cd_solve, problem, method.alpha, w0, config)
        knots = (PathKnot(method.alpha, w, tuple(np.flatnonzero(w).tolist()), problem.mismatch(w)),)
        normalized = Path(knots, method="cd")
    elif isinstance(method, LarsLasso):
        normalized = _stage("solve", lars_lasso_path, problem, config)
    else:
        raise TypeError(f"unsupported linear method {method!r}")
    physical = Path(
        tuple(
            PathKnot(k.alpha, rescale_solution(k.w, scales), k.active, k.mismatch, k.is_drop_step)
            for k in normalized.knots
        ),
        normalized.steps,
        normalized.stopped_early,
        normalized.method,
    )
    notes = ("path stopped early at the alpha floor",) if normalized.stopped_early else ()
    return _finish(dataset, library, method, physical, selection, notes=notes)


_NONLINEAR_MAX_STEPS = 2_000_000


def _start_vector(start, dim: int) -> np.ndarray:
    if isinstance(start, str):
        if start == "ones":
            return np.ones(dim)
        if start == "zeros":
            return np.zeros(dim)
        raise ValueError(f"unknown start vector {start!r}")
    w = np.asarray(start, dtype=float)
    if w.shape != (dim,):
        raise ValueError(f"start vector must have length {dim}")
    return w


def run_nonlinear_discovery(
    dataset: Dataset,
    library: HyperelasticLibrary = HyperelasticLibrary(4, include_ogden=True),
    method: Ista | Pathwise = Ista(1e-4),
    selection: Selection | None = None,
    config: IstaConfig | None = None,
    refit_solver: str = "lm",
    refit_config: IstaConfig | None = None,
) -> DiscoveryReport:
    """Discovery with the (possibly nonlinear) library via ISTA or pathwise ISTA.

    Without an explicit ``config`` the ISTA step starts at the reciprocal of
    a curvature estimate at the start point, backtracking does the rest, and
    the iteration budget is raised to two million steps. ``refit_solver``
    selects the refit algorithm (see :func:`debias_refit`).
    """
    objective = _stage("assemble", nonlinear_objective, dataset, library)
    if isinstance(method, Ista):
        w0 = _start_vector(method.w0, library.n_params)
        cfg = config or IstaConfig(
            step=method.step or estimate_step(objective, w0), max_steps=_NONLINEAR_MAX_STEPS
        )
        w = _stage("solve", ista_solve, objective, method.alpha, w0, cfg)
        knots = (
            PathKnot(method.alpha, w, tuple(np.flatnonzero(w).tolist()), float(objective.value(w))),
        )
        path = Path(knots, method="ista")
    elif isinstance(method, Pathwise):
        cfg = config or IstaConfig(
            step=method.step or estimate_step(objective, np.zeros(library.n_params)),
            max_steps=_NONLINEAR_MAX_STEPS,
        )
        path = _stage("solve", pathwise_ista, objective, method.n_alpha, cfg)
    else:
        raise TypeError(f"unsupported nonlinear method {method!r}")
    refit = {"solver": refit_solver, "config": refit_config}
    return _finish(dataset, library, method, path, selection, refit)
