"""Incompressible hyperelasticity for two homogeneous load cases.

Uniaxial tension/compression (UTC) is controlled by the stretch
``F11 = lam`` with lateral stretches ``lam**-0.5``; simple shear (SS) by the
shear amount ``F12 = gamma``. The strain-energy library is a generalised
Mooney-Rivlin polynomial

    W = sum_{p + q <= order, p + q >= 1} C_pq (I1 - 3)^p (I2 - 3)^q

optionally augmented by one Ogden term ``D (l1^d + l2^d + l3^d - 3)``.
Stresses are closed-form per load case: the UTC Piola stress ``P11`` is the
derivative of ``W`` along the incompressible uniaxial path (pressure already
eliminated) and the SS stress ``P12`` is ``dW/dgamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core_sparse import QuadraticProblem
from .exceptions import LengthMismatchError, NonPositiveStretchError
from .proximal import SmoothObjective

__all__ = [
    "LoadCase",
    "HyperelasticLibrary",
    "KinematicState",
    "Dataset",
    "MaterialParams",
    "kinematics",
    "mooney_stress_features",
    "mooney_feature_matrix",
    "ogden_stress",
    "ogden_stress_partials",
    "model_stress",
    "assemble_linear_problem",
    "StressResiduals",
    "nonlinear_objective",
    "energy_value",
]


class LoadCase(str, Enum):
    UTC = "UTC"
    SS = "SS"


@dataclass(frozen=True)
class HyperelasticLibrary:
    """Feature library: Mooney-Rivlin polynomial up to ``mooney_order`` plus an
    optional Ogden pair.

    Flat parameter order is by total degree, then by the ``(I2 - 3)``
    exponent ascending (``C10, C01, C20, C11, C02, ...``), followed by
    ``D`` and ``delta`` when ``include_ogden``.
    """

    mooney_order: int = 4
    include_ogden: bool = False

    def __post_init__(self):
        if int(self.mooney_order) != self.mooney_order or self.mooney_order < 1:
            raise ValueError("mooney_order must be a positive integer")

    @property
    def exponents(self) -> tuple[tuple[int, int], ...]:
        """``(p, q)`` exponents of ``(I1 - 3)`` and ``(I2 - 3)`` per Mooney feature."""
        return tuple((i - j, j) for i in range(1, self.mooney_order + 1) for j in range(i + 1))

    @property
    def n_mooney(self) -> int:
        return self.mooney_order * (self.mooney_order + 3) // 2

    @property
    def n_params(self) -> int:
        return self.n_mooney + (2 if self.include_ogden else 0)

    @property
    def feature_index(self) -> tuple:
        """Flat index -> ``("mooney", p, q)`` or ``("ogden", "D" | "delta")``."""
        idx = [("mooney", p, q) for p, q in self.exponents]
        if self.include_ogden:
            idx += [("ogden", "D"), ("ogden", "delta")]
        return tuple(idx)

    @property
    def parameter_names(self) -> tuple[str, ...]:
        names = [f"C{p}{q}" for p, q in self.exponents]
        if self.include_ogden:
            names += ["D", "delta"]
        return tuple(names)

    def describe(self) -> str:
        s = f"mooney-rivlin order {self.mooney_order}"
        return s + " + ogden" if self.include_ogden else s


@dataclass(frozen=True)
class KinematicState:
    load_case: LoadCase
    control: float
    I1: float
    I2: float
    stretches: tuple[float, float, float]


def _as_load_case(load_case) -> LoadCase:
    try:
        return LoadCase(load_case.value if isinstance(load_case, LoadCase) else str(load_case).upper())
    except ValueError:
        raise ValueError(f"unknown load case {load_case!r}; expected UTC or SS") from None


def kinematics(load_case, control: float) -> KinematicState:
    """Invariants and principal stretches of the load case at ``control``.

    Raises
    ------
    NonPositiveStretchError
        UTC with ``control <= 0``.
    """
    lc = _as_load_case(load_case)
    x = float(control)
    if lc is LoadCase.UTC:
        if not x > 0:
            raise NonPositiveStretchError(f"UTC stretch must be positive, got {x}")
        lat = x**-0.5
        return KinematicState(lc, x, x * x + 2.0 / x, 2.0 * x + x**-2, (x, lat, lat))
    l1 = _ss_lambda1(x)
    return KinematicState(lc, x, 3.0 + x * x, 3.0 + x * x, (l1, 1.0 / l1, 1.0))


def _ss_lambda1(gamma):
    return (gamma + np.sqrt(gamma * gamma + 4.0)) / 2.0


def _check_stretch(lam: np.ndarray):
    if np.any(~(lam > 0)):
        raise NonPositiveStretchError("UTC stretches must be positive")


def _invariant_terms(lc: LoadCase, x: np.ndarray):
    """``(I1 - 3, I2 - 3, dI1/dx, dI2/dx)`` along the load path, cancellation-free."""
    if lc is LoadCase.UTC:
        _check_stretch(x)
        t = (x - 1.0) ** 2
        j1 = t * (x + 2.0) / x
        j2 = t * (2.0 * x + 1.0) / (x * x)
        return j1, j2, 2.0 * (x - x**-2), 2.0 * (1.0 - x**-3)
    g2 = x * x
    return g2, g2, 2.0 * x, 2.0 * x


def mooney_feature_matrix(load_case, controls, order: int) -> np.ndarray:
    """Unit-coefficient stress of every Mooney feature, shape (n, n_mooney)."""
    lc = _as_load_case(load_case)
    x = np.atleast_1d(np.asarray(controls, dtype=float))
    j1, j2, d1, d2 = _invariant_terms(lc, x)
    cols = []
    for p, q in HyperelasticLibrary(order).exponents:
        col = np.zeros_like(x)
        if p:
            col = col + p * j1 ** (p - 1) * j2**q * d1
        if q:
            col = col + q * j1**p * j2 ** (q - 1) * d2
        cols.append(col)
    return np.column_stack(cols) if x.size else np.zeros((0, len(cols)))


def mooney_stress_features(state: KinematicState, order: int) -> np.ndarray:
    """Stress (P11 for UTC, P12 for SS) of each Mooney feature with unit coefficient."""
    return mooney_feature_matrix(state.load_case, [state.control], order)[0]


def _ogden_parts(lc: LoadCase, x: np.ndarray, delta: float):
    """Return ``(b, db/ddelta)`` with ``P = D * b``."""
    if lc is LoadCase.UTC:
        _check_stretch(x)
        a, c = x ** (delta - 1.0), x ** (-delta / 2.0 - 1.0)
        log = np.log(x)
        b = delta * (a - c)
        db = (a - c) + delta * log * (a + 0.5 * c)
        return b, db
    root = np.sqrt(x * x + 4.0)
    l1 = (x + root) / 2.0
    dl1 = (1.0 + x / root) / 2.0
    a, c = l1 ** (delta - 1.0), l1 ** (-delta - 1.0)
    log = np.log(l1)
    b = delta * (a - c) * dl1
    db = dl1 * ((a - c) + delta * log * (a + c))
    return b, db


def ogden_stress(state: KinematicState, D: float, delta: float) -> float:
    """Stress of ``D (l1^delta + l2^delta + l3^delta - 3)`` in the state's load case."""
    b, _ = _ogden_parts(state.load_case, np.array([state.control]), float(delta))
    return float(D * b[0])


def ogden_stress_partials(state: KinematicState, D: float, delta: float) -> tuple[float, float]:
    """``(dP/dD, dP/ddelta)`` of :func:`ogden_stress`."""
    b, db = _ogden_parts(state.load_case, np.array([state.control]), float(delta))
    return float(b[0]), float(D * db[0])


def _array_1d(a, name):
    a = np.array(a, dtype=float).reshape(-1)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    a.setflags(write=False)
    return a


class Dataset:
    """Stress-deformation samples for UTC and SS with the stress normalisers.

    Parameters
    ----------
    f11, p11 : array_like
        UTC stretches (positive) and Piola stresses.
    f12, p12 : array_like
        SS shear amounts and Piola shear stresses.

    Either load case may be empty, but not both.
    """

    def __init__(self, f11=(), p11=(), f12=(), p12=()):
        self.f11, self.p11 = _array_1d(f11, "f11"), _array_1d(p11, "p11")
        self.f12, self.p12 = _array_1d(f12, "f12"), _array_1d(p12, "p12")
        if self.f11.size != self.p11.size:
            raise LengthMismatchError("f11 and p11 differ in length")
        if self.f12.size != self.p12.size:
            raise LengthMismatchError("f12 and p12 differ in length")
        if self.n_samples == 0:
            raise ValueError("dataset has no samples")
        _check_stretch(self.f11)

    @property
    def n_utc(self) -> int:
        return self.f11.size

    @property
    def n_ss(self) -> int:
        return self.f12.size

    @property
    def n_samples(self) -> int:
        return self.n_utc + self.n_ss

    @property
    def p11_max(self) -> float:
        return float(np.max(np.abs(self.p11))) if self.n_utc else 0.0

    @property
    def p12_max(self) -> float:
        return float(np.max(np.abs(self.p12))) if self.n_ss else 0.0

    def normalizers(self) -> tuple[float, float]:
        """``(P11max, P12max)`` with 1.0 substituted for an all-zero load case."""
        return self.p11_max or 1.0, self.p12_max or 1.0

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in ("f11", "p11", "f12", "p12")
        )

    __hash__ = None

    def __repr__(self):
        return f"Dataset(n_utc={self.n_utc}, n_ss={self.n_ss})"


@dataclass(frozen=True)
class MaterialParams:
    """Material parameters; Ogden slots are ``None`` for a Mooney-only library."""

    mooney: np.ndarray
    ogden_D: float | None = None
    ogden_delta: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mooney", _array_1d(self.mooney, "mooney"))
        if (self.ogden_D is None) != (self.ogden_delta is None):
            raise ValueError("ogden_D and ogden_delta must be given together")

    @property
    def has_ogden(self) -> bool:
        return self.ogden_D is not None

    @property
    def mooney_order(self) -> int:
        n = self.mooney.size
        order = int(round((-3 + math.sqrt(9 + 8 * n)) / 2))
        if order < 1 or order * (order + 3) // 2 != n:
            raise ValueError(f"{n} Mooney coefficients do not form a complete polynomial")
        return order

    @property
    def library(self) -> HyperelasticLibrary:
        return HyperelasticLibrary(self.mooney_order, self.has_ogden)

    def as_vector(self) -> np.ndarray:
        if self.has_ogden:
            return np.concatenate([self.mooney, [self.ogden_D, self.ogden_delta]])
        return self.mooney.copy()

    @classmethod
    def from_vector(cls, w, library: HyperelasticLibrary) -> "MaterialParams":
        w = np.asarray(w, dtype=float)
        if w.shape != (library.n_params,):
            raise LengthMismatchError(f"expected {library.n_params} parameters, got {w.shape}")
        if library.include_ogden:
            return cls(w[:-2], float(w[-2]), float(w[-1]))
        return cls(w)

    @classmethod
    def from_dict(cls, values: dict, library: HyperelasticLibrary) -> "MaterialParams":
        """Build from ``{"C10": 40, "D": 5, ...}``; unnamed parameters are zero."""
        names = library.parameter_names
        unknown = set(values) - set(names)
        if unknown:
            raise KeyError(f"unknown parameters {sorted(unknown)}")
        return cls.from_vector([float(values.get(k, 0.0)) for k in names], library)

    def as_dict(self) -> dict:
        return dict(zip(self.library.parameter_names, self.as_vector().tolist()))


def model_stress(params: MaterialParams, load_case, controls) -> np.ndarray:
    """Model stress at each control value of one load case."""
    lc = _as_load_case(load_case)
    x = np.atleast_1d(np.asarray(controls, dtype=float))
    s = mooney_feature_matrix(lc, x, params.mooney_order) @ params.mooney
    if params.has_ogden and params.ogden_D != 0.0 and x.size:
        b, _ = _ogden_parts(lc, x, params.ogden_delta)
        s = s + params.ogden_D * b
    return s


def assemble_linear_problem(dataset: Dataset, order: int) -> QuadraticProblem:
    """Normalised Mooney feature matrix and target for the linear library.

    Rows are UTC samples then SS samples, each divided by its load case's
    maximal absolute stress; columns are then scaled to unit norm.

    Raises
    ------
    ZeroColumnError
        A feature produces no stress on any sample.
    RankDeficientError
        Features are indistinguishable on the sampled states.
    """
    n11, n12 = dataset.normalizers()
    X = np.vstack(
        [
            mooney_feature_matrix(LoadCase.UTC, dataset.f11, order) / n11,
            mooney_feature_matrix(LoadCase.SS, dataset.f12, order) / n12,
        ]
    )
    y = np.concatenate([dataset.p11 / n11, dataset.p12 / n12])
    return QuadraticProblem.from_features(X, y)


class StressResiduals:
    """Normalised residuals ``r_i = (P_model_i - P_i) / Pmax_case(i)`` and their
    Jacobian over the flat parameter vector of ``library``.

    The mismatch is ``r @ r / (2 N)``.
    """

    def __init__(self, dataset: Dataset, library: HyperelasticLibrary):
        n11, n12 = dataset.normalizers()
        self.library = library
        self.n_samples = dataset.n_samples
        order = library.mooney_order
        self.M = np.vstack(
            [
                mooney_feature_matrix(LoadCase.UTC, dataset.f11, order) / n11,
                mooney_feature_matrix(LoadCase.SS, dataset.f12, order) / n12,
            ]
        )
        self.y = np.concatenate([dataset.p11 / n11, dataset.p12 / n12])
        # Ogden stress of both load cases in one vectorised form:
        #   P/D = scale * delta * (exp((delta-1) L) - exp((-beta delta - 1) L))
        # with L the log of the leading stretch, beta = 1/2 (UTC) or 1 (SS) and
        # scale = dl1/dgamma for SS, all divided by the load case's normaliser
        root = np.sqrt(dataset.f12**2 + 4.0)
        self._L = np.concatenate([np.log(dataset.f11), np.log((dataset.f12 + root) / 2.0)])
        self._beta = np.concatenate([np.full(dataset.n_utc, 0.5), np.ones(dataset.n_ss)])
        self._scale = np.concatenate(
            [np.full(dataset.n_utc, 1.0 / n11), (1.0 + dataset.f12 / root) / (2.0 * n12)]
        )

    def ogden_columns(self, delta: float) -> tuple[np.ndarray, np.ndarray]:
        """Normalised Ogden stress per unit ``D`` and its ``delta`` derivative."""
        L, beta = self._L, self._beta
        a = np.exp((delta - 1.0) * L)
        c = np.exp((-beta * delta - 1.0) * L)
        return self._scale * delta * (a - c), self._scale * ((a - c) + delta * L * (a + beta * c))

    def residual_parts(self, w):
        nm = self.library.n_mooney
        w = np.asarray(w, dtype=float)
        r = self.M @ w[:nm] - self.y
        if not self.library.include_ogden:
            return r, None, None
        b, db = self.ogden_columns(w[nm + 1])
        return r + w[nm] * b, b, db

    def __call__(self, w) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            return self.residual_parts(w)[0]

    def jacobian(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        nm = self.library.n_mooney
        J = np.empty((self.n_samples, self.library.n_params))
        J[:, :nm] = self.M
        if self.library.include_ogden:
            with np.errstate(over="ignore", invalid="ignore"):
                b, db = self.ogden_columns(w[nm + 1])
            J[:, nm] = b
            J[:, nm + 1] = w[nm] * db
        return J


def nonlinear_objective(dataset: Dataset, library: HyperelasticLibrary) -> SmoothObjective:
    """Normalised model-data mismatch over the flat parameter vector.

    ``f(w) = 1/(2N) sum_i ((P_model_i - P_i) / Pmax_case(i))^2`` with an
    analytic gradient. Evaluations that overflow return non-finite values.
    """
    res = StressResiduals(dataset, library)
    N, nm, M = res.n_samples, library.n_mooney, res.M
    ogden = library.include_ogden

    def value_and_gradient(w):
        with np.errstate(over="ignore", invalid="ignore"):
            r, b, db = res.residual_parts(w)
            g = np.empty(library.n_params)
            g[:nm] = M.T @ r / N
            if ogden:
                g[nm] = r @ b / N
                g[nm + 1] = w[nm] * (r @ db) / N
            return float(r @ r) / (2 * N), g

    def value(w):
        r = res(w)
        return float(r @ r) / (2 * N)

    def gradient(w):
        return value_and_gradient(w)[1]

    positive = (nm + 1,) if ogden else ()
    return SmoothObjective(
        library.n_params, value, gradient, value_and_gradient, positive_coords=positive
    )


def energy_value(params: MaterialParams, state: KinematicState) -> float:
    """Strain energy density of ``params`` at ``state``."""
    j1, j2 = state.I1 - 3.0, state.I2 - 3.0
    if state.load_case is LoadCase.UTC:
        # same cancellation-free forms as the stress maps
        j1, j2, _, _ = (float(v[0]) for v in _invariant_terms(LoadCase.UTC, np.array([state.control])))
    W = 0.0
    for c, (p, q) in zip(params.mooney, HyperelasticLibrary(params.mooney_order).exponents):
        if c:
            W += c * j1**p * j2**q
    if params.has_ogden and params.ogden_D:
        d = params.ogden_delta
        W += params.ogden_D * (sum(l**d for l in state.stretches) - 3.0)
    return float(W)
