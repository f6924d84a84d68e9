"""Synthetic benchmark data: truth models, sampling grids, noise and CSV files.

CSV layout::

    load_case,control,stress
    UTC,<F11>,<P11>
    ...
    SS,<F12>,<P12>

Values are written with 17 significant digits so a round trip is exact.
Noise uses NumPy's ``Philox`` counter-based bit generator seeded with the
given integer; UTC stresses draw first, then SS stresses.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import ParseError
from .hyperelastic import Dataset, HyperelasticLibrary, LoadCase, MaterialParams, model_stress

__all__ = [
    "TruthModel",
    "SamplingGrid",
    "truth_params",
    "generate_truth",
    "add_noise",
    "write_csv",
    "read_csv",
    "dataset_to_csv",
    "dataset_from_csv",
]


class TruthModel(str, Enum):
    NEO_HOOKEAN = "NeoHookean"
    MOONEY_RIVLIN = "MooneyRivlin"
    YEOH = "Yeoh"
    BIDERMAN = "Biderman"
    OGDEN = "Ogden"
    MIXED = "Mixed"

    @classmethod
    def parse(cls, name: str) -> "TruthModel":
        key = name.replace("-", "").replace("_", "").lower()
        for m in cls:
            if m.value.lower() == key:
                return m
        raise ValueError(f"unknown model {name!r}; choose from {', '.join(m.value for m in cls)}")

    @property
    def coefficients(self) -> dict:
        return dict(_TRUTH[self])

    @property
    def is_linear(self) -> bool:
        return "D" not in _TRUTH[self]


_MR = {"C10": 40.0, "C01": 20.0}
_OG = {"D": 5.0, "delta": 8.0}
_TRUTH = {
    TruthModel.NEO_HOOKEAN: {"C10": 40.0},
    TruthModel.MOONEY_RIVLIN: _MR,
    TruthModel.YEOH: {"C10": 40.0, "C20": 10.0, "C30": 30.0},
    TruthModel.BIDERMAN: {"C10": 40.0, "C01": 20.0, "C20": 10.0, "C30": 30.0},
    TruthModel.OGDEN: _OG,
    TruthModel.MIXED: {**_MR, **_OG},
}


@dataclass(frozen=True)
class SamplingGrid:
    """Equidistant controls: ``n_utc`` stretches in [0.75, 1.5] and ``n_ss``
    shear amounts in [0, 0.5], endpoints included."""

    n_utc: int = 50
    n_ss: int = 50
    utc_range: tuple[float, float] = (0.75, 1.5)
    ss_range: tuple[float, float] = (0.0, 0.5)

    def __post_init__(self):
        if self.n_utc < 0 or self.n_ss < 0:
            raise ValueError("sample counts must be nonnegative")
        if self.n_utc + self.n_ss < 1:
            raise ValueError("grid needs at least one sample")
        if self.utc_range[0] <= 0:
            raise ValueError("UTC stretches must be positive")

    def controls(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linspace(*self.utc_range, self.n_utc), np.linspace(*self.ss_range, self.n_ss)


def truth_params(model: TruthModel, library: HyperelasticLibrary | None = None) -> MaterialParams:
    """Truth parameters expressed in ``library`` (smallest fitting library by default)."""
    model = TruthModel(model)
    if library is None:
        library = HyperelasticLibrary(3 if model in (TruthModel.YEOH, TruthModel.BIDERMAN) else 1,
                                      not model.is_linear)
    return MaterialParams.from_dict(model.coefficients, library)


def generate_truth(model: TruthModel, grid: SamplingGrid | None = None) -> Dataset:
    """Noise-free stresses of ``model`` on ``grid``."""
    grid = grid or SamplingGrid()
    params = truth_params(model)
    f11, f12 = grid.controls()
    return Dataset(
        f11, model_stress(params, LoadCase.UTC, f11), f12, model_stress(params, LoadCase.SS, f12)
    )


def add_noise(dataset: Dataset, sigma: float, seed: int = 0) -> Dataset:
    """Add i.i.d. ``N(0, sigma^2)`` noise to every stress.

    ``sigma = 0`` returns an equal copy. The stress normalisers of the
    result follow from the noisy stresses.
    """
    if not sigma >= 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return Dataset(dataset.f11, dataset.p11, dataset.f12, dataset.p12)
    rng = np.random.Generator(np.random.Philox(int(seed)))
    e11 = rng.standard_normal(dataset.n_utc)
    e12 = rng.standard_normal(dataset.n_ss)
    return Dataset(dataset.f11, dataset.p11 + sigma * e11, dataset.f12, dataset.p12 + sigma * e12)


def dataset_to_csv(dataset: Dataset) -> str:
    lines = ["load_case,control,stress"]
    lines += [f"UTC,{x:.17g},{p:.17g}" for x, p in zip(dataset.f11, dataset.p11)]
    lines += [f"SS,{x:.17g},{p:.17g}" for x, p in zip(dataset.f12, dataset.p12)]
    return "\n".join(lines) + "\n"


def dataset_from_csv(text: str) -> Dataset:
    """Parse the CSV layout above.

    Raises
    ------
    ParseError
        With the 1-based line number of the first offending line.
    """
    rows = {LoadCase.UTC: ([], []), LoadCase.SS: ([], [])}
    reader = csv.reader(io.StringIO(text))
    header_seen = False
    for lineno, fields in enumerate(reader, start=1):
        if not fields or all(not f.strip() for f in fields):
            continue
        fields = [f.strip() for f in fields]
        if not header_seen:
            if fields != ["load_case", "control", "stress"]:
                raise ParseError(lineno, "expected header 'load_case,control,stress'")
            header_seen = True
            continue
        if len(fields) != 3:
            raise ParseError(lineno, f"expected 3 fields, got {len(fields)}")
        try:
            lc = LoadCase(fields[0].upper())
        except ValueError:
            raise ParseError(lineno, f"unknown load case {fields[0]!r}") from None
        try:
            x, p = float(fields[1]), float(fields[2])
        except ValueError:
            raise ParseError(lineno, "control and stress must be numbers") from None
        if not (np.isfinite(x) and np.isfinite(p)):
            raise ParseError(lineno, "non-finite value")
        if lc is LoadCase.UTC and x <= 0:
            raise ParseError(lineno, "UTC stretch must be positive")
        rows[lc][0].append(x)
        rows[lc][1].append(p)
    if not header_seen:
        raise ParseError(1, "empty file")
    (f11, p11), (f12, p12) = rows[LoadCase.UTC], rows[LoadCase.SS]
    if not f11 and not f12:
        raise ParseError(lineno, "no data rows")
    return Dataset(f11, p11, f12, p12)


def write_csv(path, dataset: Dataset) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dataset_to_csv(dataset))


def read_csv(path) -> Dataset:
    with open(os.fspath(path), encoding="utf-8") as fh:
        return dataset_from_csv(fh.read())
