"""Mixed scalar / compositional / functional predictors for a binary classifier.

Each predictor type is mapped into ordinary real coordinates, stacked into one
design matrix and handed to the logistic regression in :mod:`.glm`:

* the scalar is centered and scaled to unit variance,
* compositions go through ilr and are centered,
* curves are projected onto a functional PCA basis fitted on the training
  curves (projection subtracts the training mean curve).

After fitting, the ilr coefficients are mapped back onto the simplex and the
score coefficients are turned into a coefficient curve.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import fpca, glm, simplex
from .errors import (
    DimensionMismatch,
    GridMismatch,
    InputError,
    SeparationDetected,
    ZeroVarianceColumn,
)

log = logging.getLogger(__name__)

FORMAT_NAME = "mixpredict-model"
FORMAT_VERSION = 1
_ZERO_VAR = 1e-24


@dataclass(frozen=True, eq=False)
class MixedDataset:
    """n observations of (scalar, composition, curve[, response]).

    ``compositions`` must already be closed; use :meth:`from_raw` for counts.
    """

    scalar: np.ndarray
    compositions: np.ndarray
    curves: np.ndarray
    grid: np.ndarray
    response: np.ndarray | None = None

    def __post_init__(self):
        scalar = np.asarray(self.scalar, dtype=float).reshape(-1)
        comps = np.atleast_2d(np.asarray(self.compositions, dtype=float))
        curves = np.atleast_2d(np.asarray(self.curves, dtype=float))
        grid = fpca.check_grid(self.grid)
        n = scalar.size
        if comps.shape[0] != n or curves.shape[0] != n:
            raise DimensionMismatch(
                f"block sizes differ: scalar {n}, compositions {comps.shape[0]}, curves {curves.shape[0]}"
            )
        if curves.shape[1] != grid.size:
            raise GridMismatch(f"curves have {curves.shape[1]} points, grid has {grid.size}")
        if not np.all(np.isfinite(scalar)) or not np.all(np.isfinite(curves)):
            raise InputError("scalar and curve values must be finite")
        # validates positivity and closure
        simplex.ilr(comps)
        object.__setattr__(self, "scalar", scalar)
        object.__setattr__(self, "compositions", comps)
        object.__setattr__(self, "curves", curves)
        object.__setattr__(self, "grid", grid)
        if self.response is not None:
            y = np.asarray(self.response, dtype=float).reshape(-1)
            if y.size != n:
                raise DimensionMismatch(f"response has {y.size} values for {n} observations")
            if not np.all((y == 0) | (y == 1)):
                raise InputError("response must be coded 0/1")
            object.__setattr__(self, "response", y)

    @classmethod
    def from_raw(cls, scalar, raw_parts, curves, grid, response=None) -> "MixedDataset":
        return cls(scalar, simplex.closure(raw_parts), curves, grid, response)

    @property
    def n(self) -> int:
        return self.scalar.size

    @property
    def n_parts(self) -> int:
        return self.compositions.shape[1]

    def subset(self, index) -> "MixedDataset":
        index = np.asarray(index)
        return MixedDataset(
            self.scalar[index],
            self.compositions[index],
            self.curves[index],
            self.grid,
            None if self.response is None else self.response[index],
        )

    def without_response(self) -> "MixedDataset":
        return replace(self, response=None)


@dataclass(frozen=True)
class Centers:
    """Training-side constants reused at prediction time."""

    scalar_mean: float
    scalar_scale: float
    ilr_mean: tuple[float, ...]


def compute_centers(data: MixedDataset, standardize_scalar: bool = True) -> Centers:
    scale = float(data.scalar.std()) if standardize_scalar else 1.0
    if standardize_scalar and scale <= 0.0:
        raise ZeroVarianceColumn("scalar predictor is constant", ["scalar"])
    return Centers(
        scalar_mean=float(data.scalar.mean()),
        scalar_scale=scale,
        ilr_mean=tuple(float(v) for v in simplex.ilr(data.compositions).mean(axis=0)),
    )


def _labels(D: int, M: int, include_intercept: bool):
    labels, kinds = [], []
    if include_intercept:
        labels.append("intercept")
        kinds.append("intercept")
    labels.append("scalar")
    kinds.append("scalar")
    labels += [f"ilr{k + 1}" for k in range(D - 1)]
    kinds += ["ilr"] * (D - 1)
    labels += [f"fpc{j + 1}" for j in range(M)]
    kinds += ["fpca"] * M
    return tuple(labels), tuple(kinds)


def assemble_design(
    data: MixedDataset,
    basis: fpca.FpcaBasis,
    include_intercept: bool = True,
    centers: Centers | None = None,
    standardize_scalar: bool = True,
) -> tuple[glm.DesignMatrix, Centers]:
    """Stack ``[intercept?, scalar, ilr coords, FPCA scores]`` column-wise.

    Centers are computed from ``data`` unless given, and returned so the same
    constants can be applied to new observations.
    """
    if not fpca.same_grid(data.grid, basis.grid):
        raise GridMismatch("dataset grid differs from the FPCA basis grid")
    if centers is None:
        centers = compute_centers(data, standardize_scalar)
    z = (data.scalar - centers.scalar_mean) / centers.scalar_scale
    ilr_mean = np.asarray(centers.ilr_mean)
    if ilr_mean.size != data.n_parts - 1:
        raise DimensionMismatch(
            f"model was fitted on {ilr_mean.size + 1}-part compositions, data has {data.n_parts}"
        )
    c_star = simplex.ilr(data.compositions) - ilr_mean
    scores = fpca.project(basis, data.curves)
    cols = [z[:, None], c_star, scores]
    if include_intercept:
        cols.insert(0, np.ones((data.n, 1)))
    labels, kinds = _labels(data.n_parts, basis.n_components, include_intercept)
    return glm.DesignMatrix(np.hstack(cols), labels, kinds), centers


@dataclass(frozen=True, eq=False)
class MixedFit:
    """Fitted coefficients in transformed and native spaces.

    ``gamma`` is per standard deviation of the training scalar when the
    scalar was standardised; ``gamma_per_unit`` is per raw unit.
    """

    gamma: float
    alpha_star: np.ndarray
    alpha: np.ndarray
    b: np.ndarray
    beta_curve: fpca.FunctionalSample
    basis: fpca.FpcaBasis
    centers: Centers
    intercept: float | None
    diagnostics: glm.LogisticFit
    lam: float
    standardize_scalar: bool = True
    notes: tuple[str, ...] = field(default=())

    @property
    def include_intercept(self) -> bool:
        return self.intercept is not None

    @property
    def gamma_per_unit(self) -> float:
        return self.gamma / self.centers.scalar_scale

    @property
    def coefficients(self) -> np.ndarray:
        return self.diagnostics.coefficients


def _check_columns(design: glm.DesignMatrix) -> None:
    vals = design.values
    var = vals.var(axis=0)
    dead = [
        (lab, kind)
        for lab, kind, v in zip(design.labels, design.kinds, var)
        if kind != "intercept" and v <= _ZERO_VAR
    ]
    if dead:
        blocks = sorted({kind for _, kind in dead})
        names = [lab for lab, _ in dead]
        raise ZeroVarianceColumn(
            f"non-identifiable {'/'.join(blocks)} block: zero-variance columns {', '.join(names)}",
            names,
        )


def fit(
    data: MixedDataset,
    lam: float = 0.85,
    *,
    include_intercept: bool = True,
    standardize_scalar: bool = True,
    n_components: int | None = None,
    max_iter: int = 100,
    tol: float = 1e-8,
    ridge: float = 0.0,
) -> MixedFit:
    """Fit the mixed-predictor logistic model.

    Raises
    ------
    ZeroVarianceColumn
        If a predictor block carries no variation (e.g. all compositions equal).
    SeparationDetected
        Re-raised with the predictor blocks of the offending coefficients.
    """
    if data.response is None:
        raise InputError("fitting needs a response")
    if data.n < 10:
        log.warning("fitting on only %d observations", data.n)
    basis = fpca.fit_fpca(data.curves, data.grid, lam, n_components=n_components)
    design, centers = assemble_design(data, basis, include_intercept, None, standardize_scalar)
    _check_columns(design)
    # the optimizer sees unit-variance columns so that its divergence bound and
    # ridge penalty do not depend on the units of the inputs
    scale = np.where(np.array(design.kinds) == "intercept", 1.0, design.values.std(axis=0))
    scaled = glm.DesignMatrix(design.values / scale, design.labels, design.kinds)
    try:
        lf = glm.fit_logistic(scaled, data.response, max_iter=max_iter, tol=tol, ridge=ridge)
    except SeparationDetected as exc:
        kinds = dict(zip(design.labels, design.kinds))
        blocks = sorted({kinds[lab] for lab in exc.labels if lab in kinds})
        raise SeparationDetected(f"{exc} [blocks: {', '.join(blocks)}]", exc.labels) from exc
    lf = replace(lf, coefficients=lf.coefficients / scale)
    return _from_coefficients(lf, design, basis, centers, lam, standardize_scalar)


def _from_coefficients(lf, design, basis, centers, lam, standardize_scalar) -> MixedFit:
    coef = lf.coefficients
    intercept = float(coef[design.block("intercept")][0]) if "intercept" in design.kinds else None
    alpha_star = coef[design.block("ilr")].copy()
    b = coef[design.block("fpca")].copy()
    notes = []
    if lf.penalized:
        notes.append(f"penalized MLE (ridge={lf.ridge:g})")
    if not lf.converged:
        notes.append("optimizer did not converge")
    return MixedFit(
        gamma=float(coef[design.block("scalar")][0]),
        alpha_star=alpha_star,
        alpha=simplex.ilr_inv(alpha_star),
        b=b,
        beta_curve=fpca.reconstruct_curve(basis, b),
        basis=basis,
        centers=centers,
        intercept=intercept,
        diagnostics=lf,
        lam=float(lam),
        standardize_scalar=standardize_scalar,
        notes=tuple(notes),
    )


def design_for(fit: MixedFit, data: MixedDataset) -> glm.DesignMatrix:
    """Design matrix of new data under the fitted centers and basis."""
    design, _ = assemble_design(data, fit.basis, fit.include_intercept, fit.centers)
    return design


def linear_predictor(fit: MixedFit, data: MixedDataset) -> np.ndarray:
    return design_for(fit, data).values @ fit.coefficients


def predict(fit: MixedFit, data: MixedDataset) -> np.ndarray:
    """Probabilities of class 1; nothing is re-estimated from ``data``."""
    return glm.predict_proba(fit.coefficients, design_for(fit, data))


def classify(probabilities, cut: float = 0.5) -> np.ndarray:
    """1 where the probability strictly exceeds ``cut``, else 0."""
    return (np.asarray(probabilities, dtype=float) > cut).astype(int)


# --- serialization -------------------------------------------------------------
# Reals are written as C99 hex floats so reloading is bit-exact.


def _hex(a):
    if isinstance(a, np.ndarray):
        return [_hex(v) for v in a.tolist()]
    if isinstance(a, (list, tuple)):
        return [_hex(v) for v in a]
    return float(a).hex()


def _unhex(a):
    if isinstance(a, list):
        return np.array([_unhex(v) for v in a], dtype=float)
    return float.fromhex(a)


def to_json(fit: MixedFit) -> str:
    basis = fit.basis
    lf = fit.diagnostics
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "real_encoding": "hex-float",
        "lambda": _hex(fit.lam),
        "standardize_scalar": fit.standardize_scalar,
        "intercept": None if fit.intercept is None else _hex(fit.intercept),
        "gamma": _hex(fit.gamma),
        "alpha_star": _hex(fit.alpha_star),
        "alpha": _hex(fit.alpha),
        "b": _hex(fit.b),
        "beta_curve": _hex(fit.beta_curve.values),
        "centers": {
            "scalar_mean": _hex(fit.centers.scalar_mean),
            "scalar_scale": _hex(fit.centers.scalar_scale),
            "ilr_mean": _hex(list(fit.centers.ilr_mean)),
        },
        "basis": {
            "grid": _hex(basis.grid),
            "lambda": _hex(basis.lam),
            "mean_curve": _hex(basis.mean_curve),
            "eigenvalues": _hex(basis.eigenvalues),
            "all_eigenvalues": _hex(basis.all_eigenvalues),
            "eigenfunctions": [_hex(row) for row in basis.eigenfunctions],
        },
        "logistic": {
            "labels": list(lf.labels),
            "coefficients": _hex(lf.coefficients),
            "converged": lf.converged,
            "iterations": lf.iterations,
            "final_loglik": _hex(lf.final_loglik),
            "gradient_norm": _hex(lf.gradient_norm),
            "ridge": _hex(lf.ridge),
        },
        "notes": list(fit.notes),
    }
    return json.dumps(doc, indent=1) + "\n"


def from_json(text: str) -> MixedFit:
    doc = json.loads(text)
    if doc.get("format") != FORMAT_NAME:
        raise InputError("not a mixpredict model file")
    if doc.get("version") != FORMAT_VERSION:
        raise InputError(f"unsupported model file version {doc.get('version')}")
    bd = doc["basis"]
    efs = bd["eigenfunctions"]
    basis = fpca.FpcaBasis(
        grid=_unhex(bd["grid"]),
        mean_curve=_unhex(bd["mean_curve"]),
        eigenvalues=_unhex(bd["eigenvalues"]),
        eigenfunctions=np.vstack([_unhex(r) for r in efs]) if efs else np.zeros((0, len(bd["grid"]))),
        lam=_unhex(bd["lambda"]),
        all_eigenvalues=_unhex(bd["all_eigenvalues"]),
    )
    c = doc["centers"]
    centers = Centers(
        scalar_mean=_unhex(c["scalar_mean"]),
        scalar_scale=_unhex(c["scalar_scale"]),
        ilr_mean=tuple(float(v) for v in _unhex(c["ilr_mean"])),
    )
    ld = doc["logistic"]
    lf = glm.LogisticFit(
        coefficients=_unhex(ld["coefficients"]),
        converged=bool(ld["converged"]),
        iterations=int(ld["iterations"]),
        final_loglik=_unhex(ld["final_loglik"]),
        gradient_norm=_unhex(ld["gradient_norm"]),
        ridge=_unhex(ld["ridge"]),
        labels=tuple(ld["labels"]),
    )
    b = _unhex(doc["b"])
    return MixedFit(
        gamma=_unhex(doc["gamma"]),
        alpha_star=_unhex(doc["alpha_star"]),
        alpha=_unhex(doc["alpha"]),
        b=b,
        beta_curve=fpca.FunctionalSample(basis.grid, _unhex(doc["beta_curve"])),
        basis=basis,
        centers=centers,
        intercept=None if doc["intercept"] is None else _unhex(doc["intercept"]),
        diagnostics=lf,
        lam=_unhex(doc["lambda"]),
        standardize_scalar=bool(doc["standardize_scalar"]),
        notes=tuple(doc.get("notes", ())),
    )


def save(fit: MixedFit, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(to_json(fit))


def load(path) -> MixedFit:
    with open(path, encoding="utf-8") as fh:
        return from_json(fh.read())

