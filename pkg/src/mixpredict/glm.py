"""Binary logistic regression fitted by Newton-Raphson.

The objective is the Bernoulli log-likelihood

    l(b) = sum_i y_i * eta_i - sum_i log(1 + exp(eta_i)),   eta = X b

optionally minus ``ridge / 2 * ||b||^2``. Every Newton step is halved until
the objective does not decrease, so the iteration is an ascent method.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import (
    DegenerateResponse,
    DimensionMismatch,
    InputError,
    SeparationDetected,
    SingularHessian,
)

log = logging.getLogger(__name__)

COLUMN_KINDS = ("intercept", "scalar", "ilr", "fpca", "other")
#: |coefficient| beyond this during an unpenalised fit means separation.
SEPARATION_BOUND = 1e3
#: A fitted |eta| this large means a probability that is numerically 0 or 1.
SATURATED_ETA = 30.0
MAX_HALVINGS = 20
_COND_LIMIT = 1e14


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    values: np.ndarray
    labels: tuple[str, ...]
    kinds: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise DimensionMismatch(f"design must be 2-D, got shape {values.shape}")
        if len(self.labels) != values.shape[1] or len(self.kinds) != values.shape[1]:
            raise DimensionMismatch("one label and one kind per design column required")
        bad = set(self.kinds) - set(COLUMN_KINDS)
        if bad:
            raise InputError(f"unknown column kinds {sorted(bad)}")
        if not np.all(np.isfinite(values)):
            raise InputError("design matrix has non-finite entries")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "kinds", tuple(self.kinds))

    @classmethod
    def plain(cls, values) -> "DesignMatrix":
        values = np.atleast_2d(np.asarray(values, dtype=float))
        q = values.shape[1]
        return cls(values, tuple(f"x{j + 1}" for j in range(q)), ("other",) * q)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def block(self, kind: str) -> np.ndarray:
        """Boolean mask of the columns of one kind."""
        return np.array([k == kind for k in self.kinds], dtype=bool)


@dataclass(frozen=True, eq=False)
class LogisticFit:
    coefficients: np.ndarray
    converged: bool
    iterations: int
    final_loglik: float
    gradient_norm: float
    ridge: float = 0.0
    labels: tuple[str, ...] = ()
    history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def penalized(self) -> bool:
        return self.ridge > 0


def _values(X) -> np.ndarray:
    if isinstance(X, DesignMatrix):
        return X.values
    return np.atleast_2d(np.asarray(X, dtype=float))


def _labels(X, q: int) -> tuple[str, ...]:
    if isinstance(X, DesignMatrix):
        return X.labels
    return tuple(f"x{j + 1}" for j in range(q))


def _response(y, n: int) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (n,):
        raise DimensionMismatch(f"response has shape {y.shape}, design has {n} rows")
    if not np.all((y == 0) | (y == 1)):
        raise InputError("response must be coded 0/1")
    return y


def _coefs(coefficients) -> np.ndarray:
    if isinstance(coefficients, LogisticFit):
        return coefficients.coefficients
    return np.asarray(coefficients, dtype=float)


def _objective(b, X, y, ridge) -> float:
    eta = X @ b
    return float(y @ eta - np.logaddexp(0.0, eta).sum() - 0.5 * ridge * (b @ b))


def log_likelihood(coefficients, X, y) -> float:
    """Unpenalised Bernoulli log-likelihood at the given coefficients."""
    b = _coefs(coefficients)
    Xv = _values(X)
    if Xv.shape[1] != b.size:
        raise DimensionMismatch(f"{b.size} coefficients for a {Xv.shape[1]}-column design")
    y = _response(y, Xv.shape[0])
    return _objective(b, Xv, y, 0.0)


def predict_proba(fit, X) -> np.ndarray:
    """Logistic probabilities ``1 / (1 + exp(-eta))`` without overflow."""
    b = _coefs(fit)
    Xv = _values(X)
    if Xv.shape[1] != b.size:
        raise DimensionMismatch(f"{b.size} coefficients for a {Xv.shape[1]}-column design")
    return expit(Xv @ b)


def _check_separation(b, eta, y, labels):
    big = np.abs(b) > SEPARATION_BOUND
    if np.any(big):
        names = [labels[j] for j in np.flatnonzero(big)]
        raise SeparationDetected(
            f"coefficients diverging (|b| > {SEPARATION_BOUND:g}) for {', '.join(names)}",
            names,
        )
    # a finite eta that classifies every point correctly is itself a separating
    # hyperplane, so the MLE cannot exist
    complete = np.all((eta > 0) == (y == 1)) and np.all(eta != 0)
    if complete or np.any(np.abs(eta) > SATURATED_ETA):
        order = np.argsort(-np.abs(b))
        names = [labels[j] for j in order[: min(3, b.size)]]
        kind = "complete" if complete else "quasi-complete"
        raise SeparationDetected(
            f"{kind} separation: fitted probabilities reach 0/1; "
            f"largest coefficients on {', '.join(names)}",
            names,
        )


def fit_logistic(
    X,
    y,
    *,
    max_iter: int = 100,
    tol: float = 1e-8,
    ridge: float = 0.0,
    check_separation: bool = True,
) -> LogisticFit:
    """Maximum-likelihood logistic regression.

    Parameters
    ----------
    X : DesignMatrix or array_like, shape (n, q)
        No intercept is added; include a column of ones if one is wanted.
    y : array_like, shape (n,)
        0/1 responses.
    max_iter, tol : int, float
        Stop when the gradient max-norm, or the accepted step, is below
        ``tol``.
    ridge : float
        L2 penalty weight. With ``ridge > 0`` separation checks are skipped
        and the result is a penalised MLE.

    Raises
    ------
    DegenerateResponse
        If ``y`` is all zeros or all ones.
    SeparationDetected
        If ``ridge == 0`` and the classes are (quasi-)separable.
    SingularHessian
        If the weighted normal matrix cannot be inverted.
    """
    Xv = _values(X)
    n, q = Xv.shape
    labels = _labels(X, q)
    y = _response(y, n)
    if ridge < 0:
        raise InputError("ridge must be non-negative")
    if y.min() == y.max():
        raise DegenerateResponse(f"all {n} responses equal {int(y[0])}; the MLE does not exist")
    if n <= q:
        log.warning("design has %d rows for %d columns", n, q)

    b = np.zeros(q)
    obj = _objective(b, Xv, y, ridge)
    history = [obj]
    converged = False
    it = 0
    grad = Xv.T @ (y - expit(Xv @ b)) - ridge * b
    for it in range(1, max_iter + 1):
        if np.max(np.abs(grad)) <= tol:
            converged = True
            it -= 1
            break
        p = expit(Xv @ b)
        w = p * (1.0 - p)
        H = (Xv * w[:, None]).T @ Xv + ridge * np.eye(q)
        try:
            if np.linalg.cond(H) > _COND_LIMIT:
                raise np.linalg.LinAlgError("ill-conditioned")
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError as exc:
            if ridge == 0 and check_separation:
                _check_separation(b, Xv @ b, y, labels)
            raise SingularHessian(
                f"weighted normal matrix is singular at iteration {it}"
            ) from exc
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            cand = b + t * step
            new = _objective(cand, Xv, y, ridge)
            if new >= obj - 1e-12 * max(1.0, abs(obj)):
                break
            t *= 0.5
        else:
            # no ascent possible along the Newton direction: at numerical optimum
            break
        b = cand
        obj = new
        history.append(obj)
        if ridge == 0 and check_separation and np.any(np.abs(b) > SEPARATION_BOUND):
            _check_separation(b, Xv @ b, y, labels)
        grad = Xv.T @ (y - expit(Xv @ b)) - ridge * b
        if np.linalg.norm(t * step) <= tol and np.max(np.abs(grad)) <= 1e-6:
            converged = True
            break
    gnorm = float(np.max(np.abs(grad)))
    if not converged and gnorm <= tol:
        converged = True
    if ridge == 0 and check_separation:
        _check_separation(b, Xv @ b, y, labels)
    return LogisticFit(
        coefficients=b,
        converged=converged,
        iterations=it,
        final_loglik=_objective(b, Xv, y, 0.0),
        gradient_norm=gnorm,
        ridge=float(ridge),
        labels=labels,
        history=tuple(history),
    )
