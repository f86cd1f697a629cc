"""Compositional data on the simplex: closure, ilr and its inverse.

Compositions are plain float arrays whose last axis holds the parts, so a
single composition has shape ``(D,)`` and a sample has shape ``(n, D)``.
All functions are pure and vectorised over leading axes.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    DimensionMismatch,
    IlrOverflow,
    InvalidDimension,
    NonPositiveEntry,
    NotClosed,
    ZeroPart,
)

#: Inputs to :func:`ilr` must already sum to one within this tolerance.
CLOSED_TOL = 1e-6


def _as_parts(raw) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.ndim == 0:
        raise InvalidDimension("a composition needs at least 2 parts, got a scalar")
    if arr.shape[-1] < 2:
        raise InvalidDimension(f"a composition needs at least 2 parts, got {arr.shape[-1]}")
    if not np.all(np.isfinite(arr)):
        raise NonPositiveEntry("composition parts must be finite")
    if np.any(arr == 0):
        raise ZeroPart("composition has a zero part; zero replacement is not supported")
    if np.any(arr < 0):
        raise NonPositiveEntry("composition parts must be strictly positive")
    return arr


def closure(raw) -> np.ndarray:
    """Rescale positive vectors so that their parts sum to one.

    Parameters
    ----------
    raw : array_like, shape (..., D)
        Strictly positive, finite entries.

    Returns
    -------
    numpy.ndarray
        ``raw / raw.sum(axis=-1)``.
    """
    arr = _as_parts(raw)
    return arr / arr.sum(axis=-1, keepdims=True)


def contrast_matrix(D: int) -> np.ndarray:
    """Orthonormal ilr basis of shape ``(D - 1, D)``.

    Row ``i`` (1-based) has ``D - i`` leading entries equal to
    ``sqrt(1 / ((D - i) (D - i + 1)))``, then ``-sqrt((D - i) / (D - i + 1))``
    in column ``D - i + 1``, then zeros.
    """
    if int(D) != D or D < 2:
        raise InvalidDimension(f"contrast matrix needs integer D >= 2, got {D!r}")
    D = int(D)
    psi = np.zeros((D - 1, D))
    for i in range(1, D):
        k = D - i
        psi[i - 1, :k] = np.sqrt(1.0 / (k * (k + 1)))
        psi[i - 1, k] = -np.sqrt(k / (k + 1))
    return psi


def _clr(c: np.ndarray) -> np.ndarray:
    # mean of logs, not log of the product, so tiny parts cannot underflow
    logc = np.log(c)
    return logc - logc.mean(axis=-1, keepdims=True)


def _check_closed(c: np.ndarray) -> None:
    dev = np.abs(c.sum(axis=-1) - 1.0)
    if np.any(dev > CLOSED_TOL):
        raise NotClosed(
            f"composition does not sum to 1 (max deviation {dev.max():.3g}); apply closure() first"
        )
    if np.any(c >= 1.0):
        raise NonPositiveEntry("composition parts must be strictly less than 1")


def ilr(c) -> np.ndarray:
    """Isometric log-ratio coordinates, shape ``(..., D - 1)``."""
    c = _as_parts(c)
    _check_closed(c)
    return _clr(c) @ contrast_matrix(c.shape[-1]).T


def ilr_inv(v, D: int | None = None) -> np.ndarray:
    """Map ilr coordinates back onto the simplex.

    ``D`` defaults to ``len(v) + 1``; when given it must agree with the
    trailing length of ``v``.

    Raises
    ------
    IlrOverflow
        If the exponentiated coordinates span more range than double
        precision can hold, so that some part would round to 0.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        raise InvalidDimension("ilr coordinates must be a vector")
    if D is None:
        D = v.shape[-1] + 1
    if v.shape[-1] != D - 1:
        raise InvalidDimension(f"expected {D - 1} ilr coordinates for D={D}, got {v.shape[-1]}")
    if not np.all(np.isfinite(v)):
        raise IlrOverflow("ilr coordinates must be finite")
    logits = v @ contrast_matrix(D)
    # shifting by the max is exact under closure and keeps exp() from overflowing
    e = np.exp(logits - logits.max(axis=-1, keepdims=True))
    parts = e / e.sum(axis=-1, keepdims=True)
    if np.any(parts <= 0.0) or np.any(parts >= 1.0):
        raise IlrOverflow("ilr inverse saturated: a part underflowed to 0")
    return parts


def aitchison_distance(a, b) -> float | np.ndarray:
    """Euclidean distance between the clr images of two compositions."""
    a = _as_parts(a)
    b = _as_parts(b)
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatch(f"compositions have {a.shape[-1]} and {b.shape[-1]} parts")
    d = np.linalg.norm(_clr(a) - _clr(b), axis=-1)
    return float(d) if np.ndim(d) == 0 else d
