"""Functional principal components on an equally spaced grid.

Curves are stored as rows of an ``(n, p)`` array sharing one grid. Integrals
use the rectangle rule with the constant grid spacing as weight, so the
discretised covariance operator is the symmetric matrix ``K * dt`` and its
eigenvectors, divided by ``sqrt(dt)``, are orthonormal eigenfunctions under
:func:`quadrature_inner_product`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateData, DimensionMismatch, GridMismatch, InputError

GRID_RTOL = 1e-9
#: Eigenvalues below ``RANK_FLOOR * largest`` count as zero.
RANK_FLOOR = 1e-12


def check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise GridMismatch("a grid needs at least 2 points")
    if not np.all(np.isfinite(grid)):
        raise GridMismatch("grid points must be finite")
    steps = np.diff(grid)
    if np.any(steps <= 0):
        raise GridMismatch("grid must be strictly increasing")
    if np.max(np.abs(steps - steps[0])) > GRID_RTOL * abs(steps[0]):
        raise GridMismatch("grid must be equally spaced")
    return grid


def grid_step(grid) -> float:
    grid = np.asarray(grid, dtype=float)
    return float((grid[-1] - grid[0]) / (grid.size - 1))


def same_grid(a, b) -> bool:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a.shape == b.shape and np.allclose(a, b, rtol=GRID_RTOL, atol=0.0)


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """One curve evaluated on an equally spaced grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = check_grid(self.grid)
        values = np.asarray(self.values, dtype=float)
        if values.shape != grid.shape:
            raise GridMismatch(f"{values.size} values for a {grid.size}-point grid")
        if not np.all(np.isfinite(values)):
            raise InputError("curve values must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)


def stack_samples(samples) -> tuple[np.ndarray, np.ndarray]:
    """Turn a sequence of FunctionalSample into ``(curves, grid)``."""
    samples = list(samples)
    if not samples:
        raise InputError("no curves given")
    grid = samples[0].grid
    for s in samples[1:]:
        if not same_grid(s.grid, grid):
            raise GridMismatch("curves do not share a grid")
    return np.vstack([s.values for s in samples]), grid


def _curves(curves, grid=None) -> np.ndarray:
    curves = np.asarray(curves, dtype=float)
    if curves.ndim != 2:
        raise DimensionMismatch(f"expected an (n, p) array of curves, got shape {curves.shape}")
    if grid is not None and curves.shape[1] != np.asarray(grid).size:
        raise GridMismatch(f"curves have {curves.shape[1]} points, grid has {np.asarray(grid).size}")
    if not np.all(np.isfinite(curves)):
        raise InputError("curve values must be finite")
    return curves


def quadrature_inner_product(f, g, grid):
    """Rectangle-rule approximation of the integral of ``f * g``.

    Broadcasts over leading axes, so ``f`` may be a stack of curves.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if f.shape[-1] != grid.size or g.shape[-1] != grid.size:
        raise DimensionMismatch(
            f"curve lengths {f.shape[-1]} and {g.shape[-1]} do not match grid size {grid.size}"
        )
    return np.sum(f * g, axis=-1) * grid_step(grid)


def center(curves, grid=None) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(mean_curve, curves - mean_curve)``."""
    curves = _curves(curves, grid)
    if curves.shape[0] < 2:
        raise InputError("centering needs at least 2 curves")
    mean = curves.mean(axis=0)
    return mean, curves - mean


def empirical_covariance(centered) -> np.ndarray:
    """``(1/n) * X^T X`` for already-centered curves ``X``."""
    x = _curves(centered)
    cov = x.T @ x / x.shape[0]
    # exact symmetry; BLAS may differ in the last bit between the two triangles
    return 0.5 * (cov + cov.T)


@dataclass(frozen=True, eq=False)
class FpcaBasis:
    """Fitted eigen-system truncated to ``n_components`` terms.

    Attributes
    ----------
    grid : ndarray, shape (p,)
    mean_curve : ndarray, shape (p,)
        Training mean; subtracted from every curve before projection.
    eigenvalues : ndarray, shape (M,)
    eigenfunctions : ndarray, shape (M, p)
        Orthonormal under the quadrature inner product.
    lam : float
        Variance fraction the truncation was asked to reach.
    all_eigenvalues : ndarray
        Full clamped spectrum, kept for variance bookkeeping.
    """

    grid: np.ndarray
    mean_curve: np.ndarray
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    lam: float
    all_eigenvalues: np.ndarray = field(repr=False)

    @property
    def n_components(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def explained_fraction(self) -> float:
        return float(self.eigenvalues.sum() / self.all_eigenvalues.sum())


def select_order(eigenvalues, lam: float) -> int:
    """Smallest m whose leading eigenvalues hold at least ``lam`` of the total."""
    theta = np.asarray(eigenvalues, dtype=float)
    if not 0.0 < lam <= 1.0:
        raise InputError(f"lambda must lie in (0, 1], got {lam}")
    rank = numerical_rank(theta)
    if rank == 0:
        raise DegenerateData("all eigenvalues are numerically zero")
    frac = np.cumsum(theta[:rank]) / theta[:rank].sum()
    # the slack only matters for lam == 1 where the cumsum may land at 1 - ulp
    m = int(np.searchsorted(frac, lam - 1e-12, side="left")) + 1
    return min(m, rank)


def numerical_rank(eigenvalues) -> int:
    theta = np.asarray(eigenvalues, dtype=float)
    if theta.size == 0 or theta[0] <= 1e-12:
        return 0
    return int(np.count_nonzero(theta > RANK_FLOOR * theta[0]))


def fit_fpca(curves, grid, lam: float = 0.85, n_components: int | None = None) -> FpcaBasis:
    """Fit a functional PCA basis.

    Parameters
    ----------
    curves : array_like, shape (n, p)
        Raw (uncentered) curves; the mean is estimated and stored.
    grid : array_like, shape (p,)
    lam : float
        Keep the smallest number of components explaining at least this
        fraction of the total variance.
    n_components : int, optional
        Fixed truncation order overriding ``lam``. Must not exceed the
        numerical rank.
    """
    grid = check_grid(grid)
    curves = _curves(curves, grid)
    if not 0.0 < lam <= 1.0:
        raise InputError(f"lambda must lie in (0, 1], got {lam}")
    mean, centered = center(curves)
    dt = grid_step(grid)
    w, v = np.linalg.eigh(empirical_covariance(centered) * dt)
    order = np.argsort(w)[::-1]
    w = np.clip(w[order], 0.0, None)
    v = v[:, order]
    if w[0] <= 1e-12:
        raise DegenerateData("curves have (numerically) zero variance")
    rank = numerical_rank(w)
    if n_components is None:
        m = select_order(w, lam)
    else:
        m = int(n_components)
        if not 1 <= m <= rank:
            raise InputError(f"n_components must lie in 1..{rank}, got {n_components}")
    w[rank:] = 0.0
    phi = v[:, :m].T / np.sqrt(dt)
    # deterministic sign: largest-magnitude entry of each eigenfunction is positive
    idx = np.argmax(np.abs(phi), axis=1)
    signs = np.sign(phi[np.arange(m), idx])
    phi = phi * signs[:, None]
    return FpcaBasis(
        grid=grid,
        mean_curve=mean,
        eigenvalues=w[:m].copy(),
        eigenfunctions=phi,
        lam=float(lam),
        all_eigenvalues=w,
    )


def project(basis: FpcaBasis, curves) -> np.ndarray:
    """Scores of curves on the basis, after subtracting the training mean.

    Accepts a FunctionalSample, a single ``(p,)`` curve, or an ``(n, p)``
    stack; returns ``(M,)`` or ``(n, M)`` accordingly.
    """
    if isinstance(curves, FunctionalSample):
        if not same_grid(curves.grid, basis.grid):
            raise GridMismatch("sample grid differs from the basis grid")
        curves = curves.values
    x = np.asarray(curves, dtype=float)
    if x.shape[-1] != basis.grid.size:
        raise GridMismatch(f"curve has {x.shape[-1]} points, basis grid has {basis.grid.size}")
    return (x - basis.mean_curve) @ basis.eigenfunctions.T * grid_step(basis.grid)


def reconstruct_curve(basis: FpcaBasis, coefs) -> FunctionalSample:
    """``sum_j coefs[j] * phi_j(t)`` on the basis grid; the mean is not added."""
    coefs = np.asarray(coefs, dtype=float)
    if coefs.shape != (basis.n_components,):
        raise DimensionMismatch(
            f"expected {basis.n_components} coefficients, got shape {coefs.shape}"
        )
    return FunctionalSample(basis.grid, coefs @ basis.eigenfunctions)
