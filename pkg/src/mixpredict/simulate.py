"""Monte-Carlo study of the mixed-predictor logistic estimator.

Data come from a known model with scalar coefficient 1, compositional
coefficient (0.3, 0.5, 0.2) and a cosine-series coefficient curve; every
replicate is fitted without an intercept and scored by the correlation and
integrated squared error of the estimated curve and the bias of the scalar
and compositional coefficients.
"""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import fpca, mixmodel, simplex
from .errors import (
    DimensionMismatch,
    GridMismatch,
    InputError,
    NumericalError,
    TooManyFailures,
    ZeroVariance,
)

log = logging.getLogger(__name__)

TRUE_GAMMA = 1.0
TRUE_ALPHA = np.array([0.3, 0.5, 0.2])


@dataclass(frozen=True)
class SimConfig:
    n: int
    sigma: float
    replicates: int = 200
    T: int = 100
    J: int = 50
    a: float = 1.1
    lam: float = 0.85
    seed: int = 0
    n_components: int | None = None

    def __post_init__(self):
        if self.n < 10:
            raise InputError("simulation needs n >= 10")
        if self.T < 2 or self.J < 1 or self.replicates < 1:
            raise InputError("need T >= 2, J >= 1 and at least one replicate")
        if self.sigma < 0:
            raise InputError("sigma must be non-negative")


@dataclass(frozen=True, eq=False)
class Truth:
    gamma: float
    alpha: np.ndarray
    beta: np.ndarray
    grid: np.ndarray
    eta: np.ndarray  # linear predictor without the noise term


def sim_grid(T: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, T)


def cosine_basis(J: int, grid) -> np.ndarray:
    """``sqrt(2) cos(j pi t)`` for j = 1..J, shape (J, len(grid))."""
    j = np.arange(1, J + 1)
    return np.sqrt(2.0) * np.cos(np.pi * np.outer(j, grid))


def beta_coefficients(J: int) -> np.ndarray:
    j = np.arange(1, J + 1, dtype=float)
    coefs = 4.0 * (-1.0) ** (j + 1) * j**-2.0
    coefs[0] = 0.3
    return coefs


def score_scales(J: int, a: float) -> np.ndarray:
    j = np.arange(1, J + 1, dtype=float)
    return (-1.0) ** (j + 1) * j ** (-a / 2.0)


def true_beta(J: int = 50, grid=None) -> np.ndarray:
    grid = sim_grid(100) if grid is None else np.asarray(grid, dtype=float)
    return beta_coefficients(J) @ cosine_basis(J, grid)


def replicate_rng(seed: int, replicate_index: int) -> np.random.Generator:
    """Independent stream per replicate, derived from ``(seed, index)``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replicate_index,)))


def generate(config: SimConfig, replicate_index: int) -> tuple[mixmodel.MixedDataset, Truth]:
    """Draw one dataset from the reference model.

    The linear predictor uses sample-centered predictors, with the
    compositional term evaluated as ``ilr(alpha) . ilr(c)`` and the functional
    term by rectangle-rule quadrature. Noise ``sigma * e`` sits inside the
    link. The returned dataset holds the raw (uncentered) predictors.
    """
    rng = replicate_rng(config.seed, replicate_index)
    n, T, J = config.n, config.T, config.J
    grid = sim_grid(T)
    phi = cosine_basis(J, grid)
    beta = beta_coefficients(J) @ phi

    z = rng.standard_normal(n)
    comps = simplex.closure(rng.uniform(size=(n, 3)))
    scores = rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size=(n, J))
    curves = (scores * score_scales(J, config.a)) @ phi
    e = rng.standard_normal(n)

    zc = z - z.mean()
    cs = simplex.ilr(comps)
    cs = cs - cs.mean(axis=0)
    xc = curves - curves.mean(axis=0)
    eta = (
        TRUE_GAMMA * zc
        + cs @ simplex.ilr(TRUE_ALPHA)
        + fpca.quadrature_inner_product(xc, beta, grid)
    )
    y = (rng.uniform(size=n) < expit(eta + config.sigma * e)).astype(float)
    data = mixmodel.MixedDataset(z, comps, curves, grid, y)
    return data, Truth(TRUE_GAMMA, TRUE_ALPHA.copy(), beta, grid, eta)


def mise(beta_hat, beta_true, grid=None) -> float:
    """Integrated squared difference of two curves on a common grid."""
    if isinstance(beta_hat, fpca.FunctionalSample):
        if grid is not None and not fpca.same_grid(beta_hat.grid, grid):
            raise GridMismatch("estimated curve lives on a different grid")
        grid = beta_hat.grid
        beta_hat = beta_hat.values
    bh = np.asarray(beta_hat, dtype=float)
    bt = np.asarray(beta_true, dtype=float)
    if bh.shape != bt.shape:
        raise GridMismatch(f"curves have {bh.size} and {bt.size} points")
    if grid is None:
        grid = sim_grid(bh.size)
    d = bh - bt
    return float(fpca.quadrature_inner_product(d, d, grid))


def curve_correlation(beta_hat, beta_true) -> float:
    """Pearson correlation of two curves over their grid values."""
    if isinstance(beta_hat, fpca.FunctionalSample):
        beta_hat = beta_hat.values
    bh = np.asarray(beta_hat, dtype=float)
    bt = np.asarray(beta_true, dtype=float)
    if bh.shape != bt.shape:
        raise DimensionMismatch(f"curves have {bh.size} and {bt.size} points")
    dh = bh - bh.mean()
    dt = bt - bt.mean()
    nh = np.sqrt(dh @ dh)
    nt = np.sqrt(dt @ dt)
    if nh == 0.0 or nt == 0.0:
        raise ZeroVariance("correlation undefined for a constant curve")
    return float(np.clip((dh @ dt) / (nh * nt), -1.0, 1.0))


@dataclass(frozen=True)
class ReplicateResult:
    index: int
    ok: bool
    cor: float = float("nan")
    mise: float = float("nan")
    gamma_bias: float = float("nan")
    alpha_bias: tuple[float, float, float] = (float("nan"),) * 3
    n_components: int = 0
    error: str = ""


def run_replicate(config: SimConfig, index: int) -> ReplicateResult:
    data, truth = generate(config, index)
    try:
        fit = mixmodel.fit(
            data, config.lam, include_intercept=False, n_components=config.n_components
        )
    except NumericalError as exc:
        return ReplicateResult(index, False, error=f"{type(exc).__name__}: {exc}")
    return ReplicateResult(
        index,
        True,
        cor=curve_correlation(fit.beta_curve, truth.beta),
        mise=mise(fit.beta_curve, truth.beta),
        gamma_bias=fit.gamma_per_unit - truth.gamma,
        alpha_bias=tuple(float(v) for v in fit.alpha - truth.alpha),
        n_components=fit.basis.n_components,
    )


@dataclass(frozen=True)
class SimReport:
    config: SimConfig
    n_ok: int
    n_failed: int
    cor_mean: float
    cor_sd: float
    mise_mean: float
    mise_sd: float
    gamma_bias_mean: float
    gamma_bias_sd: float
    alpha_bias_mean: tuple[float, float, float]
    alpha_bias_sd: tuple[float, float, float]
    mean_components: float
    failures: tuple[str, ...] = field(default=(), repr=False)


def _sd(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x.std(ddof=1)) if x.size > 1 else 0.0


def summarize(config: SimConfig, results, max_failure_rate: float = 0.05) -> SimReport:
    results = sorted(results, key=lambda r: r.index)
    ok = [r for r in results if r.ok]
    failed = [r for r in results if not r.ok]
    if len(failed) >= max_failure_rate * len(results) and failed:
        raise TooManyFailures(
            f"{len(failed)} of {len(results)} replicates failed for n={config.n}, "
            f"sigma={config.sigma}; first: {failed[0].error}"
        )
    cor = [r.cor for r in ok]
    ms = [r.mise for r in ok]
    gb = [r.gamma_bias for r in ok]
    ab = np.array([r.alpha_bias for r in ok])
    return SimReport(
        config=config,
        n_ok=len(ok),
        n_failed=len(failed),
        cor_mean=float(np.mean(cor)),
        cor_sd=_sd(cor),
        mise_mean=float(np.mean(ms)),
        mise_sd=_sd(ms),
        gamma_bias_mean=float(np.mean(gb)),
        gamma_bias_sd=_sd(gb),
        alpha_bias_mean=tuple(float(v) for v in ab.mean(axis=0)),
        alpha_bias_sd=tuple(_sd(ab[:, k]) for k in range(ab.shape[1])),
        mean_components=float(np.mean([r.n_components for r in ok])),
        failures=tuple(r.error for r in failed),
    )


def _run_one(args):
    return run_replicate(*args)


def run_config(config: SimConfig, jobs: int = 1, max_failure_rate: float = 0.05) -> SimReport:
    tasks = [(config, i) for i in range(config.replicates)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_run_one(t) for t in tasks]
    report = summarize(config, results, max_failure_rate)
    log.info(
        "n=%d sigma=%g: cor %.3f (%.3f), MISE %.3f (%.3f), M~%.1f, %d failed",
        config.n, config.sigma, report.cor_mean, report.cor_sd,
        report.mise_mean, report.mise_sd, report.mean_components, report.n_failed,
    )
    return report


def run_study(configs, jobs: int = 1, max_failure_rate: float = 0.05) -> list[SimReport]:
    """Run every configuration; results do not depend on ``jobs``."""
    return [run_config(c, jobs, max_failure_rate) for c in configs]


# --- output ---------------------------------------------------------------------

CSV_COLUMNS = (
    "n", "sigma", "replicates", "T", "J", "a", "lambda", "seed", "n_components",
    "n_ok", "n_failed", "mean_components",
    "cor_mean", "cor_sd", "mise_mean", "mise_sd",
    "gamma_bias_mean", "gamma_bias_sd",
    "alpha1_bias_mean", "alpha1_bias_sd",
    "alpha2_bias_mean", "alpha2_bias_sd",
    "alpha3_bias_mean", "alpha3_bias_sd",
)


def report_rows(reports):
    for r in reports:
        c = r.config
        row = {
            "n": c.n, "sigma": repr(c.sigma), "replicates": c.replicates, "T": c.T, "J": c.J,
            "a": repr(c.a), "lambda": repr(c.lam), "seed": c.seed,
            "n_components": "" if c.n_components is None else c.n_components,
            "n_ok": r.n_ok, "n_failed": r.n_failed, "mean_components": repr(r.mean_components),
            "cor_mean": repr(r.cor_mean), "cor_sd": repr(r.cor_sd),
            "mise_mean": repr(r.mise_mean), "mise_sd": repr(r.mise_sd),
            "gamma_bias_mean": repr(r.gamma_bias_mean), "gamma_bias_sd": repr(r.gamma_bias_sd),
        }
        for k in range(3):
            row[f"alpha{k + 1}_bias_mean"] = repr(r.alpha_bias_mean[k])
            row[f"alpha{k + 1}_bias_sd"] = repr(r.alpha_bias_sd[k])
        yield row


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in report_rows(reports):
        writer.writerow(row)
    return buf.getvalue()


def _cell(mean, sd):
    return f"{mean:.3f} ({sd:.3f})"


def reports_to_tables(reports) -> str:
    """Plain-text tables: rows are sigma values, columns sample sizes."""
    ns = sorted({r.config.n for r in reports})
    sigmas = sorted({r.config.sigma for r in reports})
    by_key = {(r.config.n, r.config.sigma): r for r in reports}

    def table(title, cell, extra_rows=None):
        width = 16
        lines = [title, f"{'':>14}" + "".join(f"{n:>{width}}" for n in ns)]
        for s in sigmas:
            for label, fn in extra_rows or [("", cell)]:
                head = f"sigma={s:g} {label}".rstrip()
                vals = [fn(by_key[(n, s)]) if (n, s) in by_key else "" for n in ns]
                lines.append(f"{head:>14}" + "".join(f"{v:>{width}}" for v in vals))
        return "\n".join(lines)

    out = [
        table("Correlation of estimated and true coefficient curve, mean (sd)",
              lambda r: _cell(r.cor_mean, r.cor_sd)),
        table("MISE of the estimated coefficient curve, mean (sd)",
              lambda r: _cell(r.mise_mean, r.mise_sd)),
        table("Bias of the scalar coefficient, mean (sd)",
              lambda r: _cell(r.gamma_bias_mean, r.gamma_bias_sd)),
        table("Bias of the compositional coefficient, mean (sd)", None, [
            (f"a{k + 1}", (lambda k: lambda r: _cell(r.alpha_bias_mean[k], r.alpha_bias_sd[k]))(k))
            for k in range(3)
        ]),
    ]
    return "\n\n".join(out) + "\n"

