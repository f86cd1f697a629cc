"""k-fold cross-validation and the open-return threshold sweep."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from . import market, mixmodel
from .errors import (
    EmptySubsample,
    IlrOverflow,
    InputError,
    SeparationDetected,
    SingularHessian,
)

log = logging.getLogger(__name__)

#: Penalty used to refit a fold whose unpenalised fit hit separation; raised
#: 100-fold up to 1 while the penalised coefficients still saturate.
RIDGE_FALLBACK = 1e-4
_RIDGE_CEILING = 1.0


def fold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Random permutation cut into k contiguous blocks.

    The first ``n % k`` folds get one extra observation, so sizes differ by
    at most one.
    """
    if k < 2:
        raise InputError("need at least 2 folds")
    if n < k:
        raise InputError(f"cannot split {n} observations into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    bounds = np.cumsum([0] + sizes)
    return [perm[bounds[i]:bounds[i + 1]] for i in range(k)]


@dataclass(frozen=True)
class CvReport:
    fold_accuracies: tuple[float, ...]
    fold_sizes: tuple[int, ...]
    fold_flags: tuple[str, ...]
    mean_accuracy: float
    seed: int
    n: int
    tau: float = 0.0
    k: int = 5
    lam: float = 0.99
    fold_components: tuple[int, ...] = field(default=())
    fits: tuple = field(default=(), repr=False, compare=False)


def _fit_fold(train, lam, include_intercept, ridge_fallback):
    try:
        return mixmodel.fit(train, lam, include_intercept=include_intercept), ""
    except (SeparationDetected, SingularHessian) as exc:
        flag = "separation" if isinstance(exc, SeparationDetected) else "singular"
        cause = exc
    ridge = ridge_fallback
    while True:
        log.info("fold refit with ridge=%g after %s", ridge, type(cause).__name__)
        try:
            fit = mixmodel.fit(train, lam, include_intercept=include_intercept, ridge=ridge)
            return fit, f"{flag};ridge={ridge:g}"
        except (IlrOverflow, SingularHessian) as exc:
            if ridge >= _RIDGE_CEILING:
                raise
            cause = exc
            ridge = min(ridge * 100.0, _RIDGE_CEILING)


def cross_validate(
    data,
    k: int = 5,
    lam: float = 0.99,
    seed: int = 0,
    *,
    include_intercept: bool = True,
    cut: float = 0.5,
    tau: float = 0.0,
    ridge_fallback: float = RIDGE_FALLBACK,
    keep_fits: bool = False,
) -> CvReport:
    """Held-out classification accuracy over k random folds.

    ``data`` is a :class:`~.mixmodel.MixedDataset` with a response or a list
    of market records. Basis, centers and coefficients are re-estimated on
    each training split only. With ``keep_fits`` the per-fold models are
    attached to the report.
    """
    if not isinstance(data, mixmodel.MixedDataset):
        data = market.to_dataset(data)
    if data.response is None:
        raise InputError("cross-validation needs a response")
    n = data.n
    if n < 4 * k:
        raise EmptySubsample(f"{n} observations are too few for {k}-fold cross-validation")
    folds = fold_indices(n, k, seed)
    accs, sizes, flags, comps, fits = [], [], [], [], []
    for held in folds:
        train_idx = np.setdiff1d(np.arange(n), held)
        fit, flag = _fit_fold(data.subset(train_idx), lam, include_intercept, ridge_fallback)
        test = data.subset(np.sort(held))
        pred = mixmodel.classify(mixmodel.predict(fit, test.without_response()), cut)
        accs.append(float(np.mean(pred == test.response)))
        sizes.append(int(held.size))
        flags.append(flag)
        comps.append(fit.basis.n_components)
        if keep_fits:
            fits.append(fit)
    return CvReport(
        fold_accuracies=tuple(accs),
        fold_sizes=tuple(sizes),
        fold_flags=tuple(flags),
        mean_accuracy=float(np.mean(accs)),
        seed=seed,
        n=n,
        tau=tau,
        k=k,
        lam=lam,
        fold_components=tuple(comps),
        fits=tuple(fits),
    )


def cv_to_csv(report: CvReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["fold", "n_test", "n_components", "accuracy", "flags"])
    for i, (acc, size, m, flag) in enumerate(
        zip(report.fold_accuracies, report.fold_sizes, report.fold_components, report.fold_flags), 1
    ):
        w.writerow([i, size, m, repr(acc), flag])
    w.writerow(["mean", report.n, "", repr(report.mean_accuracy), f"seed={report.seed};tau={report.tau!r}"])
    return buf.getvalue()


@dataclass(frozen=True)
class SweepRow:
    tau: float
    n_kept: int
    mean_accuracy: float | None
    flags: str = ""


def tau_grid(tau_max: float = 0.01, tau_step: float = 0.0005) -> list[float]:
    if not 0 <= tau_max <= 0.1:
        raise InputError("tau_max must lie in [0, 0.1]")
    if tau_step <= 0:
        raise InputError("tau_step must be positive")
    count = int(np.floor(tau_max / tau_step + 1e-9))
    return [round(i * tau_step, 12) for i in range(count + 1)]


def tau_sweep(
    records,
    taus,
    k: int = 5,
    seed: int = 0,
    lam: float = 0.99,
    *,
    include_intercept: bool = True,
) -> list[SweepRow]:
    """Cross-validated accuracy after dropping days with |open return| <= tau."""
    rows = []
    for tau in taus:
        if not 0 <= tau <= 0.1:
            raise InputError(f"tau {tau} outside [0, 0.1]")
        n_kept = len(records) if tau == 0 else sum(abs(r.open_return) > tau for r in records)
        try:
            kept = market.threshold_subsample(records, tau)
            rep = cross_validate(kept, k, lam, seed, include_intercept=include_intercept, tau=tau)
        except EmptySubsample:
            rows.append(SweepRow(tau, n_kept, None, "empty"))
            continue
        flag = "ridge" if any(rep.fold_flags) else ""
        rows.append(SweepRow(tau, n_kept, rep.mean_accuracy, flag))
    return rows


def sweep_argmax(rows) -> SweepRow | None:
    """Row with the highest accuracy; ties go to the smallest tau."""
    best = None
    for row in rows:
        if row.mean_accuracy is not None and (best is None or row.mean_accuracy > best.mean_accuracy):
            best = row
    return best


def sweep_to_csv(rows) -> str:
    best = sweep_argmax(rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tau", "n_kept", "mean_accuracy", "flags"])
    for row in rows:
        flags = [f for f in (row.flags, "argmax" if row is best else "") if f]
        acc = "" if row.mean_accuracy is None else repr(row.mean_accuracy)
        w.writerow([repr(row.tau), row.n_kept, acc, ";".join(flags)])
    return buf.getvalue()
