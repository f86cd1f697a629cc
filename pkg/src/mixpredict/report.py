"""Human-readable and CSV views of a fitted mixed model."""

from __future__ import annotations

import csv
import io
import os

from . import market
from .mixmodel import MixedFit


def _time_labels(fit: MixedFit) -> list[str]:
    p = fit.beta_curve.values.size
    if p == market.N_INTRADAY:
        return list(market.intraday_times())
    return [repr(float(t)) for t in fit.beta_curve.grid]


def coefficient_table(fit: MixedFit, names=market.EMOTIONS) -> str:
    """Emotion composition (2 decimals) and the volume coefficient, one column each."""
    names = list(names)
    if len(names) != fit.alpha.size:
        names = [f"part{k + 1}" for k in range(fit.alpha.size)]
    cols = names + ["volume"]
    vals = [f"{v:.2f}" for v in fit.alpha] + [f"{fit.gamma:.2f}"]
    width = max(9, *(len(c) + 2 for c in cols))
    lines = [
        "".join(f"{c:>{width}}" for c in cols),
        "".join(f"{v:>{width}}" for v in vals),
    ]
    notes = [
        "emotion coefficients form a composition (sum to 1 before rounding)",
        "volume coefficient is per standard deviation of training volume"
        if fit.standardize_scalar else "volume coefficient is per raw volume unit",
    ]
    if fit.intercept is not None:
        notes.append(f"intercept {fit.intercept:.4f}")
    notes.append(f"functional components M={fit.basis.n_components} (lambda={fit.lam:g})")
    notes.extend(fit.notes)
    return "\n".join(lines + [""] + [f"# {n}" for n in notes]) + "\n"


def coefficients_csv(fit: MixedFit, names=market.EMOTIONS) -> str:
    names = list(names)
    if len(names) != fit.alpha.size:
        names = [f"part{k + 1}" for k in range(fit.alpha.size)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["term", "value"])
    if fit.intercept is not None:
        w.writerow(["intercept", repr(fit.intercept)])
    w.writerow(["volume", repr(fit.gamma)])
    for name, a in zip(names, fit.alpha):
        w.writerow([f"alpha_{name}", repr(float(a))])
    for k, a in enumerate(fit.alpha_star, 1):
        w.writerow([f"alpha_star_{k}", repr(float(a))])
    for j, b in enumerate(fit.b, 1):
        w.writerow([f"b_{j}", repr(float(b))])
    return buf.getvalue()


def beta_csv(fit: MixedFit) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", "beta"])
    for label, v in zip(_time_labels(fit), fit.beta_curve.values):
        w.writerow([label, repr(float(v))])
    return buf.getvalue()


def report_fit(fit: MixedFit, out_dir=None) -> dict[str, str]:
    """Render the coefficient table and CSVs; write them if ``out_dir`` is given."""
    files = {
        "coefficients.txt": coefficient_table(fit),
        "coefficients.csv": coefficients_csv(fit),
        "beta_curve.csv": beta_csv(fit),
    }
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for name, text in files.items():
            with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
    return files
