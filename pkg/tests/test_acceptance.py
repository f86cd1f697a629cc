"""Release acceptance checks.

Each test records one PASS/FAIL line (shown in the terminal summary) and then
asserts. The simulation checks share one module-scoped study of six
(n, sigma) cells with 200 replicates each.
"""

import time

import numpy as np
import pytest

from mixpredict import cli, fpca, glm, market, simplex, simulate, validation
from mixpredict.errors import DegenerateResponse, SeparationDetected

NS = (100, 1000, 10000)
SIGMAS = (0.2, 0.6)
REPLICATES = 200
RUNTIME_LIMIT = 600.0

# published reference values, (mean, sd) per (n, sigma)
REFERENCE_COR = {
    (100, 0.2): (0.943, 0.049), (1000, 0.2): (0.964, 0.012), (10000, 0.2): (0.967, 0.004),
    (100, 0.6): (0.937, 0.048), (1000, 0.6): (0.966, 0.013), (10000, 0.6): (0.967, 0.004),
}
REFERENCE_MISE = {
    (100, 0.2): (0.263, 0.206), (1000, 0.2): (0.109, 0.035), (10000, 0.2): (0.097, 0.012),
    (100, 0.6): (0.287, 0.486), (1000, 0.6): (0.112, 0.039), (10000, 0.6): (0.106, 0.012),
}
REFERENCE_GAMMA_BIAS = {
    (100, 0.2): (0.083, 0.39), (1000, 0.2): (-0.024, 0.113), (10000, 0.2): (-0.035, 0.029),
    (100, 0.6): (0.004, 0.413), (1000, 0.6): (-0.072, 0.102), (10000, 0.6): (-0.085, 0.031),
}
REFERENCE_ALPHA_BIAS = {
    (100, 0.2): ((0.001, 0.1), (0.0, 0.105), (-0.001, 0.072)),
    (1000, 0.2): ((0.003, 0.024), (-0.006, 0.028), (0.003, 0.019)),
    (10000, 0.2): ((0.001, 0.008), (-0.005, 0.009), (0.004, 0.006)),
    (100, 0.6): ((0.013, 0.1), (-0.014, 0.111), (0.001, 0.072)),
    (1000, 0.6): ((0.003, 0.026), (-0.013, 0.031), (0.01, 0.019)),
    (10000, 0.6): ((0.004, 0.007), (-0.013, 0.009), (0.009, 0.006)),
}


@pytest.fixture(scope="module")
def study():
    reports, seconds = {}, {}
    for sigma in SIGMAS:
        for n in NS:
            cfg = simulate.SimConfig(n=n, sigma=sigma, replicates=REPLICATES)
            t0 = time.perf_counter()
            reports[(n, sigma)] = simulate.run_config(cfg)
            seconds[(n, sigma)] = time.perf_counter() - t0
    return reports, seconds


def _within(value, ref):
    mean, sd = ref
    return abs(value - mean) <= 2 * sd


def _cells(values, refs):
    bad = [k for k in refs if not _within(values[k], refs[k])]
    detail = "; ".join(
        f"n={n} s={s}: {values[(n, s)]:.3f} vs {refs[(n, s)][0]}+-{2 * refs[(n, s)][1]:.3f}"
        for n, s in refs
    )
    return not bad, detail


def test_curve_correlation(study, criterion):
    reports, seconds = study
    ok, detail = _cells({k: r.cor_mean for k, r in reports.items()}, REFERENCE_COR)
    slowest = max(seconds[(10000, s)] for s in SIGMAS)
    fast = slowest < RUNTIME_LIMIT
    criterion("1 curve correlation within 2 sd", ok, detail)
    criterion("1 runtime n=10000 x 200 under 10 min", fast, f"{slowest:.1f} s")
    assert fast
    assert ok, detail


def test_curve_mise(study, criterion):
    reports, _ = study
    ok, detail = _cells({k: r.mise_mean for k, r in reports.items()}, REFERENCE_MISE)
    criterion("2 curve MISE within 2 sd", ok, detail)
    assert ok, detail


def test_scalar_and_composition_bias(study, criterion):
    reports, _ = study
    ok_g, detail_g = _cells({k: r.gamma_bias_mean for k, r in reports.items()}, REFERENCE_GAMMA_BIAS)
    bad_a = []
    for key, refs in REFERENCE_ALPHA_BIAS.items():
        for j, ref in enumerate(refs):
            if not _within(reports[key].alpha_bias_mean[j], ref):
                bad_a.append(f"n={key[0]} s={key[1]} a{j + 1}={reports[key].alpha_bias_mean[j]:.4f}")
    worst = max(abs(v) for r in reports.values() for v in r.alpha_bias_mean)
    criterion("3 scalar coefficient bias within 2 sd", ok_g, detail_g)
    criterion("3 compositional bias within 2 sd", not bad_a,
              "; ".join(bad_a) or f"all 18 cells, max |bias| {worst:.4f}")
    assert ok_g, detail_g
    assert not bad_a, bad_a


def test_property_suite(criterion):
    rng = np.random.default_rng(2024)
    failures = []

    c = simplex.closure(rng.uniform(0.01, 1.0, size=(1000, 5)))
    d = simplex.closure(rng.uniform(0.01, 1.0, size=(1000, 5)))
    if np.max(np.abs(simplex.ilr_inv(simplex.ilr(c)) - c)) > 1e-10:
        failures.append("ilr round trip")
    iso = simplex.aitchison_distance(c, d) - np.linalg.norm(simplex.ilr(c) - simplex.ilr(d), axis=1)
    if np.max(np.abs(iso)) > 1e-10:
        failures.append("ilr isometry")

    for D in range(2, 11):
        psi = simplex.contrast_matrix(D)
        if not (np.allclose(psi @ psi.T, np.eye(D - 1), atol=1e-10) and np.allclose(psi.sum(1), 0, atol=1e-10)):
            failures.append(f"contrast matrix D={D}")

    grid = np.linspace(0, 1, 50)
    x = np.cumsum(rng.standard_normal((200, 50)), axis=1)
    for lam in (0.5, 0.85, 0.99):
        basis = fpca.fit_fpca(x, grid, lam=lam)
        phi = basis.eigenfunctions
        gram = fpca.quadrature_inner_product(phi[:, None, :], phi[None, :, :], grid)
        if np.max(np.abs(gram - np.eye(basis.n_components))) > 1e-8:
            failures.append(f"eigenfunction orthonormality lam={lam}")
        if basis.explained_fraction < lam:
            failures.append(f"variance capture lam={lam}")

    for trial in range(20):
        q = 1 + trial % 3
        n = 30 + trial
        X = rng.standard_normal((n, q))
        y = (rng.uniform(size=n) < 1 / (1 + np.exp(-X @ np.full(q, 0.5)))).astype(float)
        try:
            fit = glm.fit_logistic(X, y)
        except (SeparationDetected, DegenerateResponse):
            continue
        if fit.gradient_norm > 1e-6:
            failures.append(f"gradient trial {trial}")
        if np.any(np.diff(fit.history) < -1e-12 * np.abs(np.array(fit.history[1:]))):
            failures.append(f"monotone objective trial {trial}")
        # coarse-to-fine grid search on the log-likelihood
        centre = np.zeros(q)
        for half, step in ((3.0, 0.1), (0.1, 0.005)):
            axes = np.meshgrid(*[np.arange(m - half, m + half + step / 2, step) for m in centre])
            B = np.column_stack([a.ravel() for a in axes])
            eta = B @ X.T
            ll = (y * eta - np.logaddexp(0.0, eta)).sum(axis=1)
            centre = B[np.argmax(ll)]
        if np.max(np.abs(centre - fit.coefficients)) > 0.0051:
            failures.append(f"grid search trial {trial}")

    criterion("4 property suite", not failures, ", ".join(failures) or "all properties hold")
    assert not failures


def test_cross_validated_accuracy(fixture_path, tmp_path, criterion):
    from mixpredict import fixtures

    signal = validation.cross_validate(market.ingest(fixture_path("signal.csv")), 5, 0.99, seed=0)
    accs = []
    for seed in range(10):
        path = tmp_path / f"noise{seed}.csv"
        fixtures.write_fixture("noise", path, seed=seed + 1)
        accs.append(validation.cross_validate(market.ingest(path), 5, 0.99, seed=seed).mean_accuracy)
    inside = sum(0.40 <= a <= 0.60 for a in accs)
    ok_signal = signal.mean_accuracy >= 0.80
    ok_noise = inside >= 9
    criterion("5 signal fixture accuracy >= 0.80", ok_signal, f"{signal.mean_accuracy:.3f}")
    criterion("5 noise fixture accuracy in [0.40, 0.60] for >= 9/10 seeds", ok_noise,
              f"{inside}/10: " + " ".join(f"{a:.3f}" for a in accs))
    assert ok_signal and ok_noise


def test_threshold_sweep(fixture_path, criterion):
    recs = market.ingest(fixture_path("sweep.csv"))
    rows = validation.tau_sweep(recs, validation.tau_grid(0.01, 0.0005), 5, 0)
    best = validation.sweep_argmax(rows)
    kept = [r.n_kept for r in rows]
    monotone = all(b <= a for a, b in zip(kept, kept[1:]))
    ok = best is not None and best.tau > 0 and monotone
    acc0 = rows[0].mean_accuracy
    criterion("6 sweep maximum at tau > 0, n_kept nonincreasing", ok,
              f"tau=0: {acc0:.3f}; max {best.mean_accuracy:.3f} at tau={best.tau:g} (n={best.n_kept})")
    assert ok


def test_determinism(fixture_path, tmp_path, criterion):
    def commands(out):
        out.mkdir()
        model = out / "model.json"
        return [
            ["simulate", "--n", "150", "--sigma", "0.2", "0.6", "--replicates", "4", "--seed", "7",
             "--out", out / "sim.csv", "--tables", out / "tables.txt"],
            ["fit", "--data", fixture_path("signal.csv"), "--out", model],
            ["report", "--model", model, "--out-dir", out / "report"],
            ["cv", "--data", fixture_path("signal.csv"), "--seed", "3", "--out", out / "cv.csv"],
            ["sweep", "--data", fixture_path("sweep.csv"), "--seed", "3", "--tau-max", "0.003",
             "--out", out / "sweep.csv"],
            ["fixtures", "--out-dir", out / "fixtures", "--seed", "5"],
        ]

    for run in ("a", "b"):
        for argv in commands(tmp_path / run):
            assert cli.main([str(a) for a in argv]) == 0
    a_files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    b_files = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
    differ = [str(p) for p in a_files if (tmp_path / "a" / p).read_bytes() != (tmp_path / "b" / p).read_bytes()]
    ok = a_files == b_files and not differ and len(a_files) >= 12
    criterion("7 repeated commands give byte-identical files", ok,
              f"{len(a_files)} files compared" + (f", differ: {differ}" if differ else ""))
    assert ok
