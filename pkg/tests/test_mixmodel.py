import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixpredict import fpca, mixmodel, simplex
from mixpredict.errors import (
    DimensionMismatch,
    GridMismatch,
    NotClosed,
    SeparationDetected,
    ZeroVarianceColumn,
)

GRID = np.linspace(0, 1, 20)


def make_data(seed=0, n=200, D=3, signal=1.0):
    rng = np.random.default_rng(seed)
    scalar = 50.0 + 10.0 * rng.standard_normal(n)
    comps = simplex.closure(np.exp(rng.standard_normal((n, D))))
    k = np.arange(1, 4)
    cos = np.sqrt(2) * np.cos(np.pi * np.outer(k, GRID))
    curves = (rng.standard_normal((n, 3)) * [1.0, 0.5, 0.25]) @ cos
    eta = signal * (
        0.05 * (scalar - 50.0)
        + simplex.ilr(comps)[:, 0]
        + fpca.quadrature_inner_product(curves, cos[0], GRID)
    )
    y = (rng.uniform(size=n) < 1 / (1 + np.exp(-eta))).astype(float)
    return mixmodel.MixedDataset(scalar, comps, curves, GRID, y)


class TestDataset:
    def test_from_raw_closes(self):
        d = mixmodel.MixedDataset.from_raw([1.0, 2.0], [[1, 1, 2], [2, 2, 4]], np.zeros((2, 20)), GRID)
        np.testing.assert_allclose(d.compositions, [[0.25, 0.25, 0.5]] * 2)

    def test_rejects_unclosed(self):
        with pytest.raises(NotClosed):
            mixmodel.MixedDataset([1.0], [[1, 1, 2]], np.zeros((1, 20)), GRID)

    def test_block_sizes(self):
        with pytest.raises(DimensionMismatch):
            mixmodel.MixedDataset([1.0, 2.0], [[0.5, 0.5]], np.zeros((2, 20)), GRID)

    def test_grid_size(self):
        with pytest.raises(GridMismatch):
            mixmodel.MixedDataset([1.0], [[0.5, 0.5]], np.zeros((1, 19)), GRID)


class TestDesign:
    def test_shape_and_labels(self):
        d = make_data(n=4, D=3)
        basis = fpca.fit_fpca(d.curves, GRID, n_components=2)
        X, _ = mixmodel.assemble_design(d, basis)
        assert X.shape == (4, 6)
        assert X.labels == ("intercept", "scalar", "ilr1", "ilr2", "fpc1", "fpc2")
        np.testing.assert_array_equal(X.values[:, 0], 1.0)

    def test_no_intercept(self):
        d = make_data(n=10)
        basis = fpca.fit_fpca(d.curves, GRID, n_components=2)
        X, _ = mixmodel.assemble_design(d, basis, include_intercept=False)
        assert X.labels[0] == "scalar" and X.shape == (10, 5)

    def test_training_columns_centered(self):
        d = make_data(n=50)
        basis = fpca.fit_fpca(d.curves, GRID, lam=0.9)
        X, centers = mixmodel.assemble_design(d, basis)
        np.testing.assert_allclose(X.values[:, 1:].mean(axis=0), 0.0, atol=1e-12)
        assert X.values[:, 1].std() == pytest.approx(1.0)
        assert centers.scalar_mean == pytest.approx(d.scalar.mean())

    def test_mean_observation_maps_to_zero(self):
        d = make_data(n=50)
        basis = fpca.fit_fpca(d.curves, GRID, lam=0.9)
        _, centers = mixmodel.assemble_design(d, basis)
        gm = simplex.ilr_inv(np.array(centers.ilr_mean))
        one = mixmodel.MixedDataset([centers.scalar_mean], [gm], [basis.mean_curve], GRID)
        X, _ = mixmodel.assemble_design(one, basis, centers=centers)
        np.testing.assert_allclose(X.values[0, 1:], 0.0, atol=1e-12)

    def test_block_masks(self):
        d = make_data(n=30, D=4)
        basis = fpca.fit_fpca(d.curves, GRID, n_components=3)
        X, _ = mixmodel.assemble_design(d, basis)
        assert X.block("ilr").sum() == 3 and X.block("fpca").sum() == 3
        assert X.block("scalar").sum() == 1


class TestFit:
    def test_back_transforms(self):
        d = make_data(n=400)
        f = mixmodel.fit(d, lam=0.95)
        np.testing.assert_allclose(simplex.ilr(f.alpha), f.alpha_star, atol=1e-10)
        assert f.alpha.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(f.beta_curve.values, f.b @ f.basis.eigenfunctions)
        assert f.gamma_per_unit == pytest.approx(f.gamma / d.scalar.std())

    def test_label_slicing(self):
        f = mixmodel.fit(make_data(n=300, D=4), lam=0.9)
        labels = f.diagnostics.labels
        coef = dict(zip(labels, f.coefficients))
        assert coef["scalar"] == f.gamma and coef["intercept"] == f.intercept
        np.testing.assert_array_equal([coef[f"ilr{k}"] for k in (1, 2, 3)], f.alpha_star)
        np.testing.assert_array_equal([coef[f"fpc{j + 1}"] for j in range(f.b.size)], f.b)

    def test_uniform_compositions(self):
        d = make_data(n=60)
        flat = mixmodel.MixedDataset(d.scalar, np.full((60, 3), 1 / 3), d.curves, GRID, d.response)
        with pytest.raises(ZeroVarianceColumn, match="ilr"):
            mixmodel.fit(flat)

    def test_constant_scalar(self):
        d = make_data(n=60)
        flat = mixmodel.MixedDataset(np.ones(60), d.compositions, d.curves, GRID, d.response)
        with pytest.raises(ZeroVarianceColumn):
            mixmodel.fit(flat)

    def test_recovers_signal(self):
        d = make_data(seed=3, n=3000)
        f = mixmodel.fit(d, lam=0.99)
        # the generating coefficients on the ilr and scalar axes
        assert f.alpha_star[0] == pytest.approx(1.0, abs=0.15)
        assert f.gamma_per_unit == pytest.approx(0.05, abs=0.01)

    def test_raw_scale_invariance(self):
        d = make_data(n=150)
        raw = d.compositions * np.random.default_rng(1).uniform(1, 1000, size=(150, 1))
        d2 = mixmodel.MixedDataset.from_raw(d.scalar, raw, d.curves, GRID, d.response)
        np.testing.assert_allclose(mixmodel.fit(d2).coefficients, mixmodel.fit(d).coefficients, atol=1e-10)

    def test_permutation_equivariance(self):
        d = make_data(n=150)
        perm = np.random.default_rng(2).permutation(150)
        a = mixmodel.fit(d, lam=0.9)
        b = mixmodel.fit(d.subset(perm), lam=0.9)
        np.testing.assert_allclose(b.coefficients, a.coefficients, atol=1e-10)
        np.testing.assert_allclose(
            mixmodel.predict(b, d.subset(perm)), mixmodel.predict(a, d)[perm], atol=1e-10
        )

    def test_separation_names_blocks(self):
        d = make_data(n=60)
        y = (d.scalar > np.median(d.scalar)).astype(float)
        sep = mixmodel.MixedDataset(d.scalar, d.compositions, d.curves, GRID, y)
        with pytest.raises(SeparationDetected, match="blocks:"):
            mixmodel.fit(sep)


class TestPredict:
    def test_matches_manual(self):
        d = make_data(n=200)
        f = mixmodel.fit(d, lam=0.9)
        X, _ = mixmodel.assemble_design(d, f.basis)
        np.testing.assert_allclose(mixmodel.predict(f, d), 1 / (1 + np.exp(-X.values @ f.coefficients)))

    def test_observation_at_means(self):
        d = make_data(n=200)
        f = mixmodel.fit(d, lam=0.9)
        gm = simplex.ilr_inv(np.array(f.centers.ilr_mean))
        one = mixmodel.MixedDataset([f.centers.scalar_mean], [gm], [f.basis.mean_curve], GRID)
        assert mixmodel.predict(f, one)[0] == pytest.approx(1 / (1 + np.exp(-f.intercept)), abs=1e-12)
        shifted = mixmodel.MixedDataset(
            [f.centers.scalar_mean], [gm], [f.basis.mean_curve + f.basis.eigenfunctions[0]], GRID
        )
        delta = mixmodel.linear_predictor(f, shifted)[0] - mixmodel.linear_predictor(f, one)[0]
        assert delta == pytest.approx(f.b[0], abs=1e-10)

    def test_new_data_does_not_change_centers(self):
        d = make_data(n=200)
        f = mixmodel.fit(d.subset(np.arange(150)), lam=0.9)
        test = d.subset(np.arange(150, 200))
        p1 = mixmodel.predict(f, test)
        shifted = mixmodel.MixedDataset(
            test.scalar + 100.0, test.compositions, test.curves, GRID, test.response
        )
        p_one = mixmodel.predict(f, test.subset([0]))
        assert p_one[0] == pytest.approx(p1[0], abs=0)
        assert not np.allclose(mixmodel.predict(f, shifted), p1)

    @pytest.mark.parametrize(
        "p, cut, expected",
        [([0.2, 0.5, 0.51], 0.5, [0, 0, 1]), ([0.3, 0.7], 0.6, [0, 1]), ([0.0, 1.0], 0.5, [0, 1])],
    )
    def test_classify(self, p, cut, expected):
        np.testing.assert_array_equal(mixmodel.classify(p, cut), expected)

    def test_classify_all_high(self):
        np.testing.assert_array_equal(mixmodel.classify(np.full(5, 0.9)), np.ones(5))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0.001, 0.999), min_size=1, max_size=20), st.floats(0, 1), st.floats(0, 1))
    def test_classify_monotone_in_cut(self, p, c1, c2):
        lo, hi = sorted((c1, c2))
        assert np.all(mixmodel.classify(p, hi) <= mixmodel.classify(p, lo))

    def test_wrong_part_count(self):
        d = make_data(n=100, D=3)
        f = mixmodel.fit(d, lam=0.9)
        other = make_data(n=5, D=4)
        with pytest.raises(DimensionMismatch):
            mixmodel.predict(f, other)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        d = make_data(n=200)
        f = mixmodel.fit(d, lam=0.9)
        path = tmp_path / "model.json"
        mixmodel.save(f, path)
        g = mixmodel.load(path)
        assert np.array_equal(g.coefficients, f.coefficients)
        assert np.array_equal(g.basis.eigenfunctions, f.basis.eigenfunctions)
        assert np.array_equal(mixmodel.predict(g, d), mixmodel.predict(f, d))
        assert mixmodel.to_json(g) == mixmodel.to_json(f)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 1000))
    def test_round_trip_bit_exact(self, seed):
        f = mixmodel.fit(make_data(seed=seed, n=120), lam=0.9)
        g = mixmodel.from_json(mixmodel.to_json(f))
        assert g.gamma == f.gamma and np.array_equal(g.alpha, f.alpha)

    def test_rejects_foreign_json(self):
        from mixpredict.errors import InputError

        with pytest.raises(InputError):
            mixmodel.from_json('{"format": "other"}')
