import numpy as np
import pytest

from mkteff import (
    BootstrapConfig,
    TvVarConfig,
    bootstrap_bands,
    fit_tv_var,
    resample_null_panel,
    simulate,
    DgpSpec,
)
from mkteff.bootstrap import replication_seed
from mkteff.errors import ConfigError


def null_panel(seed=0, T=200, n=2):
    panel, _ = simulate(DgpSpec(kind="white-noise", n=n, T=T, seed=seed, innovation_sd=0.01))
    return panel


class TestResample:
    def test_seed_determinism(self, rng):
        resid = rng.standard_normal((50, 3))
        nu = np.array([0.1, 0.0, -0.2])
        a = resample_null_panel(resid, nu, seed=42)
        b = resample_null_panel(resid, nu, seed=42)
        assert np.array_equal(a.values, b.values)
        c = resample_null_panel(resid, nu, seed=43)
        assert not np.array_equal(a.values, c.values)

    def test_zero_residuals_reproduce_intercept(self):
        nu = np.array([0.3, -0.1])
        panel = resample_null_panel(np.zeros((20, 2)), nu, seed=1, n_rows=15)
        assert panel.n_periods == 15
        np.testing.assert_array_equal(panel.values, np.tile(nu, (15, 1)))

    def test_large_sample_column_means(self, rng):
        resid = rng.standard_normal((400, 2)) * 0.02
        nu = np.zeros(2)
        panel = resample_null_panel(resid, nu, seed=7, n_rows=10_000)
        sd = resid.std(axis=0)
        assert np.all(np.abs(panel.values.mean(axis=0)) < 3.0 * sd / np.sqrt(10_000))

    def test_rows_drawn_jointly(self, rng):
        # strongly correlated residual columns must stay correlated
        z = rng.standard_normal(300)
        resid = np.column_stack([z, z + 0.01 * rng.standard_normal(300)])
        panel = resample_null_panel(resid, np.zeros(2), seed=3, n_rows=5000)
        corr = np.corrcoef(panel.values.T)[0, 1]
        assert corr > 0.99

    def test_needs_enough_rows(self):
        with pytest.raises(ConfigError):
            resample_null_panel(np.zeros((5, 2)), np.zeros(2), seed=0)


class TestBands:
    def test_master_seed_determinism(self):
        panel = null_panel()
        tv = TvVarConfig(q=1, lam=1.0)
        cfg = BootstrapConfig(replications=120, coverage=0.95, master_seed=11)
        b1 = bootstrap_bands(panel, tv, cfg)
        b2 = bootstrap_bands(panel, tv, cfg)
        assert np.array_equal(b1.lower, b2.lower)
        assert np.array_equal(b1.upper, b2.upper)

    def test_worker_count_invariance(self):
        panel = null_panel(seed=5, T=120)
        tv = TvVarConfig(q=1, lam=1.0)
        cfg = BootstrapConfig(replications=100, coverage=0.9, master_seed=21)
        serial = bootstrap_bands(panel, tv, cfg, n_jobs=1)
        parallel = bootstrap_bands(panel, tv, cfg, n_jobs=2)
        assert np.array_equal(serial.lower, parallel.lower)
        assert np.array_equal(serial.upper, parallel.upper)

    def test_quantile_nesting(self):
        panel = null_panel(seed=2, T=150)
        tv = TvVarConfig(q=1, lam=1.0)
        fit = fit_tv_var(panel, tv)
        wide = bootstrap_bands(panel, tv, BootstrapConfig(replications=150, coverage=0.95, master_seed=4), estimate=fit)
        narrow = bootstrap_bands(panel, tv, BootstrapConfig(replications=150, coverage=0.80, master_seed=4), estimate=fit)
        assert np.all(narrow.lower >= wide.lower - 1e-15)
        assert np.all(narrow.upper <= wide.upper + 1e-15)

    def test_band_shapes_and_sanity(self):
        panel = null_panel(seed=9, T=140)
        tv = TvVarConfig(q=1, lam=1.0)
        bands = bootstrap_bands(panel, tv, BootstrapConfig(replications=100, coverage=0.95, master_seed=1))
        assert bands.lower.shape == (139,)
        assert np.all(np.isfinite(bands.upper))
        assert np.all(bands.lower <= bands.upper)
        assert np.all(bands.lower >= 0.0)
        assert bands.flagged_counts.sum() == 0

    def test_replication_floor(self):
        panel = null_panel(seed=1, T=120)
        with pytest.raises(ConfigError):
            bootstrap_bands(panel, TvVarConfig(), BootstrapConfig(replications=50))

    def test_dump_files(self, tmp_path):
        panel = null_panel(seed=3, T=120)
        tv = TvVarConfig(q=1, lam=1.0)
        bootstrap_bands(
            panel, tv,
            BootstrapConfig(replications=100, coverage=0.95, master_seed=2),
            dump_dir=str(tmp_path), chunk_size=40,
        )
        files = sorted(p.name for p in tmp_path.iterdir())
        assert files == [
            "replications_000001_000040.csv",
            "replications_000041_000080.csv",
            "replications_000081_000100.csv",
        ]
        first = (tmp_path / files[0]).read_text().splitlines()
        assert first[0] == "replication,date,zeta"
        assert len(first) == 1 + 40 * 119

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            BootstrapConfig(coverage=1.2)
        with pytest.raises(ConfigError):
            BootstrapConfig(resample_mode="block")
        with pytest.raises(ConfigError):
            BootstrapConfig(replications=-1)


class TestSeeds:
    def test_replication_seed_is_spawn_key(self):
        s = replication_seed(123, 7)
        assert s.entropy == 123
        assert s.spawn_key == (7,)
        # distinct replications give distinct streams
        a = np.random.default_rng(replication_seed(9, 1)).integers(0, 100, 5)
        b = np.random.default_rng(replication_seed(9, 2)).integers(0, 100, 5)
        assert not np.array_equal(a, b)
