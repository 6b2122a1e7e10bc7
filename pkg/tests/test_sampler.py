import math

import numpy as np
import pytest

from popergm.errors import ConfigError, DataError
from popergm.exact import enumerate_statistics, exact_distribution
from popergm.graphs import Graph, NodeCovariates, dyad_count
from popergm.model import ModelSpec
from popergm.sampler import (
    SamplerConfig,
    sample_graph_codes,
    simulate_ergm,
    simulate_population,
    simulate_with_stats,
)

EDGES_ONLY = ModelSpec.from_descriptors(["edges"])


class TestSamplerConfig:
    def test_default_steps_scale_with_dyads(self):
        cfg = SamplerConfig()
        assert cfg.steps_for(30) == 20 * dyad_count(30)

    def test_explicit_iterations_win(self):
        cfg = SamplerConfig(aux_iterations=123)
        assert cfg.steps_for(30) == 123

    def test_validation(self):
        with pytest.raises(ConfigError):
            SamplerConfig(aux_iterations=0)
        with pytest.raises(ConfigError):
            SamplerConfig(burn_in=-1)

    def test_observed_init_requires_graph(self):
        cov = NodeCovariates.uniform(4)
        with pytest.raises(ConfigError):
            simulate_ergm(
                EDGES_ONLY, cov, np.zeros(1), SamplerConfig(init="observed"),
                np.random.default_rng(0),
            )


class TestSimulate:
    def test_deterministic_given_seed(self):
        cov = NodeCovariates.uniform(6)
        cfg = SamplerConfig(init="empty")
        theta = np.array([-0.3])
        g1 = simulate_ergm(EDGES_ONLY, cov, theta, cfg, np.random.default_rng(9))
        g2 = simulate_ergm(EDGES_ONLY, cov, theta, cfg, np.random.default_rng(9))
        assert g1 == g2

    def test_dimension_mismatch(self):
        cov = NodeCovariates.uniform(5)
        with pytest.raises(DataError):
            simulate_ergm(
                EDGES_ONLY, cov, np.zeros(2), SamplerConfig(init="empty"),
                np.random.default_rng(0),
            )

    def test_incremental_stats_equal_recount(self):
        from popergm.model import summary_statistics

        cov = NodeCovariates.hemispheres(10)
        spec = ModelSpec.from_descriptors(["edges", "nodematch:hemisphere", "gwesp:0.9"])
        g, stats = simulate_with_stats(
            spec, cov, np.array([-1.0, 0.3, 0.4]), SamplerConfig(init="empty"),
            np.random.default_rng(4),
        )
        assert stats == pytest.approx(summary_statistics(g, cov, spec), abs=1e-9)

    def test_zero_theta_gives_half_density(self):
        # uniform distribution over graphs:每 dyad is Bernoulli(1/2)
        cov = NodeCovariates.uniform(8)
        cfg = SamplerConfig(init="empty", aux_factor=5)
        rng = np.random.default_rng(17)
        dens = []
        for _ in range(300):
            g = simulate_ergm(EDGES_ONLY, cov, np.zeros(1), cfg, rng)
            dens.append(g.edge_count / dyad_count(8))
        assert np.mean(dens) == pytest.approx(0.5, abs=0.03)

    def test_logistic_edge_probability(self):
        # edges-only model: each dyad independently on with prob
        # sigmoid(theta)
        theta = -1.0
        expected = math.exp(theta) / (1.0 + math.exp(theta))
        cov = NodeCovariates.uniform(5)
        codes = sample_graph_codes(
            EDGES_ONLY, cov, np.array([theta]), n_draws=20000, thin=10,
            config=SamplerConfig(init="empty", burn_in=500),
            rng=np.random.default_rng(23),
        )
        bits = (codes[:, None] >> np.arange(dyad_count(5))) & 1
        assert bits.mean() == pytest.approx(expected, abs=0.01)


class TestSamplerExactness:
    def test_small_tv_distance_smoke(self):
        # fuller check with 1e5 draws lives in the acceptance suite
        n = 4
        cov = NodeCovariates.uniform(n)
        spec = ModelSpec.from_descriptors(["edges", "gwesp:0.9"])
        theta = np.array([-0.8, 0.5])
        codes = sample_graph_codes(
            spec, cov, theta, n_draws=30000, thin=12,
            config=SamplerConfig(init="empty", burn_in=600),
            rng=np.random.default_rng(31),
        )
        emp = np.bincount(codes, minlength=1 << dyad_count(n)) / len(codes)
        exact = exact_distribution(spec, cov, theta)
        tv = 0.5 * np.abs(emp - exact).sum()
        assert tv < 0.06

    def test_codes_require_small_graphs(self):
        cov = NodeCovariates.uniform(20)
        with pytest.raises(DataError):
            sample_graph_codes(
                EDGES_ONLY, cov, np.zeros(1), 10, 1,
                SamplerConfig(init="empty"), np.random.default_rng(0),
            )


class TestSimulatePopulation:
    def test_empty_population(self):
        cov = NodeCovariates.uniform(4)
        pop = simulate_population(
            EDGES_ONLY, cov, [], SamplerConfig(init="empty"), np.random.default_rng(0)
        )
        assert pop.n_networks == 0

    def test_same_theta_distinct_streams(self):
        cov = NodeCovariates.uniform(8)
        theta = np.array([0.0])
        pop = simulate_population(
            EDGES_ONLY, cov, [theta, theta, theta], SamplerConfig(init="empty"),
            np.random.default_rng(5),
        )
        assert pop.n_networks == 3
        assert len({g for g in pop.graphs}) > 1

    def test_worker_count_does_not_change_result(self):
        cov = NodeCovariates.uniform(10)
        thetas = [np.array([-0.5]), np.array([0.2]), np.array([-1.0]), np.array([0.0])]
        pop1 = simulate_population(
            EDGES_ONLY, cov, thetas, SamplerConfig(init="empty"),
            np.random.default_rng(12), workers=1,
        )
        pop4 = simulate_population(
            EDGES_ONLY, cov, thetas, SamplerConfig(init="empty"),
            np.random.default_rng(12), workers=4,
        )
        assert all(a == b for a, b in zip(pop1.graphs, pop4.graphs))

    def test_sparse_regime_population(self):
        # group-mean parameters in the study's sparse regime yield low
        # mean density
        n = 30
        cov = NodeCovariates.hemispheres(n)
        spec = ModelSpec.from_descriptors(["edges", "nodematch:hemisphere", "gwesp:0.9"])
        rng = np.random.default_rng(77)
        mu = np.array([-3.0, 0.5, 0.5])
        sigma = np.array([[1, -0.5, 0], [-0.5, 0.5, 0], [0, 0, 0.5]]) / 50.0
        chol = np.linalg.cholesky(sigma)
        thetas = [mu + chol @ rng.standard_normal(3) for _ in range(10)]
        pop = simulate_population(
            spec, cov, thetas, SamplerConfig(init="empty", aux_factor=30), rng
        )
        from popergm.graphs import density

        mean_density = np.mean([density(g) for g in pop.graphs])
        assert 0.02 < mean_density < 0.35
