"""PCA compression, cluster statistics, schedules, and the composite
cluster-shaping loss."""

import math
import warnings

import numpy as np
import pytest

import oracles
from latentboost import (Batch, ClusterStats, MarginConfig, PcaProjection,
                         ScheduleState, alpha_schedule, beta_schedule,
                         check_gradient, cluster_variance,
                         compute_cluster_stats, fit_pca, latent_boost_loss,
                         magnet_loss, project)
from conftest import random_batch, separated_batch


def make_data_with_singular_values(svals, m, rng):
    """Rows whose centered SVD has (up to scaling exactness) the given
    spectrum: build U S V^T with U columns orthonormal and column-mean zero."""
    k = len(svals)
    # orthonormal columns orthogonal to the all-ones vector => centering is a no-op
    base = rng.normal(size=(m, k))
    ones = np.ones((m, 1)) / math.sqrt(m)
    base -= ones @ (ones.T @ base)
    u, _ = np.linalg.qr(base)
    v, _ = np.linalg.qr(rng.normal(size=(k, k)))
    return u @ np.diag(svals) @ v.T


class TestFitPca:
    def test_dim_rule_three_one(self, rng):
        x = make_data_with_singular_values([3.0, 1.0], 12, rng)
        p = fit_pca(x, 0.95)
        np.testing.assert_allclose(p.singular_values, [3.0, 1.0], atol=1e-9)
        np.testing.assert_allclose(p.explained_variance_ratio, [0.9, 0.1],
                                   atol=1e-12)
        assert p.selected_dim == 2

    def test_dim_rule_at_exact_threshold(self, rng):
        x = make_data_with_singular_values([3.0, 1.0], 12, rng)
        assert fit_pca(x, 0.9).selected_dim == 1

    def test_four_equal_singular_values(self, rng):
        x = make_data_with_singular_values([2.0, 2.0, 2.0, 2.0], 16, rng)
        assert fit_pca(x, 0.95).selected_dim == 4

    def test_components_orthonormal(self, rng):
        x = rng.normal(size=(20, 6))
        p = fit_pca(x, 1.0)
        gram = p.components @ p.components.T
        np.testing.assert_allclose(gram, np.eye(p.selected_dim), atol=1e-8)

    def test_singular_values_non_increasing(self, rng):
        for _ in range(10):
            p = fit_pca(rng.normal(size=(15, 6)), 0.95)
            assert np.all(np.diff(p.singular_values) <= 0)

    def test_ratios_sum_to_one(self, rng):
        for _ in range(20):
            x = rng.normal(size=(rng.integers(4, 30), rng.integers(2, 10)))
            p = fit_pca(x, 0.95)
            assert p.explained_variance_ratio.sum() == pytest.approx(1.0, abs=1e-12)

    def test_selected_dim_matches_brute_force(self, rng):
        for _ in range(100):
            m = int(rng.integers(3, 40))
            d = int(rng.integers(2, 12))
            t = float(rng.uniform(0.5, 1.0))
            x = rng.normal(size=(m, d)) * rng.uniform(0.1, 4.0, size=d)
            p = fit_pca(x, t)
            assert p.selected_dim == oracles.pca_dim_naive(p.singular_values, t)

    def test_needs_two_rows(self):
        with pytest.raises(ValueError):
            fit_pca(np.ones((1, 4)), 0.95)

    def test_zero_variance_batch(self):
        with pytest.warns(RuntimeWarning):
            p = fit_pca(np.ones((5, 3)), 0.95)
        assert p.selected_dim == 1
        np.testing.assert_allclose(p.singular_values, 0.0, atol=1e-12)


class TestProject:
    def test_column_mean_maps_to_zero(self, rng):
        x = rng.normal(size=(10, 4))
        p = fit_pca(x, 1.0)
        np.testing.assert_allclose(project(p, x.mean(axis=0)),
                                   np.zeros(p.selected_dim), atol=1e-12)

    def test_full_rank_projection_is_isometry(self, rng):
        x = rng.normal(size=(12, 5))  # N > d: full rank almost surely
        p = fit_pca(x, 1.0)
        assert p.selected_dim == 5
        z = project(p, x)
        for i in range(12):
            for j in range(i + 1, 12):
                before = np.linalg.norm(x[i] - x[j])
                after = np.linalg.norm(z[i] - z[j])
                assert after == pytest.approx(before, rel=1e-9)

    def test_projection_commutes_with_centroids(self, rng):
        x = rng.normal(size=(15, 6))
        labels = np.array([0] * 7 + [1] * 8)
        p = fit_pca(x, 0.9)
        centroid = x[labels == 0].mean(axis=0)
        np.testing.assert_allclose(project(p, centroid),
                                   project(p, x[labels == 0]).mean(axis=0),
                                   atol=1e-10)

    def test_dimension_mismatch(self, rng):
        p = fit_pca(rng.normal(size=(6, 4)), 0.95)
        with pytest.raises(ValueError):
            project(p, np.ones(5))


class TestClusterVariance:
    def test_two_point_cluster(self):
        assert cluster_variance(np.array([[0.0], [2.0]]), np.array([1.0])) == 2.0

    def test_identical_points(self):
        assert cluster_variance(np.full((4, 3), 2.5), np.full(3, 2.5)) == 0.0

    def test_singleton_uses_fallback(self):
        with pytest.warns(RuntimeWarning):
            v = cluster_variance(np.array([[5.0]]), np.array([5.0]),
                                 singleton_fallback=1.25)
        assert v == 1.25

    def test_empty_cluster(self):
        with pytest.raises(ValueError, match="empty"):
            cluster_variance(np.zeros((0, 2)), np.zeros(2))

    def test_matches_naive_oracle(self, rng):
        for _ in range(50):
            pts = rng.normal(size=(int(rng.integers(2, 20)), int(rng.integers(1, 6))))
            mu = pts.mean(axis=0)
            assert cluster_variance(pts, mu) == pytest.approx(
                oracles.cluster_variance_naive(pts, mu), abs=1e-12)

    def test_centroid_definition(self, rng):
        x, labels = random_batch(rng)
        stats = compute_cluster_stats(x, labels)
        for k, c in enumerate(stats.class_ids):
            np.testing.assert_allclose(stats.centroids[k],
                                       x[labels == c].mean(axis=0), atol=1e-10)


class TestSchedules:
    def test_alpha_at_zero(self):
        s = ScheduleState(alpha0=1.0, epoch=0, total_epochs=100)
        assert alpha_schedule(s) == 2.0

    def test_alpha_at_total(self):
        s = ScheduleState(alpha0=1.0, epoch=100, total_epochs=100)
        assert alpha_schedule(s) == pytest.approx(1.0 + math.exp(-1.0 / 1.05),
                                                  abs=1e-12)

    def test_alpha_zero_strength_is_flat(self):
        for e in range(0, 101, 10):
            s = ScheduleState(alpha0=0.0, epoch=e, total_epochs=100)
            assert alpha_schedule(s) == 1.0

    def test_alpha_strictly_decreasing_and_bounded(self):
        values = [alpha_schedule(ScheduleState(alpha0=0.5, epoch=e, total_epochs=50))
                  for e in range(51)]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert all(v > 1.0 for v in values)

    def test_beta_at_zero(self):
        s = ScheduleState(beta0=1.0, epoch=0, total_epochs=100)
        assert beta_schedule(s) == 1.0

    def test_beta_halfway_through_decay(self):
        s = ScheduleState(beta0=1.0, epoch=10, total_epochs=100)
        assert beta_schedule(s) == pytest.approx(0.5, abs=1e-12)

    def test_beta_floor(self):
        for e in range(20, 101):
            s = ScheduleState(beta0=1.0, epoch=e, total_epochs=100)
            assert beta_schedule(s) == 1e-8

    def test_beta_non_increasing(self):
        values = [beta_schedule(ScheduleState(beta0=0.7, epoch=e, total_epochs=40))
                  for e in range(41)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_invalid_state(self):
        with pytest.raises(ValueError):
            ScheduleState(epoch=-1)
        with pytest.raises(ValueError):
            ScheduleState(total_epochs=0)


def identity_projection(d):
    return PcaProjection(components=np.eye(d), singular_values=np.ones(d),
                         selected_dim=d, threshold=1.0, mean_vector=np.zeros(d))


class TestLatentBoostLoss:
    def test_worked_one_dimensional_example(self):
        # clusters {-1, 1} (mu 0, var 2) and {3, 5} (mu 4, var 2); the
        # class-0 sample at -1 contributes -log(e^-1.25 / e^-6.25 + eps) ~ -5
        pts = np.array([[-1.0], [3.0]])
        stats = ClusterStats(class_ids=np.array([0, 1]),
                             centroids=np.array([[0.0], [4.0]]),
                             variances=np.array([2.0, 2.0]),
                             counts=np.array([2, 2]), pooled_variance=2.0)
        b = Batch(pts, [0, 1])
        v = float(latent_boost_loss(b, identity_projection(1), stats,
                                    alpha=1.0, beta=1.0).data)
        # per-sample terms: -log(e^5 + eps) and -log(e^1 + eps)
        expected = (-(5.0 + math.log1p(1e-8 * math.exp(-5.0)))
                    - (1.0 + math.log1p(1e-8 * math.exp(-1.0)))) / 2.0
        assert v == pytest.approx(expected, abs=1e-12)
        assert v == pytest.approx(-3.0, abs=1e-8)

    def test_single_class_rejected(self):
        pts = np.array([[0.0], [1.0]])
        stats = ClusterStats(class_ids=np.array([0]),
                             centroids=np.array([[0.5]]),
                             variances=np.array([1.0]), counts=np.array([2]),
                             pooled_variance=1.0)
        with pytest.raises(ValueError, match="denominator empty"):
            latent_boost_loss(Batch(pts, [0, 0]), identity_projection(1),
                              stats, 1.0, 1.0)

    def test_variance_clamp_warns(self):
        stats = ClusterStats(class_ids=np.array([0, 1]),
                             centroids=np.array([[0.0], [4.0]]),
                             variances=np.array([0.0, 2.0]),
                             counts=np.array([2, 2]), pooled_variance=1.0)
        with pytest.warns(RuntimeWarning, match="clamped"):
            latent_boost_loss(Batch(np.array([[0.0], [4.0]]), [0, 1]),
                              identity_projection(1), stats, 1.0, 1.0)

    def test_beta_floor_limit_counts_rivals(self, rng):
        # as beta -> eps every rival exponent collapses to ~0, so the
        # denominator approaches the rival cluster count
        x, labels = separated_batch(rng, n_per=4, d=3, k=3)
        proj = identity_projection(3)
        stats = compute_cluster_stats(x, labels)
        v = float(latent_boost_loss(Batch(x, labels), proj, stats,
                                    alpha=1.0, beta=1e-8).data)
        own = np.array([oracles.sqdist(x[i], stats.centroids[labels[i]])
                        for i in range(len(labels))])
        s2 = stats.variances[labels]
        rivals = 2  # 3 classes, 1 cluster each, own excluded
        expected = np.mean(own / (2 * s2) + 1.0 + math.log(rivals))
        assert v == pytest.approx(expected, rel=1e-6)

    def test_matches_naive_oracle(self, rng):
        for _ in range(30):
            x, labels = random_batch(rng, n_max=12, d_max=6)
            proj = fit_pca(x, 0.95)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                stats = compute_cluster_stats(project(proj, x), labels)
                got = float(latent_boost_loss(Batch(x, labels), proj, stats,
                                              alpha=1.3, beta=0.8).data)
                want = oracles.latent_boost_naive(x, labels, proj.components,
                                                  proj.mean_vector, 1.3, 0.8,
                                                  1e-8)
            assert got == pytest.approx(want, abs=1e-9)

    def test_gradient_with_statistics_held_constant(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            x, labels = random_batch(rng, n_max=10, d_max=6)
            proj = fit_pca(x, 0.95)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                stats = compute_cluster_stats(project(proj, x), labels)

                def fn(t):
                    return latent_boost_loss(Batch(t, labels), proj, stats,
                                             alpha=1.5, beta=0.7)

                err = check_gradient(fn, x, h=1e-5)
            assert err < 1e-4


class TestMagnetEquivalence:
    def test_degenerates_to_magnet(self, rng):
        """Identity projection + beta 1 + pooled variance everywhere makes the
        composite loss coincide with the plain cluster-affinity loss; batches
        are well separated so the eps shift inside the log stays below the
        tolerance."""
        for _ in range(20):
            x, labels = separated_batch(rng, n_per=int(rng.integers(3, 6)),
                                        d=int(rng.integers(2, 6)),
                                        k=int(rng.integers(2, 4)))
            stats = compute_cluster_stats(x, labels)
            pooled = ClusterStats(class_ids=stats.class_ids,
                                  centroids=stats.centroids,
                                  variances=np.full(stats.class_ids.size,
                                                    stats.pooled_variance),
                                  counts=stats.counts,
                                  pooled_variance=stats.pooled_variance)
            proj = identity_projection(x.shape[1])
            b = Batch(x, labels)
            lb = float(latent_boost_loss(b, proj, pooled, alpha=1.0, beta=1.0).data)
            mg = float(magnet_loss(b, MarginConfig(magnet_alpha=1.0), stats).data)
            assert abs(lb - mg) < 1e-9

    def test_eps_zero_is_exact_for_any_batch(self, rng):
        for _ in range(10):
            x, labels = random_batch(rng)
            stats = compute_cluster_stats(x, labels)
            pooled = ClusterStats(class_ids=stats.class_ids,
                                  centroids=stats.centroids,
                                  variances=np.full(stats.class_ids.size,
                                                    stats.pooled_variance),
                                  counts=stats.counts,
                                  pooled_variance=stats.pooled_variance)
            proj = identity_projection(x.shape[1])
            b = Batch(x, labels)
            lb = float(latent_boost_loss(b, proj, pooled, 1.0, 1.0, eps=0.0).data)
            mg = float(magnet_loss(b, MarginConfig(), stats).data)
            assert lb == pytest.approx(mg, abs=1e-12)
