import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intdiff import (
    CoupledSpec,
    FusionConfig,
    MgdConfig,
    ValidationError,
    demap,
    denoise_modalities,
    knn_accuracy,
    make_coupled_features,
    mi_recovery_benchmark,
    mutual_information,
)

from conftest import two_blobs


class Coords:
    def __init__(self, values):
        self.coords = np.asarray(values, dtype=float)


class TestKnnAccuracy:
    def test_separated_blobs_perfect(self):
        data, labels = two_blobs(seed=1, n_per=30, separation=100.0)
        assert knn_accuracy(data.values, labels, seed=0) == 1.0

    def test_random_labels_near_chance(self):
        rng = np.random.default_rng(2)
        coords = rng.normal(size=(500, 8))
        labels = rng.integers(2, size=500)
        acc = knn_accuracy(coords, labels, seed=3)
        assert 0.4 <= acc <= 0.6

    def test_duplicated_points_self_match_with_k1(self):
        # 10 classes of exactly two duplicate members: the 80/20
        # stratified split puts one copy in train, one in test, so the
        # single nearest neighbor is the exact duplicate
        rng = np.random.default_rng(4)
        points = rng.normal(size=(10, 5))
        coords = np.repeat(points, 2, axis=0)
        labels = np.repeat(np.arange(10), 2)
        assert knn_accuracy(coords, labels, k=1, seed=5) == 1.0

    def test_orthogonal_invariance(self):
        data, labels = two_blobs(seed=6, n_per=20, separation=8.0)
        q, _ = np.linalg.qr(np.random.default_rng(7).normal(size=(5, 5)))
        a = knn_accuracy(data.values, labels, seed=8)
        b = knn_accuracy(data.values @ q.T, labels, seed=8)
        assert a == b

    def test_single_member_class_rejected(self):
        coords = np.random.default_rng(0).normal(size=(5, 2))
        with pytest.raises(ValidationError):
            knn_accuracy(coords, np.array([0, 0, 1, 1, 2]), seed=0)

    def test_single_class_rejected(self):
        coords = np.random.default_rng(0).normal(size=(6, 2))
        with pytest.raises(ValidationError):
            knn_accuracy(coords, np.zeros(6, dtype=int), seed=0)

    def test_accepts_embedding_objects(self):
        data, labels = two_blobs(seed=9, n_per=15, separation=60.0)
        assert knn_accuracy(Coords(data.values), labels, seed=1) == 1.0


class TestDemap:
    def test_arclength_line_scores_one(self):
        x = np.sort(np.random.default_rng(0).uniform(size=60))[:, None]
        geo = np.abs(x - x.T)
        assert demap(Coords(x), geo) == 1.0

    def test_monotone_transform_scores_one(self):
        x = np.sort(np.random.default_rng(1).uniform(size=50))[:, None]
        geo = np.abs(x - x.T)
        assert demap(Coords(x), np.sqrt(geo)) == 1.0

    def test_random_embedding_uncorrelated(self):
        rng = np.random.default_rng(2)
        coords = rng.normal(size=(200, 3))
        points = rng.normal(size=(200, 1))
        geo = np.abs(points - points.T)
        assert abs(demap(Coords(coords), geo)) < 0.1

    def test_constant_distances_rejected(self):
        coords = np.zeros((5, 2))
        geo = np.abs(np.arange(5.0)[:, None] - np.arange(5.0)[None, :])
        with pytest.raises(ValidationError):
            demap(Coords(coords), geo)

    def test_asymmetric_geodesics_rejected(self):
        coords = np.random.default_rng(3).normal(size=(4, 2))
        geo = np.triu(np.ones((4, 4)), 1)
        with pytest.raises(ValidationError):
            demap(Coords(coords), geo)


class TestMutualInformation:
    def test_identical_uniform_approaches_log_bins(self):
        a = np.random.default_rng(0).uniform(size=10_000)
        assert abs(mutual_information(a, a) - np.log(8)) / np.log(8) < 0.05

    def test_independent_uniforms_near_zero(self):
        rng = np.random.default_rng(1)
        assert mutual_information(rng.uniform(size=10_000), rng.uniform(size=10_000)) < 0.02

    def test_negation_invariant(self):
        a = np.random.default_rng(2).uniform(size=1000)
        assert mutual_information(a, -a) == mutual_information(a, a)

    @given(st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_exact_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=200)
        b = a * 0.5 + rng.normal(size=200)
        assert mutual_information(a, b) == mutual_information(b, a)

    def test_nonnegative(self):
        rng = np.random.default_rng(3)
        assert mutual_information(rng.normal(size=300), rng.normal(size=300)) >= 0.0

    def test_zero_variance_flagged_as_zero(self):
        a = np.ones(100)
        b = np.random.default_rng(4).normal(size=100)
        with pytest.warns(UserWarning):
            assert mutual_information(a, b) == 0.0

    def test_too_short_rejected(self):
        with pytest.raises(ValidationError):
            mutual_information(np.arange(10.0), np.arange(10.0), bins=8)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            mutual_information(np.arange(100.0), np.arange(101.0))


def small_mi_cfg():
    return FusionConfig(mgd=MgdConfig(t=1, tau=16, c=2, max_depth=3), t_max=32)


class TestMiRecovery:
    def test_noiseless_pairs_keep_their_information(self):
        # tiny jitter keeps the geometry non-degenerate; the benchmark's
        # noise (dropout) is off, so every strategy must preserve MI
        spec = CoupledSpec(n_points=400, n_pairs=6, n_extra=10, n_clusters=3,
                           jitter=(0.02, 0.02), dropout=0.0, seed=7)
        mm = make_coupled_features(spec)
        pre = np.mean([
            mutual_information(mm.modality1.values[:, a], mm.modality2.values[:, b])
            for a, b in mm.coupled_pairs
        ])
        report = mi_recovery_benchmark(
            mm, ["none", "modality_specific", "alternating", "integrated"], small_mi_cfg()
        )
        for strategy, result in report.values.items():
            assert abs(result["mean"] - pre) / pre < 0.05, strategy

    def test_sparsified_pairs_lose_information(self):
        # benchmark-scale N keeps the plug-in estimator's bias inside
        # the 0.05 budget; "none" does no operator work so this is cheap
        spec = CoupledSpec(seed=8)
        mm = make_coupled_features(spec)
        report = mi_recovery_benchmark(mm, ["none"], small_mi_cfg())
        assert report.values["none"]["mean"] < 0.05

    def test_denoising_recovers_information(self):
        spec = CoupledSpec(n_points=500, n_pairs=6, n_extra=20, seed=9)
        mm = make_coupled_features(spec)
        report = mi_recovery_benchmark(mm, ["none", "integrated"], small_mi_cfg())
        assert report.values["integrated"]["mean"] > 5 * report.values["none"]["mean"]

    def test_report_structure(self):
        spec = CoupledSpec(n_points=400, n_pairs=4, n_extra=8, seed=10)
        mm = make_coupled_features(spec)
        report = mi_recovery_benchmark(mm, ["none"], small_mi_cfg())
        assert report.metric == "mutual_information"
        assert report.n_points == 400
        assert len(report.values["none"]["per_pair"]) == 4
        parsed = __import__("json").loads(report.to_json())
        assert parsed["config"]["bins"] == 8

    def test_missing_pairs_rejected(self):
        from intdiff import DataMatrix, MultimodalSet

        mm = MultimodalSet(
            DataMatrix.from_array(np.random.default_rng(0).normal(size=(80, 3))),
            DataMatrix.from_array(np.random.default_rng(1).normal(size=(80, 3))),
            labels=np.zeros(80, dtype=int),
        )
        with pytest.raises(ValidationError):
            mi_recovery_benchmark(mm, ["none"])


class TestDenoiseModalities:
    def test_none_passthrough(self):
        spec = CoupledSpec(n_points=300, n_pairs=4, n_extra=6, seed=11)
        mm = make_coupled_features(spec)
        d1, d2 = denoise_modalities(mm, "none")
        assert np.array_equal(d1.values, mm.modality1.values)
        assert np.array_equal(d2.values, mm.modality2.values)

    def test_fused_strategies_apply_one_operator(self):
        spec = CoupledSpec(n_points=300, n_pairs=4, n_extra=6, seed=12)
        mm = make_coupled_features(spec)
        from intdiff import fuse

        cfg = small_mi_cfg()
        d1, d2 = denoise_modalities(mm, "alternating", cfg)
        fused = fuse(mm.modality1, mm.modality2, "alternating", cfg)
        assert np.allclose(d1.values, fused.values @ mm.modality1.values, atol=1e-12)
        assert np.allclose(d2.values, fused.values @ mm.modality2.values, atol=1e-12)
