import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intdiff import (
    AlignmentError,
    DataMatrix,
    FusionConfig,
    FusionStrategy,
    ValidationError,
    alternating,
    diffusion_operator,
    fuse,
    fuse_baseline,
    gaussian_kernel,
    integrated,
    load_operator,
    reduce_exponents,
    save_operator,
)
from intdiff.operators import median_bandwidth, pairwise_sq_dists

from conftest import random_data, random_operator

ALL_STRATEGIES = [s.value for s in FusionStrategy]


def small_cfg():
    from intdiff import MgdConfig

    return FusionConfig(mgd=MgdConfig(t=2, tau=8, c=2, max_depth=2), t_max=16)


class TestAlternating:
    def test_same_operator_squares(self):
        op = random_operator(0, n=15)
        fused = alternating(op, op, 1)
        assert np.max(np.abs(fused.values - op.values @ op.values)) < 1e-12

    def test_identity_first_absorbs(self):
        from intdiff import DiffusionOperator

        op2 = random_operator(1, n=12)
        identity = DiffusionOperator(np.eye(12), np.ones(12))
        fused = alternating(identity, op2, 3)
        direct = op2.values @ op2.values @ op2.values
        assert np.max(np.abs(fused.values - direct)) < 1e-12

    def test_matches_bruteforce_product(self):
        op1, op2 = random_operator(2, n=18), random_operator(3, n=18)
        fused = alternating(op1, op2, 2)
        brute = op1.values @ op2.values @ op1.values @ op2.values
        assert np.max(np.abs(fused.values - brute)) < 1e-10

    def test_exponents_recorded(self):
        op = random_operator(4, n=10)
        assert alternating(op, op, 3).exponents == (3, 3)

    def test_size_mismatch(self):
        with pytest.raises(AlignmentError):
            alternating(random_operator(0, n=10), random_operator(1, n=12), 1)

    def test_noncommutativity_of_generic_operators(self):
        op1, op2 = random_operator(5, n=14), random_operator(6, n=14)
        forward = op1.values @ op2.values
        backward = op2.values @ op1.values
        assert np.max(np.abs(forward - backward)) > 0.0


class TestReduceExponents:
    def test_documented_pair(self):
        assert reduce_exponents(4, 6) == (2, 3)

    def test_equal_elbows_collapse(self):
        assert reduce_exponents(5, 5) == (1, 1)

    @given(st.integers(min_value=1, max_value=500), st.integers(min_value=1, max_value=500))
    @settings(max_examples=200, deadline=None)
    def test_result_coprime_and_ratio_preserved(self, k1, k2):
        t1, t2 = reduce_exponents(k1, k2)
        assert math.gcd(t1, t2) == 1
        assert t1 * k2 == t2 * k1

    def test_nonpositive_rejected(self):
        with pytest.raises(ValidationError):
            reduce_exponents(0, 3)


class TestIntegrated:
    def test_identical_modalities(self):
        data = random_data(0, n=40, d=5)
        result = integrated(data, data, small_cfg())
        assert result.source_elbows[0] == result.source_elbows[1]
        assert result.exponents == (1, 1)
        assert np.max(np.abs(result.values.sum(axis=1) - 1.0)) < 1e-9

    def test_pipeline_records_provenance(self):
        d1, d2 = random_data(1, n=30, d=4), random_data(2, n=30, d=4)
        result = integrated(d1, d2, small_cfg())
        assert result.strategy == FusionStrategy.INTEGRATED
        assert result.exponents == reduce_exponents(*result.source_elbows)
        assert len(result.details["bandwidths"]) == 2
        assert len(result.details["entropy_curves"]) == 2

    def test_order_override(self):
        d1, d2 = random_data(3, n=25, d=3), random_data(4, n=25, d=3)
        cfg = small_cfg()
        forward = integrated(d1, d2, cfg)
        flipped = integrated(
            d1, d2,
            FusionConfig(kernel=cfg.kernel, mgd=cfg.mgd, t_max=cfg.t_max, order=(2, 1)),
        )
        assert flipped.order == (2, 1)
        assert np.max(np.abs(forward.values - flipped.values)) > 0.0

    def test_row_id_mismatch(self):
        d1 = random_data(5, n=10)
        d2 = DataMatrix(d1.values.copy(), d1.row_ids + 100)
        with pytest.raises(AlignmentError):
            integrated(d1, d2, small_cfg())


class TestFuseBaseline:
    def test_affinity_product_with_flat_kernel_recovers_modality1(self):
        d1 = random_data(0, n=20, d=3)
        d2 = DataMatrix(np.zeros((20, 2)), d1.row_ids)  # all points identical -> K2 == 1
        fused = fuse_baseline(d1, d2, "affinity_product", FusionConfig())
        expected = diffusion_operator(gaussian_kernel(d1)).values
        assert np.max(np.abs(fused.values - expected)) < 1e-12

    def test_affinity_sum_of_equal_kernels_recovers_modality(self):
        d1 = random_data(1, n=22, d=4)
        fused = fuse_baseline(d1, d1, "affinity_sum", FusionConfig())
        expected = diffusion_operator(gaussian_kernel(d1)).values
        assert np.max(np.abs(fused.values - expected)) < 1e-12

    def test_concatenation_of_identical_modalities_matches_doubled_bandwidth(self):
        d1 = random_data(2, n=30, d=5)
        fused = fuse_baseline(d1, d1, "concatenation", FusionConfig())
        z = (d1.values - d1.values.mean(axis=0)) / d1.values.std(axis=0)
        eps = median_bandwidth(pairwise_sq_dists(z), 5)
        stacked = DataMatrix.from_array(np.hstack([z, z]))
        expected = diffusion_operator(gaussian_kernel(stacked, bandwidth=2 * eps)).values
        assert np.max(np.abs(fused.values - expected)) < 1e-9

    def test_distance_sum_matches_manual_kernel(self):
        d1, d2 = random_data(3, n=18, d=3), random_data(4, n=18, d=4)
        fused = fuse_baseline(d1, d2, "distance_sum", FusionConfig())
        total = pairwise_sq_dists(d1.values) + pairwise_sq_dists(d2.values)
        eps = median_bandwidth(total, 5)
        kernel = np.exp(-total / eps)
        expected = kernel / kernel.sum(axis=1, keepdims=True)
        assert np.max(np.abs(fused.values - expected)) < 1e-12

    @pytest.mark.parametrize("strategy", ALL_STRATEGIES)
    def test_every_strategy_yields_row_stochastic_nonnegative(self, strategy):
        d1, d2 = random_data(5, n=30, d=4), random_data(6, n=30, d=4)
        fused = fuse(d1, d2, strategy, small_cfg())
        assert np.max(np.abs(fused.values.sum(axis=1) - 1.0)) < 1e-9
        assert fused.values.min() >= -1e-15
        assert fused.strategy == FusionStrategy(strategy)

    def test_alternating_powered_uses_elbow_ratio(self):
        d1, d2 = random_data(7, n=35, d=4), random_data(8, n=35, d=4)
        fused = fuse_baseline(d1, d2, "alternating_powered", small_cfg())
        assert fused.source_elbows is not None
        assert fused.exponents == reduce_exponents(*fused.source_elbows)

    def test_unknown_strategy_rejected(self):
        with pytest.raises(ValidationError):
            fuse(random_data(0), random_data(1), "bogus", FusionConfig())

    def test_row_count_mismatch(self):
        with pytest.raises(AlignmentError):
            fuse_baseline(random_data(0, n=10), random_data(1, n=12), "affinity_sum")


class TestOperatorIO:
    def test_round_trip(self, tmp_path):
        d1, d2 = random_data(0, n=15, d=3), random_data(1, n=15, d=3)
        fused = fuse_baseline(d1, d2, "alternating_powered", small_cfg())
        save_operator(fused, tmp_path / "op")
        loaded = load_operator(tmp_path / "op")
        assert np.array_equal(loaded.values, fused.values)
        assert loaded.exponents == fused.exponents
        assert loaded.source_elbows == fused.source_elbows
        assert loaded.strategy == fused.strategy

    def test_sidecar_is_json(self, tmp_path):
        import json

        fused = fuse_baseline(random_data(2, n=10), random_data(3, n=10), "affinity_sum")
        _, sidecar = save_operator(fused, tmp_path / "op")
        meta = json.loads(sidecar.read_text())
        assert meta["strategy"] == "affinity_sum"
        assert meta["exponents"] == [1, 1]
