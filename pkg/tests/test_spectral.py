import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intdiff import (
    DiffusionOperator,
    ValidationError,
    eigendecompose,
    find_elbow,
    graph_filter,
    power,
    select_timescale,
    spectral_entropy,
)
from intdiff.spectral import EigenSystem, EntropyCurve

from conftest import random_data, random_operator


def brute_force_elbow(values, timescales):
    """Independent max-distance-to-chord scan (pure python)."""
    t0, y0 = timescales[0], values[0]
    t1, y1 = timescales[-1], values[-1]
    dx, dy = t1 - t0, y1 - y0
    norm = (dx * dx + dy * dy) ** 0.5
    if norm == 0:
        return timescales[0]
    best_t, best_d = timescales[0], -1.0
    for t, y in zip(timescales, values):
        d = abs(dx * (y - y0) - dy * (t - t0)) / norm
        if d > best_d:
            best_t, best_d = t, d
    return best_t


def eigen_of(values):
    return EigenSystem(
        eigenvalues=np.asarray(values, dtype=float),
        right_vectors=np.eye(len(values)),
        ortho_vectors=np.eye(len(values)),
        sqrt_degrees=np.ones(len(values)),
    )


class TestEigendecompose:
    def test_identity_operator(self):
        op = DiffusionOperator(np.eye(6), np.ones(6))
        eig = eigendecompose(op)
        assert np.allclose(eig.eigenvalues, 1.0, atol=1e-12)
        # reconstruction only: V diag(lam) V^T == I
        rec = eig.ortho_vectors @ np.diag(eig.eigenvalues) @ eig.ortho_vectors.T
        assert np.max(np.abs(rec - np.eye(6))) < 1e-12

    def test_two_point_eigenvalues(self):
        op = DiffusionOperator(np.array([[2 / 3, 1 / 3], [1 / 3, 2 / 3]]), np.array([1.5, 1.5]))
        eig = eigendecompose(op)
        assert np.allclose(eig.eigenvalues, [1.0, 1 / 3], atol=1e-12)

    def test_reconstruction_of_symmetric_conjugate(self):
        op = random_operator(0, n=15)
        eig = eigendecompose(op)
        s = eig.sqrt_degrees
        m = (s[:, None] * op.values) / s[None, :]
        m = (m + m.T) / 2
        rec = eig.ortho_vectors @ np.diag(eig.eigenvalues) @ eig.ortho_vectors.T
        assert np.max(np.abs(rec - m)) < 1e-9

    def test_top_eigenvalue_is_one(self):
        for seed in range(5):
            eig = eigendecompose(random_operator(seed, n=25))
            assert eig.eigenvalues[0] == pytest.approx(1.0, abs=1e-8)
            assert np.all(np.abs(eig.eigenvalues) <= 1.0 + 1e-8)

    def test_ortho_vectors_orthonormal(self):
        eig = eigendecompose(random_operator(1, n=20))
        gram = eig.ortho_vectors.T @ eig.ortho_vectors
        assert np.max(np.abs(gram - np.eye(20))) < 1e-8

    def test_right_vectors_diagonalize_p(self):
        op = random_operator(2, n=18)
        eig = eigendecompose(op)
        resid = op.values @ eig.right_vectors - eig.right_vectors * eig.eigenvalues[None, :]
        assert np.max(np.abs(resid)) < 1e-6

    def test_eigenvalues_match_general_spectrum(self):
        op = random_operator(3, n=16)
        ours = np.sort(eigendecompose(op).eigenvalues)
        general = np.sort(np.linalg.eigvals(op.values).real)
        assert np.max(np.abs(ours - general)) < 1e-9

    def test_cached_on_operator(self):
        op = random_operator(4)
        assert eigendecompose(op) is eigendecompose(op)


class TestGraphFilter:
    def test_identity_response(self):
        op = random_operator(0, n=22)
        sig = random_data(5, n=22, d=3)
        out = graph_filter(op, sig.values, lambda lam: np.ones_like(lam))
        assert np.max(np.abs(out - sig.values)) < 1e-9

    @pytest.mark.parametrize("t", [1, 2, 5])
    def test_power_response_matches_matrix_power(self, t):
        op = random_operator(1, n=20)
        sig = random_data(6, n=20, d=4)
        filtered = graph_filter(op, sig.values, lambda lam: lam**t)
        direct = power(op, t).values @ sig.values
        assert np.max(np.abs(filtered - direct)) < 1e-8

    def test_zero_response(self):
        op = random_operator(2, n=12)
        out = graph_filter(op, np.ones((12, 2)), lambda lam: np.zeros_like(lam))
        assert np.max(np.abs(out)) < 1e-9

    def test_vector_signal_roundtrips_shape(self):
        op = random_operator(3, n=10)
        out = graph_filter(op, np.ones(10), lambda lam: lam)
        assert out.shape == (10,)

    def test_dimension_mismatch(self):
        op = random_operator(3, n=10)
        with pytest.raises(ValidationError):
            graph_filter(op, np.ones((11, 2)), lambda lam: lam)

    def test_data_matrix_passthrough(self):
        op = random_operator(4, n=14)
        sig = random_data(7, n=14, d=2)
        out = graph_filter(op, sig, lambda lam: lam)
        assert np.array_equal(out.row_ids, sig.row_ids)


class TestSpectralEntropy:
    def test_identity_spectrum_gives_log_n(self):
        eig = eigen_of(np.ones(9))
        for t in (1, 4, 32):
            assert spectral_entropy(eig, t) == pytest.approx(np.log(9), abs=1e-12)

    def test_point_mass_gives_zero(self):
        eig = eigen_of([1.0, 0.0, 0.0])
        assert spectral_entropy(eig, 1) == 0.0

    def test_two_point_value(self):
        # psi = (3/4, 1/4): S = -(3/4 log 3/4 + 1/4 log 1/4)
        eig = eigen_of([1.0, 1 / 3])
        expected = -(0.75 * np.log(0.75) + 0.25 * np.log(0.25))
        assert spectral_entropy(eig, 1) == pytest.approx(expected, abs=1e-12)
        assert spectral_entropy(eig, 1) == pytest.approx(0.562335, abs=1e-6)

    def test_negative_eigenvalues_use_magnitude(self):
        assert spectral_entropy(eigen_of([1.0, -0.5]), 1) == pytest.approx(
            spectral_entropy(eigen_of([1.0, 0.5]), 1), abs=1e-15
        )

    def test_top_k_truncation(self):
        eig = eigen_of([1.0, 0.5, 0.25])
        full = spectral_entropy(eig, 1)
        truncated = spectral_entropy(eig, 1, top_k=2)
        assert truncated != full
        assert truncated == pytest.approx(spectral_entropy(eigen_of([1.0, 0.5]), 1), abs=1e-15)

    def test_nonpositive_t_rejected(self):
        with pytest.raises(ValidationError):
            spectral_entropy(eigen_of([1.0]), 0)

    def test_non_increasing_in_t(self):
        for seed in range(20):
            eig = eigendecompose(random_operator(seed, n=15))
            values = [spectral_entropy(eig, t) for t in range(1, 65)]
            assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))

    def test_vanishes_for_connected_graph(self):
        for seed in range(5):
            eig = eigendecompose(random_operator(seed, n=30))
            assert spectral_entropy(eig, 256) < 0.01


class TestFindElbow:
    def test_linear_curve_ties_to_first(self):
        assert find_elbow([5.0, 4.0, 3.0, 2.0, 1.0]) == 1

    def test_documented_curve(self):
        assert find_elbow([5.0, 2.0, 1.9, 1.8, 1.7]) == 2

    def test_matches_bruteforce_on_random_curves(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(3, 40))
            values = np.sort(rng.uniform(0, 5, size=n))[::-1].copy()
            ts = np.arange(1, n + 1)
            assert find_elbow(values, ts) == brute_force_elbow(values.tolist(), ts.tolist())

    @given(st.lists(st.floats(min_value=-100, max_value=100), min_size=2, max_size=50))
    @settings(max_examples=200, deadline=None)
    def test_matches_bruteforce_property(self, values):
        ts = list(range(1, len(values) + 1))
        assert find_elbow(values, ts) == brute_force_elbow(values, ts)

    def test_rejects_scalar(self):
        with pytest.raises(ValidationError):
            find_elbow([1.0])


class TestSelectTimescale:
    def test_curve_is_entropy_samples(self):
        op = random_operator(0, n=18)
        eig = eigendecompose(op)
        curve = select_timescale(eig, t_max=16)
        assert curve.timescales.tolist() == list(range(1, 17))
        for t in (1, 7, 16):
            assert curve.entropies[t - 1] == pytest.approx(spectral_entropy(eig, t), abs=1e-12)

    def test_elbow_matches_bruteforce(self):
        for seed in range(10):
            eig = eigendecompose(random_operator(seed, n=22))
            curve = select_timescale(eig)
            assert curve.elbow == brute_force_elbow(curve.entropies.tolist(), curve.timescales.tolist())

    def test_synthesized_spectrum_elbow(self):
        # informative head + fast-decaying noise tail: elbow where the
        # tail has burned off, per the brute-force oracle
        eig = eigen_of([1.0, 0.9, 0.89, 0.88] + [0.05, 0.04, 0.03] * 4)
        curve = select_timescale(eig, t_max=32)
        assert curve.elbow == brute_force_elbow(curve.entropies.tolist(), curve.timescales.tolist())
        assert curve.elbow > 1

    def test_small_t_max_rejected(self):
        with pytest.raises(ValidationError):
            select_timescale(eigen_of([1.0, 0.5]), t_max=2)

    def test_elbow_in_timescales(self):
        curve = select_timescale(eigendecompose(random_operator(3)), t_max=12)
        assert curve.elbow in curve.timescales


class TestEntropyCurveCsv:
    def test_csv_layout(self):
        curve = EntropyCurve(np.array([1, 2, 3]), np.array([2.0, 1.0, 0.5]), elbow=2)
        lines = curve.to_csv().strip().split("\n")
        assert lines[0] == "t,entropy,is_elbow"
        assert lines[1] == "1,2.0,0"
        assert lines[2] == "2,1.0,1"
        assert len(lines) == 4
