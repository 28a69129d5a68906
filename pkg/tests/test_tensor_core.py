import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from viscostab import tensor_core as tc


def spd_strategy(lo=1e-3, hi=50.0):
    return st.integers(0, 2**32 - 1).map(lambda s: tc.random_spd(np.random.default_rng(s), lo, hi))


class TestEigvals:
    def test_identity(self):
        np.testing.assert_array_equal(tc.eigvals(np.eye(3)), [1.0, 1.0, 1.0])

    def test_diagonal_sorted(self):
        np.testing.assert_allclose(tc.eigvals(np.diag([2.0, 1.0, 1.0])), [1.0, 1.0, 2.0], atol=1e-15)

    def test_zero_tensor(self):
        np.testing.assert_array_equal(tc.eigvals(np.zeros((3, 3))), np.zeros(3))

    @given(st.integers(0, 2**32 - 1))
    def test_rotated_known_spectrum(self, seed):
        r = tc.random_rotation(np.random.default_rng(seed))
        t = r @ np.diag([1.0, 2.0, 3.0]) @ r.T
        np.testing.assert_allclose(tc.eigvals(t), [1.0, 2.0, 3.0], rtol=0, atol=3e-12)

    @pytest.mark.parametrize(
        "lo,hi",
        [(1e-3, 50.0), (1.0, 1.0), (1.0, 1.0 + 1e-7), (1e-3, 1.000001e-3), (1e-8, 1e8), (-5.0, 5.0)],
    )
    def test_matches_lapack(self, lo, hi):
        rng = np.random.default_rng(7)
        if lo < 0:
            a = rng.normal(size=(5000, 3, 3))
            t = tc.symmetrize(a)
        else:
            t = tc.random_spd(rng, lo, hi, size=5000)
        ref = np.linalg.eigvalsh(t)
        got = tc.eigvals(t)
        scale = np.abs(ref).max(axis=-1, keepdims=True)
        assert np.all(np.diff(got, axis=-1) >= 0)
        assert np.max(np.abs(got - ref) / scale) < 1e-12

    def test_batched_shape(self):
        t = tc.random_spd(np.random.default_rng(0), 0.5, 2.0, size=(4, 5))
        assert tc.eigvals(t).shape == (4, 5, 3)


class TestMatrixFunctions:
    def test_log_identity(self):
        np.testing.assert_array_equal(tc.mat_log(np.eye(3)), np.zeros((3, 3)))

    def test_log_scalar_e(self):
        np.testing.assert_allclose(tc.mat_log(np.e * np.eye(3)), np.eye(3), atol=1e-15)

    def test_log_diagonal(self):
        np.testing.assert_allclose(tc.mat_log(np.diag([2.0, 1.0, 1.0])), np.diag([np.log(2.0), 0, 0]), atol=1e-15)

    def test_log_rejects_non_spd(self):
        with pytest.raises(tc.NotSPDError):
            tc.mat_log(np.diag([1.0, -1.0, 2.0]))
        with pytest.raises(tc.NotSPDError):
            tc.mat_inv(np.diag([1.0, 0.0, 2.0]))

    def test_inv_examples(self):
        np.testing.assert_array_equal(tc.mat_inv(np.eye(3)), np.eye(3))
        np.testing.assert_allclose(tc.mat_inv(np.diag([2.0, 4.0, 5.0])), np.diag([0.5, 0.25, 0.2]), rtol=1e-15)

    def test_inv_residual(self):
        b = tc.random_spd(np.random.default_rng(3), 0.1, 10.0, size=2000)
        res = tc.frob_norm(tc.matmul(b, tc.mat_inv(b)) - np.eye(3))
        assert res.max() < 1e-12

    @settings(max_examples=200)
    @given(spd_strategy())
    def test_trace_log_is_log_det(self, b):
        assert abs(np.trace(tc.mat_log(b)) - np.log(np.linalg.det(b))) < 1e-10

    @settings(max_examples=200)
    @given(spd_strategy())
    def test_exp_log_round_trip(self, b):
        back = tc.mat_exp(tc.mat_log(b))
        assert np.linalg.norm(back - b) / np.linalg.norm(b) < 1e-9

    def test_near_degenerate_is_consistent(self):
        # eigenvalues split below the cluster gap share one function value
        r = tc.random_rotation(np.random.default_rng(1))
        b = r @ np.diag([2.0, 2.0 * (1 + 1e-12), 5.0]) @ r.T
        w, _ = tc.eigh(b)
        assert w[0] == w[1]
        np.testing.assert_allclose(tc.mat_log(b), r @ np.diag(np.log([2.0, 2.0, 5.0])) @ r.T, atol=1e-12)

    def test_small_distinct_eigenvalues_not_merged(self):
        b = np.diag([1e-3, 1e-3 + 1e-7, 50.0])
        np.testing.assert_allclose(np.diag(tc.mat_inv(b)), [1e3, 1 / (1e-3 + 1e-7), 0.02], rtol=1e-13)


class TestPairingAndHelpers:
    def test_frob_inner_examples(self):
        assert tc.frob_inner(np.eye(3), np.eye(3)) == 3.0
        assert tc.frob_inner(np.eye(3), np.diag([1.0, -2.0, 1.0])) == 0.0
        assert tc.frob_inner(np.diag([1.0, 2.0, 3.0]), np.diag([4.0, 5.0, 6.0])) == 32.0

    @given(spd_strategy(), spd_strategy())
    def test_frob_inner_symmetric(self, a, b):
        assert tc.frob_inner(a, b) == tc.frob_inner(b, a)

    def test_components_round_trip(self):
        t = tc.sym_from_components(1.0, 2.0, 3.0, 0.1, 0.2, 0.3)
        assert np.array_equal(t, t.T)
        np.testing.assert_array_equal(tc.components(t), [1.0, 2.0, 3.0, 0.1, 0.2, 0.3])

    def test_dev_traceless(self):
        assert abs(np.trace(tc.dev(np.diag([3.0, 1.0, -7.0])))) < 1e-15

    def test_spd_certificate(self):
        assert tc.is_spd(np.eye(3))
        assert not tc.is_spd(np.diag([1.0, 1.0, 1e-14]))
        assert tc.is_spd(np.diag([1.0, 1.0, 1e-12]))
        assert not tc.is_spd(np.diag([1e5, 1.0, 1e-9]))


class TestRandomSpd:
    def test_unit_range_is_identity(self):
        b = tc.random_spd(np.random.default_rng(11), 1.0, 1.0)
        np.testing.assert_allclose(b, np.eye(3), atol=1e-15)

    def test_range_respected(self):
        b = tc.random_spd(np.random.default_rng(5), 1e-3, 50.0, size=5000)
        lam = tc.eigvals(b)
        assert lam.min() >= 1e-3 * (1 - 1e-12)
        assert lam.max() <= 50.0 * (1 + 1e-12)
        assert np.all(tc.is_spd(b))

    def test_deterministic(self):
        a = tc.random_spd(np.random.default_rng(42), 1e-3, 50.0, size=10)
        b = tc.random_spd(np.random.default_rng(42), 1e-3, 50.0, size=10)
        assert a.tobytes() == b.tobytes()

    @pytest.mark.parametrize("lo,hi", [(0.0, 1.0), (-1.0, 1.0), (2.0, 1.0)])
    def test_rejects_bad_range(self, lo, hi):
        with pytest.raises(ValueError):
            tc.random_spd(np.random.default_rng(0), lo, hi)
