import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from conftest import random_sample
from metricdcov import (
    CostCapExceeded,
    DiscreteJointDistribution,
    PairedSample,
    brute_force_dcov,
    dcov,
    delta_matrix,
    discrete,
    distance_matrix,
    double_center,
    euclidean,
    hilbert_l2,
    vstat,
)
from metricdcov.core import ATOM_THRESHOLD, centered_matrices, dcov_from_delta, kernel_f, kernel_h

# expected values below were produced by the loop oracles in oracles.py
EUCLID_XS = [0.0, 1.0, 3.0, 7.0]
EUCLID_YS = [2.0, -1.0, 0.5, 4.0]
EUCLID_DCOV = 279 / 128          # 2.1796875
EUCLID_D = (2.875, 2.0625)
DISC_XS = [0, 1, 1, 2, 0]
DISC_YS = [1, 1, 0, 0, 1]
DISC_DCOV = 52 / 625             # 0.0832
DISC_D = (0.64, 0.48)

reals = st.floats(-100, 100, allow_nan=False)


def samples(min_n=1, max_n=12):
    @st.composite
    def build(draw):
        n = draw(st.integers(min_n, max_n))
        xs = draw(arrays(np.float64, (n, 2), elements=reals))
        ys = draw(arrays(np.float64, n, elements=reals))
        beta = draw(st.sampled_from([0.5, 1.0, 1.5, 2.0]))
        return PairedSample(xs, ys, euclidean(2, beta), euclidean(1, beta))
    return build()


class TestPairedSample:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            PairedSample([0.0, 1.0], [0.0], euclidean(1), euclidean(1))

    def test_empty(self):
        with pytest.raises(ValueError):
            PairedSample([], [], discrete(2), discrete(2))

    def test_take(self):
        s = PairedSample([0.0, 1.0, 2.0], [0, 1, 1], euclidean(1), discrete(2))
        t = s.take([2, 0], [1, 1])
        assert t.xs.ravel().tolist() == [2.0, 0.0] and t.ys.tolist() == [1, 1]


class TestMatrices:
    def test_distance_matrix_examples(self):
        assert distance_matrix([0.0, 3.0, 4.0], euclidean(1)).values.tolist() == \
            [[0, 3, 4], [3, 0, 1], [4, 1, 0]]
        assert distance_matrix([5.0], euclidean(1)).values.tolist() == [[0.0]]
        sp = discrete(["a", "b"])
        assert distance_matrix(sp.encode(["a", "b", "a"]), sp).values.tolist() == \
            [[0, 1, 0], [1, 0, 1], [0, 1, 0]]
        with pytest.raises(ValueError):
            distance_matrix([], euclidean(1))

    def test_double_center_examples(self):
        c = double_center(np.array([[0.0, 2.0], [2.0, 0.0]]))
        assert c.values.tolist() == [[-1, 1], [1, -1]]
        assert c.row_means.tolist() == [1, 1] and c.grand_mean == 1
        c = double_center(np.zeros((1, 1)))
        assert c.values.tolist() == [[0.0]] and c.grand_mean == 0

    def test_double_center_constant(self):
        c = double_center(np.full((3, 3), 5.0) - 5.0 * np.eye(3))
        assert c.grand_mean == pytest.approx(10 / 3)
        assert np.abs(c.values.sum(axis=1)).max() < 1e-12

    def test_delta_examples(self):
        a = double_center(np.array([[0.0, 2.0], [2.0, 0.0]]))
        assert delta_matrix(a, a).values.tolist() == [[1, 1], [1, 1]]
        zero = double_center(np.zeros((2, 2)))
        assert np.all(delta_matrix(a, zero).values == 0)
        with pytest.raises(ValueError):
            delta_matrix(a, double_center(np.zeros((3, 3))))

    def test_delta_psd_small(self, rng):
        for _ in range(20):
            s = random_sample(rng, "euclidean", 4)
            w = np.linalg.eigvalsh(delta_matrix(*centered_matrices(s)).values)
            assert w.min() >= -1e-8 * w.max()

    @given(samples())
    def test_row_sums_vanish(self, s):
        for c in centered_matrices(s):
            scale = max(1.0, np.abs(c.values).max())
            assert np.abs(c.values.sum(axis=1)).max() <= 1e-10 * c.n * scale
            assert np.array_equal(c.values, c.values.T)
            assert c.grand_mean >= 0


class TestDcov:
    def test_worked_example(self, worked_pair):
        est = dcov(worked_pair)
        assert est.dcov == 1.0 and est.statistic == 2.0
        assert est.normalized == 1.0

    @given(st.floats(0.01, 100), st.floats(0.01, 100))
    def test_two_point_closed_form(self, d, e):
        s = PairedSample([0.0, d], [0.0, e], euclidean(1), euclidean(1))
        assert dcov(s).dcov == pytest.approx(d * e / 4, rel=1e-12)

    def test_constant_y(self, rng):
        s = PairedSample(rng.normal(size=6), np.ones(6), euclidean(1), euclidean(1))
        est = dcov(s)
        assert est.dcov == 0 and est.normalized is None and est.q_statistic is None

    def test_single_point(self):
        est = dcov(PairedSample([1.0], [2.0], euclidean(1), euclidean(1)))
        assert est.dcov == 0 and est.normalized is None

    def test_frozen_euclidean(self):
        est = dcov(PairedSample(EUCLID_XS, EUCLID_YS, euclidean(1), euclidean(1)))
        assert est.dcov == pytest.approx(EUCLID_DCOV, rel=1e-14)
        assert (est.d_mu_grand, est.d_nu_grand) == pytest.approx(EUCLID_D, rel=1e-14)

    def test_frozen_discrete(self):
        est = dcov(PairedSample(DISC_XS, DISC_YS, discrete(3), discrete(2)))
        assert est.dcov == pytest.approx(DISC_DCOV, rel=1e-14)
        assert (est.d_mu_grand, est.d_nu_grand) == pytest.approx(DISC_D, rel=1e-14)

    def test_against_loop_oracle(self, rng):
        s = random_sample(rng, "euclidean", 9, beta=1.5)
        dx = s.space_x.pairwise(s.xs).tolist()
        dy = s.space_y.pairwise(s.ys).tolist()
        expected, bx, by = oracles.dcov(dx, dy)
        est = dcov(s)
        assert est.dcov == pytest.approx(expected, rel=1e-12)
        assert est.d_mu_grand == pytest.approx(bx, rel=1e-12)

    def test_to_dict_keys(self, worked_pair):
        assert set(dcov(worked_pair).to_dict()) == {
            "n", "dcov", "D_mu", "D_nu", "normalized", "beta_x", "beta_y"}

    @given(samples())
    def test_equals_delta_sum(self, s):
        a, b = centered_matrices(s)
        delta = delta_matrix(a, b)
        assert dcov(s).dcov == math.fsum(delta.values.ravel().tolist()) / s.n**2
        assert dcov(s).dcov == dcov_from_delta(delta)

    @given(samples(), st.randoms(use_true_random=False))
    def test_joint_permutation_exact(self, s, r):
        perm = list(range(s.n))
        r.shuffle(perm)
        assert dcov(s.take(perm)).dcov == dcov(s).dcov

    @given(samples(min_n=2))
    def test_nonnegative(self, s):
        est = dcov(s)
        assert est.dcov >= -1e-10 * est.d_mu_grand * est.d_nu_grand

    @given(samples(min_n=2), st.floats(0.1, 10))
    def test_scaling(self, s, scale):
        # scaling all x-distances by s scales dcov by s; use beta = 1 points scaled by s
        s1 = PairedSample(s.xs, s.ys, euclidean(2), s.space_y)
        s2 = PairedSample(s.xs * scale, s.ys, euclidean(2), s.space_y)
        assert dcov(s2).dcov == pytest.approx(scale * dcov(s1).dcov, rel=1e-9, abs=1e-9)

    def test_scaling_exact_power_of_two(self, rng):
        s = random_sample(rng, "euclidean", 10)
        s2 = PairedSample(s.xs * 4.0, s.ys, s.space_x, s.space_y)
        assert dcov(s2).dcov == 4.0 * dcov(s).dcov

    def test_relabel_discrete(self, rng):
        xs, ys = rng.integers(4, size=30), rng.integers(3, size=30)
        relabel = np.array([2, 0, 3, 1])
        a = dcov(PairedSample(xs, ys, discrete(4), discrete(3))).dcov
        b = dcov(PairedSample(relabel[xs], ys, discrete(4), discrete(3))).dcov
        assert a == b

    def test_atoms_path_matches_matrix(self, rng):
        for beta in (0.5, 1.0, 2.0):
            s = random_sample(rng, "discrete", 400, beta=beta)
            m, a = dcov(s, "matrix"), dcov(s, "atoms")
            assert a.dcov == pytest.approx(m.dcov, rel=1e-10, abs=1e-15)
            assert a.d_mu_grand == pytest.approx(m.d_mu_grand, rel=1e-12)

    def test_auto_selects_atoms(self, rng):
        s = random_sample(rng, "discrete", ATOM_THRESHOLD + 1)
        assert dcov(s).dcov == dcov(s, "atoms").dcov

    def test_atoms_rejects_vectors(self, worked_pair):
        with pytest.raises(ValueError):
            dcov(worked_pair, "atoms")
        with pytest.raises(ValueError):
            dcov(worked_pair, "fast")


class TestBruteForce:
    def test_examples(self, worked_pair):
        assert brute_force_dcov(PairedSample([1.0], [2.0], euclidean(1), euclidean(1))) == 0
        assert brute_force_dcov(worked_pair) == pytest.approx(1.0, rel=1e-15)

    def test_frozen_and_loop_oracle(self):
        s = PairedSample(EUCLID_XS, EUCLID_YS, euclidean(1), euclidean(1))
        assert brute_force_dcov(s) == pytest.approx(EUCLID_DCOV, rel=1e-12)
        s = PairedSample(DISC_XS, DISC_YS, discrete(3), discrete(2))
        assert brute_force_dcov(s) == pytest.approx(DISC_DCOV, rel=1e-12)

    def test_kernel_h_matches(self, rng):
        s = random_sample(rng, "euclidean", 6)
        zs = [s.point(i) for i in (0, 1, 2, 3, 4, 5)]
        dx = s.space_x.pairwise(s.xs)
        dy = s.space_y.pairwise(s.ys)
        fx = dx[0, 1] - dx[0, 2] - dx[1, 3] + dx[2, 3]
        fy = dy[0, 1] - dy[0, 4] - dy[1, 5] + dy[4, 5]
        assert kernel_h(zs, s.space_x, s.space_y) == pytest.approx(fx * fy, rel=1e-12)

    def test_cap(self, rng):
        with pytest.raises(CostCapExceeded, match="cap"):
            brute_force_dcov(random_sample(rng, "euclidean", 9))

    @pytest.mark.parametrize("kind", ["euclidean", "discrete", "hilbert_l2"])
    def test_matches_dcov(self, rng, kind):
        for n in range(1, 7):
            s = random_sample(rng, kind, n, beta=1.5)
            a, b = dcov(s).dcov, brute_force_dcov(s)
            assert abs(a - b) <= 1e-10 * max(abs(a), 1e-12)


class TestVstat:
    def test_indicator_mean(self):
        s = PairedSample([0] * 3 + [1] * 7, [0] * 10, discrete(["a", "b"]), discrete(1))
        assert vstat(lambda z: float(z[0] == 0), s, 1) == pytest.approx(0.3)

    def test_delta_lookup(self, rng):
        s = random_sample(rng, "euclidean", 15)
        delta = delta_matrix(*centered_matrices(s)).values
        assert vstat(lambda i, j: delta[i, j], s, 2, on_indices=True) == dcov(s).dcov

    def test_constant(self, rng):
        s = random_sample(rng, "discrete", 5)
        assert vstat(lambda a, b, c: 2.5, s, 3) == 2.5

    def test_cap(self, rng):
        s = random_sample(rng, "discrete", 100)
        with pytest.raises(CostCapExceeded):
            vstat(lambda *z: 0.0, s, 5)


class TestDiscreteJoint:
    def test_validation(self):
        with pytest.raises(ValueError):
            DiscreteJointDistribution([0, 1], [0, 1], [0.5, 0.6], discrete(2), discrete(2))

    def test_product_marginals(self):
        th = DiscreteJointDistribution.product([0, 1], [0.3, 0.7], [0, 1, 2], [0.2, 0.3, 0.5],
                                               discrete(2), discrete(3))
        assert th.size == 6 and th.marginal_sizes() == (2, 3)
        assert th.probs.sum() == pytest.approx(1.0)


class TestKernelBounds:
    """Bounds on ``f = d12 - d13 - d24 + d34`` that hold for every beta in (0, 2].

    On a negative-type space ``f = -2 <phi1 - phi4, phi2 - phi3>``, hence
    ``|f| <= 2 sqrt(d14 d23)``; for beta <= 1 the triangle inequality also
    gives ``|f| <= 2 min(d23, d14)``.
    """

    @given(arrays(np.float64, (4, 2), elements=reals), st.floats(0.1, 2.0))
    def test_cauchy_schwarz_bound(self, pts, beta):
        d = euclidean(2, beta).pairwise(pts)
        f = kernel_f(d)[0, 1, 2, 3]
        scale = 1e-9 * max(1.0, d.max())
        assert abs(f) <= 2 * math.sqrt(d[0, 3] * d[1, 2]) + scale

    @given(arrays(np.float64, (4, 2), elements=reals), st.floats(0.1, 1.0))
    def test_metric_bound(self, pts, beta):
        d = euclidean(2, beta).pairwise(pts)
        f = kernel_f(d)[0, 1, 2, 3]
        assert abs(f) <= 2 * min(d[1, 2], d[0, 3]) + 1e-9 * max(1.0, d.max())

    def test_four_d23_fails_above_one(self):
        # beta = 2 on the line: f = -2 (x1 - x4)(x2 - x3)
        d = euclidean(1, 2).pairwise([3.0, 0.0, 1.0, 0.0])
        f = kernel_f(d)[0, 1, 2, 3]
        assert abs(f) == 6.0 and 4 * d[1, 2] == 4.0
