import math

import numpy as np
import pytest

from orbitlab.lspace import Ball, CoefVec, Side, dist, norm
from orbitlab.orbits import (
    HittingSet,
    IntPolynomial,
    ap_k_members,
    density_stats,
    find_ap,
    find_poly_pattern,
    hitting_set,
    mr_witness_search,
    recurrence_scan,
)
from orbitlab.seqcore import ScalingSeq, rotate_seq
from orbitlab.shiftops import ShiftOp, WeightSeq, scaled_orbit_point

B = ShiftOp(Side.UNILATERAL, WeightSeq.constant(1.0))
TWO_B = ShiftOp(Side.UNILATERAL, WeightSeq.constant(1.0), 2.0)
ONE = ScalingSeq.constant(1.0)


def e(k, side=Side.UNILATERAL):
    return CoefVec.basis(side, k)


def brute_force_ap(members: set, n_max: int, m: int, tau: int, K: int):
    for k in range(1, K + 1):
        for a in sorted(members):
            if a + m * tau * k > n_max:
                break
            if all(a + j * tau * k in members for j in range(m + 1)):
                return a, k
    return None


class TestHittingSet:
    def test_zero_vector_ball_at_origin(self):
        h = hitting_set(CoefVec.zero(Side.UNILATERAL), ONE, B,
                        Ball(CoefVec.zero(Side.UNILATERAL), 1.0), 50)
        assert np.array_equal(h.indices, np.arange(1, 51))

    def test_zero_vector_off_center_ball(self):
        h = hitting_set(CoefVec.zero(Side.UNILATERAL), ONE, B, Ball(e(1), 0.5), 50)
        assert len(h) == 0

    def test_every_hit_reverifies(self):
        x = CoefVec.from_pairs(Side.UNILATERAL, [(i, 2.0 ** -i) for i in range(1, 30)])
        ball = Ball(e(1), 0.75)
        h = hitting_set(x, ONE, TWO_B, ball, 100)
        assert len(h) > 0
        from orbitlab.lspace import in_ball

        for n in h.indices:
            assert in_ball(scaled_orbit_point(ONE, TWO_B, int(n), x), ball)
        # and the complement misses
        comp = np.setdiff1d(np.arange(1, 101), h.indices)
        for n in comp[:20]:
            assert not in_ball(scaled_orbit_point(ONE, TWO_B, int(n), x), ball)

    def test_monotone_in_radius(self):
        x = CoefVec.from_pairs(Side.UNILATERAL, [(i, 2.0 ** -i) for i in range(1, 30)])
        h_small = hitting_set(x, ONE, TWO_B, Ball(e(1), 0.3), 200)
        h_big = hitting_set(x, ONE, TWO_B, Ball(e(1), 0.8), 200)
        assert set(h_small.indices) <= set(h_big.indices)

    def test_phase_rotation_invariance(self):
        # rotating the scaling and the center by the same constant phase
        # leaves the hitting set unchanged (testable form of the reduction
        # to positive scalings)
        x = CoefVec.from_pairs(Side.UNILATERAL, [(i, 2.0 ** -i) for i in range(1, 25)])
        theta = 1.234
        lam_rot = rotate_seq(ONE, theta)
        h_plain = hitting_set(x, ONE, TWO_B, Ball(e(1), 0.4), 150)
        h_rot = hitting_set(x, lam_rot, TWO_B, Ball(e(1).rotate(theta), 0.4), 150)
        assert np.array_equal(h_plain.indices, h_rot.indices)

    def test_overflow_prefilter_skips_blowup(self):
        # entries scale like 4^n: far beyond float range, still a clean miss
        x = e(1)
        lam = ScalingSeq.power_of_w(2.0)
        h = hitting_set(x, lam, B, Ball(e(1), 0.5), 2000)
        assert len(h) == 0

    def test_bilateral_scan(self):
        Tb = ShiftOp(Side.BILATERAL, WeightSeq.constant(1.0))
        x = CoefVec.from_pairs(Side.BILATERAL, [(5, 1.0)])
        y = CoefVec.from_pairs(Side.BILATERAL, [(0, 1.0)])
        h = hitting_set(x, ONE, Tb, Ball(y, 0.5), 20)
        assert list(h.indices) == [5]


class TestDensityStats:
    def test_evens(self):
        h = HittingSet(np.arange(2, 10**5 + 1, 2), 10**5)
        ds = density_stats(h, 100)
        assert 0.49 <= ds.lower_est <= ds.upper_est <= 0.51

    def test_dyadic_blocks_density_one(self):
        # union of [2^{k-1}, 2^k - 2]: misses only 2^k - 1 per block
        n_max = 2**20
        omit = {2**k - 1 for k in range(1, 21)} | {1}
        idx = np.array([n for n in range(2, n_max + 1) if n not in omit][: n_max],
                       dtype=np.int64)
        ds = density_stats(HittingSet(idx, n_max))
        assert ds.lower_est >= 0.99

    def test_powers_of_two_sparse(self):
        h = HittingSet(2 ** np.arange(0, 20), 10**6)
        ds = density_stats(h, 10**5)
        assert ds.upper_est <= 0.001

    def test_bounds_ordering(self):
        rng = np.random.default_rng(3)
        idx = np.flatnonzero(rng.random(5000) < 0.3) + 1
        ds = density_stats(HittingSet(idx.astype(np.int64), 5000))
        assert 0.0 <= ds.lower_est <= ds.upper_est <= 1.0

    def test_union_superadditive(self):
        a = np.arange(3, 3001, 3, dtype=np.int64)
        b = np.arange(5, 3001, 15, dtype=np.int64)  # disjoint from a? no: 15 overlaps
        b = b[~np.isin(b, a)]
        u = np.union1d(a, b)
        ds_a = density_stats(HittingSet(a, 3000))
        ds_u = density_stats(HittingSet(u, 3000))
        assert ds_u.lower_est >= ds_a.lower_est - 1e-12

    def test_window_preconditions(self):
        h = HittingSet(np.arange(1, 101), 100)
        with pytest.raises(ValueError):
            density_stats(h, 5)
        with pytest.raises(ValueError):
            density_stats(h, 50)


class TestFindAP:
    def test_full_interval(self):
        h = HittingSet(np.arange(1, 101), 100)
        w = find_ap(h, 3, 1)
        assert (w.a, w.k) == (1, 1)

    def test_evens(self):
        h = HittingSet(np.arange(2, 1001, 2), 1000)
        w = find_ap(h, 4, 1)
        assert (w.a, w.k) == brute_force_ap(set(h.indices), 1000, 4, 1, 100)[::-1][::-1]
        assert (w.a, w.k) == (2, 2)

    def test_powers_of_two_no_triple(self):
        # 2*2^j = 2^i + 2^l forces i = j = l: no 3-term progression exists
        h = HittingSet(2 ** np.arange(1, 21), 2**20)
        pairs = set(h.indices)
        for a in pairs:
            for b in pairs:
                if b > a:
                    assert 2 * b - a not in pairs or 2 * b - a == b
        assert find_ap(h, 2, 1) is None

    def test_matches_brute_force_random_suite(self):
        rng = np.random.default_rng(123)
        for trial in range(100):
            density = rng.uniform(0.1, 0.9)
            idx = np.flatnonzero(rng.random(2000) < density) + 1
            if idx.size == 0:
                continue
            h = HittingSet(idx.astype(np.int64), 2000)
            members = set(h.indices)
            m = int(rng.integers(1, 6))
            tau = int(rng.integers(1, 3))
            K = max(1, 2000 // (m * tau * 4))
            got = find_ap(h, m, tau, K)
            want = brute_force_ap(members, 2000, m, tau, K)
            if want is None:
                assert got is None
            else:
                assert (got.a, got.k) == want
                assert got.verify(h)

    def test_witness_reverifies(self):
        h = HittingSet(np.arange(7, 500, 7, dtype=np.int64), 500)
        w = find_ap(h, 5, 1)
        assert w.verify(h)
        assert not w.verify(HittingSet(np.array([1, 2, 3]), 500))


class TestApKMembers:
    def test_full_interval(self):
        h = HittingSet(np.arange(1, 21), 20)
        got = ap_k_members(h, 5, 3, 1)
        assert list(got) == [1, 2, 3, 4, 5]

    def test_evens_consecutive_empty(self):
        h = HittingSet(np.arange(2, 1001, 2), 1000)
        assert ap_k_members(h, 1, 1, 1).size == 0

    def test_consistent_with_find_ap(self):
        rng = np.random.default_rng(9)
        idx = np.flatnonzero(rng.random(800) < 0.5) + 1
        h = HittingSet(idx.astype(np.int64), 800)
        w = find_ap(h, 3, 2)
        if w is not None:
            members = ap_k_members(h, w.k, 3, 2)
            assert w.a == members[0]


class TestPolyPattern:
    def test_linear_reduces_to_ap(self):
        rng = np.random.default_rng(31)
        idx = np.flatnonzero(rng.random(500) < 0.4) + 1
        h = HittingSet(idx.astype(np.int64), 500)
        p = IntPolynomial.from_power_coeffs([1])  # p(k) = k
        got = find_poly_pattern(h, [p], K=100)
        want = find_ap(h, 1, 1, K=100)
        if want is None:
            assert got is None
        else:
            assert got == (want.a, want.k)

    def test_squares_on_full_set(self):
        h = HittingSet(np.arange(1, 10001), 10**4)
        p1 = IntPolynomial.from_power_coeffs([0, 1])  # k^2
        p2 = IntPolynomial.from_power_coeffs([0, 2])  # 2k^2
        assert find_poly_pattern(h, [p1, p2], K=50) == (1, 1)

    def test_squares_on_multiples_of_four(self):
        h = HittingSet(np.arange(4, 10001, 4, dtype=np.int64), 10**4)
        p = IntPolynomial.from_power_coeffs([0, 1])
        # brute force oracle
        members = set(h.indices)
        want = None
        for k in range(1, 51):
            off = k * k
            cands = [a for a in sorted(members) if a + off <= 10**4 and a + off in members]
            if cands:
                want = (cands[0], k)
                break
        assert find_poly_pattern(h, [p], K=50) == want == (4, 2)

    def test_binomial_basis_integrality(self):
        p = IntPolynomial((3, -2, 5))
        assert p.eval(0) == 0
        for k in range(-5, 20):
            assert isinstance(p.eval(k), int)
        q = IntPolynomial.from_power_coeffs([0, 0, 1])  # k^3
        for k in range(10):
            assert q.eval(k) == k**3

    def test_negative_value_raises(self):
        h = HittingSet(np.arange(1, 100), 99)
        p = IntPolynomial.from_power_coeffs([-1])  # p(k) = -k
        with pytest.raises(ValueError):
            find_poly_pattern(h, [p], K=5)


@pytest.fixture(scope="module")
def built():
    from orbitlab.fhbuilder import build

    return build(ONE, TWO_B, [(e(1), 1e-3)], 10**4, g=16)


class TestMRWitness:
    def test_pipeline_finds_witness(self, built):
        out = mr_witness_search(built.x, ONE, TWO_B, Ball(e(1), 0.01), 3, 1, 10**4)
        assert out
        w = out.witness
        assert w.verify(TWO_B)
        for j in range(4):
            assert dist(TWO_B.power_apply(j * w.ell, w.u), e(1)) < 0.01

    def test_decaying_operator_finds_nothing(self):
        T = ShiftOp(Side.UNILATERAL, WeightSeq.constant(1.0), 0.9)
        x = CoefVec.from_pairs(Side.UNILATERAL, [(i, 1.0) for i in range(1, 20)])
        out = mr_witness_search(x, ONE, T, Ball(e(1), 0.01), 3, 1, 2000)
        assert not out
        assert out.diagnostics["hits"] == 0

    def test_order_zero_returns_hit_point(self, built):
        out = mr_witness_search(built.x, ONE, TWO_B, Ball(e(1), 0.01), 0, 1, 10**4)
        assert out and out.witness.m == 0
        assert dist(out.witness.u, e(1)) < 0.01

    def test_nonconstant_scaling_walks_to_large_start(self):
        # lam_n = (n+2)/(n+1) has ratio limit 1 but nonzero defects: early
        # progression starts violate the eps/2 ratio estimate and the walk
        # must move to larger a before the distances close
        from orbitlab.fhbuilder import build

        lam = ScalingSeq.rational_poly([2.0, 1.0], [1.0, 1.0])  # (n+2)/(n+1)
        v = build(lam, TWO_B, [(e(1), 1e-3)], 10**4, g=16)
        out = mr_witness_search(v.x, lam, TWO_B, Ball(e(1), 0.01), 3, 1, 10**4)
        assert out
        w = out.witness
        first_start = ap_k_members(
            hitting_set(v.x, lam, TWO_B, Ball(e(1), 0.005), 10**4), w.k, 3, 1
        )[0]
        assert w.a > first_start  # early members were rejected
        assert w.verify(TWO_B)
        # the accepted start satisfies the ratio estimate that drove the walk
        ell = w.ell
        for j in range(1, 4):
            ratio = ((w.a + 2) / (w.a + 1)) * ((w.a + j * ell + 1) / (w.a + j * ell + 2))
            assert abs(ratio - 1.0) < 0.005 / 0.9  # |u_j| is close to 1

    def test_bad_scaling_rejected(self, built):
        with pytest.raises(ValueError):
            mr_witness_search(
                built.x, ScalingSeq.factorial(), B, Ball(e(1), 0.01), 2, 1, 1000
            )


class TestRecurrenceScan:
    def test_zero_vector_always_returns(self):
        z = CoefVec.zero(Side.UNILATERAL)
        assert list(recurrence_scan(B, z, 0.5, 10)) == list(range(1, 11))

    def test_finite_support_orbit_dies(self):
        x = CoefVec.from_pairs(Side.UNILATERAL, [(1, 1.0), (2, 1.0)])
        assert recurrence_scan(B, x, 0.9, 50).size == 0

    def test_upper_density_return_predicate(self):
        # recurrence with positive upper density, measured as a windowed
        # predicate: return times of a rotation cover a fixed fraction of N
        import cmath

        a = cmath.exp(2j * math.pi * (math.sqrt(5) - 1) / 2)  # irrational angle
        n = np.arange(1, 10**5 + 1)
        returns = np.abs(a**n - 1.0) < 0.3
        h = HittingSet(n[returns], 10**5)
        ds = density_stats(h)
        # |a^n - 1| < 0.3 on an arc of relative length ~ 2*asin(0.15)/pi
        frac = 2 * math.asin(0.15) / math.pi
        assert ds.upper_est > 0.5 * frac
        assert ds.lower_est > 0.0

    def test_unimodular_rotation_return_times(self):
        # premultiplier exp(2 pi i / 7) on the bilateral shift: T^n e_0 has
        # distance sqrt(2) to e_0 except... shift moves support, so compare
        # against a rotation-only operator realized with a constant symbol
        # cross-check: |a^n - 1| small exactly at multiples of 7
        import cmath

        a = cmath.exp(2j * math.pi / 7)
        x = CoefVec.from_pairs(Side.HARDY, [(0, 1.0), (3, 0.5)])
        from orbitlab.symbolops import PolySymbol, apply_adjoint

        phi = PolySymbol.constant(a)
        hits = []
        v = x
        for n in range(1, 50):
            v = apply_adjoint(phi, v, 10)
            if dist(v, x) < 1e-9:
                hits.append(n)
        want = [n for n in range(1, 50) if abs(a**n - 1) * norm(x) < 1e-9]
        assert hits == want == [7, 14, 21, 28, 35, 42, 49]
