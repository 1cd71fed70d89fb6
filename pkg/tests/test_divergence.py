import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pairdiff import divergence as dv
from pairdiff.channel import outlier_channel, sbm_channel
from pairdiff.errors import (
    AbsolutelyContinuityViolated,
    AlphabetTooLarge,
    BadOrder,
    DegenerateChannel,
    InvalidPmf,
)

B = dv.Pmf.bernoulli


def pmfs(min_size=2, max_size=8):
    """Strictly positive pmfs (mutually absolutely continuous pairs)."""
    return st.integers(min_size, max_size).flatmap(
        lambda k: st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k).map(lambda v: np.array(v) / np.sum(v))
    )


def pmf_pairs(max_size=8):
    return st.integers(2, max_size).flatmap(
        lambda k: st.tuples(
            st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k),
            st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k),
        ).map(lambda t: (np.array(t[0]) / sum(t[0]), np.array(t[1]) / sum(t[1])))
    )


alphas = st.floats(0.01, 0.99)


class TestPmf:
    def test_rejects_bad_sum(self):
        with pytest.raises(InvalidPmf):
            dv.Pmf([0.5, 0.6])

    def test_tolerance_window(self):
        dv.Pmf([0.5, 0.5 + 5e-10])
        with pytest.raises(InvalidPmf):
            dv.Pmf([0.5, 0.5 + 5e-9])

    def test_rejects_negative(self):
        with pytest.raises(InvalidPmf):
            dv.Pmf([1.2, -0.2])

    def test_immutable(self):
        p = B(0.3)
        with pytest.raises(ValueError):
            p.probs[0] = 1.0


class TestKL:
    def test_identical(self):
        assert dv.kl(B(0.3), B(0.3)) == 0.0

    def test_bernoulli_half_quarter(self):
        # oracle: 0.5 ln 2 + 0.5 ln(2/3), evaluated at 30 digits
        assert dv.kl(B(0.5), B(0.25)) == pytest.approx(0.14384103622589046372, abs=1e-15)

    def test_support_violation(self):
        with pytest.raises(AbsolutelyContinuityViolated):
            dv.kl(B(0.5), dv.Pmf.point(0, 2))

    def test_zero_mass_term_ignored(self):
        assert dv.kl(dv.Pmf.point(0, 2), B(0.5)) == pytest.approx(math.log(2))


class TestHellinger:
    def test_identical(self):
        assert dv.hellinger_alpha(B(0.2), B(0.2), 0.3) == pytest.approx(0.0, abs=1e-15)

    def test_disjoint(self):
        assert dv.hellinger_alpha(dv.Pmf.point(0, 2), dv.Pmf.point(1, 2), 0.5) == 2.0

    def test_three_quarter_pair(self):
        assert dv.hellinger_alpha(B(0.75), B(0.25), 0.5) == pytest.approx(0.26794919243112270647, abs=1e-15)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 1.5])
    def test_bad_order(self, alpha):
        with pytest.raises(BadOrder):
            dv.hellinger_alpha(B(0.2), B(0.3), alpha)

    @given(pmf_pairs(), alphas)
    def test_bounded(self, pq, a):
        h = dv.hellinger_alpha(*pq, a)
        assert -1e-12 <= h <= 1 / (1 - a) + 1e-12


class TestChiSquare:
    def test_identical(self):
        assert dv.chi_square(B(0.4), B(0.4)) == 0.0

    def test_bernoulli_identity(self):
        assert dv.chi_square(B(0.5), B(0.25)) == pytest.approx(1 / 3, abs=1e-15)

    def test_point_mass_vs_fair(self):
        assert dv.chi_square(B(1.0), B(0.5)) == pytest.approx(1.0, abs=1e-15)

    @given(st.floats(0, 1), st.floats(0.01, 0.99))
    def test_bernoulli_closed_form(self, p, q):
        assert dv.chi_square(B(p), B(q)) == pytest.approx((p - q) ** 2 / (q * (1 - q)), rel=1e-10, abs=1e-14)


class TestRenyi:
    def test_identical(self):
        assert dv.renyi(B(0.6), B(0.6), 0.4) == pytest.approx(0.0, abs=1e-15)

    def test_disjoint_is_infinite(self):
        assert dv.renyi(dv.Pmf.point(0, 2), dv.Pmf.point(1, 2), 0.5) == math.inf

    def test_three_quarter_pair(self):
        assert dv.renyi(B(0.75), B(0.25), 0.5) == pytest.approx(0.28768207245178092744, abs=1e-15)

    @given(pmf_pairs(16), alphas)
    def test_matches_direct(self, pq, a):
        assert dv.renyi(*pq, a) == pytest.approx(dv.renyi_direct(*pq, a), rel=1e-12, abs=1e-12)

    @settings(max_examples=300)
    @given(pmf_pairs(16), alphas)
    def test_sandwich(self, pq, a):
        h, r, k = dv.hellinger_alpha(*pq, a), dv.renyi(*pq, a), dv.kl(*pq)
        assert h <= r + 1e-12
        assert r <= k + 1e-12


class TestFact1:
    def test_identical(self):
        res = dv.fact1_bounds(B(0.3), B(0.3))
        assert res.R == 1.0 and res.lower_ok and res.upper_ok and res.small_R_ok

    def test_half_vs_four_tenths(self):
        res = dv.fact1_bounds(B(0.5), B(0.4))
        assert res.R == pytest.approx(1.25)
        assert res.lower_ok and res.upper_ok and res.small_R_ok

    def test_large_ratio_skips_small_variant(self):
        res = dv.fact1_bounds(B(0.01), B(0.5))
        assert res.R > 4.5 and res.small_R_ok is None
        assert res.lower_ok and res.upper_ok

    def test_requires_mutual_continuity(self):
        with pytest.raises(AbsolutelyContinuityViolated):
            dv.fact1_bounds(dv.Pmf([1.0, 0.0]), B(0.5))

    @settings(max_examples=300)
    @given(pmf_pairs(8))
    def test_random_pairs(self, pq):
        res = dv.fact1_bounds(*pq)
        assert res.lower_ok and res.upper_ok
        assert res.small_R_ok in (True, None)


class TestDecoupling:
    def test_single_copy_exact(self):
        r = dv.decoupling_check(B(0.3), B(0.6), 0.4, 1)
        assert r.lhs == pytest.approx(r.rhs, abs=1e-15)

    def test_three_copies_against_enumeration(self):
        # explicit 8-outcome enumeration at 30 digits gives 0.76987271675258112111
        r = dv.decoupling_check(B(0.7), B(0.3), 0.5, 3)
        assert r.lhs == pytest.approx(0.76987271675258112111, abs=1e-12)
        assert abs(r.lhs - r.rhs) <= 1e-12

    @pytest.mark.parametrize("k", [1, 4, 8])
    def test_identical_measures(self, k):
        r = dv.decoupling_check(B(0.35), B(0.35), 0.7, k)
        assert r.lhs == pytest.approx(1.0, abs=1e-12) and r.rhs == pytest.approx(1.0, abs=1e-12)

    def test_too_large(self):
        with pytest.raises(AlphabetTooLarge):
            dv.decoupling_check(dv.Pmf([0.2] * 5), dv.Pmf([0.2] * 5), 0.5, 8)

    @given(st.floats(0, 1), st.floats(0, 1), alphas, st.integers(1, 6))
    def test_identity(self, a, b, alpha, k):
        r = dv.decoupling_check(B(a), B(b), alpha, k)
        assert abs(r.lhs - r.rhs) <= 1e-10


class TestProfile:
    def test_outlier_binary_half(self):
        prof = dv.divergence_profile(outlier_channel(2, 0.5))
        assert prof.kl_min == pytest.approx(0.5 * math.log(3), abs=1e-15)

    @pytest.mark.parametrize("M", [2, 3, 5, 17])
    def test_outlier_pure_noise(self, M):
        prof = dv.divergence_profile(outlier_channel(M, 0.0), alphas=[0.3])
        assert prof.kl_min == 0 and prof.hel_half == 0 and abs(prof.hel_min[0.3]) < 1e-12 and abs(prof.sup_alpha_term) < 1e-12

    @pytest.mark.parametrize("M", [2, 3, 5, 17])
    @pytest.mark.parametrize("p", [round(0.1 * i, 1) for i in range(10)])
    def test_outlier_closed_forms(self, M, p):
        prof = dv.divergence_profile(outlier_channel(M, p))
        assert abs(prof.kl_min - p * math.log1p(p * M / (1 - p))) <= 1e-12
        hel = 2 / M * (math.sqrt(1 - p + M * p) - math.sqrt(1 - p)) ** 2
        assert abs(prof.hel_half - hel) <= 1e-12
        if p > 0:
            assert prof.kl_min <= p * p * M / (1 - p) + 1e-12
            assert prof.hel_half >= p * p * M / (2 * (1 - p + M * p)) - 1e-12

    def test_sbm_hellinger(self):
        prof = dv.divergence_profile(sbm_channel(4, 1, 100))
        assert prof.hel_half == pytest.approx(0.051452491134177708166, abs=1e-14)

    def test_invariants(self):
        prof = dv.divergence_profile(outlier_channel(5, 0.4), alphas=[0.2, 0.7], zetas=[0.0, 0.5])
        for a, h in prof.hel_min.items():
            assert 0 <= h <= 1 / (1 - a)
            assert h <= prof.renyi_min[a] <= prof.kl_min
        assert all(1 <= m < 5 for m in prof.m_kl.values())
        assert 0.5 in prof.hel_min

    def test_sup_alpha_refinement(self):
        rows = np.array([[0.9, 0.1, 0.0], [0.05, 0.15, 0.8], [0.3, 0.4, 0.3]])
        prof = dv.divergence_profile(rows)
        dense = max(
            min(1 - np.sum(rows[l] ** a * rows[k] ** (1 - a)) for l in range(3) for k in range(3) if l != k)
            for a in np.linspace(1e-4, 1 - 1e-4, 20001)
        )
        assert prof.sup_alpha_term == pytest.approx(dense, abs=1e-7)
        assert 0 < prof.argmax_alpha < 1

    def test_degenerate(self):
        with pytest.raises(DegenerateChannel):
            dv.divergence_profile(np.array([[0.5, 0.5]]))

    def test_infinite_pairs_skipped(self):
        rows = np.array([[1.0, 0.0], [0.5, 0.5], [0.4, 0.6]])
        prof = dv.divergence_profile(rows)
        assert math.isfinite(prof.kl_min)
        assert prof.kl_min == pytest.approx(min(dv.kl(rows[1], rows[2]), dv.kl(rows[2], rows[1]), dv.kl(rows[0], rows[1])))


class TestMkl:
    @pytest.mark.parametrize("M", [2, 3, 6])
    @pytest.mark.parametrize("zeta", [0.0, 0.3, 2.0])
    def test_outlier(self, M, zeta):
        assert dv.m_kl(outlier_channel(M, 0.6), zeta) == M - 1

    def test_binary(self):
        rows = np.array([[0.8, 0.2], [0.35, 0.65]])
        assert dv.m_kl(rows, 0.0) == 1 and dv.m_kl(rows, 5.0) == 1

    def test_brute_force(self):
        rows = np.array(
            [
                [0.70, 0.10, 0.10, 0.10],
                [0.10, 0.70, 0.10, 0.10],
                [0.10, 0.10, 0.70, 0.10],
                [0.25, 0.25, 0.25, 0.25],
            ]
        )
        kl = np.array([[dv.kl(rows[i], rows[l]) for l in range(4)] for i in range(4)])
        kmin = min(kl[i, l] for i in range(4) for l in range(4) if i != l)
        for zeta in (0.0, 0.5, 3.0):
            expect = max(sum(1 for i in range(4) if i != l and kl[i, l] <= (1 + zeta) * kmin * (1 + 1e-12)) for l in range(4))
            assert dv.m_kl(rows, zeta) == expect

    def test_infinite_kl_rejected(self):
        with pytest.raises(AbsolutelyContinuityViolated):
            dv.m_kl(np.eye(2), 0.0)


class TestMatrixFormat:
    def test_round_trip(self):
        rows = outlier_channel(3, 0.37).rows
        assert np.array_equal(dv.parse_matrix(dv.format_matrix(rows)), rows)

    def test_header_mismatch(self):
        from pairdiff.errors import BadParam

        with pytest.raises(BadParam):
            dv.parse_matrix("2 2\n0.5 0.5\n")

    def test_invalid_row(self):
        with pytest.raises(InvalidPmf):
            dv.parse_matrix("2 2\n0.5 0.5\n0.7 0.7\n")
