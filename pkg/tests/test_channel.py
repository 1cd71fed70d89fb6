import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from pairdiff import channel as chm
from pairdiff import divergence as dv
from pairdiff import graphlab as gl
from pairdiff.errors import BadParam, BadShape, DegenerateChannel


class TestFamilies:
    def test_family_needs_two_rows(self):
        with pytest.raises(DegenerateChannel):
            chm.ChannelFamily(np.array([[1.0]]), "x")

    def test_outlier_pure_noise(self):
        assert np.allclose(chm.outlier_channel(4, 0.0).rows, 0.25)

    def test_outlier_noiseless(self):
        assert np.array_equal(chm.outlier_channel(3, 1.0).rows, np.eye(3))

    def test_outlier_binary_half(self):
        assert np.allclose(chm.outlier_channel(2, 0.5).rows, [[0.75, 0.25], [0.25, 0.75]])

    @pytest.mark.parametrize("M,p", [(1, 0.5), (3, -0.1), (3, 1.1)])
    def test_outlier_bad(self, M, p):
        with pytest.raises(BadParam):
            chm.outlier_channel(M, p)

    def test_sbm_rows(self):
        fam = chm.sbm_channel(4, 1, 100)
        p0 = 4 * math.log(100) / 100
        assert fam.rows[0].tolist() == pytest.approx([1 - p0, p0])
        assert fam.M == 2 and fam.output_size == 2

    def test_sbm_equal_rates(self):
        prof = dv.divergence_profile(chm.sbm_channel(3, 3, 50))
        assert prof.kl_min == 0 and prof.hel_half == 0

    def test_sbm_a_zero(self):
        assert chm.sbm_channel(0, 2, 40).rows[0].tolist() == [1.0, 0.0]

    def test_sbm_out_of_range(self):
        with pytest.raises(BadParam):
            chm.sbm_channel(16, 1, 14)

    @given(st.floats(0, 5), st.floats(0.01, 5), st.integers(20, 500))
    def test_sbm_kl_below_chi_square(self, a, b, n):
        fam = chm.sbm_channel(a, b, n)
        assert dv.kl(fam.rows[0], fam.rows[1]) <= dv.chi_square(fam.rows[0], fam.rows[1]) + 1e-15

    def test_haplotype_single_read(self):
        assert np.allclose(chm.haplotype_channel(0.2, 1).rows, [[0.8, 0.2], [0.2, 0.8]])

    def test_haplotype_half_flip(self):
        fam = chm.haplotype_channel(0.5, 4)
        assert np.allclose(fam.rows[0], fam.rows[1])
        assert dv.divergence_profile(fam).hel_half == pytest.approx(0.0, abs=1e-15)

    def test_haplotype_three_reads(self):
        # 2 - 2 * (2 sqrt(0.09))^3 = 1.568
        assert dv.hellinger_alpha(*chm.haplotype_channel(0.1, 3).rows, 0.5) == pytest.approx(1.568, abs=1e-12)

    @settings(max_examples=100)
    @given(st.floats(0.01, 0.49), st.integers(1, 40))
    def test_haplotype_renyi_additive(self, theta, L):
        multi = dv.renyi(*chm.haplotype_channel(theta, L).rows, 0.5)
        single = dv.renyi(*chm.haplotype_channel(theta, 1).rows, 0.5)
        assert multi == pytest.approx(L * single, abs=1e-10, rel=1e-10)

    @pytest.mark.parametrize("theta,L", [(-0.1, 2), (0.6, 2), (0.2, 0), (0.2, 1.5)])
    def test_haplotype_bad(self, theta, L):
        with pytest.raises(BadParam):
            chm.haplotype_channel(theta, L)

    def test_matrix_round_trip(self):
        fam = chm.outlier_channel(3, 0.3)
        assert chm.parse_channel_matrix(fam.to_matrix_text()) == fam

    def test_bad_matrix(self):
        with pytest.raises(BadParam):
            chm.parse_channel_matrix("2 2\n0.5 0.6\n0.5 0.5\n")


class TestRingChannels:
    def test_reads_rounding(self):
        assert chm.reads_for_distance(10, 0.25) == 3
        assert chm.reads_for_distance(10, 0.01) == 1

    def test_constant_profile(self):
        ecm = chm.edge_channels_for_ring(8, 2, True, 0.1, 6, {1: 1.0, 2: 1.0})
        fams, _ = ecm.families_for(gl.gen_ring(8, 2))
        assert fams == [chm.haplotype_channel(0.1, 6)]

    def test_distance_profile(self):
        g = gl.gen_ring(8, 2)
        ecm = chm.edge_channels_for_ring(8, 2, True, 0.1, 10, {1: 1.0, 2: 0.5})
        for i, j in g.edges:
            d = gl.ring_distance(i, j, 8, True)
            assert ecm.family(i, j).output_size - 1 == (10 if d == 1 else 5)

    def test_missing_distance(self):
        with pytest.raises(BadParam):
            chm.edge_channels_for_ring(8, 2, True, 0.1, 10, {1: 1.0})

    def test_profile_constant_factor(self):
        theta, L = 0.2, 12
        g = gl.gen_ring(10, 3)
        varied = chm.edge_channels_for_ring(10, 3, True, theta, L, {1: 1.0, 2: 0.5, 3: 0.25})
        flat = chm.edge_channels_for_ring(10, 3, True, theta, L, {1: 1.0, 2: 1.0, 3: 1.0})
        h_var = min(dv.divergence_profile(f).hel_half for f in varied.families_for(g)[0])
        h_flat = min(dv.divergence_profile(f).hel_half for f in flat.families_for(g)[0])
        assert 0.25 / 2 <= h_var / h_flat <= 1.0

    def test_mixed_alphabet_sizes_share_M(self):
        from pairdiff.errors import DomainError

        with pytest.raises(DomainError):
            chm.EdgeChannelMap(chm.outlier_channel(2, 0.5), {(0, 1): chm.outlier_channel(3, 0.5)})


class TestSampling:
    def test_noiseless(self):
        g = gl.gen_complete(6)
        x = np.array([0, 2, 1, 4, 3, 0])
        obs = chm.sample_observations(g, chm.outlier_channel(5, 1.0), x, seed=3)
        assert np.array_equal(obs.y, chm.edge_differences(g, x, 5))
        for (i, j), s in obs.as_dict().items():
            assert i > j and s == (x[i] - x[j]) % 5

    def test_uniform_chi_square(self):
        g = gl.gen_complete(120)
        M = 4
        obs = chm.sample_observations(g, chm.outlier_channel(M, 0.0), np.zeros(120, int), seed=9)
        counts = np.bincount(obs.y, minlength=M)
        chi2 = stats.chisquare(counts).statistic
        # 4 sigma on a chi-square with M-1 degrees of freedom
        assert chi2 <= (M - 1) + 4 * math.sqrt(2 * (M - 1))

    def test_offset_invariance(self):
        g = gl.gen_ring(9, 2)
        ch = chm.outlier_channel(3, 0.4)
        x = np.array([0, 1, 2, 0, 1, 1, 2, 0, 0])
        a = chm.sample_observations(g, ch, x, seed=4)
        b = chm.sample_observations(g, ch, (x + 2) % 3, seed=4)
        assert np.array_equal(a.y, b.y)

    def test_deterministic(self):
        g = gl.gen_complete(10)
        ch = chm.outlier_channel(3, 0.3)
        x = np.arange(10) % 3
        a = chm.sample_observations(g, ch, x, seed=1, stream=("t", 0))
        assert np.array_equal(a.y, chm.sample_observations(g, ch, x, seed=1, stream=("t", 0)).y)
        assert not np.array_equal(a.y, chm.sample_observations(g, ch, x, seed=1, stream=("t", 1)).y)

    def test_row_frequencies(self):
        g = gl.gen_complete(80)
        fam = chm.ChannelFamily(np.array([[0.6, 0.3, 0.1], [0.1, 0.2, 0.7]]), "t")
        x = np.zeros(80, dtype=int)
        x[40:] = 1
        obs = chm.sample_observations(g, fam, x, seed=5)
        diff = chm.edge_differences(g, x, 2)
        for d in (0, 1):
            ys = obs.y[diff == d]
            freq = np.bincount(ys, minlength=3) / len(ys)
            sd = np.sqrt(fam.rows[d] * (1 - fam.rows[d]) / len(ys))
            assert np.all(np.abs(freq - fam.rows[d]) <= 4 * sd)

    def test_never_emits_zero_probability_symbol(self):
        g = gl.gen_complete(40)
        fam = chm.ChannelFamily(np.array([[0.5, 0.5, 0.0], [0.0, 0.3, 0.7]]), "t")
        for s in range(5):
            obs = chm.sample_observations(g, fam, np.arange(40) % 2, seed=s)
            diff = chm.edge_differences(g, np.arange(40) % 2, 2)
            assert np.all(fam.rows[diff, obs.y] > 0)

    def test_bad_input(self):
        g = gl.gen_complete(4)
        with pytest.raises(BadShape):
            chm.sample_observations(g, chm.outlier_channel(2, 0.5), [0, 1, 0])
        with pytest.raises(BadParam):
            chm.sample_observations(g, chm.outlier_channel(2, 0.5), [0, 1, 0, 2])

    def test_csv_round_trip(self):
        g = gl.gen_ring(7, 2)
        obs = chm.sample_observations(g, chm.outlier_channel(3, 0.5), np.arange(7) % 3, seed=2)
        text = obs.to_csv()
        assert text.splitlines()[0] == "i,j,y"
        assert all(int(r.split(",")[0]) > int(r.split(",")[1]) for r in text.splitlines()[1:])
        assert np.array_equal(chm.Observations.from_csv(g, text).y, obs.y)

    def test_csv_missing_edge(self):
        g = gl.gen_ring(5, 1)
        with pytest.raises(BadShape):
            chm.Observations.from_csv(g, "i,j,y\n1,0,1\n")
