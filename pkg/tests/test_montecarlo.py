import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pairdiff import channel as chm
from pairdiff import graphlab as gl
from pairdiff import montecarlo as mc
from pairdiff.errors import ConfigError, InfeasibleConfig, NoCrossing


def cfg(**kw):
    base = dict(
        graph_spec={"model": "complete", "n": 6},
        channel_spec={"family": "outlier", "M": 2, "p_true": 0.6},
        trials=60,
    )
    base.update(kw)
    return mc.ExperimentConfig(**base)


class TestConfig:
    def test_round_trip(self):
        c = cfg(master_seed=3)
        assert mc.ExperimentConfig.from_dict(c.to_dict()) == c

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            mc.ExperimentConfig.from_dict({**cfg().to_dict(), "colour": 1})

    def test_missing_key(self):
        with pytest.raises(ConfigError, match="channel_spec"):
            mc.ExperimentConfig.from_dict({"graph_spec": {"model": "complete", "n": 4}})

    def test_with_value(self):
        c = mc.with_value(cfg(), "channel.p_true", 0.9)
        assert c.channel_spec["p_true"] == 0.9 and cfg().channel_spec["p_true"] == 0.6
        assert mc.with_value(cfg(), "trials", 5).trials == 5
        with pytest.raises(ConfigError):
            mc.with_value(cfg(), "nothing.x", 1)

    @pytest.mark.parametrize(
        "kw",
        [
            {"trials": 0},
            {"truth_mode": "worst"},
            {"decoder": "spectral"},
            {"tie_policy": "coin"},
            {"restarts": -1},
            {"channel_spec": {"family": "outlier", "M": 2, "p_true": 1.5}},
            {"channel_spec": {"family": "sbm", "a": 16, "b": 1}, "graph_spec": {"model": "complete", "n": 14}},
            {"graph_spec": {"model": "complete", "n": 30}},
            {"graph_spec": {"model": "ring", "n": 6, "w": 3}},
            {"channel_spec": {"family": "laser"}},
        ],
    )
    def test_infeasible(self, kw):
        with pytest.raises(InfeasibleConfig):
            mc.check_feasible(cfg(**kw))

    def test_local_decoder_allows_large_n(self):
        mc.check_feasible(cfg(graph_spec={"model": "complete", "n": 30}, decoder="local"))


class TestWilson:
    def test_zero_errors(self):
        lo, hi = mc.wilson_interval(0, 100)
        assert lo == 0.0 and 0.03 < hi < 0.04

    @given(st.integers(1, 500).flatmap(lambda t: st.tuples(st.integers(0, t), st.just(t))))
    def test_contains_estimate(self, et):
        e, t = et
        lo, hi = mc.wilson_interval(e, t)
        assert 0 <= lo <= e / t <= hi <= 1

    def test_textbook_value(self):
        # 10 / 100 at 95%: (0.0552, 0.1744)
        lo, hi = mc.wilson_interval(10, 100)
        assert lo == pytest.approx(0.05523, abs=1e-4) and hi == pytest.approx(0.17437, abs=1e-4)


class TestEstimate:
    def test_noiseless(self):
        est = mc.estimate_error_prob(cfg(channel_spec={"family": "outlier", "M": 3, "p_true": 1.0}))
        assert est.p_e_hat == 0.0 and est.errors == 0

    def test_noiseless_random_graph(self):
        c = cfg(graph_spec={"model": "er", "n": 7, "p": 1.0}, channel_spec={"family": "outlier", "M": 3, "p_true": 1.0})
        assert mc.estimate_error_prob(c).p_e_hat == 0.0

    def test_uniform_channel(self):
        est = mc.estimate_error_prob(cfg(channel_spec={"family": "outlier", "M": 2, "p_true": 0.0}, trials=80))
        assert est.p_e_hat == 1.0 and est.tie_trials == 80

    def test_lexicographic_uniform(self):
        # the smallest canonical vector is all-zero, hit exactly when the truth is constant
        c = cfg(channel_spec={"family": "outlier", "M": 2, "p_true": 0.0}, trials=400, tie_policy="lexicographic")
        est = mc.estimate_error_prob(c)
        assert est.ci_low <= 1 - 2 / 2**6 <= est.ci_high

    def test_random_tie_policy(self):
        c = cfg(channel_spec={"family": "outlier", "M": 2, "p_true": 0.0}, trials=400, tie_policy="random")
        est = mc.estimate_error_prob(c)
        assert est.ci_low <= 1 - 1 / 2**5 <= est.ci_high

    def test_deterministic_and_job_invariant(self):
        c = cfg(trials=40, master_seed=17)
        a = mc.estimate_error_prob(c)
        assert a == mc.estimate_error_prob(c)
        assert a == mc.estimate_error_prob(c, jobs=3)

    def test_truth_modes_agree(self):
        base = cfg(trials=300, channel_spec={"family": "outlier", "M": 2, "p_true": 0.45})
        u = mc.estimate_error_prob(base)
        z = mc.estimate_error_prob(mc.with_value(base, "truth_mode", "zero"))
        assert u.ci_low <= z.ci_high and z.ci_low <= u.ci_high
        assert z.truth_mode == "zero"

    def test_local_decoder(self):
        c = cfg(decoder="local", restarts=4, channel_spec={"family": "outlier", "M": 3, "p_true": 1.0})
        assert mc.estimate_error_prob(c).p_e_hat == 0.0

    def test_resolve_jobs(self, monkeypatch):
        monkeypatch.setenv("PAIRDIFF_JOBS", "3")
        assert mc.resolve_jobs(None) == 3
        assert mc.resolve_jobs(5) == 5
        assert mc.resolve_jobs(0) == 1


class TestSweep:
    def test_empty(self):
        res = mc.sweep(cfg(), "channel.p_true", [])
        assert res.rows == () and res.to_csv().splitlines() == ["param,pe,ci_low,ci_high,trials"]

    def test_outlier_monotone(self):
        vals = [0.1, 0.3, 0.5, 0.7, 0.9]
        res = mc.sweep(cfg(graph_spec={"model": "complete", "n": 12}), "channel.p_true", vals, trials=80)
        for a, b in zip(res.rows, res.rows[1:]):
            assert b.pe <= a.pe or b.ci_low <= a.ci_high
        assert "outlier_achievability" in res.threshold_names and "cut_achievability" in res.threshold_names

    def test_sbm_monotone(self):
        base = cfg(graph_spec={"model": "complete", "n": 10}, channel_spec={"family": "sbm", "a": 4, "b": 4})
        res = mc.sweep(base, "channel.b", [4, 2, 1, 0], trials=80)
        for a, b in zip(res.rows, res.rows[1:]):
            assert b.pe <= a.pe or b.ci_low <= a.ci_high

    def test_csv(self):
        res = mc.sweep(cfg(), "channel.p_true", [0.2, 0.8], trials=20)
        lines = res.to_csv().splitlines()
        assert lines[0].startswith("param,pe,ci_low,ci_high,trials,")
        assert len(lines) == 3 and lines[1].split(",")[0] == "0.2"

    def test_job_invariant_csv(self):
        base = cfg(trials=30, master_seed=4)
        a = mc.sweep(base, "channel.p_true", [0.3, 0.6, 0.9]).to_csv()
        assert a == mc.sweep(base, "channel.p_true", [0.3, 0.6, 0.9], jobs=2).to_csv()

    def test_infeasible_rejected_up_front(self):
        with pytest.raises(InfeasibleConfig):
            mc.sweep(cfg(), "channel.p_true", [0.5, 2.0])

    def test_marker_positions(self):
        rows = (
            mc.SweepRow(1.0, 0.9, 0.8, 1.0, 10, {"a": False}),
            mc.SweepRow(2.0, 0.5, 0.4, 0.6, 10, {"a": False}),
            mc.SweepRow(3.0, 0.1, 0.0, 0.2, 10, {"a": True}),
        )
        assert mc.SweepResult("x", rows, ("a",)).marker_positions() == {"a": 2.5}


class TestTransition:
    def _result(self, pts):
        return mc.SweepResult("v", tuple(mc.SweepRow(v, p, p, p, 10) for v, p in pts))

    def test_linear(self):
        assert mc.locate_transition(self._result([(1, 0.9), (3, 0.1)])) == pytest.approx(2.0)

    def test_no_crossing(self):
        with pytest.raises(NoCrossing):
            mc.locate_transition(self._result([(1, 0.3), (2, 0.2), (3, 0.1)]))

    def test_exact_hit(self):
        assert mc.locate_transition(self._result([(1, 0.9), (2, 0.5), (3, 0.1)])) == 2


class TestPredictions:
    def test_outlier(self):
        names = [r.name for r in mc.predicted_thresholds(cfg())]
        assert names == ["outlier_achievability", "outlier_converse", "cut_achievability"]

    def test_sbm(self):
        c = cfg(graph_spec={"model": "complete", "n": 40}, channel_spec={"family": "sbm", "a": 9, "b": 1})
        reps = {r.name: r for r in mc.predicted_thresholds(c)}
        assert reps["sbm_achievability"].satisfied

    def test_haplotype_ring(self):
        c = cfg(graph_spec={"model": "ring", "n": 10, "w": 2}, channel_spec={"family": "haplotype", "theta": 0.1, "L": 3})
        names = [r.name for r in mc.predicted_thresholds(c)]
        assert names[:2] == ["haplotype_achievability", "haplotype_converse"]

    def test_haplotype_profile_channel(self):
        spec = {"family": "haplotype", "theta": 0.1, "L": 10, "p_profile": {"1": 1.0, "2": 0.5}}
        ch = mc.build_channel(spec, {"model": "ring", "n": 8, "w": 2})
        sizes = {f.output_size for f in ch.families()}
        assert sizes == {11, 6}

    def test_matrix_channel(self):
        ch = mc.build_channel({"family": "matrix", "rows": [[0.9, 0.1], [0.2, 0.8]]}, {})
        assert ch.M == 2


class TestUnionBound:
    def test_manual_sum(self):
        g = gl.gen_ring(5, 1)
        fam = chm.outlier_channel(2, 0.7)
        from pairdiff.divergence import divergence_profile

        s = divergence_profile(fam).sup_renyi_term()
        total = 0.0
        for w in range(1, 16):
            x = [0] + [(w >> (3 - k)) & 1 for k in range(4)]
            m = sum(x[i] != x[j] for i, j in g.edges)
            total += math.exp(-s * m)
        assert mc.union_bound(g, fam) == pytest.approx(total)

    def test_noiseless_is_zero(self):
        assert mc.union_bound(gl.gen_complete(5), chm.outlier_channel(2, 1.0)) == 0.0

    @pytest.mark.parametrize("n,p", [(6, 0.9), (8, 0.8)])
    def test_dominates_empirical(self, n, p):
        c = cfg(graph_spec={"model": "complete", "n": n}, channel_spec={"family": "outlier", "M": 2, "p_true": p}, trials=400)
        est = mc.estimate_error_prob(c)
        ub = mc.union_bound(gl.gen_complete(n), chm.outlier_channel(2, p))
        assert ub < 1
        assert est.p_e_hat <= ub + 4 * math.sqrt(ub * (1 - ub) / c.trials)

    def test_pairwise_rate_reports_disagreements(self):
        rate, m = mc.pairwise_error_rate(gl.gen_complete(5), chm.outlier_channel(2, 1.0), [0, 1, 1, 0, 0], 20)
        assert rate == 0.0 and m == 6

    def test_pairwise_nonzero_truth(self):
        x = np.array([1, 0, 1, 1, 0])
        rate, m = mc.pairwise_error_rate(gl.gen_complete(5), chm.outlier_channel(2, 0.0), (x + 1) % 2, 10, x=x)
        assert m == 0 and rate == 0.0
