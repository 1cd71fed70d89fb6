"""Invariant checks runnable from the command line and from the test suite.

Every property returns ``(ok, detail)``.  Properties call into the library
through module attributes so a patched function is what gets exercised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import channel as chn
from . import decoder as dec
from . import divergence as dv
from . import graphlab as gl
from . import montecarlo as mc
from . import thresholds as th
from .errors import ConfigError

SEED = 20240101


@dataclass(frozen=True)
class Property:
    name: str
    group: str
    check: Callable[[], tuple[bool, str]]


REGISTRY: list[Property] = []


def prop(name: str):
    def wrap(fn):
        REGISTRY.append(Property(name, name.split(".", 1)[0], fn))
        return fn

    return wrap


def _rng(tag: str) -> np.random.Generator:
    return np.random.default_rng([SEED, sum(map(ord, tag))])


def random_pmf(gen: np.random.Generator, size: int, sparse: bool = False) -> np.ndarray:
    p = gen.dirichlet(np.full(size, 0.7))
    if sparse and size > 2:
        p[gen.random(size) < 0.3] = 0.0
        if p.sum() == 0:
            p[0] = 1.0
        p /= p.sum()
    return p


def random_bernoulli_pair(gen: np.random.Generator, max_ratio: float) -> tuple[np.ndarray, np.ndarray]:
    """Bernoulli pair whose pointwise likelihood ratios lie within [1/max_ratio, max_ratio]."""
    while True:
        a = gen.uniform(0.01, 0.99)
        b = gen.uniform(0.01, 0.99)
        p, q = np.array([1 - a, a]), np.array([1 - b, b])
        r = np.max(np.maximum(p / q, q / p))
        if r <= max_ratio:
            return p, q


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def brute_force_mincut(g: gl.Graph) -> int:
    """Exhaustive minimum over proper subsets, computed edge by edge (no dynamic programming)."""
    masks = np.arange(1, 1 << (g.n - 1), dtype=np.int64)
    bits = (masks[:, None] >> np.arange(g.n)) & 1
    e = g.edge_array()
    if len(e) == 0:
        return 0
    return int(np.min(np.sum(bits[:, e[:, 0]] != bits[:, e[:, 1]], axis=1)))


def random_connected_graph(gen: np.random.Generator, n: int) -> gl.Graph:
    while True:
        p = gen.uniform(0.2, 0.9)
        lo, hi = np.triu_indices(n, 1)
        keep = gen.random(len(lo)) < p
        g = gl.Graph.from_edges(n, list(zip(lo[keep].tolist(), hi[keep].tolist())))
        if g.is_connected():
            return g


# ---------------------------------------------------------------------------
# divergence


@prop("divergence.sandwich")
def _sandwich():
    gen = _rng("sandwich")
    for trial in range(1000):
        size = int(gen.integers(2, 17))
        p, q = random_pmf(gen, size), random_pmf(gen, size)
        a = float(gen.uniform(0.01, 0.99))
        h, r, k = dv.hellinger_alpha(p, q, a), dv.renyi(p, q, a), dv.kl(p, q)
        slack = 1e-12 * max(1.0, k)
        if not (h <= r + slack and r <= k + slack):
            return False, f"pair {trial}: hel={h} renyi={r} kl={k} at alpha={a}"
    return True, "1000 random pairs"


@prop("divergence.renyi_identity")
def _renyi_identity():
    gen = _rng("renyi")
    checked = 0
    for trial in range(1000):
        size = int(gen.integers(2, 17))
        p, q = random_pmf(gen, size, sparse=True), random_pmf(gen, size, sparse=True)
        a = float(gen.uniform(0.01, 0.99))
        via, direct = dv.renyi(p, q, a), dv.renyi_direct(p, q, a)
        if math.isinf(via) or math.isinf(direct):
            if via != direct:
                return False, f"pair {trial}: {via} vs {direct}"
        elif not _close(via, direct, 1e-12):
            return False, f"pair {trial}: {via} vs {direct} at alpha={a}"
        inner = 1.0 - (1.0 - a) * dv.hellinger_alpha(p, q, a)
        if inner >= dv.IDENTITY_FLOOR:
            checked += 1
            ident = -math.log(inner) / (1.0 - a)
            if not _close(ident, direct, 1e-12):
                return False, f"pair {trial}: Hellinger identity {ident} vs direct {direct} at alpha={a}"
    return True, f"1000 random pairs, identity checked on {checked} well-conditioned ones"


@prop("divergence.zero_iff_equal")
def _zero_iff_equal():
    gen = _rng("zero")
    for trial in range(300):
        size = int(gen.integers(2, 17))
        p, q = random_pmf(gen, size), random_pmf(gen, size)
        a = float(gen.uniform(0.05, 0.95))
        same = [dv.kl(p, p), dv.hellinger_alpha(p, p, a), dv.chi_square(p, p), dv.renyi(p, p, a)]
        if max(abs(v) for v in same) > 1e-12:
            return False, f"pair {trial}: nonzero self-divergence {same}"
        diff = [dv.kl(p, q), dv.hellinger_alpha(p, q, a), dv.chi_square(p, q), dv.renyi(p, q, a)]
        if min(diff) <= 1e-12:
            return False, f"pair {trial}: zero divergence between distinct pmfs {diff}"
    return True, "300 random pairs"


@prop("divergence.fact1")
def _fact1():
    gen = _rng("fact1")
    for trial in range(1000):
        p, q = random_bernoulli_pair(gen, 4.5)
        res = dv.fact1_bounds(p, q)
        if not (res.lower_ok and res.upper_ok and res.small_R_ok):
            return False, f"pair {trial}: {res}"
    for trial in range(300):
        size = int(gen.integers(2, 9))
        p, q = random_pmf(gen, size), random_pmf(gen, size)
        res = dv.fact1_bounds(p, q)
        if not (res.lower_ok and res.upper_ok) or res.small_R_ok is False:
            return False, f"general pair {trial}: {res}"
    return True, "1000 Bernoulli pairs with R <= 4.5 and 300 general pairs"


@prop("divergence.decoupling")
def _decoupling():
    gen = _rng("decoupling")
    worst = 0.0
    for _ in range(20):
        a, b = gen.uniform(0.0, 1.0, size=2)
        p, q = dv.Pmf.bernoulli(a), dv.Pmf.bernoulli(b)
        for alpha in np.round(np.arange(0.1, 1.0, 0.1), 1):
            for k in range(1, 7):
                res = dv.decoupling_check(p, q, float(alpha), k)
                worst = max(worst, abs(res.lhs - res.rhs))
    return worst <= 1e-10, f"max |lhs - rhs| = {worst:.3e}"


def outlier_closed_forms(M: int, p: float) -> tuple[float, float]:
    kl = p * math.log1p(p * M / (1 - p))
    hel = 2.0 / M * (math.sqrt(1 - p + M * p) - math.sqrt(1 - p)) ** 2
    return kl, hel


@prop("divergence.outlier_closed_forms")
def _outlier_forms():
    for M in (2, 3, 5, 17):
        for p in np.round(np.arange(0.0, 1.0, 0.1), 1):
            prof = dv.divergence_profile(chn.outlier_channel(M, float(p)))
            kl, hel = outlier_closed_forms(M, float(p))
            if abs(prof.kl_min - kl) > 1e-12 or abs(prof.hel_half - hel) > 1e-12:
                return False, f"M={M} p={p}: ({prof.kl_min}, {prof.hel_half}) vs ({kl}, {hel})"
            if p > 0:
                if prof.kl_min > p * p * M / (1 - p) + 1e-12:
                    return False, f"M={M} p={p}: KL upper bound violated"
                if prof.hel_half < p * p * M / (2 * (1 - p + M * p)) - 1e-12:
                    return False, f"M={M} p={p}: Hellinger lower bound violated"
            if prof.m_kl.get(0.0) != M - 1:
                return False, f"M={M} p={p}: m_kl={prof.m_kl}"
    return True, "p_true in 0..0.9, M in {2,3,5,17}"


# ---------------------------------------------------------------------------
# cuts


@prop("cuts.mincut_oracle")
def _mincut_oracle():
    gen = _rng("mincut")
    for trial in range(200):
        g = random_connected_graph(gen, int(gen.integers(2, 13)))
        sw, bf = gl.stoer_wagner(g), brute_force_mincut(g)
        prof = gl.cut_profile(g)
        if not (sw == bf == prof.mincut):
            return False, f"graph {trial}: stoer_wagner={sw} brute={bf} census={prof.mincut}"
    return True, "200 random connected graphs, n <= 12"


def standard_graphs() -> list[tuple[str, gl.Graph]]:
    gs = [(f"complete{n}", gl.gen_complete(n)) for n in (2, 4, 6, 8, 10)]
    gs += [(f"bridge{n}", gl.gen_two_cliques_bridge(n)) for n in (4, 8, 10, 12)]
    gs += [(f"ring{n},{w}", gl.gen_ring(n, w)) for n, w in ((6, 1), (8, 2), (12, 3))]
    gs += [("grid3x3", gl.gen_grid(3, 3)), ("grid3x4", gl.gen_grid(3, 4))]
    return gs


@prop("cuts.census_monotone")
def _census():
    gen = _rng("census")
    graphs = standard_graphs() + [(f"random{i}", random_connected_graph(gen, 9)) for i in range(20)]
    for name, g in graphs:
        prof = gl.cut_profile(g)
        vals = [prof.census[m] for m in range(g.n_edges + 1)]
        if any(b < a for a, b in zip(vals, vals[1:])) or vals[0] < 1:
            return False, f"{name}: census not monotone"
        if vals[-1] != 2 ** (g.n - 1):
            return False, f"{name}: |N(|E|)| = {vals[-1]}"
        if not math.isclose(prof.tau_cut, max(prof.tau_k.values())):
            return False, f"{name}: tau_cut is not the max of tau_k"
    return True, f"{len(graphs)} graphs"


@prop("cuts.expander_bound")
def _expander():
    gen = _rng("expander")
    graphs = standard_graphs() + [(f"random{i}", random_connected_graph(gen, int(gen.integers(3, 13)))) for i in range(60)]
    for name, g in graphs:
        prof = gl.cut_profile(g)
        bound = gl.tau_bound_expander(g, prof)
        if prof.tau_cut > bound + 1e-12:
            return False, f"{name}: tau_cut={prof.tau_cut} > bound {bound}"
    return True, f"{len(graphs)} connected graphs"


@prop("cuts.class_count_bound")
def _class_count_bound():
    gen = _rng("class_count")
    graphs = [(f"complete{n}", gl.gen_complete(n)) for n in (3, 5, 7)]
    graphs += [("bridge8", gl.gen_two_cliques_bridge(8)), ("ring8,2", gl.gen_ring(8, 2)), ("grid2x4", gl.gen_grid(2, 4))]
    graphs += [(f"random{i}", random_connected_graph(gen, int(gen.integers(3, 9)))) for i in range(6)]
    checked = 0
    for name, g in graphs:
        prof = gl.cut_profile(g)
        for M in (2, 3):
            kmax = math.ceil(g.n_edges / prof.mincut) + 1
            for k in range(1, kmax + 1):
                a = gl.count_hypothesis_classes(g, M, k, prof.mincut)
                if k == 1 and a != 0:
                    return False, f"{name}: A_1 nonempty ({a})"
                if a == 0:
                    continue
                rhs = gl.class_count_rate_bound(M, k, prof.mincut, prof.tau_cut)
                checked += 1
                if not math.log(a) / k < rhs:
                    return False, f"{name} M={M} k={k}: ln|A_k|/k={math.log(a) / k} >= {rhs}"
    return True, f"{checked} (graph, M, k) cases"


@prop("cuts.homogeneity_contrast")
def _contrast():
    for n in (8, 10, 12):
        b = gl.cut_profile(gl.gen_two_cliques_bridge(n)).tau_cut
        c = gl.cut_profile(gl.gen_complete(n)).tau_cut
        if not b < c:
            return False, f"n={n}: bridge {b} >= complete {c}"
    return True, "n in {8, 10, 12}"


@prop("cuts.geometric_condition")
def _geometric():
    held = 0
    for n, w in ((12, 3), (14, 3), (14, 4), (20, 4)):
        g = gl.gen_ring(n, w)
        coords = gl.ring_coordinates(n)
        prof = gl.cut_profile(g)
        for rho in (0.2, 0.4, 0.6):
            res = gl.verify_geometric_homogeneity(g, gl.GeometricHomogeneityParams(rho, 0.25), coords, prof.mincut)
            if res.cond_a and res.cond_b:
                held += 1
                if prof.tau_cut > res.bound:
                    return False, f"ring({n},{w}) rho={rho}: tau_cut {prof.tau_cut} > {res.bound}"
    return held > 0, f"conditions held in {held} cases"


# ---------------------------------------------------------------------------
# decoder


def _instance(gen, n, M, p_true):
    g = random_connected_graph(gen, n)
    ch = chn.outlier_channel(M, p_true)
    x = gen.integers(0, M, size=n)
    y = chn.sample_observations(g, ch, x, seed=int(gen.integers(1 << 30)))
    return g, ch, x, y


@prop("decoder.loglik_oracle")
def _loglik_oracle():
    gen = _rng("loglik")
    for trial in range(100):
        M = int(gen.integers(2, 5))
        g, ch, _, y = _instance(gen, int(gen.integers(3, 9)), M, float(gen.uniform(0, 1)))
        w = gen.integers(0, M, size=g.n)
        prod = 1.0
        for (lo, hi), s in zip(g.edges, y.y):
            prod *= ch.rows[(w[hi] - w[lo]) % M, s]
        naive = math.log(prod) if prod > 0 else -math.inf
        got = dec.log_likelihood(y, w, ch)
        if not (naive == got or _close(naive, got, 1e-10)):
            return False, f"trial {trial}: {got} vs naive {naive}"
    return True, "100 random instances"


@prop("decoder.offset_invariance")
def _offset():
    gen = _rng("offset")
    for trial in range(100):
        M = int(gen.integers(2, 5))
        g, ch, _, y = _instance(gen, int(gen.integers(3, 9)), M, float(gen.uniform(0, 1)))
        w = gen.integers(0, M, size=g.n)
        base = dec.log_likelihood(y, w, ch)
        for l in range(1, M):
            v = dec.log_likelihood(y, (w + l) % M, ch)
            if not (v == base or _close(v, base, 1e-12)):
                return False, f"trial {trial}: shift {l} changes {base} to {v}"
    return True, "100 random instances"


@prop("decoder.exhaustive_is_argmax")
def _argmax():
    gen = _rng("argmax")
    for trial in range(60):
        M = int(gen.integers(2, 4))
        n = int(gen.integers(3, 9 if M == 2 else 7))
        g, ch, x, y = _instance(gen, n, M, float(gen.uniform(0, 0.9)))
        res = dec.ml_decode_exhaustive(y, ch)
        best = -math.inf
        for h in range(M ** (n - 1)):
            best = max(best, dec.log_likelihood(y, dec.canonical_digits(np.array([h]), n, M)[0], ch))
        if not (res.log_likelihood == best or _close(res.log_likelihood, best, 1e-9)):
            return False, f"trial {trial}: decoder {res.log_likelihood} vs rescan {best}"
        if res.log_likelihood < dec.log_likelihood(y, x, ch) - 1e-9 * max(1.0, abs(best)):
            return False, f"trial {trial}: estimate worse than truth"
    return True, "60 instances rescanned"


# ---------------------------------------------------------------------------
# thresholds


@prop("thresholds.no_overlap")
def _no_overlap():
    checked = 0
    for M in (2, 3, 5, 9, 17):
        for p_true in np.linspace(0.05, 0.95, 10):
            prof = dv.divergence_profile(chn.outlier_channel(M, float(p_true)))
            for n in np.unique(np.round(np.logspace(1, 5, 10)).astype(int)):
                for eps in (0.01, 0.1, 0.2, 0.35, 0.5):
                    ach = th.er_achievability(int(n), M, 0.5, prof, 0.5)
                    conv = th.er_converse_kl(int(n), 0.5, prof.kl_min, prof.m_kl[0.0], 0.0, eps)
                    checked += 1
                    if ach.satisfied and conv.satisfied:
                        return False, f"M={M} p={p_true} n={n} eps={eps}: both regions"
    return True, f"{checked} grid points"


@prop("thresholds.sbm_boundary")
def _sbm_boundary():
    for a in np.linspace(0.5, 30, 40):
        for b in np.linspace(0, a, 15):
            ach, conv = th.sbm_conditions(float(a), float(b), 10**6)
            if ach.satisfied and conv.satisfied:
                return False, f"a={a} b={b}: achievable and impossible"
            if ach.satisfied and not (a - b) ** 2 > a:
                return False, f"a={a} b={b}: achievability outside the converse-free region"
    return True, "40 x 15 grid"


# ---------------------------------------------------------------------------
# Monte Carlo


@prop("montecarlo.union_bound_domination")
def _union():
    rows = []
    for n, p_true in ((6, 0.9), (8, 0.8)):
        g = gl.gen_complete(n)
        ch = chn.outlier_channel(2, p_true)
        ub = mc.union_bound(g, ch)
        cfg = mc.ExperimentConfig({"model": "complete", "n": n}, {"family": "outlier", "M": 2, "p_true": p_true},
                                  truth_mode="zero", trials=400, master_seed=SEED)
        est = mc.estimate_error_prob(cfg)
        sigma = math.sqrt(max(ub, 0.0) * (1 - min(ub, 1.0)) / cfg.trials)
        rows.append(f"n={n}: pe={est.p_e_hat:.4f} ub={ub:.4f}")
        if ub < 1 and est.p_e_hat > ub + 4 * sigma:
            return False, "; ".join(rows)
    return True, "; ".join(rows)


@prop("montecarlo.determinism")
def _determinism():
    cfg = mc.ExperimentConfig({"model": "er", "n": 7, "p": 0.6}, {"family": "outlier", "M": 3, "p_true": 0.5},
                              trials=40, master_seed=SEED)
    a = mc.sweep(cfg, "channel_spec.p_true", [0.3, 0.6], jobs=1).to_csv()
    b = mc.sweep(cfg, "channel_spec.p_true", [0.3, 0.6], jobs=1).to_csv()
    c = mc.sweep(cfg, "channel_spec.p_true", [0.3, 0.6], jobs=2).to_csv()
    return a == b == c, "repeat and two-worker sweeps identical" if a == b == c else "sweeps differ"


GROUPS = tuple(dict.fromkeys(p.group for p in REGISTRY))


def run(only: list[str] | None = None, out=print) -> bool:
    """Run every property (or the named groups / properties) and print one line each."""
    selected = [p for p in REGISTRY if not only or p.group in only or p.name in only]
    if only:
        known = {p.group for p in REGISTRY} | {p.name for p in REGISTRY}
        missing = [o for o in only if o not in known]
        if missing:
            raise ConfigError(f"unknown property or group: {', '.join(missing)}")
    all_ok = True
    for p in selected:
        try:
            ok, detail = p.check()
        except Exception as exc:  # a crashing property is a failing property
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= bool(ok)
        out(f"{'PASS' if ok else 'FAIL'} {p.name}: {detail}")
    return all_ok
