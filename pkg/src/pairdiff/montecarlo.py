"""Monte Carlo estimation of the exact-recovery error probability.

Every random draw in a trial is keyed by (master_seed, stream prefix, trial),
so results do not depend on execution order or on the number of workers.
"""

from __future__ import annotations

import copy
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import rng
from .channel import (
    ChannelFamily,
    EdgeChannelMap,
    edge_channels_for_ring,
    haplotype_channel,
    outlier_channel,
    sample_observations,
    sbm_channel,
)
from .decoder import (
    MAX_CANONICAL,
    TIE_RTOL,
    dist,
    log_likelihood,
    ml_decode_exhaustive,
    ml_decode_local_search,
)
from .divergence import divergence_profile
from .errors import BadParam, ConfigError, DomainError, InfeasibleConfig, NoCrossing
from .graphlab import (
    ENUMERATION_HARD_LIMIT,
    Graph,
    _disagreement_counts,
    build_graph,
    cut_profile,
    is_random_model,
)
from . import thresholds as th

WILSON_Z = 1.959963984540054
TRUTH_MODES = ("uniform", "zero")
DECODERS = ("exhaustive", "local")
TIE_POLICIES = ("strict", "lexicographic", "random")
DEFAULT_EPSILON = 0.1
DEFAULT_DELTA = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment.

    ``graph_spec`` is passed to :func:`pairdiff.graphlab.build_graph`;
    ``channel_spec`` names a ``family`` (outlier, sbm, haplotype or matrix)
    and its parameters.  ``tie_policy`` decides how exhaustive-decoder ties
    are scored: ``strict`` counts any tie at the maximum as an error,
    ``lexicographic`` scores the smallest-index winner, ``random`` scores a
    uniformly chosen winner.
    """

    graph_spec: dict
    channel_spec: dict
    truth_mode: str = "uniform"
    decoder: str = "exhaustive"
    restarts: int = 8
    trials: int = 100
    master_seed: int = 0
    tie_policy: str = "strict"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown experiment keys: {sorted(unknown)}")
        for key in ("graph_spec", "channel_spec"):
            if key not in d:
                raise ConfigError(f"missing required key {key!r}")
        return cls(**copy.deepcopy(d))


def with_value(cfg: ExperimentConfig, path: str, value) -> ExperimentConfig:
    """Copy of cfg with the dotted ``path`` (e.g. ``channel_spec.p_true``) set to value."""
    head, _, rest = path.partition(".")
    aliases = {"graph": "graph_spec", "channel": "channel_spec"}
    head = aliases.get(head, head)
    if head not in ExperimentConfig.__dataclass_fields__:
        raise ConfigError(f"unknown parameter path {path!r}")
    if not rest:
        return replace(cfg, **{head: value})
    sub = copy.deepcopy(getattr(cfg, head))
    if not isinstance(sub, dict):
        raise ConfigError(f"{head!r} is not a mapping")
    node = sub
    keys = rest.split(".")
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value
    return replace(cfg, **{head: sub})


def _as_int(v, name: str) -> int:
    f = float(v)
    if f != int(f):
        raise BadParam(f"{name} must be an integer, got {v!r}")
    return int(f)


def build_channel(spec: dict, graph_spec: dict) -> EdgeChannelMap:
    fam = spec.get("family")
    try:
        if fam == "outlier":
            return EdgeChannelMap(outlier_channel(_as_int(spec["M"], "M"), float(spec["p_true"])))
        if fam == "sbm":
            n = _as_int(spec.get("n", graph_spec.get("n")), "n")
            return EdgeChannelMap(sbm_channel(float(spec["a"]), float(spec["b"]), n))
        if fam == "haplotype":
            theta, L = float(spec["theta"]), _as_int(spec["L"], "L")
            profile = spec.get("p_profile")
            if profile:
                if graph_spec.get("model") != "ring":
                    raise BadParam("a read profile needs a ring graph")
                return edge_channels_for_ring(
                    _as_int(graph_spec["n"], "n"),
                    _as_int(graph_spec["w"], "w"),
                    bool(graph_spec.get("circular", True)),
                    theta,
                    L,
                    {int(k): float(v) for k, v in profile.items()},
                )
            return EdgeChannelMap(haplotype_channel(theta, L))
        if fam == "matrix":
            return EdgeChannelMap(ChannelFamily(np.array(spec["rows"], dtype=float), "matrix"))
    except KeyError as exc:
        raise BadParam(f"channel family {fam!r} needs parameter {exc.args[0]!r}") from exc
    raise BadParam(f"unknown channel family {fam!r}")


def _graph_n(spec: dict) -> int:
    if spec.get("model") == "grid":
        return _as_int(spec["rows"], "rows") * _as_int(spec["cols"], "cols")
    return _as_int(spec["n"], "n")


def check_feasible(cfg: ExperimentConfig) -> EdgeChannelMap:
    """Validate cfg before any trial runs; returns the channel map."""
    if cfg.trials < 1:
        raise InfeasibleConfig("trials must be >= 1")
    if cfg.truth_mode not in TRUTH_MODES:
        raise InfeasibleConfig(f"truth_mode must be one of {TRUTH_MODES}")
    if cfg.decoder not in DECODERS:
        raise InfeasibleConfig(f"decoder must be one of {DECODERS}")
    if cfg.tie_policy not in TIE_POLICIES:
        raise InfeasibleConfig(f"tie_policy must be one of {TIE_POLICIES}")
    if cfg.restarts < 0:
        raise InfeasibleConfig("restarts must be >= 0")
    try:
        ch = build_channel(cfg.channel_spec, cfg.graph_spec)
        n = _graph_n(cfg.graph_spec)
        if not is_random_model(cfg.graph_spec):
            build_graph(cfg.graph_spec)
    except DomainError as exc:
        raise InfeasibleConfig(str(exc)) from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise InfeasibleConfig(f"bad graph or channel spec: {exc}") from exc
    if cfg.decoder == "exhaustive" and ch.M ** (n - 1) > MAX_CANONICAL:
        raise InfeasibleConfig(f"exhaustive decoding needs M^(n-1) <= 2^24, got {ch.M}^{n - 1}")
    return ch


# ---------------------------------------------------------------------------
# trials


@lru_cache(maxsize=4)
def _fixed_graph(spec_key: str) -> Graph:
    return build_graph(json.loads(spec_key))


def _trial_graph(cfg: ExperimentConfig, prefix: tuple, t: int) -> Graph:
    if is_random_model(cfg.graph_spec):
        return build_graph(cfg.graph_spec, cfg.master_seed, prefix + ("graph", t))
    return _fixed_graph(json.dumps(cfg.graph_spec, sort_keys=True))


def trial_outcome(cfg: ExperimentConfig, ch: EdgeChannelMap, prefix: tuple, t: int) -> tuple[bool, bool]:
    """(error, tie_at_maximum) for trial t."""
    g = _trial_graph(cfg, prefix, t)
    M = ch.M
    if cfg.truth_mode == "zero":
        x = np.zeros(g.n, dtype=np.int64)
    else:
        x = rng.generator(cfg.master_seed, *prefix, "truth", t).integers(0, M, size=g.n)
    y = sample_observations(g, ch, x, cfg.master_seed, prefix + ("trial", t))
    if cfg.decoder == "local":
        res = ml_decode_local_search(y, ch, cfg.restarts, cfg.master_seed, prefix + ("decode", t))
        return bool(dist(res.estimate.values, x, M)), False
    res = ml_decode_exhaustive(y, ch)
    hit = dist(res.estimate.values, x, M) == 0
    if res.ties == 1:
        return (not hit), False
    if cfg.tie_policy == "strict":
        return True, True
    if cfg.tie_policy == "lexicographic":
        return (not hit), True
    top = res.log_likelihood
    ll_truth = log_likelihood(y, x, ch)
    if math.isinf(top):
        truth_tied = True
    else:
        truth_tied = ll_truth >= top - TIE_RTOL * max(1.0, abs(top))
    if not truth_tied:
        return True, True
    u = rng.generator(cfg.master_seed, *prefix, "tie", t).random()
    return bool(u >= 1.0 / res.ties), True


def _run_block(cfg: ExperimentConfig, prefix: tuple, start: int, stop: int) -> tuple[int, int]:
    ch = build_channel(cfg.channel_spec, cfg.graph_spec)
    errors = ties = 0
    for t in range(start, stop):
        e, tie = trial_outcome(cfg, ch, prefix, t)
        errors += e
        ties += tie
    return errors, ties


def wilson_interval(errors: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    if trials <= 0:
        raise BadParam("trials must be >= 1")
    p = errors / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo, hi = max(0.0, centre - half), min(1.0, centre + half)
    return min(lo, p), max(hi, p)


@dataclass(frozen=True)
class ErrorEstimate:
    p_e_hat: float
    ci_low: float
    ci_high: float
    errors: int
    trials: int
    tie_trials: int
    truth_mode: str


def resolve_jobs(jobs: int | None) -> int:
    if jobs is None:
        env = os.environ.get("PAIRDIFF_JOBS")
        jobs = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(jobs))


def _blocks(trials: int, jobs: int) -> list[tuple[int, int]]:
    size = max(1, math.ceil(trials / (4 * jobs)))
    return [(s, min(trials, s + size)) for s in range(0, trials, size)]


def estimate_error_prob(cfg: ExperimentConfig, jobs: int = 1, prefix: tuple = (), executor=None) -> ErrorEstimate:
    """Empirical exact-recovery error rate with a 95% Wilson interval."""
    check_feasible(cfg)
    errors = ties = 0
    if jobs <= 1 and executor is None:
        errors, ties = _run_block(cfg, prefix, 0, cfg.trials)
    else:
        own = executor is None
        pool = executor or ProcessPoolExecutor(max_workers=jobs)
        try:
            futs = [pool.submit(_run_block, cfg, prefix, a, b) for a, b in _blocks(cfg.trials, jobs)]
            for f in futs:
                e, t = f.result()
                errors += e
                ties += t
        finally:
            if own:
                pool.shutdown()
    lo, hi = wilson_interval(errors, cfg.trials)
    return ErrorEstimate(errors / cfg.trials, lo, hi, errors, cfg.trials, ties, cfg.truth_mode)


# ---------------------------------------------------------------------------
# predictions attached to sweeps


def _p_obs(graph_spec: dict) -> float | None:
    model = graph_spec.get("model")
    if model == "complete":
        return 1.0
    if model in ("er", "erdos_renyi"):
        return float(graph_spec["p"])
    return None


@lru_cache(maxsize=16)
def _cached_cut_profile(spec_key: str):
    g = build_graph(json.loads(spec_key))
    if g.n > ENUMERATION_HARD_LIMIT or not g.is_connected():
        return None
    return cut_profile(g)


def predicted_thresholds(cfg: ExperimentConfig) -> list[th.ThresholdReport]:
    """Threshold reports that apply to cfg's graph and channel."""
    ch = build_channel(cfg.channel_spec, cfg.graph_spec)
    spec = cfg.channel_spec
    fam = spec.get("family")
    n = _graph_n(cfg.graph_spec)
    p_obs = _p_obs(cfg.graph_spec)
    out: list[th.ThresholdReport] = []
    if fam == "outlier" and p_obs is not None:
        out += th.outlier_conditions(n, ch.M, p_obs, float(spec["p_true"]), DEFAULT_EPSILON)
    elif fam == "sbm":
        out += th.sbm_conditions(float(spec["a"]), float(spec["b"]), n)
    elif fam == "haplotype":
        model = cfg.graph_spec.get("model")
        if model == "ring":
            out += th.haplotype_conditions(
                float(spec["theta"]), _as_int(spec["L"], "L"), n, model="ring", w=_as_int(cfg.graph_spec["w"], "w")
            )
        elif p_obs is not None:
            out += th.haplotype_conditions(float(spec["theta"]), _as_int(spec["L"], "L"), n, p_obs, model="er")
    if not is_random_model(cfg.graph_spec):
        prof = _cached_cut_profile(json.dumps(cfg.graph_spec, sort_keys=True))
        if prof is not None:
            dp = divergence_profile(ch)
            out.append(th.cut_achievability(n, ch.M, prof.mincut, prof.tau_cut, dp.sup_alpha_term, DEFAULT_DELTA))
    return out


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepRow:
    param: float
    pe: float
    ci_low: float
    ci_high: float
    trials: int
    markers: dict[str, bool] = field(default_factory=dict)


@dataclass(frozen=True)
class SweepResult:
    param_path: str
    rows: tuple[SweepRow, ...]
    threshold_names: tuple[str, ...] = ()

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(["param", "pe", "ci_low", "ci_high", "trials", *self.threshold_names]) + "\n")
        for r in self.rows:
            cells = [_fmt(r.param), _fmt(r.pe), _fmt(r.ci_low), _fmt(r.ci_high), str(r.trials)]
            cells += ["1" if r.markers.get(k) else "0" for k in self.threshold_names]
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()

    def marker_positions(self) -> dict[str, float]:
        """Parameter value (midpoint between grid points) where each prediction flips."""
        out = {}
        for name in self.threshold_names:
            for a, b in zip(self.rows, self.rows[1:]):
                if a.markers.get(name) != b.markers.get(name):
                    out[name] = (a.param + b.param) / 2
                    break
        return out


def _fmt(v: float) -> str:
    return repr(float(v))


def sweep(
    base_cfg: ExperimentConfig,
    param_path: str,
    values: Sequence[float],
    trials: int | None = None,
    jobs: int = 1,
) -> SweepResult:
    """One error estimate per value; value i draws from substream ("value", i)."""
    if trials is not None:
        base_cfg = replace(base_cfg, trials=int(trials))
    cfgs = [with_value(base_cfg, param_path, v) for v in values]
    for c in cfgs:
        check_feasible(c)
    names: list[str] = []
    rows = []
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 and cfgs else None
    try:
        for i, (v, c) in enumerate(zip(values, cfgs)):
            est = estimate_error_prob(c, jobs=jobs, prefix=("value", i), executor=pool)
            marks = {}
            for rep in predicted_thresholds(c):
                marks[rep.name] = rep.satisfied
                if rep.name not in names:
                    names.append(rep.name)
            rows.append(SweepRow(float(v), est.p_e_hat, est.ci_low, est.ci_high, est.trials, marks))
    finally:
        if pool is not None:
            pool.shutdown()
    return SweepResult(param_path, tuple(rows), tuple(names))


def locate_transition(result: SweepResult, level: float = 0.5) -> float:
    """Linearly interpolated parameter where the empirical error rate first crosses ``level``."""
    rows = result.rows
    for a, b in zip(rows, rows[1:]):
        da, db = a.pe - level, b.pe - level
        if da == 0:
            return a.param
        if da * db < 0:
            return a.param + (b.param - a.param) * da / (da - db)
    if rows and rows[-1].pe == level and len(rows) >= 2:
        return rows[-1].param
    raise NoCrossing(f"error rate never crosses {level}")


# ---------------------------------------------------------------------------
# union bound


def union_bound(g: Graph, ch, M: int | None = None) -> float:
    """Sum over non-null canonical hypotheses w of exp(-s * |disagreeing edges of w|).

    s = sup_a -ln(1 - (1-a) Hel_a^min) is the best pairwise Chernoff exponent,
    so this bounds the ML error probability for any fixed truth.
    """
    ecm = ch if isinstance(ch, EdgeChannelMap) else EdgeChannelMap(ch)
    M = M or ecm.M
    s = divergence_profile(ecm).sup_renyi_term()
    counts = _disagreement_counts(g, M)[1:]
    if math.isinf(s):
        return 0.0 if np.all(counts > 0) else math.inf
    hist = np.bincount(counts)
    m = np.arange(len(hist))
    return float(np.sum(hist * np.exp(-s * m)))


def pairwise_error_rate(
    g: Graph, ch, w, trials: int, seed: int = 0, x=None
) -> tuple[float, int]:
    """Fraction of trials in which hypothesis w strictly beats the truth x (default 0) in likelihood.

    Returns (rate, disagreement edge count of w relative to x).
    """
    ecm = ch if isinstance(ch, EdgeChannelMap) else EdgeChannelMap(ch)
    x = np.zeros(g.n, dtype=np.int64) if x is None else np.asarray(x, dtype=np.int64)
    w = np.asarray(w, dtype=np.int64)
    e = g.edge_array()
    m = int(np.count_nonzero(((w - x)[e[:, 1]] - (w - x)[e[:, 0]]) % ecm.M))
    wins = 0
    for t in range(trials):
        y = sample_observations(g, ecm, x, seed, ("pairwise", t))
        if log_likelihood(y, w, ecm) > log_likelihood(y, x, ecm):
            wins += 1
    return wins / trials, m
