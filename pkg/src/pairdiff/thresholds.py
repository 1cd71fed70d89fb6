"""Recovery conditions as explicit predicates with margins.

Each function returns a :class:`ThresholdReport`.  ``kind`` says how to read
it: a *sufficient* report is satisfied when ``margin = lhs - rhs >= 0`` and
then ``error_bound`` is an upper bound on the ML error probability; a
*necessary* report is satisfied when ``margin <= 0`` and then ``error_bound``
is a lower bound on the minimax error probability (recovery is impossible to
better accuracy).

Asymptotic qualifiers such as ``1 + o(1)`` are evaluated at their limit and
flagged in ``parameters`` with value 1.0.  All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .divergence import DivergenceProfile
from .errors import BadParam, PreconditionViolated

SUFFICIENT = "sufficient"
NECESSARY = "necessary"
SPARSITY_GUARD = 10.0
HAPLOTYPE_DEFAULTS = {"c1": 8.0, "c2": 1.0 / 8.0, "c3": 64.0, "c4": 64.0, "c5": 1.0 / 8.0}


@dataclass(frozen=True)
class ThresholdReport:
    name: str
    kind: str
    satisfied: bool
    lhs: float
    rhs: float
    margin: float
    error_bound: float | None = None
    parameters: dict[str, float] = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = [
            f"name={self.name}",
            f"kind={self.kind}",
            f"satisfied={str(self.satisfied).lower()}",
            f"lhs={self.lhs!r}",
            f"rhs={self.rhs!r}",
            f"margin={self.margin!r}",
            f"error_bound={'none' if self.error_bound is None else repr(self.error_bound)}",
        ]
        out += [f"param.{k}={v!r}" for k, v in sorted(self.parameters.items())]
        return out

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "satisfied": self.satisfied,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "error_bound": self.error_bound,
            "parameters": dict(sorted(self.parameters.items())),
        }


def _report(name, kind, lhs, rhs, bound, params, strict=False) -> ThresholdReport:
    margin = lhs - rhs
    if kind == SUFFICIENT:
        ok = margin > 0 if strict else margin >= 0
    else:
        ok = margin < 0 if strict else margin <= 0
    return ThresholdReport(name, kind, bool(ok), float(lhs), float(rhs), float(margin), bound if ok else None, params)


def _require(cond: bool, msg: str, exc=BadParam) -> None:
    if not cond:
        raise exc(msg)


def _check_n(n) -> None:
    _require(n >= 2, f"n={n} must be >= 2")


def _check_p_obs(p_obs) -> None:
    _require(0.0 < p_obs <= 1.0, f"p_obs={p_obs} outside (0, 1]")


def _sparsity_flag(params: dict, n: float, p_obs: float) -> None:
    ratio = p_obs * n / math.log(n)
    params["p_obs_n_over_ln_n"] = ratio
    if ratio < SPARSITY_GUARD:
        params["warning_sparse_p_obs"] = 1.0


def binary_entropy(x: float) -> float:
    """-x ln x - (1 - x) ln(1 - x) in nats; 0 at both endpoints."""
    _require(0.0 <= x <= 1.0, f"binary entropy argument {x} outside [0, 1]")
    if x in (0.0, 1.0):
        return 0.0
    return -x * math.log(x) - (1.0 - x) * math.log1p(-x)


def _power_tail(base: float, exponent: float) -> float:
    """1 / (base^exponent - 1), or +inf when the denominator is not positive."""
    denom = base**exponent - 1.0
    return math.inf if denom <= 0 else 1.0 / denom


# ---------------------------------------------------------------------------
# Erdos-Renyi measurement graphs


def er_achievability(n: int, M: int, p_obs: float, profile, delta: float) -> ThresholdReport:
    """ML succeeds when sup_a (1-a) Hel_a^min * p_obs n >= (1+delta) ln(2n) + 2 ln(M-1).

    ``profile`` is a DivergenceProfile or the supremum term itself.  The error
    bound keeps the two explicit terms and omits the C n^(-c1 delta n) term.
    """
    _check_n(n)
    _require(M >= 2, "M must be >= 2")
    _check_p_obs(p_obs)
    _require(delta > 0, "delta must be > 0")
    sup_term = profile.sup_alpha_term if isinstance(profile, DivergenceProfile) else float(profile)
    lhs = sup_term * p_obs * n
    rhs = (1 + delta) * math.log(2 * n) + 2 * math.log(M - 1)
    expo = max(0.75 * delta - 0.25 * delta**2, (delta - 1) / 2)
    raw = _power_tail(2 * n, expo) + 3.0 / (n**10 - 1)
    params = {"delta": delta, "asymptotic_term_omitted": 1.0, "error_bound_raw": raw}
    _sparsity_flag(params, n, p_obs)
    return _report("er_achievability", SUFFICIENT, lhs, rhs, min(1.0, raw), params)


def er_converse_kl(
    n: int, p_obs: float, kl_min: float, m_kl: int, zeta: float, epsilon: float
) -> ThresholdReport:
    """Recovery below error epsilon - n^-10 is impossible when
    KL^min p_obs n <= [(1-eps)(ln n + ln m_kl) - H(eps)] / [(1+eps)(1+zeta)].
    """
    _check_n(n)
    _check_p_obs(p_obs)
    _require(0.0 < epsilon <= 0.5, f"epsilon={epsilon} outside (0, 1/2]")
    _require(zeta >= 0, "zeta must be >= 0")
    _require(m_kl >= 1, "m_kl must be >= 1")
    _require(kl_min >= 0, "kl_min must be >= 0")
    lhs = kl_min * p_obs * n
    rhs = ((1 - epsilon) * (math.log(n) + math.log(m_kl)) - binary_entropy(epsilon)) / (
        (1 + epsilon) * (1 + zeta)
    )
    params = {"epsilon": epsilon, "zeta": zeta, "m_kl": float(m_kl)}
    _sparsity_flag(params, n, p_obs)
    return _report("er_converse_kl", NECESSARY, lhs, rhs, epsilon - n**-10.0, params)


def _residual(epsilon: float, alpha: float, n: float, denom: float) -> float:
    return math.log(2) + 2 * (epsilon * alpha * math.log(n) - math.log(2)) ** 2 / denom


def er_converse_hellinger(
    n: int, p_obs: float, hel_alpha_min: float, alpha: float, epsilon: float, zeta: float = 0.0
) -> ThresholdReport:
    """Error at least n^-eps - n^-10 when (1-a) Hel_a^min p_obs n < eps a ln n / (1+zeta) - r_eps."""
    _check_n(n)
    _check_p_obs(p_obs)
    _require(epsilon > 0, "epsilon must be > 0")
    _require(zeta >= 0, "zeta must be >= 0")
    _require(0 < alpha < 1, f"alpha={alpha} outside (0, 1)")
    _require(alpha <= 1 / (1 + epsilon), f"alpha={alpha} exceeds 1/(1+epsilon)", PreconditionViolated)
    _require(
        p_obs * n > 2 * epsilon * alpha * math.log(n),
        "p_obs * n must exceed 2 epsilon alpha ln n",
        PreconditionViolated,
    )
    r = _residual(epsilon, alpha, n, n * p_obs)
    lhs = (1 - alpha) * hel_alpha_min * p_obs * n
    rhs = epsilon * alpha * math.log(n) / (1 + zeta) - r
    params = {"epsilon": epsilon, "alpha": alpha, "zeta": zeta, "r_epsilon": r}
    _sparsity_flag(params, n, p_obs)
    return _report(
        "er_converse_hellinger", NECESSARY, lhs, rhs, n**-epsilon - n**-10.0, params, strict=True
    )


# ---------------------------------------------------------------------------
# general graphs


def cut_achievability(
    n: int, M: int, mincut: int, tau_cut: float, sup_alpha_term: float, delta: float
) -> ThresholdReport:
    """ML succeeds with error <= 1/((2n)^delta - 1) when
    sup_a (1-a) Hel_a^min * mincut >= 8 tau_cut + (delta + 8) ln(2n) + 4 ln M.
    """
    _check_n(n)
    _require(mincut >= 1, "graph must be connected (mincut >= 1)")
    _require(M >= 2, "M must be >= 2")
    _require(delta > 0, "delta must be > 0")
    lhs = sup_alpha_term * mincut
    rhs = 8 * tau_cut + (delta + 8) * math.log(2 * n) + 4 * math.log(M)
    raw = _power_tail(2 * n, delta)
    return _report("cut_achievability", SUFFICIENT, lhs, rhs, min(1.0, raw), {"delta": delta, "error_bound_raw": raw})


def cut_converse_kl(
    mincut: int,
    d_max: int,
    tau_cut: float,
    kl_min: float,
    m_kl: int,
    n: int,
    zeta: float,
    epsilon: float,
) -> ThresholdReport:
    """Error at least epsilon when either the cut branch or the degree branch holds.

    cut branch:    KL^min mincut <= max{(1-eps) tau_cut - H(eps), [(1-eps) ln m_kl - H(eps)] / (1+zeta)}
    degree branch: KL^min d_max  <= [(1-eps)(ln n + ln m_kl) - H(eps)] / (1+zeta)

    The reported lhs/rhs belong to the branch with the smaller margin;
    ``parameters['branch']`` is 1 for the cut branch and 2 for the degree one.
    """
    _check_n(n)
    _require(mincut >= 1, "graph must be connected (mincut >= 1)")
    _require(0.0 < epsilon <= 0.5, f"epsilon={epsilon} outside (0, 1/2]")
    _require(zeta >= 0, "zeta must be >= 0")
    _require(m_kl >= 1, "m_kl must be >= 1")
    h = binary_entropy(epsilon)
    lhs1 = kl_min * mincut
    rhs1 = max((1 - epsilon) * tau_cut - h, ((1 - epsilon) * math.log(m_kl) - h) / (1 + zeta))
    lhs2 = kl_min * d_max
    rhs2 = ((1 - epsilon) * (math.log(n) + math.log(m_kl)) - h) / (1 + zeta)
    m1, m2 = lhs1 - rhs1, lhs2 - rhs2
    branch = 1 if m1 <= m2 else 2
    lhs, rhs = (lhs1, rhs1) if branch == 1 else (lhs2, rhs2)
    params = {
        "epsilon": epsilon,
        "zeta": zeta,
        "m_kl": float(m_kl),
        "branch": float(branch),
        "cut_branch_margin": m1,
        "degree_branch_margin": m2,
    }
    return _report("cut_converse_kl", NECESSARY, lhs, rhs, epsilon, params)


def degree_converse_hellinger(
    d_max: int, n: int, hel_alpha_min: float, alpha: float, epsilon: float
) -> ThresholdReport:
    """Error at least n^-eps when (1-a) Hel_a^min d_max <= eps a ln n - r_eps."""
    _check_n(n)
    _require(epsilon > 0, "epsilon must be > 0")
    _require(0 < alpha < 1, f"alpha={alpha} outside (0, 1)")
    _require(alpha <= 1 / (1 + epsilon), f"alpha={alpha} exceeds 1/(1+epsilon)", PreconditionViolated)
    _require(
        d_max >= 2 * epsilon * alpha * math.log(n),
        f"d_max={d_max} below 2 epsilon alpha ln n",
        PreconditionViolated,
    )
    r = _residual(epsilon, alpha, n, d_max)
    lhs = (1 - alpha) * hel_alpha_min * d_max
    rhs = epsilon * alpha * math.log(n) - r
    params = {"epsilon": epsilon, "alpha": alpha, "r_epsilon": r}
    return _report("degree_converse_hellinger", NECESSARY, lhs, rhs, n**-epsilon, params)


# ---------------------------------------------------------------------------
# application models


def outlier_hel_term(M: int, p_true: float) -> float:
    """(1/M)(sqrt(1 - p + M p) - sqrt(1 - p))^2, half the minimum squared Hellinger distance."""
    return (math.sqrt(1 - p_true + M * p_true) - math.sqrt(1 - p_true)) ** 2 / M


def outlier_conditions(
    n: int, M: int, p_obs: float, p_true: float, epsilon: float
) -> tuple[ThresholdReport, ThresholdReport]:
    """Achievability and converse for the outlier model on an Erdos-Renyi graph.

    achievability: (1/M)(sqrt(1-p+Mp) - sqrt(1-p))^2 >= (1+eps)(ln n + 2 ln M) / (p_obs n)
    converse:      p <= max{(1-eps)(ln n + ln M) / (p_obs n ln(1 + pM/(1-p))),
                           (M/(M-1)) (ln n/(p_obs n) - 1/M)}
    """
    _check_n(n)
    _require(M >= 2, "M must be >= 2")
    _check_p_obs(p_obs)
    _require(0.0 <= p_true <= 1.0, f"p_true={p_true} outside [0, 1]")
    _require(epsilon > 0, "epsilon must be > 0")
    deg = p_obs * n
    ach = _report(
        "outlier_achievability",
        SUFFICIENT,
        outlier_hel_term(M, p_true),
        (1 + epsilon) * (math.log(n) + 2 * math.log(M)) / deg,
        None,
        {"epsilon": epsilon, "asymptotic_statement": 1.0},
    )
    if p_true >= 1.0:
        info = 0.0
    else:
        gain = math.log1p(p_true * M / (1 - p_true))
        info = math.inf if gain == 0 else (1 - epsilon) * (math.log(n) + math.log(M)) / (deg * gain)
    connectivity = M / (M - 1) * (math.log(n) / deg - 1 / M)
    conv = _report(
        "outlier_converse",
        NECESSARY,
        p_true,
        max(info, connectivity),
        None,
        {
            "epsilon": epsilon,
            "information_branch": info,
            "connectivity_branch": connectivity,
            "asymptotic_statement": 1.0,
        },
    )
    return ach, conv


def outlier_binary_boundaries(n: int, p_obs: float) -> tuple[float, float]:
    """Binary-alphabet boundaries sqrt(2 ln n/(p_obs n)) (sufficient) and sqrt(ln n/(2 p_obs n)) (necessary)."""
    _check_n(n)
    _check_p_obs(p_obs)
    x = math.log(n) / (p_obs * n)
    return math.sqrt(2 * x), math.sqrt(x / 2)


def sbm_conditions(a: float, b: float, n: int) -> tuple[ThresholdReport, ThresholdReport]:
    """Two-community block model: achievable when (sqrt a - sqrt b)^2 >= 2, impossible when (a - b)^2 <= a."""
    _check_n(n)
    _require(a >= b >= 0, f"need a >= b >= 0, got a={a}, b={b}")
    params = {"o1_evaluated_at_zero": 1.0, "a_ln_n_over_n": a * math.log(n) / n}
    if a * math.log(n) / n >= 1.0:
        params["outside_sparse_regime"] = 1.0
    ach = _report("sbm_achievability", SUFFICIENT, (math.sqrt(a) - math.sqrt(b)) ** 2, 2.0, None, dict(params))
    conv = _report("sbm_converse", NECESSARY, (a - b) ** 2, a, None, dict(params))
    return ach, conv


def haplotype_conditions(
    theta: float,
    L: int,
    n: int,
    p_obs: float | None = None,
    model: str = "ring",
    c_constants: Mapping[str, float] | None = None,
    w: int = 1,
) -> tuple[ThresholdReport, ThresholdReport]:
    """Order-level haplotype conditions with caller-supplied constants.

    ring: (1-2theta)^2 > c1 ln n / L achievable, < c2 ln n / L not.
    er:   (1-2theta)^2 > c4 ln n / (L n p_obs) achievable, < c5 ln n / (L n p_obs) not.
    Both reports carry the observed read count and the n ln n / (1-2theta)^2 scale.
    """
    _check_n(n)
    _require(0.0 <= theta <= 0.5, f"theta={theta} outside [0, 1/2]")
    _require(L >= 1, "L must be >= 1")
    c = dict(HAPLOTYPE_DEFAULTS)
    if c_constants:
        unknown = set(c_constants) - set(c)
        _require(not unknown, f"unknown constants {sorted(unknown)}")
        c.update({k: float(v) for k, v in c_constants.items()})
    signal = (1 - 2 * theta) ** 2
    scale = math.inf if signal == 0 else n * math.log(n) / signal
    params: dict[str, float] = {f"c_{k}": v for k, v in c.items()}
    params["sample_complexity_scale"] = scale
    if model == "ring":
        _require(w >= 1, "w must be >= 1")
        params["reads_total"] = float(n * L * w)
        a_rhs = c["c1"] * math.log(n) / L
        n_rhs = c["c2"] * math.log(n) / L
    elif model == "er":
        _require(p_obs is not None, "the er model needs p_obs")
        _check_p_obs(p_obs)
        params["reads_total"] = n * (n - 1) / 2 * p_obs * L
        if p_obs * n <= c["c3"] * math.log(n):
            params["warning_sparse_p_obs"] = 1.0
        a_rhs = c["c4"] * math.log(n) / (L * n * p_obs)
        n_rhs = c["c5"] * math.log(n) / (L * n * p_obs)
    else:
        raise BadParam(f"unknown haplotype model {model!r}")
    ach = _report("haplotype_achievability", SUFFICIENT, signal, a_rhs, None, dict(params), strict=True)
    conv = _report("haplotype_converse", NECESSARY, signal, n_rhs, None, dict(params), strict=True)
    return ach, conv


def min_sample_complexity(n: int, hel_half_min: float, constant: float = 1.0) -> float:
    """Order-level edge count constant * n ln n / Hel_{1/2}^min needed for exact recovery."""
    _check_n(n)
    _require(hel_half_min > 0, "hel_half_min must be > 0")
    return constant * n * math.log(n) / hel_half_min
