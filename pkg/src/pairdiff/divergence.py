"""Finite-alphabet divergences and the channel-level minimum-divergence profile.

All quantities are in nats.  Conventions applied pointwise: ``0 * ln 0 = 0``
and ``0 ** a = 0`` for ``a > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AbsolutelyContinuityViolated,
    AlphabetTooLarge,
    BadOrder,
    BadParam,
    DegenerateChannel,
    InvalidPmf,
)

PMF_TOL = 1e-9
DEFAULT_ALPHA_GRID = tuple(round(0.01 * i, 2) for i in range(1, 100))
GOLDEN_TOL = 1e-6
MAX_PRODUCT_SIZE = 4**8
IDENTITY_FLOOR = 0.5


class Pmf:
    """Probability mass function over output symbols ``0..len-1``."""

    __slots__ = ("probs",)

    def __init__(self, probs):
        arr = np.array(probs, dtype=float).ravel()
        if arr.size == 0:
            raise InvalidPmf("empty pmf")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise InvalidPmf(f"entries must be finite and non-negative: {arr}")
        total = float(arr.sum())
        if abs(total - 1.0) > PMF_TOL:
            raise InvalidPmf(f"probabilities sum to {total!r}, not 1")
        arr.setflags(write=False)
        self.probs = arr

    @classmethod
    def bernoulli(cls, p: float) -> "Pmf":
        """Two-point pmf ``[1 - p, p]``; symbol 1 is the success outcome."""
        if not 0.0 <= p <= 1.0:
            raise InvalidPmf(f"Bernoulli parameter {p} outside [0, 1]")
        return cls([1.0 - p, p])

    @classmethod
    def point(cls, k: int, size: int) -> "Pmf":
        probs = np.zeros(size)
        probs[k] = 1.0
        return cls(probs)

    def __len__(self) -> int:
        return self.probs.size

    def __eq__(self, other) -> bool:
        return isinstance(other, Pmf) and np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash(self.probs.tobytes())

    def __repr__(self) -> str:
        return f"Pmf({self.probs.tolist()})"


def as_pmf(p) -> Pmf:
    return p if isinstance(p, Pmf) else Pmf(p)


def _pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    p, q = as_pmf(p), as_pmf(q)
    if len(p) != len(q):
        raise InvalidPmf(f"alphabet sizes differ: {len(p)} vs {len(q)}")
    return p.probs, q.probs


def _check_order(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise BadOrder(f"order {alpha} not in (0, 1)")


def _affinity(p: np.ndarray, q: np.ndarray, alpha: float) -> float:
    """sum_y p^alpha q^(1-alpha) with 0^a = 0."""
    both = (p > 0) & (q > 0)
    return float(np.sum(p[both] ** alpha * q[both] ** (1.0 - alpha)))


def kl(p, q) -> float:
    """KL(p || q) = sum p ln(p/q).  Raises if p is not dominated by q."""
    p, q = _pair(p, q)
    supp = p > 0
    if np.any(q[supp] == 0):
        raise AbsolutelyContinuityViolated("p puts mass where q has none")
    return float(np.sum(p[supp] * np.log(p[supp] / q[supp])))


def hellinger_alpha(p, q, alpha: float) -> float:
    """Hellinger divergence of order alpha, (1 - sum p^a q^(1-a)) / (1 - a).

    At ``alpha = 1/2`` this is the unnormalised squared Hellinger distance
    ``sum (sqrt p - sqrt q)^2``, which ranges over [0, 2].
    """
    _check_order(alpha)
    p, q = _pair(p, q)
    if alpha == 0.5:
        return float(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2))
    return (1.0 - _affinity(p, q, alpha)) / (1.0 - alpha)


def chi_square(p, q) -> float:
    p, q = _pair(p, q)
    if np.any(q[p > 0] == 0):
        raise AbsolutelyContinuityViolated("p puts mass where q has none")
    supp = q > 0
    return float(np.sum((p[supp] - q[supp]) ** 2 / q[supp]))


def renyi(p, q, alpha: float) -> float:
    """Renyi divergence of order alpha in (0, 1); +inf for disjoint supports."""
    h = hellinger_alpha(p, q, alpha)
    inner = 1.0 - (1.0 - alpha) * h
    if inner < IDENTITY_FLOOR:
        # the subtraction above has cancelled most digits; use the affinity itself
        return renyi_direct(p, q, alpha)
    return -math.log(inner) / (1.0 - alpha)


def renyi_direct(p, q, alpha: float) -> float:
    """Renyi divergence straight from -ln(sum p^a q^(1-a)) / (1 - a)."""
    _check_order(alpha)
    p, q = _pair(p, q)
    a = _affinity(p, q, alpha)
    if a <= 0.0:
        return math.inf
    return -math.log(a) / (1.0 - alpha)


@dataclass(frozen=True)
class Fact1Result:
    R: float
    lower_ok: bool
    upper_ok: bool
    small_R_ok: bool | None  # None when R > 4.5 (the small-ratio variant does not apply)


def fact1_bounds(p, q, rtol: float = 1e-12) -> Fact1Result:
    """Check the KL / squared-Hellinger sandwich governed by the likelihood ratio bound R.

    ``max(2 - 0.5 ln R, 1) * H <= KL <= (2 + ln R) * H`` always, and
    ``(2 - 0.4 ln R) * H <= KL <= (2 + 0.4 ln R) * H`` once ``R <= 4.5``.
    """
    pa, qa = _pair(p, q)
    supp = (pa > 0) | (qa > 0)
    if np.any((pa[supp] == 0) | (qa[supp] == 0)):
        raise AbsolutelyContinuityViolated("p and q are not mutually absolutely continuous")
    ratio = pa[supp] / qa[supp]
    R = float(max(ratio.max(), (1.0 / ratio).max()))
    logR = math.log(R)
    d = kl(pa, qa)
    h = hellinger_alpha(pa, qa, 0.5)
    slack = rtol * max(d, h, 1e-300)
    lower_ok = max(2.0 - 0.5 * logR, 1.0) * h <= d + slack
    upper_ok = d <= (2.0 + logR) * h + slack
    small = None
    if R <= 4.5:
        small = (2.0 - 0.4 * logR) * h <= d + slack and d <= (2.0 + 0.4 * logR) * h + slack
    return Fact1Result(R, bool(lower_ok), bool(upper_ok), small)


@dataclass(frozen=True)
class DecouplingResult:
    lhs: float
    rhs: float


def decoupling_check(p, q, alpha: float, n_copies: int) -> DecouplingResult:
    """Compare the order-alpha affinity of n-fold products with its n-th power.

    ``lhs`` is computed on the explicit product measure, ``rhs`` from the
    single-letter Hellinger divergence.
    """
    _check_order(alpha)
    if n_copies < 1:
        raise BadParam("n_copies must be >= 1")
    pa, qa = _pair(p, q)
    if pa.size**n_copies > MAX_PRODUCT_SIZE:
        raise AlphabetTooLarge(f"|Y|^n = {pa.size}^{n_copies} exceeds {MAX_PRODUCT_SIZE}")
    # product measure in log space so tiny atoms do not underflow
    with np.errstate(divide="ignore"):
        lp, lq = np.log(pa), np.log(qa)
    lpn, lqn = lp, lq
    for _ in range(n_copies - 1):
        lpn = np.add.outer(lpn, lp).ravel()
        lqn = np.add.outer(lqn, lq).ravel()
    both = np.isfinite(lpn) & np.isfinite(lqn)
    prod_affinity = float(np.sum(np.exp(alpha * lpn[both] + (1.0 - alpha) * lqn[both])))
    lhs = 1.0 - (1.0 - alpha) * ((1.0 - prod_affinity) / (1.0 - alpha))
    rhs = (1.0 - (1.0 - alpha) * hellinger_alpha(pa, qa, alpha)) ** n_copies
    return DecouplingResult(lhs, rhs)


# ---------------------------------------------------------------------------
# channel-level profile


@dataclass(frozen=True)
class DivergenceProfile:
    """Minimum divergences over distinct input pairs of a channel family.

    ``hel_min`` and ``renyi_min`` map an order alpha to the minimum over
    ordered pairs; ``sup_alpha_term`` is ``sup_alpha (1 - alpha) Hel_alpha^min``
    attained (approximately) at ``argmax_alpha``; ``m_kl`` maps zeta to the
    number of near-KL-minimal alternatives.
    """

    kl_min: float
    hel_min: dict[float, float]
    renyi_min: dict[float, float]
    sup_alpha_term: float
    argmax_alpha: float
    m_kl: dict[float, int] = field(default_factory=dict)
    M: int = 2

    @property
    def hel_half(self) -> float:
        return self.hel_min[0.5]

    def sup_renyi_term(self) -> float:
        """sup_alpha (1 - alpha) D_alpha^min, the exponent of the pairwise Chernoff bound."""
        if self.sup_alpha_term >= 1.0:
            return math.inf
        return -math.log1p(-self.sup_alpha_term)


def _row_sets(channel) -> list[np.ndarray]:
    """Row matrices of every distinct family behind ``channel``."""
    from .channel import ChannelFamily, EdgeChannelMap

    if isinstance(channel, EdgeChannelMap):
        return [fam.rows for fam in channel.families()]
    if isinstance(channel, ChannelFamily):
        return [channel.rows]
    rows = np.asarray(channel, dtype=float)
    if rows.ndim != 2:
        raise BadParam("expected a ChannelFamily, EdgeChannelMap or M x |Y| matrix")
    return [rows]


def _kl_matrix(rows: np.ndarray) -> np.ndarray:
    """kl[i, l] = KL(P_i || P_l), +inf where P_i is not dominated by P_l."""
    M = rows.shape[0]
    out = np.empty((M, M))
    for i in range(M):
        for l in range(M):
            try:
                out[i, l] = kl(rows[i], rows[l])
            except AbsolutelyContinuityViolated:
                out[i, l] = math.inf
    return out


def _min_affinity_gap(row_sets: Sequence[np.ndarray], alpha: float) -> float:
    """min over families and pairs l != k of 1 - sum P_l^a P_k^(1-a)."""
    best = math.inf
    for rows in row_sets:
        aff = (rows**alpha) @ (rows ** (1.0 - alpha)).T
        np.fill_diagonal(aff, -math.inf)
        best = min(best, 1.0 - float(aff.max()))
    return max(best, 0.0)


def _hel_min(row_sets: Sequence[np.ndarray], alpha: float) -> float:
    if alpha == 0.5:
        return min(
            float(np.sum((np.sqrt(rows[l]) - np.sqrt(rows[k])) ** 2))
            for rows in row_sets
            for l in range(rows.shape[0])
            for k in range(rows.shape[0])
            if l != k
        )
    return _min_affinity_gap(row_sets, alpha) / (1.0 - alpha)


def _golden_max(f, lo: float, hi: float, tol: float = GOLDEN_TOL) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def sup_alpha(row_sets: Sequence[np.ndarray], alphas: Iterable[float] = ()) -> tuple[float, float]:
    """Grid search plus golden-section refinement of (1 - a) Hel_a^min over a in (0, 1)."""
    grid = sorted(set(DEFAULT_ALPHA_GRID) | {float(a) for a in alphas if 0.0 < a < 1.0})
    vals = [_min_affinity_gap(row_sets, a) for a in grid]
    i = int(np.argmax(vals))
    lo = grid[i - 1] if i > 0 else grid[i] / 2.0
    hi = grid[i + 1] if i + 1 < len(grid) else (grid[i] + 1.0) / 2.0
    a_star = _golden_max(lambda a: _min_affinity_gap(row_sets, a), lo, hi)
    v_star = _min_affinity_gap(row_sets, a_star)
    if v_star >= vals[i]:
        return v_star, a_star
    return vals[i], grid[i]


def _m_kl_from(klm: np.ndarray, kl_min: float, zeta: float) -> int:
    M = klm.shape[0]
    cutoff = (1.0 + zeta) * kl_min
    if math.isfinite(cutoff):
        cutoff += 1e-12 * max(abs(cutoff), 1e-300)
    best = 0
    for l in range(M):
        best = max(best, sum(1 for i in range(M) if i != l and klm[i, l] <= cutoff))
    return best


def divergence_profile(
    channel,
    alphas: Iterable[float] = (),
    zetas: Iterable[float] = (0.0,),
) -> DivergenceProfile:
    """Minimum KL, Hellinger and Renyi divergences over all ordered input pairs.

    ``channel`` may be a ChannelFamily, an EdgeChannelMap (minimum taken over
    every family in use as well) or a raw M x |Y| row matrix.  Pairs whose KL
    is infinite are skipped when at least one finite pair exists.
    """
    row_sets = _row_sets(channel)
    M = row_sets[0].shape[0]
    if M < 2:
        raise DegenerateChannel("need at least two inputs")
    alphas = sorted({0.5} | {float(a) for a in alphas})
    for a in alphas:
        _check_order(a)

    kl_mats = [_kl_matrix(rows) for rows in row_sets]
    off = [km[~np.eye(M, dtype=bool)] for km in kl_mats]
    kl_min = float(min(v.min() for v in off))

    hel = {a: _hel_min(row_sets, a) for a in alphas}
    ren = {}
    for a, h in hel.items():
        inner = 1.0 - (1.0 - a) * h
        ren[a] = math.inf if inner <= 0 else -math.log(inner) / (1.0 - a)
    sup_term, arg = sup_alpha(row_sets, alphas)

    m = {}
    for z in zetas:
        if z < 0:
            raise BadParam("zeta must be >= 0")
        m[float(z)] = max(_m_kl_from(km, kl_min, z) for km in kl_mats)
    return DivergenceProfile(kl_min, hel, ren, sup_term, arg, m, M)


def m_kl(channel, zeta: float) -> int:
    """Largest number of inputs whose KL to a common reference is within (1 + zeta) KL^min."""
    if zeta < 0:
        raise BadParam("zeta must be >= 0")
    row_sets = _row_sets(channel)
    kl_mats = [_kl_matrix(rows) for rows in row_sets]
    M = row_sets[0].shape[0]
    if M < 2:
        raise DegenerateChannel("need at least two inputs")
    kl_min = float(min(km[~np.eye(M, dtype=bool)].min() for km in kl_mats))
    if not math.isfinite(kl_min):
        raise AbsolutelyContinuityViolated("KL^min is infinite")
    return max(_m_kl_from(km, kl_min, zeta) for km in kl_mats)


# ---------------------------------------------------------------------------
# matrix text format


def format_matrix(rows: np.ndarray) -> str:
    rows = np.asarray(rows, dtype=float)
    lines = [f"{rows.shape[0]} {rows.shape[1]}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    """Parse ``"M |Y|"`` followed by M rows of |Y| decimal probabilities."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise BadParam("empty channel matrix")
    head = lines[0].split()
    if len(head) != 2:
        raise BadParam("first line must be 'M |Y|'")
    M, Y = int(head[0]), int(head[1])
    if len(lines) - 1 != M:
        raise BadParam(f"expected {M} rows, found {len(lines) - 1}")
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        vals = ln.split()
        if len(vals) != Y:
            raise BadParam(f"row {lineno - 1}: expected {Y} entries, found {len(vals)}")
        rows.append([float(v) for v in vals])
    out = np.array(rows, dtype=float)
    for r in out:
        Pmf(r)
    return out
