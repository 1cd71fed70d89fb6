"""Maximum-likelihood decoding up to a global offset.

Hypotheses are canonical: coordinate 0 is pinned to 0.  Canonical vector
number ``h`` has ``values[1..n-1]`` equal to the base-M digits of h with
values[1] most significant, so index order is lexicographic order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import rng
from .channel import Observations, as_edge_map, edge_differences
from .errors import BadParam, LengthMismatch, SearchSpaceTooLarge
from .graphlab import Graph

MAX_CANONICAL = 2**24
TIE_RTOL = 1e-9
_CHUNK = 1 << 15


@dataclass(frozen=True, eq=False)
class Hypothesis:
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.int64).copy()
        if arr.size and arr[0] != 0:
            raise BadParam("canonical hypotheses have values[0] == 0")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def canonical(cls, x, M: int) -> "Hypothesis":
        x = np.asarray(x, dtype=np.int64)
        return cls((x - x[0]) % M)

    def __eq__(self, other) -> bool:
        return isinstance(other, Hypothesis) and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash(self.values.tobytes())

    def __repr__(self) -> str:
        return f"Hypothesis({self.values.tolist()})"


@dataclass(frozen=True)
class DecodeResult:
    estimate: Hypothesis
    log_likelihood: float
    unique_argmax: bool
    ties: int


def dist(w, x, M: int) -> int:
    """0 when w equals x up to a common offset modulo M, else 1."""
    w = np.asarray(w, dtype=np.int64)
    x = np.asarray(x, dtype=np.int64)
    if w.shape != x.shape:
        raise LengthMismatch(f"lengths {w.shape} and {x.shape} differ")
    if w.size == 0:
        return 0
    d = (w - x) % M
    return int(not np.all(d == d[0]))


def _edge_log_table(y: Observations, ch) -> np.ndarray:
    """T[e, l] = ln P_l^{(e)}(y_e), with -inf for impossible outputs."""
    ecm = as_edge_map(ch)
    fams, fam_idx = ecm.families_for(y.graph)
    T = np.empty((y.graph.n_edges, ecm.M))
    for f, fam in enumerate(fams):
        sel = fam_idx == f
        if np.any(y.y[sel] >= fam.output_size):
            raise BadParam("observed symbol outside the channel's output alphabet")
        T[sel] = fam.log_rows()[:, y.y[sel]].T
    return T


def log_likelihood(y: Observations, x, ch) -> float:
    """Sum over edges of ln P_{(x_i - x_j) mod M}(y_ij); -inf if any term is impossible."""
    ecm = as_edge_map(ch)
    values = x.values if isinstance(x, Hypothesis) else np.asarray(x, dtype=np.int64)
    T = _edge_log_table(y, ecm)
    diff = edge_differences(y.graph, values, ecm.M)
    terms = T[np.arange(len(diff)), diff]
    if np.any(np.isneginf(terms)):
        return -math.inf
    return float(terms.sum())


def canonical_digits(idx: np.ndarray, n: int, M: int) -> np.ndarray:
    """Rows of canonical vectors for an array of hypothesis indices."""
    out = np.zeros((len(idx), n), dtype=np.int64)
    if n > 1:
        powers = M ** np.arange(n - 2, -1, -1, dtype=np.int64)
        out[:, 1:] = (np.asarray(idx, dtype=np.int64)[:, None] // powers) % M
    return out


def canonical_index(values, M: int) -> int:
    h = 0
    for v in np.asarray(values)[1:]:
        h = h * M + int(v)
    return h


@lru_cache(maxsize=8)
def _difference_block(graph: Graph, M: int, start: int, stop: int) -> np.ndarray:
    """Edge differences for canonical hypotheses start..stop-1 (cached: graphs repeat across trials)."""
    X = canonical_digits(np.arange(start, stop), graph.n, M)
    e = graph.edge_array()
    D = ((X[:, e[:, 1]] - X[:, e[:, 0]]) % M).astype(np.int8)
    D.setflags(write=False)
    return D


class _Scorer:
    """Vectorised likelihoods of many hypotheses against one observation."""

    def __init__(self, y: Observations, ch):
        self.M = as_edge_map(ch).M
        self.graph = y.graph
        self.edges = y.graph.edge_array()
        T = _edge_log_table(y, ch)
        impossible = np.isneginf(T)
        finite = np.where(impossible, 0.0, T)
        # one column per input symbol; counts and sums become matrix products
        self.imp = impossible.astype(np.float64)
        self.fin = finite

    def score_differences(self, D: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(number of impossible edges, finite log-likelihood part) per row of D."""
        if D.shape[1] == 0:
            z = np.zeros(D.shape[0])
            return z.astype(np.int64), z
        if self.M == 2:
            Df = D.astype(np.float64)
            bad = self.imp[:, 0].sum() + Df @ (self.imp[:, 1] - self.imp[:, 0])
            ll = self.fin[:, 0].sum() + Df @ (self.fin[:, 1] - self.fin[:, 0])
        else:
            bad = np.zeros(D.shape[0])
            ll = np.zeros(D.shape[0])
            for l in range(self.M):
                ind = (D == l).astype(np.float64)
                bad += ind @ self.imp[:, l]
                ll += ind @ self.fin[:, l]
        return np.rint(bad).astype(np.int64), ll

    def score(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        e = self.edges
        if len(e) == 0:
            return self.score_differences(np.zeros((len(X), 0), dtype=np.int8))
        return self.score_differences((X[:, e[:, 1]] - X[:, e[:, 0]]) % self.M)

    def score_block(self, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
        return self.score_differences(_difference_block(self.graph, self.M, start, stop))


def _better(bad_a, ll_a, bad_b, ll_b) -> bool:
    if bad_a != bad_b:
        return bad_a < bad_b
    return ll_a > ll_b + _tol(ll_a, ll_b)


def _tol(a: float, b: float) -> float:
    return TIE_RTOL * max(1.0, abs(a), abs(b))


def ml_decode_exhaustive(y: Observations, ch) -> DecodeResult:
    """Scan all M^(n-1) canonical hypotheses; ties within a relative 1e-9 go to the smallest index."""
    ecm = as_edge_map(ch)
    n, M = y.graph.n, ecm.M
    total = M ** (n - 1)
    if total > MAX_CANONICAL:
        raise SearchSpaceTooLarge(f"M^(n-1) = {M}^{n - 1} exceeds {MAX_CANONICAL}")
    scorer = _Scorer(y, ecm)
    bads, lls = [], []
    for start in range(0, total, _CHUNK):
        bad, ll = scorer.score_block(start, min(total, start + _CHUNK))
        bads.append(bad)
        lls.append(ll)
    bad = np.concatenate(bads)
    ll = np.concatenate(lls)
    best_bad = int(bad.min())
    feasible = bad == best_bad
    top = float(np.max(ll[feasible]))
    close = feasible & (ll >= top - _tol(top, top))
    ties = int(np.count_nonzero(close))
    best_idx = int(np.argmax(close))
    values = canonical_digits(np.array([best_idx]), n, M)[0]
    loglik = -math.inf if best_bad > 0 else float(ll[best_idx])
    return DecodeResult(Hypothesis(values), loglik, ties == 1, ties)


def all_canonical_scores(y: Observations, ch) -> np.ndarray:
    """Log-likelihood of every canonical hypothesis, in index order (-inf where impossible)."""
    ecm = as_edge_map(ch)
    n, M = y.graph.n, ecm.M
    total = M ** (n - 1)
    if total > MAX_CANONICAL:
        raise SearchSpaceTooLarge(f"M^(n-1) = {M}^{n - 1} exceeds {MAX_CANONICAL}")
    scorer = _Scorer(y, ecm)
    out = np.empty(total)
    for start in range(0, total, _CHUNK):
        stop = min(total, start + _CHUNK)
        bad, ll = scorer.score_block(start, stop)
        out[start:stop] = np.where(bad > 0, -np.inf, ll)
    return out


def ml_decode_local_search(y: Observations, ch, restarts: int = 8, seed: int = 0, stream: tuple = ()) -> DecodeResult:
    """Iterated conditional modes from the all-zero start plus ``restarts`` random starts.

    Each sweep visits coordinates 0..n-1 in order and moves a coordinate only
    when its conditional best value is strictly better.  Coordinate 0 is not
    pinned during the search: moving it is the same as shifting every other
    coordinate at once, which single-site moves cannot do.  Local optima are
    canonicalised afterwards.  The best one over all starts is returned;
    ``unique_argmax`` is always False.
    """
    if restarts < 0:
        raise BadParam("restarts must be >= 0")
    ecm = as_edge_map(ch)
    n, M = y.graph.n, ecm.M
    scorer = _Scorer(y, ecm)
    gen = rng.generator(seed, "local_search", *stream)
    starts = [np.zeros(n, dtype=np.int64)]
    for _ in range(restarts):
        s = gen.integers(0, M, size=n)
        s[0] = 0
        starts.append(s)

    best = None
    for x in starts:
        x = x.copy()
        bad, ll = scorer.score(x[None, :])
        cur = (int(bad[0]), float(ll[0]))
        changed = True
        while changed:
            changed = False
            for i in range(n):
                cand = np.repeat(x[None, :], M, axis=0)
                cand[:, i] = np.arange(M)
                b, l = scorer.score(cand)
                j_best = None
                for j in range(M):
                    if j == x[i]:
                        continue
                    ref = cur if j_best is None else (int(b[j_best]), float(l[j_best]))
                    if _better(int(b[j]), float(l[j]), *ref):
                        j_best = j
                if j_best is not None:
                    x[i] = j_best
                    cur = (int(b[j_best]), float(l[j_best]))
                    changed = True
        x = (x - x[0]) % M
        key = (cur[0], cur[1], x)
        if best is None or _better(cur[0], cur[1], best[0], best[1]) or (
            not _better(best[0], best[1], cur[0], cur[1]) and canonical_index(x, M) < canonical_index(best[2], M)
        ):
            best = key
    loglik = -math.inf if best[0] > 0 else best[1]
    return DecodeResult(Hypothesis(best[2]), loglik, False, 1)


def chernoff_pairwise_bound(disagreement_edges: int, d_alpha_min: float, alpha: float) -> float:
    """exp(-(1 - alpha) * disagreement_edges * D_alpha^min)."""
    if disagreement_edges < 0 or d_alpha_min < 0:
        raise BadParam("inputs must be nonnegative")
    if not 0.0 < alpha < 1.0:
        raise BadParam(f"alpha={alpha} outside (0, 1)")
    if disagreement_edges == 0 or d_alpha_min == 0:
        return 1.0
    return math.exp(-(1.0 - alpha) * disagreement_edges * d_alpha_min)
