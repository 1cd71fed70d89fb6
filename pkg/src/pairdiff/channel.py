"""Channel families over Z_M and sampling of edge observations.

An edge (i, j) with i > j carries one output symbol drawn from row
``(x_i - x_j) mod M`` of that edge's family.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.stats import binom

from . import rng
from .divergence import Pmf, format_matrix
from .errors import BadParam, BadShape, DegenerateChannel, InvalidPmf
from .graphlab import Graph, ring_distance


@dataclass(frozen=True, eq=False)
class ChannelFamily:
    """M transition rows over a shared output alphabet; row l is P_l."""

    rows: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        arr = np.array(self.rows, dtype=float)
        if arr.ndim != 2:
            raise BadShape("rows must form an M x |Y| matrix")
        if arr.shape[0] < 2:
            raise DegenerateChannel("a channel family needs M >= 2 rows")
        for r in arr:
            Pmf(r)
        arr.setflags(write=False)
        object.__setattr__(self, "rows", arr)

    @property
    def M(self) -> int:
        return self.rows.shape[0]

    @property
    def output_size(self) -> int:
        return self.rows.shape[1]

    def row(self, l: int) -> Pmf:
        return Pmf(self.rows[l % self.M])

    def log_rows(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.rows)

    def to_matrix_text(self) -> str:
        return format_matrix(self.rows)

    def __eq__(self, other) -> bool:
        return isinstance(other, ChannelFamily) and np.array_equal(self.rows, other.rows)

    def __hash__(self) -> int:
        return hash((self.rows.shape, self.rows.tobytes()))


@dataclass(frozen=True)
class EdgeChannelMap:
    """A default family plus per-edge overrides keyed by (lo, hi) with lo < hi."""

    default: ChannelFamily
    overrides: Mapping[tuple[int, int], ChannelFamily] = field(default_factory=dict)

    def __post_init__(self):
        norm = {}
        for (i, j), fam in dict(self.overrides).items():
            if fam.M != self.default.M:
                raise BadParam("all families in an edge map must share M")
            norm[(min(i, j), max(i, j))] = fam
        object.__setattr__(self, "overrides", norm)

    @classmethod
    def uniform(cls, family: ChannelFamily) -> "EdgeChannelMap":
        return cls(family, {})

    @property
    def M(self) -> int:
        return self.default.M

    def family(self, i: int, j: int) -> ChannelFamily:
        return self.overrides.get((min(i, j), max(i, j)), self.default)

    def families(self) -> list[ChannelFamily]:
        """Distinct families, default first."""
        out = [self.default]
        for fam in self.overrides.values():
            if fam not in out:
                out.append(fam)
        return out

    def families_for(self, g: Graph) -> tuple[list[ChannelFamily], np.ndarray]:
        """Distinct families used on g's edges and each edge's index into that list."""
        fams: list[ChannelFamily] = []
        lookup: dict[ChannelFamily, int] = {}
        idx = np.empty(g.n_edges, dtype=np.int64)
        for e, (i, j) in enumerate(g.edges):
            fam = self.family(i, j)
            if fam not in lookup:
                lookup[fam] = len(fams)
                fams.append(fam)
            idx[e] = lookup[fam]
        return fams, idx


def as_edge_map(ch) -> EdgeChannelMap:
    return ch if isinstance(ch, EdgeChannelMap) else EdgeChannelMap(ch)


# ---------------------------------------------------------------------------
# application families


def outlier_channel(M: int, p_true: float) -> ChannelFamily:
    """Row l is p_true * delta_l + (1 - p_true) * uniform over Z_M."""
    if M < 2:
        raise BadParam("M must be >= 2")
    if not 0.0 <= p_true <= 1.0:
        raise BadParam(f"p_true={p_true} outside [0, 1]")
    rows = np.full((M, M), (1.0 - p_true) / M)
    rows[np.diag_indices(M)] += p_true
    return ChannelFamily(rows, f"outlier(M={M}, p_true={p_true})")


def sbm_channel(a: float, b: float, n: int) -> ChannelFamily:
    """Two Bernoulli rows: edge probability a ln n / n within, b ln n / n across communities."""
    if n < 2:
        raise BadParam("n must be >= 2")
    p0 = a * math.log(n) / n
    p1 = b * math.log(n) / n
    for name, v in (("a", p0), ("b", p1)):
        if not 0.0 <= v <= 1.0:
            raise BadParam(f"{name} * ln n / n = {v} outside [0, 1]")
    return ChannelFamily(np.array([[1 - p0, p0], [1 - p1, p1]]), f"sbm(a={a}, b={b}, n={n})")


def haplotype_channel(theta: float, L: int) -> ChannelFamily:
    """L independent parity reads with flip rate theta, summarised by their count of ones.

    Row 0 is Binomial(L, theta) and row 1 is Binomial(L, 1 - theta) on {0..L}.
    """
    if not 0.0 <= theta <= 0.5:
        raise BadParam(f"theta={theta} outside [0, 1/2]")
    if int(L) != L or L < 1:
        raise BadParam("L must be a positive integer")
    k = np.arange(int(L) + 1)
    r0 = binom.pmf(k, int(L), theta)
    r1 = binom.pmf(k, int(L), 1.0 - theta)
    rows = np.stack([r0 / r0.sum(), r1 / r1.sum()])
    return ChannelFamily(rows, f"haplotype(theta={theta}, L={int(L)})")


def reads_for_distance(L: int, p_d: float) -> int:
    return max(1, int(math.floor(L * p_d + 0.5)))


def edge_channels_for_ring(
    n: int, w: int, circular: bool, theta: float, L: int, p_profile: Mapping[int, float]
) -> EdgeChannelMap:
    """Per-edge haplotype families with L * p_d reads (rounded half up, at least 1) at distance d."""
    prof = {int(k): float(v) for k, v in p_profile.items()}
    for d in range(1, w + 1):
        if d not in prof:
            raise BadParam(f"read profile missing distance {d}")
        if not 0.0 < prof[d] <= 1.0:
            raise BadParam(f"read fraction at distance {d} must lie in (0, 1]")
    cache = {d: haplotype_channel(theta, reads_for_distance(L, prof[d])) for d in range(1, w + 1)}
    default = cache[1]
    overrides = {}
    for i in range(n):
        for j in range(i + 1, n):
            d = ring_distance(i, j, n, circular)
            if 1 <= d <= w and cache[d] != default:
                overrides[(i, j)] = cache[d]
    return EdgeChannelMap(default, overrides)


# ---------------------------------------------------------------------------
# observations


@dataclass(frozen=True, eq=False)
class Observations:
    """One output symbol per edge, aligned with ``graph.edges`` (lo, hi) order.

    The stored symbol belongs to the ordered pair (hi, lo), i.e. it was drawn
    from row (x_hi - x_lo) mod M.
    """

    graph: Graph
    y: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.y, dtype=np.int64)
        if arr.shape != (self.graph.n_edges,):
            raise BadShape("need exactly one symbol per edge")
        arr.setflags(write=False)
        object.__setattr__(self, "y", arr)

    def as_dict(self) -> dict[tuple[int, int], int]:
        return {(j, i): int(s) for (i, j), s in zip(self.graph.edges, self.y)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("i,j,y\n")
        for (lo, hi), s in zip(self.graph.edges, self.y):
            buf.write(f"{hi},{lo},{int(s)}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, graph: Graph, text: str) -> "Observations":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].replace(" ", "") != "i,j,y":
            raise BadShape("observation CSV must start with header 'i,j,y'")
        pos = {e: k for k, e in enumerate(graph.edges)}
        y = np.full(graph.n_edges, -1, dtype=np.int64)
        for lineno, ln in enumerate(lines[1:], start=2):
            i, j, s = (int(v) for v in ln.split(","))
            key = (min(i, j), max(i, j))
            if key not in pos:
                raise BadShape(f"line {lineno}: ({i}, {j}) is not an edge")
            y[pos[key]] = s
        if np.any(y < 0):
            raise BadShape("observation CSV does not cover every edge")
        return cls(graph, y)


def edge_differences(g: Graph, x, M: int) -> np.ndarray:
    """(x_hi - x_lo) mod M for each canonical edge."""
    e = g.edge_array()
    x = np.asarray(x, dtype=np.int64)
    if len(e) == 0:
        return np.zeros(0, dtype=np.int64)
    return (x[e[:, 1]] - x[e[:, 0]]) % M


def sample_observations(g: Graph, ch, x, seed: int = 0, stream: tuple = ()) -> Observations:
    """Draw each edge's symbol by inverse CDF from its own counter-based uniform.

    The uniform for edge number e (canonical order) is element e of the
    stream keyed by (seed, "obs", *stream), so results do not depend on how
    edges are partitioned across workers.
    """
    ecm = as_edge_map(ch)
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (g.n,):
        raise BadShape(f"input vector must have length {g.n}")
    if np.any((x < 0) | (x >= ecm.M)):
        raise BadParam(f"input entries must lie in 0..{ecm.M - 1}")
    u = rng.uniforms(seed, ("obs",) + tuple(stream), 0, g.n_edges)
    diff = edge_differences(g, x, ecm.M)
    fams, fam_idx = ecm.families_for(g)
    y = np.empty(g.n_edges, dtype=np.int64)
    for f, fam in enumerate(fams):
        sel = fam_idx == f
        if not np.any(sel):
            continue
        cdf = _safe_cdf(fam.rows)
        rows = cdf[diff[sel]]
        y[sel] = np.sum(rows <= u[sel, None], axis=1)
    return Observations(g, y)


def _safe_cdf(rows: np.ndarray) -> np.ndarray:
    """Row CDFs pinned to exactly 1 from each row's last positive-probability symbol on."""
    cdf = np.cumsum(rows, axis=1)
    for r in range(rows.shape[0]):
        last = int(np.nonzero(rows[r] > 0)[0][-1])
        cdf[r, last:] = 1.0
    return np.minimum(cdf, 1.0)


def parse_channel_matrix(text: str, label: str = "matrix") -> ChannelFamily:
    from .divergence import parse_matrix

    try:
        return ChannelFamily(parse_matrix(text), label)
    except InvalidPmf as exc:
        raise BadParam(str(exc)) from exc
