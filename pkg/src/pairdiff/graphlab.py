"""Measurement graphs and their cut statistics.

Subset enumeration works on bitmasks, so exhaustive routines refuse graphs
with more than 24 vertices instead of approximating.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from . import rng
from .errors import (
    BadParam,
    BadShape,
    BadWindow,
    Disconnected,
    MissingCoordinates,
    TooLargeToEnumerate,
)

ENUMERATION_HARD_LIMIT = 24
MAX_HYPOTHESES = 2**24


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph on vertices ``0..n-1``.

    ``edges`` holds pairs ``(i, j)`` with ``i < j`` in sorted order; that
    order is the canonical edge order used for sampling and storage.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[int, ...], ...] = field(repr=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        if n < 1:
            raise BadShape("graph needs at least one vertex")
        seen = set()
        for e in edges:
            i, j = int(e[0]), int(e[1])
            if i == j:
                raise BadShape(f"self-loop at vertex {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise BadShape(f"edge ({i}, {j}) outside 0..{n - 1}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise BadShape(f"duplicate edge {key}")
            seen.add(key)
        ordered = tuple(sorted(seen))
        adj: list[list[int]] = [[] for _ in range(n)]
        for i, j in ordered:
            adj[i].append(j)
            adj[j].append(i)
        return cls(n, ordered, tuple(tuple(sorted(a)) for a in adj))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    def edge_array(self) -> np.ndarray:
        """Edges as an (|E|, 2) integer array, rows (lo, hi)."""
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.array(self.edges, dtype=np.int64)

    def neighbor_masks(self) -> list[int]:
        return [sum(1 << u for u in a) for a in self.adjacency]

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        seen = {0}
        todo = deque([0])
        while todo:
            v = todo.popleft()
            for u in self.adjacency[v]:
                if u not in seen:
                    seen.add(u)
                    todo.append(u)
        return len(seen) == self.n

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self.n == other.n and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.n, self.edges))


# ---------------------------------------------------------------------------
# generators


def _pairs(n: int) -> np.ndarray:
    lo, hi = np.triu_indices(n, k=1)
    return np.stack([lo, hi], axis=1)


def gen_erdos_renyi(n: int, p: float, seed: int = 0, stream: tuple = ()) -> Graph:
    """Each of the n(n-1)/2 pairs is an edge independently with probability p."""
    if n < 1:
        raise BadShape("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise BadParam(f"edge probability {p} outside [0, 1]")
    pairs = _pairs(n)
    u = rng.generator(seed, "erdos_renyi", *stream).random(len(pairs))
    return Graph.from_edges(n, pairs[u < p].tolist())


def sphere_points(n: int, seed: int = 0, stream: tuple = ()) -> np.ndarray:
    """n points uniform on the unit 2-sphere (normalised Gaussian vectors)."""
    z = rng.generator(seed, "sphere", *stream).standard_normal((n, 3))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return z / norms


def gen_geometric_sphere(
    n: int, r: float, seed: int = 0, stream: tuple = (), return_coords: bool = False
):
    """Random geometric graph on the sphere: edge iff chord distance <= r."""
    if n < 1:
        raise BadShape("n must be >= 1")
    if r < 0:
        raise BadParam("radius must be >= 0")
    pts = sphere_points(n, seed, stream)
    pairs = _pairs(n)
    if r >= 2.0:
        keep = np.ones(len(pairs), dtype=bool)
    else:
        d = np.linalg.norm(pts[pairs[:, 0]] - pts[pairs[:, 1]], axis=1)
        keep = d <= r
    g = Graph.from_edges(n, pairs[keep].tolist())
    return (g, pts) if return_coords else g


def gen_ring(n: int, w: int, circular: bool = True) -> Graph:
    """Vertices joined when their (cyclic, if ``circular``) index distance is at most w."""
    if n < 2 or w < 1 or 2 * w >= n:
        raise BadWindow(f"need n >= 2 and 1 <= w < n/2, got n={n}, w={w}")
    edges = []
    for i, j in combinations(range(n), 2):
        d = j - i
        if circular:
            d = min(d, n - d)
        if d <= w:
            edges.append((i, j))
    return Graph.from_edges(n, edges)


def ring_distance(i: int, j: int, n: int, circular: bool) -> int:
    d = abs(i - j)
    return min(d, n - d) if circular else d


def ring_coordinates(n: int, circular: bool = True) -> np.ndarray:
    """Positions consistent with ring adjacency: a circle when circular, else a line."""
    if not circular:
        return np.arange(n, dtype=float)[:, None]
    t = 2.0 * np.pi * np.arange(n) / n
    return np.stack([np.cos(t), np.sin(t)], axis=1)


def gen_complete(n: int) -> Graph:
    if n < 2:
        raise BadShape("complete graph needs n >= 2")
    return Graph.from_edges(n, _pairs(n).tolist())


def gen_grid(rows: int, cols: int) -> Graph:
    """rows x cols lattice with 4-neighbour adjacency; vertex id = r * cols + c."""
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise BadShape(f"grid {rows}x{cols} needs at least two vertices")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return Graph.from_edges(rows * cols, edges)


def gen_two_cliques_bridge(n: int) -> Graph:
    """Two disjoint cliques on n/2 vertices joined by the single edge (n/2 - 1, n/2)."""
    if n < 4 or n % 2:
        raise BadShape("bridge graph needs an even n >= 4")
    h = n // 2
    edges = [(i, j) for i, j in combinations(range(h), 2)]
    edges += [(h + i, h + j) for i, j in combinations(range(h), 2)]
    edges.append((h - 1, h))
    return Graph.from_edges(n, edges)


# ---------------------------------------------------------------------------
# min-cut


def stoer_wagner(g: Graph) -> int:
    """Global minimum cut of a unit-weight graph (0 when disconnected)."""
    n = g.n
    if n < 2:
        raise BadShape("min-cut needs n >= 2")
    w = np.zeros((n, n), dtype=np.int64)
    for i, j in g.edges:
        w[i, j] = w[j, i] = 1
    active = list(range(n))
    best = None
    while len(active) > 1:
        idx = np.array(active)
        sub = w[np.ix_(idx, idx)]
        m = len(active)
        used = np.zeros(m, dtype=bool)
        conn = np.zeros(m, dtype=np.int64)
        prev = last = -1
        for _ in range(m):
            cand = np.where(used, -1, conn)
            nxt = int(np.argmax(cand))
            used[nxt] = True
            conn += sub[nxt]
            prev, last = last, nxt
        phase_cut = int(sub[last].sum())
        best = phase_cut if best is None else min(best, phase_cut)
        s, t = active[prev], active[last]
        w[s, :] += w[t, :]
        w[:, s] += w[:, t]
        w[s, s] = 0
        active.remove(t)
    return int(best)


def mincut_bruteforce(g: Graph) -> int:
    """Minimum over all proper vertex subsets S containing vertex 0 of e(S, S^c)."""
    if g.n > ENUMERATION_HARD_LIMIT:
        raise TooLargeToEnumerate(f"n={g.n} exceeds {ENUMERATION_HARD_LIMIT}")
    best = None
    full = (1 << g.n) - 1
    for mask in range(1, full, 2):
        c = sum(1 for i, j in g.edges if ((mask >> i) & 1) != ((mask >> j) & 1))
        best = c if best is None else min(best, c)
    return int(best)


# ---------------------------------------------------------------------------
# cut census


def _check_enumerable(g: Graph, limit: int) -> None:
    limit = min(limit, ENUMERATION_HARD_LIMIT)
    if g.n > limit:
        raise TooLargeToEnumerate(f"n={g.n} exceeds the enumeration limit {limit}")


def subset_cut_sizes(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Cut sizes and sizes of every subset S of the first n-1 vertices.

    Entry ``s`` describes the cut class of the bitmask ``s``; vertex n-1 is
    always on the complement side, so every unordered cut class {S, S^c}
    appears exactly once and ``s = 0`` is the trivial class.
    """
    n = g.n
    k = n - 1
    cut = np.zeros(1 << k, dtype=np.int32)
    deg = g.degrees()
    masks = g.neighbor_masks()
    for v in range(k):
        lower = masks[v] & ((1 << v) - 1)
        idx = np.arange(1 << v, dtype=np.uint32)
        shared = np.bitwise_count(idx & np.uint32(lower)).astype(np.int32)
        cut[1 << v : 1 << (v + 1)] = cut[: 1 << v] + int(deg[v]) - 2 * shared
    sizes = np.bitwise_count(np.arange(1 << k, dtype=np.uint32)).astype(np.int32)
    return cut, sizes


@dataclass(frozen=True)
class CutProfile:
    n: int
    n_edges: int
    mincut: int
    d_min: int
    d_avg: float
    d_max: int
    census: dict[int, int]
    tau_k: dict[int, float]
    tau_cut: float
    connected: bool
    edge_expansion: float

    def census_at(self, m: int) -> int:
        """|N(m)| for any m >= 0 (the stored table is cumulative)."""
        if not self.census:
            raise TooLargeToEnumerate("census was not enumerated")
        keys = [k for k in self.census if k <= m]
        return self.census[max(keys)] if keys else 0

    def summary_lines(self) -> list[str]:
        def fmt(v):
            return repr(float(v)) if isinstance(v, float) else str(v)

        return [
            f"n={self.n}",
            f"edges={self.n_edges}",
            f"connected={str(self.connected).lower()}",
            f"mincut={self.mincut}",
            f"d_min={self.d_min}",
            f"d_avg={fmt(self.d_avg)}",
            f"d_max={self.d_max}",
            f"edge_expansion={fmt(self.edge_expansion)}",
            f"tau_cut={fmt(self.tau_cut)}",
        ] + [f"tau_k.{k}={fmt(v)}" for k, v in sorted(self.tau_k.items())]


def cut_profile(g: Graph, enumerate_limit: int = ENUMERATION_HARD_LIMIT, strict: bool = True) -> CutProfile:
    """Degree statistics, min-cut, cut census |N(m)| and the tau_k table.

    With ``strict=False`` a disconnected or oversized graph yields a partial
    profile (NaN where a quantity is undefined) instead of raising.
    """
    if g.n < 2:
        raise BadShape("cut profile needs n >= 2")
    deg = g.degrees()
    d_min, d_max, d_avg = int(deg.min()), int(deg.max()), float(deg.mean())
    connected = g.is_connected()
    if not connected and strict:
        raise Disconnected("graph is disconnected")
    too_big = g.n > min(enumerate_limit, ENUMERATION_HARD_LIMIT)
    if too_big:
        if strict:
            _check_enumerable(g, enumerate_limit)
        mc = stoer_wagner(g) if connected else 0
        return CutProfile(g.n, g.n_edges, mc, d_min, d_avg, d_max, {}, {}, math.nan, connected, math.nan)

    cut, sizes = subset_cut_sizes(g)
    counts = np.cumsum(np.bincount(cut, minlength=g.n_edges + 1))
    census = {m: int(c) for m, c in enumerate(counts)}
    nontrivial = cut[1:]
    mc = int(nontrivial.min())
    small_side = np.minimum(sizes[1:], g.n - sizes[1:])
    expansion = float(np.min(nontrivial / small_side))

    tau_k: dict[int, float] = {}
    tau_cut = math.nan
    if mc > 0:
        total = 1 << (g.n - 1)
        k_max = math.ceil(g.n * g.n / mc)
        for k in range(1, k_max + 1):
            size = census[min(k * mc, g.n_edges)]
            tau_k[k] = math.log(size) / k
            if size == total:
                break
        tau_cut = max(tau_k.values())
    return CutProfile(g.n, g.n_edges, mc, d_min, d_avg, d_max, census, tau_k, tau_cut, connected, expansion)


def edge_expansion(g: Graph) -> float:
    """min over nonempty S with |S| <= n/2 of e(S, S^c) / |S|."""
    _check_enumerable(g, ENUMERATION_HARD_LIMIT)
    if g.n < 2:
        raise BadShape("edge expansion needs n >= 2")
    cut, sizes = subset_cut_sizes(g)
    small = np.minimum(sizes[1:], g.n - sizes[1:])
    return float(np.min(cut[1:] / small))


def tau_bound_expander(g: Graph, profile: CutProfile | None = None) -> float:
    """Upper bound (mincut / h_G) ln n + ln 2 on the cut-homogeneity exponent."""
    profile = profile or cut_profile(g)
    if profile.edge_expansion <= 0:
        raise Disconnected("edge expansion is zero")
    return profile.mincut / profile.edge_expansion * math.log(g.n) + math.log(2.0)


@dataclass(frozen=True)
class GeometricHomogeneityParams:
    rho: float
    kappa: float

    def __post_init__(self):
        if not self.rho > 0:
            raise BadParam("rho must be > 0")
        if not 0 < self.kappa < 0.5:
            raise BadParam("kappa must lie in (0, 1/2)")


@dataclass(frozen=True)
class HomogeneityCheck:
    cond_a: bool
    cond_b: bool
    bound: float


def verify_geometric_homogeneity(
    g: Graph, params: GeometricHomogeneityParams, coords, mincut: int | None = None
) -> HomogeneityCheck:
    """Check the shared-neighbour conditions that bound tau_cut by (8 / (kappa rho)) ln(2n).

    (a) every edge's endpoints share at least rho*mincut neighbours;
    (b) for each edge (u, v), in both orientations, the floor(kappa*rho*mincut)
        common neighbours closest to v each miss at most rho*mincut/2 of v's
        neighbours.  Distance ties are broken by vertex id.
    """
    if coords is None:
        raise MissingCoordinates("coordinates are required for nearest-neighbour ordering")
    pos = np.asarray(coords, dtype=float)
    if pos.ndim == 1:
        pos = pos[:, None]
    if pos.shape[0] != g.n:
        raise MissingCoordinates(f"expected {g.n} coordinate rows, got {pos.shape[0]}")
    if mincut is None:
        mincut = stoer_wagner(g)
    nbrs = [set(a) for a in g.adjacency]
    need_shared = params.rho * mincut
    take = math.floor(params.kappa * params.rho * mincut)
    max_missing = 0.5 * params.rho * mincut

    cond_a = cond_b = True
    for u, v in g.edges:
        common = nbrs[u] & nbrs[v]
        if len(common) < need_shared:
            cond_a = False
        for a, b in ((u, v), (v, u)):
            ranked = sorted(common, key=lambda w: (float(np.linalg.norm(pos[w] - pos[b])), w))
            for w in ranked[:take]:
                if len(nbrs[b] - nbrs[w]) > max_missing:
                    cond_b = False
                    break
    bound = 8.0 / (params.kappa * params.rho) * math.log(2 * g.n)
    return HomogeneityCheck(cond_a, cond_b, bound)


def _disagreement_counts(g: Graph, M: int) -> np.ndarray:
    """Disagreement-edge count for every canonical vector (w_0 = 0), by index order."""
    n = g.n
    total = M ** (n - 1)
    edges = g.edge_array()
    out = np.zeros(total, dtype=np.int32)
    chunk = 1 << 16
    powers = M ** np.arange(n - 2, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        digits = np.zeros((len(idx), n), dtype=np.int8)
        digits[:, 1:] = (idx[:, None] // powers) % M
        if len(edges):
            out[start : start + len(idx)] = np.count_nonzero(
                digits[:, edges[:, 0]] != digits[:, edges[:, 1]], axis=1
            )
    return out


def count_hypothesis_classes(g: Graph, M: int, k: int, mincut: int | None = None) -> int:
    """|A_k|: vectors in Z_M^n, other than the M constant ones, with fewer than k*mincut disagreeing edges."""
    if M < 2 or k < 1:
        raise BadParam("need M >= 2 and k >= 1")
    if M**g.n > MAX_HYPOTHESES:
        raise TooLargeToEnumerate(f"M^n = {M}^{g.n} exceeds {MAX_HYPOTHESES}")
    if mincut is None:
        mincut = stoer_wagner(g)
    counts = _disagreement_counts(g, M)
    # index 0 is the all-zero vector; disagreement counts are offset invariant
    return int(M * np.count_nonzero(counts[1:] < k * mincut))


def class_count_rate_bound(M: int, k: int, mincut: int, tau_cut: float) -> float:
    """Right-hand side 2 ln M + 2 ln(2 k mincut) + 4 tau_cut of the per-k class-size bound."""
    return 2 * math.log(M) + 2 * math.log(2 * k * mincut) + 4 * tau_cut


# ---------------------------------------------------------------------------
# file format


def format_graph(g: Graph) -> str:
    return "\n".join([str(g.n)] + [f"{i} {j}" for i, j in g.edges]) + "\n"


def parse_graph(text: str) -> Graph:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise BadShape("empty graph file")
    try:
        n = int(lines[0])
    except ValueError as exc:
        raise BadShape(f"line 1: expected vertex count, got {lines[0]!r}") from exc
    edges = []
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 2:
            raise BadShape(f"edge line {lineno}: expected 'i j'")
        i, j = int(parts[0]), int(parts[1])
        if not i < j:
            raise BadShape(f"edge line {lineno}: require i < j")
        edges.append((i, j))
    return Graph.from_edges(n, edges)


def build_graph(spec: dict, seed: int = 0, stream: tuple = ()) -> Graph:
    """Construct a graph from a spec dict with a ``model`` key and its parameters."""
    model = spec.get("model")
    try:
        if model == "complete":
            return gen_complete(int(spec["n"]))
        if model == "ring":
            return gen_ring(int(spec["n"]), int(spec["w"]), bool(spec.get("circular", True)))
        if model == "grid":
            return gen_grid(int(spec["rows"]), int(spec["cols"]))
        if model == "bridge":
            return gen_two_cliques_bridge(int(spec["n"]))
        if model in ("er", "erdos_renyi"):
            return gen_erdos_renyi(int(spec["n"]), float(spec["p"]), seed, stream)
        if model in ("geometric", "sphere"):
            return gen_geometric_sphere(int(spec["n"]), float(spec["r"]), seed, stream)
    except KeyError as exc:
        raise BadParam(f"graph model {model!r} needs parameter {exc.args[0]!r}") from exc
    raise BadParam(f"unknown graph model {model!r}")


def is_random_model(spec: dict) -> bool:
    return spec.get("model") in ("er", "erdos_renyi", "geometric", "sphere")
