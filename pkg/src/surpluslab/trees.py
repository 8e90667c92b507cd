"""Finite labeled trees with fixed degrees, and their exact samplers.

The sampler draws a uniform arrangement of the multiset {Vi x d_i} and
folds it into a tree by the sequential branching rule: walk the tuple,
opening a new edge to each unseen vertex and attaching the next unused
leaf label Sj whenever a vertex repeats; one final leaf closes the walk.
The enumeration oracle is independent of that construction: it decodes
every distinct arrangement as a Pruefer code, which is a bijection onto
the same set of trees.

Internally vertices are small ints (internal rank i -> +i, leaf Sj ->
-(j+1)); the public API speaks Vertex labels.
"""

from __future__ import annotations

import heapq
import math
from collections import Counter
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from .errors import TooLarge, TupleMismatch, UnknownVertex, ValidationError
from .labels import Vertex, internal, is_star, overflow, parse_vertex, star
from .params import KIND_TREE, DegreeSequence, PVector


class LabeledTree:
    """Immutable tree over Vertex labels, stored as an adjacency map."""

    __slots__ = ("_adj",)

    def __init__(self, edges: Sequence[Tuple[Vertex, Vertex]]):
        adj = {}
        for u, v in edges:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        if len(adj) != len(edges) + 1:
            raise ValidationError("edge list does not describe a tree")
        self._adj = {v: tuple(ns) for v, ns in adj.items()}
        if edges and not self._connected():
            raise ValidationError("edge list does not describe a connected tree")

    def _connected(self) -> bool:
        start = next(iter(self._adj))
        seen = {start}
        stack = [start]
        while stack:
            for w in self._adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self._adj)

    def vertices(self):
        return self._adj.keys()

    def __contains__(self, v):
        return v in self._adj

    def neighbors(self, v: Vertex):
        return self._adj[v]

    def degree(self, v: Vertex) -> int:
        return len(self._adj[v])

    def leaves(self):
        return [v for v, ns in self._adj.items() if len(ns) == 1]

    def star_leaves(self):
        return sorted(v for v in self._adj if is_star(v))

    def father(self, leaf: Vertex) -> Vertex:
        ns = self._adj[leaf]
        if len(ns) != 1:
            raise ValidationError(f"{leaf} is not a leaf")
        return ns[0]

    def edges(self):
        out = []
        for u, ns in self._adj.items():
            for v in ns:
                if u < v:
                    out.append((u, v))
        return out

    def edge_key(self):
        return tuple(sorted(self.edges()))

    def __eq__(self, other):
        return isinstance(other, LabeledTree) and self.edge_key() == other.edge_key()

    def __hash__(self):
        return hash(self.edge_key())

    def __len__(self):
        return len(self._adj)

    def __repr__(self):
        return f"LabeledTree({len(self._adj)} vertices)"

    def distances_from(self, source: Vertex) -> dict:
        if source not in self._adj:
            raise UnknownVertex(f"{source} not in tree")
        dist = {source: 0}
        frontier = [source]
        while frontier:
            nxt = []
            for u in frontier:
                du = dist[u]
                for w in self._adj[u]:
                    if w not in dist:
                        dist[w] = du + 1
                        nxt.append(w)
            frontier = nxt
        return dist

    def distance(self, a: Vertex, b: Vertex) -> int:
        return self.distances_from(a)[b]

    def relabel(self, mapping) -> "LabeledTree":
        return LabeledTree([(mapping.get(u, u), mapping.get(v, v))
                            for u, v in self.edges()])

    def to_json(self) -> str:
        import json
        edges = sorted([u.label(), v.label()] for u, v in self.edges())
        return json.dumps({"edges": edges}, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "LabeledTree":
        import json
        obj = json.loads(text)
        return LabeledTree([(parse_vertex(a), parse_vertex(b))
                            for a, b in obj["edges"]])


def tree_distance_matrix(tree: LabeledTree, marks: Sequence[Vertex]) -> np.ndarray:
    """Edge-count distances between the marked vertices."""
    n = len(marks)
    out = np.zeros((n, n), dtype=np.int64)
    for i, m in enumerate(marks):
        dist = tree.distances_from(m)
        for j, m2 in enumerate(marks):
            if m2 not in dist:
                raise UnknownVertex(f"{m2} not in tree")
            out[i, j] = dist[m2]
    return out


# ---------------------------------------------------------------------------
# int-encoded kernels


def _int_to_vertex(x: int) -> Vertex:
    return internal(x) if x > 0 else star(-x - 1)


def _vertex_to_int(v: Vertex) -> int:
    if v.kind == "V":
        return v.index
    if v.kind == "S":
        return -(v.index + 1)
    raise ValidationError("only internal/star labels occur in degree-sequence trees")


def _base_multiset(seq: DegreeSequence) -> List[int]:
    return [i + 1 for i, d in enumerate(seq.degrees) for _ in range(d)]


def _stick_break_int_edges(entries: Sequence[int]) -> List[Tuple[int, int]]:
    """Branching walk over a tuple of internal-vertex ints; leaves are < 0."""
    if not entries:
        return [(-2, -1)]
    prev = entries[0]
    edges = [(-1, prev)]
    seen = {prev}
    next_star = 2  # S1 encodes to -2
    for i in range(1, len(entries)):
        a = entries[i]
        if a in seen:
            edges.append((-next_star, prev))
            next_star += 1
        else:
            edges.append((prev, a) if prev < a else (a, prev))
            seen.add(a)
        prev = a
    edges.append((-next_star, prev))
    return edges


def _stick_break_key(entries: Sequence[int]) -> tuple:
    return tuple(sorted(_stick_break_int_edges(entries)))


def sample_d_tuple(seq: DegreeSequence, rng: np.random.Generator) -> Tuple[Vertex, ...]:
    """Uniform arrangement of the multiset {Vi with multiplicity d_i}."""
    if seq.kind != KIND_TREE:
        raise ValidationError("tuples are drawn for tree-kind sequences")
    base = _base_multiset(seq)
    perm = rng.permutation(len(base))
    return tuple(internal(base[j]) for j in perm)


def stick_break_tree(seq: DegreeSequence, tup: Sequence[Vertex]) -> LabeledTree:
    """Deterministic tree of a tuple; raises TupleMismatch on bad multiplicities."""
    if seq.kind != KIND_TREE:
        raise ValidationError("stick-breaking runs on tree-kind sequences")
    want = Counter(_base_multiset(seq))
    got = Counter(_vertex_to_int(v) for v in tup)
    if want != got:
        raise TupleMismatch("tuple multiplicities disagree with the degree sequence")
    edges = _stick_break_int_edges([_vertex_to_int(v) for v in tup])
    return LabeledTree([(_int_to_vertex(u), _int_to_vertex(v)) for u, v in edges])


def sample_d_tree(seq: DegreeSequence, rng: np.random.Generator) -> LabeledTree:
    return stick_break_tree(seq, sample_d_tuple(seq, rng))


def sample_d_tree_keys(seq: DegreeSequence, n_samples: int,
                       rng: np.random.Generator, batch: int = 20000) -> Counter:
    """Bulk sampler: canonical edge keys of n_samples trees.

    Same tuple law and branching kernel as sample_d_tree, with the
    shuffles vectorized; used by the large uniformity checks.
    """
    if seq.kind != KIND_TREE:
        raise ValidationError("tree sampling needs a tree-kind sequence")
    base = np.array(_base_multiset(seq), dtype=np.int64)
    counts = Counter()
    left = n_samples
    while left > 0:
        b = min(batch, left)
        left -= b
        if len(base) == 0:
            counts[((-2, -1),)] += b
            continue
        rows = rng.permuted(np.broadcast_to(base, (b, len(base))), axis=1)
        for row in rows.tolist():
            counts[_stick_break_key(row)] += 1
    return counts


def tree_from_key(key) -> LabeledTree:
    return LabeledTree([(_int_to_vertex(u), _int_to_vertex(v)) for u, v in key])


# ---------------------------------------------------------------------------
# enumeration oracle (Pruefer decoding of multiset arrangements)


def tree_count(seq: DegreeSequence) -> int:
    """(s-2)! / prod(d_i!) distinct trees."""
    n = math.factorial(seq.s - 2)
    for d in seq.degrees:
        n //= math.factorial(d)
    return n


def multiset_arrangements(items: Sequence[int]) -> Iterator[Tuple[int, ...]]:
    """All distinct arrangements of a multiset, lexicographic order."""
    counts = Counter(items)
    keys = sorted(counts)
    n = len(items)
    slot: List[int] = []

    def rec():
        if len(slot) == n:
            yield tuple(slot)
            return
        for k in keys:
            if counts[k] > 0:
                counts[k] -= 1
                slot.append(k)
                yield from rec()
                slot.pop()
                counts[k] += 1

    yield from rec()


def _prufer_decode(code: Sequence[int], vertices: Sequence[int]):
    degree = {v: 1 for v in vertices}
    for c in code:
        degree[c] += 1
    leaves = [v for v in vertices if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for c in code:
        u = heapq.heappop(leaves)
        edges.append((u, c) if u < c else (c, u))
        degree[c] -= 1
        if degree[c] == 1:
            heapq.heappush(leaves, c)
    u = heapq.heappop(leaves)
    v = heapq.heappop(leaves)
    edges.append((u, v) if u < v else (v, u))
    return edges


def _vertex_ints(seq: DegreeSequence) -> List[int]:
    internals = [i + 1 for i, d in enumerate(seq.degrees) if d > 0]
    stars = [-(j + 1) for j in range(seq.n_zero)]
    return internals + stars


def enumerate_d_tree_keys(seq: DegreeSequence, cap: int = 250000) -> Iterator[tuple]:
    if seq.kind != KIND_TREE:
        raise ValidationError("enumeration needs a tree-kind sequence")
    count = tree_count(seq)
    if count > cap:
        raise TooLarge(f"{count} trees exceeds the enumeration cap {cap}")
    vertices = _vertex_ints(seq)
    for code in multiset_arrangements(_base_multiset(seq)):
        yield tuple(sorted(_prufer_decode(code, vertices)))


def enumerate_d_trees(seq: DegreeSequence, cap: int = 250000) -> Iterator[LabeledTree]:
    """Every tree with the given degrees exactly once (Pruefer bijection)."""
    for key in enumerate_d_tree_keys(seq, cap):
        yield tree_from_key(key)


# ---------------------------------------------------------------------------
# trees grown from a probability vector


class PTreeGrowth:
    """Incremental branching walk driven by i.i.d. draws from a PVector.

    Draws landing in the p_inf remainder create fresh overflow vertices,
    so they never repeat.  The instance records the raw draw sequence and
    the father of each leaf label in placement order.
    """

    def __init__(self, pvec: PVector, rng: np.random.Generator):
        self.pvec = pvec
        self.rng = rng
        self._cum = np.cumsum(np.asarray(pvec.p, dtype=float))
        self.edges: List[Tuple[Vertex, Vertex]] = []
        self.record: List[Vertex] = []
        self.star_fathers: List[Vertex] = []
        self._seen = set()
        self._prev = None
        self._step = 0

    @property
    def n_stars(self) -> int:
        return len(self.star_fathers)

    def _draw(self) -> Vertex:
        self._step += 1
        u = self.rng.random()
        j = int(np.searchsorted(self._cum, u, side="right"))
        if j >= len(self._cum):
            return overflow(self._step)
        return internal(j + 1)

    def step(self):
        b = self._draw()
        self.record.append(b)
        if self._prev is None:
            self.edges.append((star(0), b))
            self._seen.add(b)
        elif b not in self._seen:
            self.edges.append((self._prev, b))
            self._seen.add(b)
        else:
            s = star(len(self.star_fathers) + 1)
            self.edges.append((self._prev, s))
            self.star_fathers.append(self._prev)
        self._prev = b

    def grow_until_stars(self, n_stars: int, max_steps: int = 10 ** 7):
        while len(self.star_fathers) < n_stars:
            if self._step >= max_steps:
                raise ValidationError("star quota not reached within max_steps")
            self.step()

    def tree(self) -> LabeledTree:
        return LabeledTree(self.edges)


def sample_p_tree_prefix(pvec: PVector, n_steps: int, rng: np.random.Generator):
    """Tree after n_steps draws, plus the raw draw record."""
    if n_steps < 1:
        raise ValidationError("n_steps must be >= 1")
    growth = PTreeGrowth(pvec, rng)
    for _ in range(n_steps):
        growth.step()
    return growth.tree(), tuple(growth.record)
