"""Exact samplers for connected multigraphs with fixed degrees and surplus,
the configuration model, multiplicative (multi)graphs, and the edgepoint
transforms, each paired with a small-instance enumeration oracle.

The surplus-k sampler draws a uniform tree for the degree sequence with 2k
extra zeros, designates 2k of its exchangeable leaf labels as S1..S2k by a
fixed relabelling, accepts with probability bias/((k+1)! 2^k), and glues
the pairs.  For sequences whose tuple support is small the per-tuple
(bias, glued graph) values are memoized once and tuples are drawn as
uniform arrangement indices, which is the same law as shuffling.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import (OddSum, TooLarge, ValidationError, VertexCollision)
from .labels import Vertex, internal, is_star, star
from .multigraph import Multigraph, bias_bound, glue_tree_leaves
from .params import (KIND_HALF_EDGE, KIND_SURPLUS, DegreeSequence,
                     PVector, as_fraction, validate)
from .trees import (LabeledTree, PTreeGrowth, _base_multiset,
                    _stick_break_int_edges, multiset_arrangements, tree_count)

# ---------------------------------------------------------------------------
# bias evaluation straight from a tree adjacency


def _tree_path_edges(adj, a, b):
    """Edge set (as frozensets) of the unique a-b path."""
    if a == b:
        return set()
    parent = {a: None}
    frontier = [a]
    while b not in parent:
        nxt = []
        for u in frontier:
            for w in adj[u]:
                if w not in parent:
                    parent[w] = u
                    nxt.append(w)
        frontier = nxt
    out = set()
    cur = b
    while parent[cur] is not None:
        out.add(frozenset((cur, parent[cur])))
        cur = parent[cur]
    return out


def _bias_from_fathers(adj, fathers, k):
    """(bias, partial-gluing squares, leaf pair distances) for glue fathers.

    fathers[2i], fathers[2i+1] are the attachment vertices of the i-th
    glued leaf pair.  Matches multigraph.bias exactly: the square after
    gluing pairs 1..i is |union of father paths| + i, and the symmetry
    factor multiplies loop powers and edge-multiplicity factorials.
    """
    path_sets = []
    dists = []
    for i in range(k):
        es = _tree_path_edges(adj, fathers[2 * i], fathers[2 * i + 1])
        path_sets.append(es)
        dists.append(len(es) + 2)
    union = set()
    squares = []
    for i in range(k):
        union |= path_sets[i]
        squares.append(len(union) + i + 1)
    glue = Counter(frozenset((fathers[2 * i], fathers[2 * i + 1]))
                   for i in range(k))
    circ_val = 1
    for key, extra in glue.items():
        if len(key) == 1:
            circ_val *= 2 ** extra * math.factorial(extra)
        else:
            a, b = tuple(key)
            existing = 1 if b in adj[a] else 0
            circ_val *= math.factorial(existing + extra)
    if k == 0:
        return Fraction(1), [], []
    return Fraction(circ_val, math.prod(squares)), squares, dists


def _int_adjacency(edges):
    adj: Dict[int, list] = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    return adj


def _designated_vertex(x: int, two_k: int) -> Vertex:
    """Decode kernel ints, relabelling so the glued leaves are S1..S2k.

    Original leaf labels Sj are exchangeable under the uniform tree law,
    so the fixed shift (S0..S_{2k-1} -> S1..S2k, S_{2k} -> S0) preserves
    uniformity while giving the glued pairs their canonical names.
    """
    if x > 0:
        return internal(x)
    j = -x - 1
    if j < two_k:
        return star(j + 1)
    if j == two_k:
        return star(0)
    return star(j)


# ---------------------------------------------------------------------------
# (D,k)-graph sampling


@dataclass
class DkTable:
    """Memoized per-tuple outcomes for one surplus-k degree sequence."""
    seq: DegreeSequence
    k: int
    bound: int
    accept: np.ndarray
    bias: list
    squares: list
    dists: list
    graphs: list
    key_ids: np.ndarray
    keys: list

    @property
    def n_tuples(self) -> int:
        return len(self.bias)


def _check_surplus_kind(seq: DegreeSequence, k=None) -> int:
    if seq.kind != KIND_SURPLUS:
        raise ValidationError("sample_dk_graph needs a surplus-kind sequence")
    if k is not None and k != seq.k:
        raise ValidationError(f"k={k} disagrees with the sequence's k={seq.k}")
    return seq.k


def build_dk_table(seq: DegreeSequence, cap: int = 30000) -> DkTable:
    k = _check_surplus_kind(seq)
    tree_seq = seq.to_tree_kind()
    count = tree_count(tree_seq)
    if count > cap:
        raise TooLarge(f"{count} tuples exceeds the table cap {cap}")
    bound = bias_bound(k)
    pairs = [(star(2 * i - 1), star(2 * i)) for i in range(1, k + 1)]
    accept, biases, squares_all, dists_all, graphs, key_ids, keys = \
        [], [], [], [], [], [], []
    key_index: Dict[tuple, int] = {}
    for arrangement in multiset_arrangements(_base_multiset(tree_seq)):
        edges = _stick_break_int_edges(arrangement)
        adj = _int_adjacency(edges)
        fathers = [adj[-(j + 1)][0] for j in range(2 * k)]
        b, squares, dists = _bias_from_fathers(adj, fathers, k)
        assert b <= bound, "bias bound violated"
        tree = LabeledTree([(_designated_vertex(u, 2 * k),
                             _designated_vertex(v, 2 * k)) for u, v in edges])
        glued = glue_tree_leaves(tree, pairs) if k else Multigraph.from_tree(tree)
        key = glued.leaf_canonical_key()
        if key not in key_index:
            key_index[key] = len(keys)
            keys.append(key)
        accept.append(float(b) / bound)
        biases.append(b)
        squares_all.append(squares)
        dists_all.append(dists)
        graphs.append(glued)
        key_ids.append(key_index[key])
    return DkTable(seq, k, bound, np.array(accept), biases, squares_all,
                   dists_all, graphs, np.array(key_ids, dtype=np.int64), keys)


@lru_cache(maxsize=128)
def _cached_dk_table(degrees: tuple, k: int, cap: int) -> DkTable:
    return build_dk_table(validate(degrees, KIND_SURPLUS, k=k), cap)


def dk_table(seq: DegreeSequence, cap: int = 30000) -> DkTable:
    return _cached_dk_table(seq.degrees, _check_surplus_kind(seq), cap)


def _sample_dk_streaming(seq: DegreeSequence, rng: np.random.Generator):
    k = seq.k
    tree_seq = seq.to_tree_kind()
    base = _base_multiset(tree_seq)
    bound = bias_bound(k)
    pairs = [(star(2 * i - 1), star(2 * i)) for i in range(1, k + 1)]
    while True:
        perm = rng.permutation(len(base))
        entries = [base[j] for j in perm]
        edges = _stick_break_int_edges(entries)
        adj = _int_adjacency(edges)
        fathers = [adj[-(j + 1)][0] for j in range(2 * k)]
        b, _, _ = _bias_from_fathers(adj, fathers, k)
        assert b <= bound, "bias bound violated"
        if rng.random() * bound < b:
            tree = LabeledTree([(_designated_vertex(u, 2 * k),
                                 _designated_vertex(v, 2 * k))
                                for u, v in edges])
            if k == 0:
                return Multigraph.from_tree(tree)
            return glue_tree_leaves(tree, pairs)


def sample_dk_graph(seq: DegreeSequence, rng: np.random.Generator,
                    k=None, table_cap: int = 30000) -> Multigraph:
    """Uniform connected multigraph with degrees d_i+1 and surplus k.

    The sequence's zero entries survive as star leaves labeled S0,
    S_{2k+1}, ... (the glued labels S1..S2k are consumed).
    """
    _check_surplus_kind(seq, k)
    if tree_count(seq.to_tree_kind()) <= table_cap:
        table = dk_table(seq, table_cap)
        while True:
            idx = int(rng.integers(table.n_tuples))
            if rng.random() < table.accept[idx]:
                return table.graphs[idx]
    return _sample_dk_streaming(seq, rng)


def sample_dk_graph_keys(seq: DegreeSequence, n_samples: int,
                         rng: np.random.Generator, table_cap: int = 30000,
                         batch: int = 200000) -> Counter:
    """Bulk leaf-canonical keys of n_samples (D,k)-graph draws."""
    table = dk_table(seq, table_cap)
    counts = np.zeros(len(table.keys), dtype=np.int64)
    got = 0
    while got < n_samples:
        idx = rng.integers(table.n_tuples, size=batch)
        u = rng.random(batch)
        hit = idx[u < table.accept[idx]]
        if got + len(hit) > n_samples:
            hit = hit[:n_samples - got]
        got += len(hit)
        counts += np.bincount(table.key_ids[hit], minlength=len(table.keys))
    return Counter({table.keys[i]: int(c) for i, c in enumerate(counts) if c})


# ---------------------------------------------------------------------------
# configuration model and its conditioned oracle


def sample_configuration_model(seq: DegreeSequence,
                               rng: np.random.Generator) -> Multigraph:
    """Multigraph of a uniform perfect matching of labeled half-edges."""
    if seq.kind != KIND_HALF_EDGE:
        raise ValidationError("configuration model needs a half-edge sequence")
    if seq.total % 2 != 0:
        raise OddSum("half-edge count must be even")
    stubs = [i + 1 for i, d in enumerate(seq.degrees) for _ in range(d)]
    perm = rng.permutation(len(stubs))
    mult = Counter()
    for a in range(0, len(stubs), 2):
        u, v = stubs[perm[a]], stubs[perm[a + 1]]
        mult[(min(u, v), max(u, v))] += 1
    return Multigraph([(internal(u), internal(v), m) for (u, v), m in mult.items()],
                      vertices=[internal(i + 1) for i in range(seq.s)])


def _cm_surplus(seq: DegreeSequence) -> int:
    two_k = seq.total - 2 * seq.s + 2
    if two_k % 2 != 0 or two_k < 0:
        raise ValidationError("sequence cannot yield a connected multigraph")
    return two_k // 2


class _UnionFind:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, x):
        p = self.p
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.p[ra] = rb


def _matchings(stubs: List[int]):
    """All perfect matchings of a stub list, as lists of vertex pairs."""
    if not stubs:
        yield []
        return
    first = stubs[0]
    for j in range(1, len(stubs)):
        rest = stubs[1:j] + stubs[j + 1:]
        for m in _matchings(rest):
            yield [(first, stubs[j])] + m


def _leaf_key_from_counts(s: int, degrees, mult: Dict[tuple, int]) -> tuple:
    """leaf_canonical_key computed directly from a multiplicity map."""
    leaves = {v for v in range(1, s + 1) if degrees[v - 1] == 1}
    for (u, v), m in mult.items():
        if u in leaves and v in leaves:
            leaves -= {u, v}
    core_edges = []
    pendant = Counter()
    for (u, v), m in mult.items():
        lu, lv = u in leaves, v in leaves
        if lu:
            pendant[internal(v)] += m
        elif lv:
            pendant[internal(u)] += m
        else:
            core_edges.append(((internal(u), internal(v)), m))
    core_vertices = tuple(sorted(internal(v) for v in range(1, s + 1)
                                 if v not in leaves))
    return (core_vertices, tuple(sorted(core_edges)),
            tuple(sorted(pendant.items())), len(leaves))


def cm_conditioned_oracle(seq: DegreeSequence, k: int,
                          cap_sum: int = 14) -> Dict[tuple, Fraction]:
    """Exact law of the configuration model biased by its symmetry factor
    and conditioned on connectivity, keyed by leaf-canonical form.

    With sum(d) = 2s + 2k - 2 this is the uniform law on connected
    multigraphs with degrees d_i (surplus k), i.e. the ground truth for
    sample_dk_graph on the shifted sequence.
    """
    if seq.kind != KIND_HALF_EDGE:
        raise ValidationError("oracle needs a half-edge sequence")
    if seq.total > cap_sum:
        raise TooLarge(f"sum {seq.total} exceeds enumeration cap {cap_sum}")
    if _cm_surplus(seq) != k:
        raise ValidationError(
            f"sum {seq.total} corresponds to surplus {_cm_surplus(seq)}, not {k}")
    s = seq.s
    stubs = [i + 1 for i, d in enumerate(seq.degrees) for _ in range(d)]
    weights: Dict[tuple, int] = {}
    total = 0
    for pairs in _matchings(stubs):
        uf = _UnionFind(s + 1)
        mult = Counter()
        for u, v in pairs:
            mult[(min(u, v), max(u, v))] += 1
            uf.union(u, v)
        root = uf.find(1)
        if any(uf.find(v) != root for v in range(2, s + 1)):
            continue
        w = 1
        for (u, v), m in mult.items():
            w *= (2 ** m if u == v else 1) * math.factorial(m)
        key = _leaf_key_from_counts(s, seq.degrees, mult)
        weights[key] = weights.get(key, 0) + w
        total += w
    if total == 0:
        raise ValidationError("no connected configuration exists")
    return {key: Fraction(w, total) for key, w in weights.items()}


# ---------------------------------------------------------------------------
# multiplicative graphs


def sample_multiplicative_graph(lam: float, weights: Sequence[float],
                                rng: np.random.Generator) -> Multigraph:
    """Simple graph; edge {i,j} present with probability 1-exp(-lam w_i w_j)."""
    if lam < 0 or any(w <= 0 for w in weights):
        raise ValidationError("lambda must be >= 0 and weights positive")
    s = len(weights)
    edges = []
    for i in range(s):
        for j in range(i + 1, s):
            if rng.random() < -math.expm1(-lam * weights[i] * weights[j]):
                edges.append((internal(i + 1), internal(j + 1)))
    return Multigraph(edges, vertices=[internal(i + 1) for i in range(s)])


def sample_multiplicative_multigraph(lam: float, weights: Sequence[float],
                                     rng: np.random.Generator) -> Multigraph:
    """Poisson multiplicities: mean lam w_i w_j off-diagonal, lam w_i^2/2 loops."""
    if lam < 0 or any(w <= 0 for w in weights):
        raise ValidationError("lambda must be >= 0 and weights positive")
    s = len(weights)
    edges = []
    for i in range(s):
        for j in range(i, s):
            mean = lam * weights[i] * weights[j] * (0.5 if i == j else 1.0)
            m = int(rng.poisson(mean))
            if m:
                edges.append((internal(i + 1), internal(j + 1), m))
    return Multigraph(edges, vertices=[internal(i + 1) for i in range(s)])


def sample_multiplicative_coupled(lam, weights, rng):
    """(simple, multi) coupled so an edge is present iff its count is >= 1."""
    multi = sample_multiplicative_multigraph(lam, weights, rng)
    edges = [(u, v) for (u, v), m in multi.edge_items() if u != v and m >= 1]
    simple = Multigraph(edges, vertices=multi.vertices)
    return simple, multi


# ---------------------------------------------------------------------------
# (P,k)-graph prefix sampler and its exact law


def pk_law_oracle(pvec: PVector, k: int, cap: int = 200000) -> Dict[tuple, Fraction]:
    """Exact law of the (P,k)-graph on a finite-support P: probability of a
    connected multigraph G on V1..Vs with surplus k is proportional to
    prod_v p_v^deg(v), keyed by Multigraph.key()."""
    if pvec.p_inf != 0:
        raise ValidationError("exact law needs p_inf = 0")
    if k < 1:
        raise ValidationError("oracle covers surplus k >= 1")
    s = pvec.s
    n_edges = s + k - 1
    slots = [(i, j) for i in range(1, s + 1) for j in range(i, s + 1)]
    n_outcomes = math.comb(n_edges + len(slots) - 1, len(slots) - 1)
    if n_outcomes > cap:
        raise TooLarge(f"{n_outcomes} multiplicity patterns exceeds cap {cap}")
    p = [as_fraction(x) for x in pvec.p]
    law: Dict[tuple, Fraction] = {}
    total = Fraction(0)
    for counts in itertools.combinations_with_replacement(range(len(slots)),
                                                          n_edges):
        mult = Counter(counts)
        uf = _UnionFind(s + 1)
        edges = []
        for slot_id, m in mult.items():
            i, j = slots[slot_id]
            uf.union(i, j)
            edges.append((internal(i), internal(j), m))
        g = Multigraph(edges, vertices=[internal(v) for v in range(1, s + 1)])
        root = uf.find(1)
        if any(g.degree(internal(v)) == 0 or uf.find(v) != root
               for v in range(1, s + 1)):
            continue
        w = Fraction(1)
        for v in range(1, s + 1):
            w *= p[v - 1] ** g.degree(internal(v))
        key = g.key()
        law[key] = law.get(key, Fraction(0)) + w
        total += w
    return {key: w / total for key, w in law.items()}


def _sample_pk_glued(pvec: PVector, k: int, n_steps: int,
                     rng: np.random.Generator, min_stars: int = 0) -> Multigraph:
    """Accepted, glued (P,k) prefix with its surviving leaf labels intact."""
    bound = bias_bound(k)
    while True:
        growth = PTreeGrowth(pvec, rng)
        growth.grow_until_stars(2 * k)
        adj: Dict[Vertex, list] = {}
        for u, v in growth.edges:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        fathers = list(growth.star_fathers[:2 * k])
        b, _, _ = _bias_from_fathers(adj, fathers, k) if k else (Fraction(1), [], [])
        assert b <= bound, "bias bound violated"
        if rng.random() * bound < b:
            while len(growth.record) < n_steps:
                growth.step()
            if min_stars:
                growth.grow_until_stars(min_stars)
            tree = growth.tree()
            if k == 0:
                return Multigraph.from_tree(tree)
            pairs = [(star(2 * i - 1), star(2 * i)) for i in range(1, k + 1)]
            return glue_tree_leaves(tree, pairs)


def sample_pk_graph_prefix(pvec: PVector, k: int, n_steps: int,
                           rng: np.random.Generator) -> Multigraph:
    """Rejection sampler for the (P,k)-graph restricted to n_steps draws.

    Grows the tree until 2k leaf labels exist (the bias is constant from
    then on), accepts with probability bias/((k+1)! 2^k), keeps growing to
    n_steps, glues (S1,S2)..(S2k-1,S2k), and drops every leaf label.
    """
    glued = _sample_pk_glued(pvec, k, n_steps, rng)
    kept = [v for v in glued.vertices if not is_star(v)]
    edges = [(u, v, m) for (u, v), m in glued.edge_items()
             if not is_star(u) and not is_star(v)]
    return Multigraph(edges, vertices=kept)


# ---------------------------------------------------------------------------
# edgepoint transforms and ordered partitions


def shortcut_edgepoints(tree: LabeledTree) -> LabeledTree:
    """Contract every degree-2 vertex; degrees of survivors are unchanged."""
    keep = {v for v in tree.vertices() if tree.degree(v) != 2}
    edges = set()
    for u in keep:
        for n in tree.neighbors(u):
            prev, cur = u, n
            while tree.degree(cur) == 2:
                nxt = next(w for w in tree.neighbors(cur) if w != prev)
                prev, cur = cur, nxt
            edges.add((u, cur) if u < cur else (cur, u))
    return LabeledTree(sorted(edges))


def canonical_oriented_edges(tree: LabeledTree) -> List[Tuple[Vertex, Vertex]]:
    """Fixed orientation used by insert_edgepoints: sorted (smaller, larger)."""
    return sorted(tree.edges())


def insert_edgepoints(tree: LabeledTree,
                      partition: Sequence[Sequence[Vertex]]) -> LabeledTree:
    """Subdivide edge i with partition[i]'s vertices, in order."""
    oriented = canonical_oriented_edges(tree)
    if len(partition) != len(oriented):
        raise ValidationError("partition must have one slot per edge")
    new_vertices = [w for slot in partition for w in slot]
    if len(set(new_vertices)) != len(new_vertices):
        raise VertexCollision("inserted vertices must be distinct")
    for w in new_vertices:
        if w in tree:
            raise VertexCollision(f"{w} already in tree")
    edges = []
    for (u, v), slot in zip(oriented, partition):
        chain = [u] + list(slot) + [v]
        edges.extend(zip(chain, chain[1:]))
    return LabeledTree(edges)


def sample_ordered_partition(items: Sequence, n_slots: int,
                             rng: np.random.Generator) -> List[list]:
    """Uniform assignment of the items into n_slots ordered lists.

    A uniform shuffle of items plus n_slots-1 identical dividers hits every
    ordered partition exactly once, so slot sizes follow the uniform
    composition law.
    """
    if n_slots < 1:
        raise ValidationError("need at least one slot")
    arr = list(items) + [None] * (n_slots - 1)
    perm = rng.permutation(len(arr)) if arr else []
    out = [[]]
    for idx in perm:
        x = arr[idx]
        if x is None:
            out.append([])
        else:
            out[-1].append(x)
    while len(out) < n_slots:
        out.append([])
    return out
