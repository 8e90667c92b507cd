"""Rebuild a finite real tree from a leaf distance matrix, plus the
matrix-only core-length functional.

Leaves are inserted one at a time: the new leaf n+1 attaches at the
median point of the pair (b, c) minimizing the Gromov sum
d(n+1,b) + d(n+1,c) - d(b,c); the median sits at half that quantity from
the new leaf, and at half-sum distances from b and c.  All arithmetic is
generic, so Fraction matrices reconstruct exactly.
"""

from __future__ import annotations

from typing import List, Tuple

from .continuum import MetricTree
from .errors import (FourPointViolation, IndexOutOfRange, NegativeLength,
                     ValidationError)

DEFAULT_TOL = 1e-9


def _as_rows(matrix) -> list:
    return [list(row) for row in matrix]


def _validate_matrix(m: list, tol):
    n = len(m)
    if any(len(row) != n for row in m):
        raise ValidationError("matrix must be square")
    for i in range(n):
        if m[i][i] != 0:
            raise ValidationError("diagonal must be zero")
        for j in range(i + 1, n):
            if abs(m[i][j] - m[j][i]) > tol:
                raise ValidationError("matrix must be symmetric")
            if m[i][j] < 0:
                raise NegativeLength(f"negative distance at ({i},{j})")
            if m[i][j] == 0:
                raise ValidationError(
                    f"zero distance between distinct marks {i},{j}; quotient first")


def gromov_height(matrix, a: int, b: int, c: int):
    """Distance from leaf a to the median of (a, b, c): (d_ab+d_ac-d_bc)/2."""
    m = _as_rows(matrix)
    n = len(m)
    for x in (a, b, c):
        if not 0 <= x < n:
            raise IndexOutOfRange(f"index {x} outside 0..{n - 1}")
    if len({a, b, c}) != 3:
        raise ValidationError("indices must be distinct")
    return (m[a][b] + m[a][c] - m[b][c]) / 2


def check_four_point(matrix, tol=DEFAULT_TOL) -> Tuple[bool, tuple]:
    """Tree-metric check: in every quadruple the two largest of the three
    pairings must coincide.  Returns (ok, witness quadruple or None)."""
    m = _as_rows(matrix)
    n = len(m)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                for l in range(k + 1, n):
                    sums = sorted((m[i][j] + m[k][l],
                                   m[i][k] + m[j][l],
                                   m[i][l] + m[j][k]))
                    if sums[2] - sums[1] > tol:
                        return False, (i, j, k, l)
    return True, None


def _locate(adj, marks, b, c, target, tol, steiner_count):
    """Node at distance `target` from mark b on the b-c geodesic,
    splitting an edge if needed.  Returns (node, new steiner count)."""
    nb, nc = marks[b], marks[c]
    parent = {nb: None}
    stack = [nb]
    while stack and nc not in parent:
        u = stack.pop()
        for v in adj[u]:
            if v not in parent:
                parent[v] = u
                stack.append(v)
    path = [nc]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    path.reverse()  # nb .. nc
    cum = 0
    if target <= tol:
        return nb, steiner_count
    for u, v in zip(path, path[1:]):
        step = adj[u][v]
        if abs(cum + step - target) <= tol:
            return v, steiner_count
        if cum + step > target:
            off = target - cum
            if off <= 0:
                return u, steiner_count
            w = ("w", steiner_count)
            del adj[u][v]
            del adj[v][u]
            adj[w] = {u: off, v: step - off}
            adj[u][w] = off
            adj[v][w] = step - off
            return w, steiner_count + 1
        cum += step
    raise FourPointViolation(
        f"attachment point beyond the {b}-{c} geodesic", witness=(b, c))


def reconstruct(matrix, tol=DEFAULT_TOL) -> MetricTree:
    """Incremental insertion; output's leaf matrix equals the input.

    Marks are positional, 1..N.  Degenerate attachments (zero grafts) are
    allowed: the mark then names an existing, possibly internal, node.
    """
    m = _as_rows(matrix)
    _validate_matrix(m, tol)
    ok, witness = check_four_point(m, tol)
    if not ok:
        raise FourPointViolation(
            f"four-point condition fails on quadruple {witness}", witness=witness)
    n = len(m)
    if n == 0:
        raise ValidationError("empty matrix")
    if n == 1:
        return MetricTree.single_node(0, marks={1: 0})
    marks = {1: 0, 2: 1}
    adj = {0: {1: m[0][1]}, 1: {0: m[0][1]}}
    steiner = 0
    for new in range(2, n):
        best = None
        for b in range(new):
            for c in range(b + 1, new):
                g = m[new][b] + m[new][c] - m[b][c]
                if best is None or g < best[0] - tol:
                    best = (g, b, c)
        g, b, c = best
        graft = g / 2
        if graft < -tol:
            raise FourPointViolation(
                f"negative graft length for leaf {new + 1}", witness=(b, c, new))
        height_b = (m[b][new] + m[b][c] - m[new][c]) / 2
        w, steiner = _locate(adj, {i + 1: marks[i + 1] for i in range(new)},
                             b + 1, c + 1, height_b, tol, steiner)
        if graft <= tol:
            marks[new + 1] = w
        else:
            node = new
            adj.setdefault(w, {})[node] = graft
            adj.setdefault(node, {})[w] = graft
            marks[new + 1] = node
    edges = []
    seen = set()
    for u, nbrs in adj.items():
        for v, w in nbrs.items():
            e = frozenset((u, v))
            if e not in seen:
                seen.add(e)
                edges.append((u, v, w))
    return MetricTree(edges, marks)


def _interval_union_length(intervals: List[tuple], upper):
    clipped = []
    for lo, hi in intervals:
        lo = max(lo, 0 * upper)
        hi = min(hi, upper)
        if hi > lo:
            clipped.append((lo, hi))
    clipped.sort()
    total = 0
    cur_lo = cur_hi = None
    for lo, hi in clipped:
        if cur_hi is None or lo > cur_hi:
            if cur_hi is not None:
                total = total + (cur_hi - cur_lo)
            cur_lo, cur_hi = lo, hi
        elif hi > cur_hi:
            cur_hi = hi
    if cur_hi is not None:
        total = total + (cur_hi - cur_lo)
    return total


def core_measure_from_matrix(matrix, tol=DEFAULT_TOL):
    """Core length from the 2c x 2c mark distance matrix alone.

    The increment for pair j is the length of its geodesic minus the parts
    already covered by earlier pairs; each overlap is an interval whose
    endpoints are Gromov heights measured from mark 2j-1.
    """
    m = _as_rows(matrix)
    if len(m) % 2 != 0 or not m:
        raise ValidationError("need a 2c x 2c matrix")
    ok, witness = check_four_point(m, tol)
    if not ok:
        raise FourPointViolation(
            f"four-point condition fails on quadruple {witness}", witness=witness)
    c = len(m) // 2
    total = m[0][1]
    for j in range(2, c + 1):
        a, b = 2 * j - 2, 2 * j - 1  # row indices of marks 2j-1, 2j
        d = m[a][b]
        intervals = []
        for i in range(1, j):
            u, v = 2 * i - 2, 2 * i - 1
            x = (d + m[a][u] - m[b][u]) / 2
            y = (d + m[a][v] - m[b][v]) / 2
            intervals.append((min(x, y), max(x, y)))
        total = total + (d - _interval_union_length(intervals, d))
    return total
