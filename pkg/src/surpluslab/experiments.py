"""Reproducible experiment harness: distance-matrix sampling for any model
family, two-sample discrepancy statistics (energy distance, per-entry KS,
permutation test), the bias-tail estimator, and run manifests.

All randomness flows from one 64-bit seed through numbered SeedSequence
streams; a manifest records the streams, parameter hashes, and counts,
and re-running a manifest reproduces byte-identical output files.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .continuum import sample_icrg_weighted, sample_icrt
from .errors import InsufficientLeaves, ValidationError
from .labels import Vertex, is_star, star
from .multigraph import Multigraph
from .params import KIND_SURPLUS, KIND_TREE, DegreeSequence
from .samplers import (_bias_from_fathers, _int_adjacency, _sample_pk_glued,
                       sample_configuration_model, sample_dk_graph,
                       sample_multiplicative_graph,
                       sample_multiplicative_multigraph)
from .trees import (PTreeGrowth, _base_multiset, _stick_break_int_edges,
                    sample_d_tree, tree_distance_matrix)

VERSION = "0.1.0"


def rng_stream(seed: int, stream_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream_id,)))


# ---------------------------------------------------------------------------
# vertex measures


@dataclass
class VertexMeasure:
    """Normalized weights over a graph's vertices."""
    weights: Dict[Vertex, float]

    def __post_init__(self):
        total = sum(self.weights.values())
        if total <= 0 or any(w < 0 for w in self.weights.values()):
            raise ValidationError("measure weights must be non-negative, sum > 0")
        self.weights = {v: w / total for v, w in self.weights.items()}

    @staticmethod
    def uniform(vertices) -> "VertexMeasure":
        vs = list(vertices)
        return VertexMeasure({v: 1.0 for v in vs})

    @staticmethod
    def uniform_on_stars(graph) -> "VertexMeasure":
        stars = [v for v in graph.vertices if is_star(v)]
        if not stars:
            raise ValidationError("graph has no star leaves")
        return VertexMeasure({v: 1.0 for v in stars})

    def sample(self, rng: np.random.Generator, n: int) -> list:
        items = sorted(self.weights.items())
        cum = np.cumsum([w for _, w in items])
        us = rng.random(n)
        idx = np.searchsorted(cum, us, side="right").clip(0, len(items) - 1)
        return [items[i][0] for i in idx]


def multigraph_distance_matrix(g: Multigraph, points: Sequence[Vertex]) -> np.ndarray:
    out = np.zeros((len(points), len(points)))
    for i, p in enumerate(points):
        dist = g.distances_from(p)
        for j, q in enumerate(points):
            if q not in dist:
                raise ValidationError(f"{q} unreachable from {p}")
            out[i, j] = dist[q]
    return out


# ---------------------------------------------------------------------------
# model runners: one rescaled distance matrix per repetition


def _scale_of(model: dict) -> float:
    scale = model.get("scale", "none")
    if scale == "lambda":
        seq = model["params"]
        tree_seq = seq.to_tree_kind() if seq.kind == KIND_SURPLUS else seq
        return tree_seq.stats().lam
    if scale == "sigma":
        return model["params"].sigma
    if scale == "none":
        return 1.0
    return float(scale)


def _one_matrix(model: dict, n_points: int, rng: np.random.Generator,
                measure: Optional[VertexMeasure]):
    """(matrix, importance weight) for a single repetition."""
    name = model["model"]
    params = model["params"]
    k = model.get("k", 0)
    if name == "d-tree":
        tree = sample_d_tree(params, rng)
        if measure is not None:
            points = measure.sample(rng, n_points)
        else:
            points = [star(j) for j in range(1, n_points + 1)]
        return tree_distance_matrix(tree, points).astype(float), 1.0
    if name == "dk-graph":
        g = sample_dk_graph(params, rng)
        if measure is not None:
            points = measure.sample(rng, n_points)
        elif model.get("points") == "uniform-stars":
            points = VertexMeasure.uniform_on_stars(g).sample(rng, n_points)
        else:
            points = [star(2 * k + j) for j in range(1, n_points + 1)]
        return multigraph_distance_matrix(g, points), 1.0
    if name == "p-tree":
        growth = PTreeGrowth(params, rng)
        growth.grow_until_stars(n_points)
        tree = growth.tree()
        points = [star(j) for j in range(1, n_points + 1)]
        return tree_distance_matrix(tree, points).astype(float), 1.0
    if name == "pk-graph":
        g = _sample_pk_glued(params, k, model.get("n_steps", 1), rng,
                             min_stars=2 * k + n_points)
        points = [star(2 * k + j) for j in range(1, n_points + 1)]
        return multigraph_distance_matrix(g, points), 1.0
    if name == "icrt":
        real = sample_icrt(params, rng, n_points=n_points)
        mat = real.tree().mark_distance_matrix(list(range(1, n_points + 1)))
        return np.array(mat, dtype=float), 1.0
    if name == "icrg":
        ws = sample_icrg_weighted(params, k, rng, n_points=2 * k + n_points)
        labels = list(range(2 * k + 1, 2 * k + n_points + 1))
        mat = ws.payload.mark_distance_matrix(labels)
        return np.array(mat, dtype=float), ws.weight
    if name == "cm":
        g = sample_configuration_model(params, rng)
        mea = measure or VertexMeasure.uniform(g.vertices)
        return multigraph_distance_matrix(g, mea.sample(rng, n_points)), 1.0
    if name in ("mult", "mult-multi"):
        lam, weights = params
        sampler = (sample_multiplicative_graph if name == "mult"
                   else sample_multiplicative_multigraph)
        g = sampler(lam, weights, rng)
        mea = measure or VertexMeasure.uniform(g.vertices)
        return multigraph_distance_matrix(g, mea.sample(rng, n_points)), 1.0
    raise ValidationError(f"unknown model {name!r}")


def gp_matrix_sample(model: dict, n_points: int, n_reps: int,
                     rng: np.random.Generator,
                     measure: Optional[VertexMeasure] = None):
    """n_reps rescaled distance matrices (and importance weights).

    The scale multiplies every entry: model["scale"] is "lambda" for
    degree-sequence models converging to a theta target, "sigma" for
    probability-vector models, "none" (default), or an explicit float.
    """
    scale = _scale_of(model)
    mats = np.empty((n_reps, n_points, n_points))
    weights = np.empty(n_reps)
    for r in range(n_reps):
        m, w = _one_matrix(model, n_points, rng, measure)
        mats[r] = m * scale
        weights[r] = w
    return mats, weights


# ---------------------------------------------------------------------------
# two-sample statistics


def _norm_weights(n: int, w: Optional[np.ndarray]) -> np.ndarray:
    if w is None:
        w = np.ones(n)
    w = np.asarray(w, dtype=float)
    return w / w.sum()


def energy_distance(x: np.ndarray, y: np.ndarray,
                    wx: Optional[np.ndarray] = None,
                    wy: Optional[np.ndarray] = None) -> float:
    """2 E|X-Y| - E|X-X'| - E|Y-Y'| with self-normalized weights."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    wx = _norm_weights(len(x), wx)
    wy = _norm_weights(len(y), wy)
    a = wx @ cdist(x, y) @ wy
    b = wx @ cdist(x, x) @ wx
    c = wy @ cdist(y, y) @ wy
    return float(2 * a - b - c)


def ks_statistic(x: np.ndarray, y: np.ndarray,
                 wx: Optional[np.ndarray] = None,
                 wy: Optional[np.ndarray] = None) -> float:
    """Max ECDF gap between two (optionally weighted) scalar samples."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    wx = _norm_weights(len(x), wx)
    wy = _norm_weights(len(y), wy)
    grid = np.sort(np.concatenate([x, y]))
    ox, oy = np.argsort(x), np.argsort(y)
    cx = np.concatenate([[0.0], np.cumsum(wx[ox])])
    cy = np.concatenate([[0.0], np.cumsum(wy[oy])])
    fx = cx[np.searchsorted(x[ox], grid, side="right")]
    fy = cy[np.searchsorted(y[oy], grid, side="right")]
    return float(np.max(np.abs(fx - fy)))


def importance_resample(x: np.ndarray, w: np.ndarray,
                        rng: np.random.Generator) -> np.ndarray:
    """Multinomial resampling to an unweighted sample of the same size."""
    w = _norm_weights(len(x), w)
    idx = rng.choice(len(x), size=len(x), p=w)
    return x[idx]


def importance_unweight(x: np.ndarray, w: np.ndarray,
                        rng: np.random.Generator) -> np.ndarray:
    """Rejection unweighting: an exact i.i.d. unweighted subsample.

    Keeping row i with probability w_i / max(w) leaves independent draws
    from the weighted law, with no duplicates (unlike resampling)."""
    w = np.asarray(w, dtype=float)
    keep = rng.random(len(x)) < w / w.max()
    return x[keep]


def permutation_energy_test(x: np.ndarray, y: np.ndarray, n_perms: int,
                            rng: np.random.Generator):
    """(observed, p-value, 95% permutation quantile) for the energy distance.

    Group sizes may differ; the pooled pairwise-distance matrix is computed
    once and every permutation statistic is a block average over it.
    """
    pooled = np.concatenate([x, y])
    n, total = len(x), len(pooled)
    dm = cdist(pooled, pooled)

    def stat(ix, iy):
        a = dm[np.ix_(ix, iy)].mean()
        b = dm[np.ix_(ix, ix)].mean()
        c = dm[np.ix_(iy, iy)].mean()
        return 2 * a - b - c

    observed = stat(np.arange(n), np.arange(n, total))
    stats = np.empty(n_perms)
    for i in range(n_perms):
        perm = rng.permutation(total)
        stats[i] = stat(perm[:n], perm[n:])
    p = (1 + np.sum(stats >= observed)) / (n_perms + 1)
    return float(observed), float(p), float(np.quantile(stats, 0.95))


def _upper_triangles(mats: np.ndarray) -> np.ndarray:
    n = mats.shape[1]
    iu = np.triu_indices(n, k=1)
    return mats[:, iu[0], iu[1]]


# ---------------------------------------------------------------------------
# experiments


def converge_experiment(family: List[dict], target: dict, n_points: int,
                        n_reps: int, rng: np.random.Generator,
                        n_perms: int = 199, target_factor: int = 4) -> dict:
    """Discrepancy of each family member's matrix law to the target's.

    Energy distance on upper-triangle vectors plus the max per-entry KS,
    self-normalized weighting for weighted targets, a monotonicity report,
    and a permutation test for the last member.  The target is sampled
    target_factor times as often as each member, so target-side noise does
    not dominate the member discrepancies.
    """
    tm, tw = gp_matrix_sample(target, n_points, target_factor * n_reps, rng)
    tvec = _upper_triangles(tm)
    rows = []
    last_x = None
    for i, model in enumerate(family):
        mm, mw = gp_matrix_sample(model, n_points, n_reps, rng)
        mvec = _upper_triangles(mm)
        e = energy_distance(mvec, tvec, mw, tw)
        ks = max(ks_statistic(mvec[:, j], tvec[:, j], mw, tw)
                 for j in range(mvec.shape[1]))
        rows.append({"member": i, "label": model.get("label", str(i)),
                     "energy": e, "ks_max": ks})
        last_x = (mvec, mw)
    energies = [r["energy"] for r in rows]
    decreasing = all(energies[i] > energies[i + 1] for i in range(len(energies) - 1))
    if np.allclose(tw, tw[0]):
        ty = tvec
    else:
        ty = importance_unweight(tvec, tw, rng)
    observed, pval, thresh95 = permutation_energy_test(last_x[0], ty, n_perms, rng)
    return {"rows": rows, "decreasing": decreasing,
            "last_member_permutation": {"observed": observed, "p": pval,
                                        "threshold95": thresh95}}


def d_tree_bias_values(tree_seq: DegreeSequence, k: int, n_samples: int,
                       rng: np.random.Generator) -> np.ndarray:
    """Bias of n_samples unbiased trees, glued at their own labels S1..S2k."""
    if tree_seq.kind != KIND_TREE:
        raise ValidationError("bias tail runs on tree-kind sequences")
    if tree_seq.N + 1 < 2 * k:
        raise InsufficientLeaves("need at least 2k leaves besides S0")
    base = _base_multiset(tree_seq)
    out = np.empty(n_samples)
    for r in range(n_samples):
        perm = rng.permutation(len(base))
        edges = _stick_break_int_edges([base[j] for j in perm])
        adj = _int_adjacency(edges)
        fathers = [adj[-(j + 2)][0] for j in range(2 * k)]
        b, _, _ = _bias_from_fathers(adj, fathers, k)
        out[r] = float(b)
    return out


def bias_tail_experiment(tree_seq: DegreeSequence, k: int,
                         m_grid: Sequence[float], n_reps: int,
                         rng: np.random.Generator) -> List[dict]:
    """Monte Carlo E[h_m(bias / lambda^k)] with standard errors."""
    lam = tree_seq.stats().lam
    values = d_tree_bias_values(tree_seq, k, n_reps, rng) / lam ** k
    rows = []
    for m in m_grid:
        h = np.where(values >= m, values, 0.0)
        est = float(h.mean())
        se = float(h.std(ddof=1) / math.sqrt(n_reps)) if n_reps > 1 else 0.0
        rows.append({"m": float(m), "estimate": est, "stderr": se})
    return rows


# ---------------------------------------------------------------------------
# manifests and deterministic output


@dataclass
class ExperimentManifest:
    experiment: str
    seed: int
    reps: int
    param_hashes: Dict[str, str] = field(default_factory=dict)
    streams: List[int] = field(default_factory=list)
    options: Dict[str, object] = field(default_factory=dict)
    version: str = VERSION

    def to_json(self) -> str:
        return json.dumps({
            "experiment": self.experiment, "seed": self.seed,
            "reps": self.reps, "param_hashes": self.param_hashes,
            "streams": self.streams, "options": self.options,
            "version": self.version}, sort_keys=True, indent=2) + "\n"

    @staticmethod
    def from_json(text: str) -> "ExperimentManifest":
        obj = json.loads(text)
        return ExperimentManifest(
            obj["experiment"], obj["seed"], obj["reps"],
            obj.get("param_hashes", {}), obj.get("streams", []),
            obj.get("options", {}), obj.get("version", VERSION))


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_table_csv(path, rows: List[dict], metadata: Dict[str, object]):
    """CSV with '#'-prefixed metadata header rows; deterministic bytes."""
    lines = [f"# {k} = {metadata[k]}" for k in sorted(metadata)]
    if rows:
        cols = list(rows[0].keys())
        lines.append(",".join(cols))
        for row in rows:
            lines.append(",".join(repr(row[c]) if isinstance(row[c], float)
                                  else str(row[c]) for c in cols))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
