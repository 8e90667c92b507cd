import json
import math

import numpy as np
import pytest

from surpluslab.experiments import (ExperimentManifest, VertexMeasure,
                                    bias_tail_experiment, converge_experiment,
                                    d_tree_bias_values, energy_distance,
                                    gp_matrix_sample, importance_unweight,
                                    ks_statistic, multigraph_distance_matrix,
                                    permutation_energy_test, rng_stream,
                                    write_table_csv)
from surpluslab.labels import internal as V, star as S
from surpluslab.params import PVector, ThetaVector, validate

BROWNIAN = ThetaVector(theta0=1.0)


def test_rng_stream_deterministic_and_disjoint():
    a = rng_stream(7, 0).random(4)
    b = rng_stream(7, 0).random(4)
    c = rng_stream(7, 1).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_vertex_measure_sampling():
    m = VertexMeasure({V(1): 3.0, V(2): 1.0})
    assert m.weights[V(1)] == pytest.approx(0.75)
    rng = rng_stream(0, 0)
    draws = m.sample(rng, 10 ** 4)
    frac = sum(v == V(1) for v in draws) / 10 ** 4
    assert abs(frac - 0.75) < 3 * math.sqrt(0.75 * 0.25 / 10 ** 4)


def test_gp_matrix_single_point_is_zero():
    model = {"model": "d-tree", "params": validate([1, 1, 0, 0], "tree")}
    mats, w = gp_matrix_sample(model, 1, 5, rng_stream(1, 0))
    assert np.all(mats == 0)
    assert np.all(w == 1)


def test_gp_matrix_tree_measure_mode():
    # uniform measure on the two stars of the path tree: entries are 0 or 3
    seq = validate([1, 1, 0, 0], "tree")
    model = {"model": "d-tree", "params": seq}
    measure = VertexMeasure({S(0): 1.0, S(1): 1.0})
    mats, _ = gp_matrix_sample(model, 2, 400, rng_stream(2, 0), measure=measure)
    vals = set(np.unique(mats))
    assert vals <= {0.0, 3.0}
    frac3 = np.mean(mats[:, 0, 1] == 3.0)  # two i.i.d. draws differ w.p. 1/2
    assert abs(frac3 - 0.5) < 3 * math.sqrt(0.25 / 400)


def test_gp_matrix_double_edge_instance():
    seq = validate([1, 1], "surplus", k=1)
    model = {"model": "dk-graph", "params": seq, "k": 1}
    measure = VertexMeasure({V(1): 1.0, V(2): 1.0})
    mats, _ = gp_matrix_sample(model, 3, 20, rng_stream(3, 0), measure=measure)
    assert np.max(mats) <= 1.0


def test_gp_matrix_lambda_rescaling_exact():
    seq = validate([2, 2, 1, 0, 0, 0, 0], "tree")
    lam = seq.stats().lam
    raw, _ = gp_matrix_sample({"model": "d-tree", "params": seq}, 3, 10,
                              rng_stream(4, 0))
    scaled, _ = gp_matrix_sample({"model": "d-tree", "params": seq,
                                  "scale": "lambda"}, 3, 10, rng_stream(4, 0))
    assert np.array_equal(scaled, raw * lam)


def test_energy_distance_weighted_equals_unweighted_for_equal_weights():
    rng = rng_stream(5, 0)
    x = rng.random((40, 3))
    y = rng.random((50, 3))
    plain = energy_distance(x, y)
    weighted = energy_distance(x, y, np.full(40, 0.5), np.full(50, 2.0))
    assert weighted == plain
    assert energy_distance(x, x) == pytest.approx(0.0, abs=1e-12)


def test_ks_statistic_weighted_equals_unweighted():
    rng = rng_stream(6, 0)
    x, y = rng.random(30), rng.random(35)
    assert ks_statistic(x, y) == ks_statistic(x, y, np.full(30, 3.0),
                                              np.full(35, 0.2))
    from scipy.stats import ks_2samp
    assert ks_statistic(x, y) == pytest.approx(ks_2samp(x, y).statistic)


def test_importance_unweight_law():
    rng = rng_stream(7, 0)
    x = np.concatenate([np.zeros(5000), np.ones(5000)])[:, None]
    w = np.where(x[:, 0] == 0, 1.0, 3.0)
    sub = importance_unweight(x, w, rng)
    frac = sub.mean()
    assert abs(frac - 0.75) < 0.03


def test_permutation_test_same_law():
    rng = rng_stream(8, 0)
    x = rng.normal(size=(80, 2))
    y = rng.normal(size=(120, 2))
    observed, p, thresh = permutation_energy_test(x, y, 199, rng)
    assert p > 0.01
    assert observed < thresh


def test_converge_same_law_indistinguishable():
    # family = the target itself: below the 95% permutation threshold
    model = {"model": "icrt", "params": BROWNIAN, "label": "self"}
    report = converge_experiment([model], dict(model), 3, 150,
                                 rng_stream(9, 0), n_perms=99, target_factor=2)
    pm = report["last_member_permutation"]
    assert pm["observed"] < pm["threshold95"]
    assert pm["p"] > 0.01


def test_bias_tail_k0_and_m0():
    seq = validate([2, 2, 1, 0, 0, 0, 0], "tree")
    rows = bias_tail_experiment(seq, 0, [0.0, 2.0], 200, rng_stream(10, 0))
    # k=0: bias is identically 1, so h_0 = 1 and h_2 = 0
    assert rows[0]["estimate"] == pytest.approx(1.0)
    assert rows[1]["estimate"] == 0.0
    rows = bias_tail_experiment(seq, 1, [0.0], 400, rng_stream(10, 1))
    assert rows[0]["estimate"] > 0


def test_bias_tail_decreasing_in_m():
    seq = validate([2] * 16 + [0] * 18, "tree")
    rows = bias_tail_experiment(seq, 1, [0.0, 1.0, 10.0, 1000.0], 2000,
                                rng_stream(11, 0))
    ests = [r["estimate"] for r in rows]
    assert ests == sorted(ests, reverse=True)
    assert ests[-1] == 0.0


def test_bias_values_respect_bound():
    seq = validate([3, 3, 1, 1] + [0] * 6, "tree")
    vals = d_tree_bias_values(seq, 2, 500, rng_stream(12, 0))
    assert np.all(vals <= 24.0 + 1e-12)


def test_manifest_roundtrip():
    m = ExperimentManifest("converge", 7, 100, {"d.json": "ab" * 32}, [0, 1],
                           {"k": 1})
    again = ExperimentManifest.from_json(m.to_json())
    assert again == m


def test_write_table_deterministic(tmp_path):
    rows = [{"m": 1.0, "estimate": 0.25, "stderr": 0.001}]
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_table_csv(p1, rows, {"seed": 7, "experiment": "bias-tail"})
    write_table_csv(p2, rows, {"experiment": "bias-tail", "seed": 7})
    assert p1.read_bytes() == p2.read_bytes()
    text = p1.read_text()
    assert text.startswith("# experiment = bias-tail")


def test_multigraph_distance_matrix_unreachable():
    from surpluslab.multigraph import Multigraph
    g = Multigraph([(V(1), V(2))], vertices=[V(1), V(2), V(3)])
    with pytest.raises(Exception):
        multigraph_distance_matrix(g, [V(1), V(3)])
