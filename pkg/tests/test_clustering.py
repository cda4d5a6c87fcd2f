import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ancestrymap.clustering import (
    ClusterLabels,
    assign_nearest,
    choose_k,
    labels_from_merges,
    ward_cluster,
    ward_linkage,
)
from ancestrymap.errors import ArgumentError


def naive_ward(x):
    """Textbook O(N^3) agglomeration over a dict of live clusters."""
    n = len(x)
    size = {i: 1 for i in range(n)}
    d = {}
    for i, j in itertools.combinations(range(n), 2):
        d[i, j] = float(sum((x[i][t] - x[j][t]) ** 2 for t in range(len(x[i]))))
    out = []
    while len(size) > 1:
        (a, b), dab = min(d.items(), key=lambda kv: (kv[1], kv[0]))
        na, nb = size[a], size[b]
        out.append((a, b, dab, na + nb))
        for k in size:
            if k in (a, b):
                continue
            nk = size[k]
            dak = d[min(a, k), max(a, k)]
            dbk = d[min(b, k), max(b, k)]
            d[min(a, k), max(a, k)] = ((na + nk) * dak + (nb + nk) * dbk - nk * dab) / (na + nb + nk)
        for k in list(size):
            d.pop((min(b, k), max(b, k)), None)
        del size[b]
        size[a] = na + nb
    return out


def partition(labels):
    groups = {}
    for i, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(i)
    return sorted(tuple(v) for v in groups.values())


def test_well_separated_pairs():
    lab = ward_cluster(np.array([0.0, 0.1, 10.0, 10.1]), 2)
    assert lab.labels.tolist() == [0, 0, 1, 1]


def test_single_cluster():
    lab = ward_cluster(np.random.default_rng(0).normal(size=(7, 2)), 1)
    assert lab.labels.tolist() == [0] * 7


def test_k_out_of_range():
    with pytest.raises(ArgumentError):
        ward_cluster(np.zeros((3, 1)), 4)
    with pytest.raises(ArgumentError):
        ward_cluster(np.zeros((3, 1)), 0)


@pytest.mark.parametrize("seed", range(10))
def test_merge_sequence_matches_naive_oracle(seed):
    x = np.random.default_rng(seed).normal(size=(8, 2))
    got = ward_linkage(x)
    want = naive_ward(x.tolist())
    assert [(int(a), int(b), int(s)) for a, b, _, s in got] == [(a, b, s) for a, b, _, s in want]
    np.testing.assert_allclose(got[:, 2], [w[2] for w in want], rtol=1e-12)


def test_tie_rule_lexicographic():
    # four points on a unit square: all nearest pairs tie
    x = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    got = ward_linkage(x)
    assert got[0, :2].tolist() == [0, 1]
    assert [tuple(r[:2]) for r in got.astype(int)] == [(a, b) for a, b, _, _ in naive_ward(x.tolist())]


def test_integer_grid_ties_match_oracle():
    x = np.random.default_rng(3).integers(0, 3, size=(9, 2)).astype(float)
    got = ward_linkage(x)
    want = naive_ward(x.tolist())
    assert [(int(a), int(b)) for a, b, _, _ in got] == [(a, b) for a, b, _, _ in want]


def test_labels_numbered_by_smallest_member():
    x = np.array([10.0, 0.0, 10.1, 0.1, 5.0])
    lab = ward_cluster(x, 3)
    assert lab.labels[0] == 0
    assert len(set(lab.labels.tolist())) == 3
    firsts = [int(np.flatnonzero(lab.labels == k)[0]) for k in range(3)]
    assert firsts == sorted(firsts)


def test_choose_k():
    assert choose_k(1) == 2
    assert choose_k(3) == 4
    assert choose_k(0) == 1
    with pytest.raises(ArgumentError):
        choose_k(-1)


def test_cluster_labels_validation():
    with pytest.raises(ArgumentError):
        ClusterLabels(np.array([0, 2]), 2)
    with pytest.raises(ArgumentError):
        ClusterLabels(np.array([0, 0]), 2)


@settings(max_examples=40, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(1, 3)),
           elements=st.floats(-100, 100, allow_nan=False)),
    st.data(),
)
def test_permutation_equivariance(x, data):
    n = x.shape[0]
    k = data.draw(st.integers(1, n))
    merges = ward_linkage(x)
    pairwise = [np.sum((x[i] - x[j]) ** 2) for i, j in itertools.combinations(range(n), 2)]
    # equivariance only holds when no merge ties occur
    if len(set(np.round(merges[:, 2], 9))) < n - 1 or len(set(np.round(pairwise, 9))) < len(pairwise):
        return
    perm = np.array(data.draw(st.permutations(range(n))))
    base = ward_cluster(x, k).labels
    permuted = ward_cluster(x[perm], k).labels
    back = np.empty(n, dtype=np.int64)
    back[perm] = permuted
    assert partition(back) == partition(base)


def test_two_point_masses_recovered():
    rng = np.random.default_rng(0)
    a = rng.normal(0, 0.1, size=(12, 2))
    b = rng.normal(5, 0.1, size=(9, 2))
    x = np.vstack([a, b])[rng.permutation(21)]
    lab = ward_cluster(x, 2).labels
    truth = (x[:, 0] > 2.5).astype(int)
    assert partition(lab) == partition(truth)


def test_labels_from_merges_full_cut():
    x = np.random.default_rng(1).normal(size=(6, 2))
    m = ward_linkage(x)
    assert labels_from_merges(m, 6, 6).tolist() == list(range(6))
    assert labels_from_merges(m, 6, 1).tolist() == [0] * 6


# ---------------------------------------------------------------- nearest assignment

def test_assign_identical_point():
    base = np.array([[0.0, 0.0], [3.0, 1.0], [5.0, 5.0]])
    lab = ClusterLabels(np.array([0, 1, 2]), 3)
    assert assign_nearest(base[[1]], base, lab).tolist() == [1]


def test_assign_tie_goes_to_lowest_index():
    base = np.zeros((10, 1))
    base[:, 0] = np.arange(10) * 100.0
    base[3, 0] = -1.0
    base[7, 0] = 1.0
    labels = np.zeros(10, dtype=int)
    labels[7] = 1
    lab = ClusterLabels(labels, 2)
    assert assign_nearest(np.array([[0.0]]), base, lab).tolist() == [0]
    labels2 = np.ones(10, dtype=int)
    labels2[7] = 0
    assert assign_nearest(np.array([[0.0]]), base, ClusterLabels(labels2, 2)).tolist() == [1]


def test_assign_matches_brute_force():
    rng = np.random.default_rng(4)
    base = rng.normal(size=(10, 3))
    pts = rng.normal(size=(30, 3))
    lab = ClusterLabels(np.array([0, 1, 2, 0, 1, 2, 0, 1, 2, 0]), 3)
    got = assign_nearest(pts, base, lab)
    for i, p in enumerate(pts):
        best = min(range(10), key=lambda j: (sum((p - base[j]) ** 2), j))
        assert got[i] == lab.labels[best]
    assert set(got.tolist()) <= set(lab.labels.tolist())


def test_assign_errors():
    lab = ClusterLabels(np.array([0]), 1)
    with pytest.raises(ArgumentError):
        assign_nearest(np.zeros((1, 2)), np.zeros((0, 2)), lab)
    with pytest.raises(ArgumentError):
        assign_nearest(np.zeros((1, 2)), np.zeros((1, 3)), lab)
