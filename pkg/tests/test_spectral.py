import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ancestrymap.errors import ArgumentError, DegeneratePanelError
from ancestrymap.genotype_io import MISSING
from ancestrymap.spectral import (
    build_eigenmap,
    compute_norm_stats,
    eigendecompose,
    kernel_block,
    load_coords,
    normalize,
    nystrom_project,
    save_coords,
    significant_dimensions,
    tw_statistic,
)

from conftest import make_matrix


# ---------------------------------------------------------------- normalisation

def test_norm_stats_forced_arithmetic():
    g = make_matrix(np.array([[0, 0], [1, 0], [2, 0], [1, 0]]))
    st_ = compute_norm_stats(g, range(4))
    assert st_.snp_mean[0] == 1.0
    assert st_.snp_scale[0] == 0.5
    assert st_.kept_snps.tolist() == [0]
    np.testing.assert_array_equal(normalize(g, range(4), st_)[:, 0], [-2, 0, 2, 0])


def test_norm_stats_all_monomorphic():
    g = make_matrix(np.ones((3, 4), dtype=int) * 2)
    with pytest.raises(DegeneratePanelError):
        compute_norm_stats(g, range(3))


def test_norm_stats_recomputation_oracle():
    rng = np.random.default_rng(8)
    vals = rng.integers(0, 3, size=(20, 50))
    vals[rng.random(vals.shape) < 0.1] = MISSING
    g = make_matrix(vals)
    st_ = compute_norm_stats(g, range(20))
    for j in range(50):
        calls = [int(v) for v in vals[:, j] if v != MISSING]
        mean = sum(calls) / len(calls)
        p = mean / 2
        assert abs(st_.snp_mean[j] - mean) <= 1e-12
        assert abs(st_.snp_scale[j] - (p * (1 - p)) ** 0.5) <= 1e-12
        assert (j in st_.kept_snps) == (0 < p < 1)


def test_all_missing_row_normalises_to_zero():
    rng = np.random.default_rng(0)
    vals = rng.integers(0, 3, size=(6, 10))
    vals[2] = MISSING
    g = make_matrix(vals)
    st_ = compute_norm_stats(g, range(6))
    x = normalize(g, range(6), st_)
    assert np.all(x[2] == 0)


def test_normalised_base_columns_centred(random_panel):
    st_ = compute_norm_stats(random_panel, range(20))
    x = normalize(random_panel, range(20), st_)
    assert np.abs(x.mean(axis=0)).max() <= 1e-10


# ---------------------------------------------------------------- kernel

def test_kernel_single_snp():
    x = np.array([[-1.0], [1.0]])
    np.testing.assert_array_equal(kernel_block(x, x), [[1, -1], [-1, 1]])


def test_kernel_requires_snps():
    with pytest.raises(DegeneratePanelError):
        kernel_block(np.zeros((2, 0)), np.zeros((2, 0)))


@pytest.mark.parametrize("block", [1, 3, 256])
def test_kernel_symmetric_and_psd(block):
    x = np.random.default_rng(1).normal(size=(40, 30))
    k = kernel_block(x, x, block=block)
    assert np.abs(k - k.T).max() <= 1e-12
    assert np.linalg.eigvalsh(k).min() >= -1e-8


def test_kernel_naive_oracle():
    rng = np.random.default_rng(2)
    g = make_matrix(rng.integers(0, 3, size=(5, 20)))
    x = normalize(g, range(5), compute_norm_stats(g, range(5)))
    k = kernel_block(x, x, block=2)
    m = x.shape[1]
    for i in range(5):
        for j in range(5):
            s = 0.0
            for t in range(m):
                s += x[i, t] * x[j, t]
            assert abs(k[i, j] - s / m) <= 1e-10


def test_cross_kernel_matches_full():
    x = np.random.default_rng(3).normal(size=(9, 7))
    full = x @ x.T / 7
    np.testing.assert_allclose(kernel_block(x[:4], x[4:].copy(), block=2), full[:4, 4:], atol=1e-12)


# ---------------------------------------------------------------- eigen

def test_eigen_identity():
    vals, vecs = eigendecompose(np.eye(3))
    np.testing.assert_allclose(vals, [1, 1, 1])
    np.testing.assert_allclose(vecs.T @ vecs, np.eye(3), atol=1e-12)


def test_eigen_two_by_two():
    vals, vecs = eigendecompose(np.array([[2.0, 1.0], [1.0, 2.0]]))
    np.testing.assert_allclose(vals, [3, 1], atol=1e-12)
    r = 1 / np.sqrt(2)
    np.testing.assert_allclose(vecs[:, 0], [r, r], atol=1e-12)
    # sign rule: largest magnitude entry (first, on the tie) is non-negative
    np.testing.assert_allclose(vecs[:, 1], [r, -r], atol=1e-12)


def test_eigen_reconstruction_and_orthonormality():
    a = np.random.default_rng(4).normal(size=(12, 12))
    k = a @ a.T
    vals, vecs = eigendecompose(k)
    assert vals.size == 12
    assert np.abs(vecs @ np.diag(vals) @ vecs.T - k).max() <= 1e-8
    assert np.abs(vecs.T @ vecs - np.eye(12)).max() <= 1e-8
    for i in range(12):
        assert np.abs(k @ vecs[:, i] - vals[i] * vecs[:, i]).max() <= 1e-6 * np.abs(k).max()


def test_eigen_drops_null_space():
    x = np.random.default_rng(5).normal(size=(10, 3))
    vals, vecs = eigendecompose(x @ x.T)
    assert vals.size == 3 and vecs.shape == (10, 3)
    assert np.all(np.diff(vals) <= 0)


def test_eigen_rejects_asymmetric():
    with pytest.raises(ArgumentError):
        eigendecompose(np.array([[1.0, 0.0], [1.0, 1.0]]))


def test_sign_convention():
    a = np.random.default_rng(6).normal(size=(8, 8))
    _, vecs = eigendecompose(a @ a.T)
    for col in vecs.T:
        i = np.argmax(np.abs(col))
        assert col[i] >= 0


def test_eigenmap_deterministic(two_pop_panel):
    g, _ = two_pop_panel
    a = build_eigenmap(g, range(g.n))
    b = build_eigenmap(g, range(g.n))
    assert a.coords.tobytes() == b.coords.tobytes()
    assert a.eigenvalues.tobytes() == b.eigenvalues.tobytes()


# ---------------------------------------------------------------- significance

def test_flat_spectrum_has_no_dimensions():
    D, rep = significant_dimensions(np.ones(30), 0.01, n_subjects=31)
    assert D == 0 and rep.degenerate


def test_too_few_subjects_untested():
    D, rep = significant_dimensions(np.array([100.0, 1.0, 0.5]), 0.01, n_subjects=4)
    assert D == 0 and not rep.tests


def test_spike_detected_and_capped():
    z = np.random.default_rng(0).normal(size=(61, 400))
    bulk = np.linalg.eigvalsh(z @ z.T / 400)[::-1][:60]
    lam = np.concatenate([[50.0, 40.0, 30.0], bulk])
    D, rep = significant_dimensions(lam, 0.01, n_subjects=64)
    assert D == 3
    assert [t.significant for t in rep.tests] == [True, True, True, False]
    D, rep = significant_dimensions(lam, 0.01, n_subjects=64, max_D=2)
    assert D == 2


def test_statistic_hand_computed():
    lam = np.array([4.0, 2.0, 1.0, 1.0, 0.5])
    L, s1, s2 = 5, 8.5, 16 + 4 + 1 + 1 + 0.25
    n = (L + 2) * s1**2 / (L * s2 - s1**2)
    r = (n - 1) ** 0.5 + L ** 0.5
    mu = r * r / n
    sigma = (r / n) * (1 / (n - 1) ** 0.5 + 1 / L ** 0.5) ** (1 / 3)
    stat, n_eff = tw_statistic(lam)
    assert n_eff == pytest.approx(n, rel=1e-14)
    assert stat == pytest.approx((L * 4.0 / s1 - mu) / sigma, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(0.01, 100.0), min_size=2, max_size=40),
    st.sampled_from([0.001, 0.01, 0.05]),
    st.sampled_from([0.01, 0.05, 0.1, 0.2]),
)
def test_monotone_in_alpha(values, a1, a2):
    lam = np.sort(np.asarray(values))[::-1]
    lo, hi = sorted((a1, a2))
    d_lo, _ = significant_dimensions(lam, lo, n_subjects=lam.size + 1)
    d_hi, _ = significant_dimensions(lam, hi, n_subjects=lam.size + 1)
    assert d_hi >= d_lo


def test_duplicated_rows_no_structure():
    g = make_matrix(np.array([[0, 1, 2, 1, 0], [0, 1, 2, 1, 0]]))
    emap = build_eigenmap(g, [0, 1])
    assert emap.D == 0 and emap.degenerate
    h = make_matrix(np.array([[0, 1, 2, 1, 0], [0, 1, 2, 1, 0], [2, 1, 0, 0, 1]]))
    assert build_eigenmap(h, [0, 1, 2]).D == 0


def test_two_population_map(two_pop_panel):
    g, labels = two_pop_panel
    emap = build_eigenmap(g, range(g.n))
    assert emap.D == 1
    side = emap.coords[:, 0] > 0
    agree = max(np.sum(side == (labels == 1)), np.sum(side == (labels == 0)))
    assert g.n - agree <= 2


def test_base_coords_shape():
    rng = np.random.default_rng(0)
    g = make_matrix(rng.integers(0, 3, size=(226, 300)))
    base = np.sort(rng.choice(226, 100, replace=False))
    emap = build_eigenmap(g, base)
    assert emap.coords.shape[0] == 100


# ---------------------------------------------------------------- Nystrom

def test_nystrom_exact_on_base(two_pop_panel):
    g, _ = two_pop_panel
    base = np.arange(0, 100, 2)
    emap = build_eigenmap(g, base)
    proj = nystrom_project(emap, g, base, check_disjoint=False)
    assert np.abs(proj - emap.coords).max() <= 1e-8
    with pytest.raises(ArgumentError):
        nystrom_project(emap, g, base[:3])


def test_nystrom_duplicate_row():
    rng = np.random.default_rng(9)
    vals = rng.integers(0, 3, size=(31, 80))
    vals[30] = vals[7]
    g = make_matrix(vals)
    emap = build_eigenmap(g, range(30))
    proj = nystrom_project(emap, g, [30])
    assert np.abs(proj[0] - emap.coords[7]).max() <= 1e-8


def test_nystrom_held_out_matches_full_map(two_pop_panel):
    g, _ = two_pop_panel
    held = 37
    base = np.array([i for i in range(g.n) if i != held])
    part = build_eigenmap(g, base)
    full = build_eigenmap(g, range(g.n))
    k = 2
    proj = nystrom_project(part, g, [held], dims=k)[0]
    # the Nystrom point carries the base eigenvector scaling; compare in
    # the units of the full map after an orthogonal alignment of the bases
    a = part.coords[:, :k]
    b = full.coords[base, :k]
    u, _, vt = np.linalg.svd(a.T @ b)
    r = u @ vt
    aligned = proj @ r
    target = full.coords[held, :k]
    span = full.coords[:, :k].max(axis=0) - full.coords[:, :k].min(axis=0)
    assert np.all(np.abs(aligned - target) <= 0.1 * span)


def test_coords_file_round_trip(tmp_path):
    c = np.random.default_rng(0).normal(size=(4, 3))
    save_coords(tmp_path / "c.tsv", ["a", "b", "c", "d"], c)
    ids, back = load_coords(tmp_path / "c.tsv")
    assert ids == ["a", "b", "c", "d"]
    np.testing.assert_allclose(back, c, rtol=1e-11)
