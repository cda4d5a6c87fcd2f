"""Both kernel backends must agree bit for bit."""

import numpy as np
import pytest

from ancestrymap import kernels

pytestmark = pytest.mark.skipif(len(kernels.backends()) < 2, reason="numba not installed")


@pytest.fixture
def impls():
    b = kernels.backends()
    return b["numba"], b["numpy"]


@pytest.mark.parametrize("seed", range(5))
def test_ward_agrees(impls, seed):
    rng = np.random.default_rng(seed)
    for x in (rng.normal(size=(60, 3)), rng.integers(0, 3, size=(40, 2)).astype(float)):
        a, b = (impl.ward_linkage(x) for impl in impls)
        assert a.tobytes() == b.tobytes()


def test_nearest_agrees(impls):
    rng = np.random.default_rng(0)
    base = rng.integers(0, 4, size=(50, 2)).astype(float)
    pts = rng.integers(0, 4, size=(300, 2)).astype(float)
    a, b = (impl.nearest_index(pts, base) for impl in impls)
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("seed", range(5))
def test_flow_agrees(impls, seed):
    from ancestrymap.matching import MatchConfig, full_matching_flow

    rng = np.random.default_rng(seed)
    dist = np.round(rng.random((5, 7)), 2)
    results = []
    for impl in impls:
        prev = kernels.min_cost_flow
        kernels.min_cost_flow = impl.min_cost_flow
        try:
            results.append(full_matching_flow(dist, MatchConfig()))
        finally:
            kernels.min_cost_flow = prev
    (ua, ca), (ub, cb) = results
    assert ca == cb
    np.testing.assert_array_equal(ua, ub)


def test_backend_flag_reported():
    assert kernels.BACKEND in kernels.backends()
