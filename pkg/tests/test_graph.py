from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from auvtrack.channel import ModemConfig, snr
from auvtrack.graph import (
    CommGraph, comm_graph, fiedler, fiedler_batch, gain_matrix, laplacian, laplacian_from_gains,
    link_gain, neighbors,
)

K3 = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=float)
P3 = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)


def components(W):
    n = W.shape[0]
    seen, count = set(), 0
    for s in range(n):
        if s in seen:
            continue
        count += 1
        q = deque([s])
        seen.add(s)
        while q:
            u = q.popleft()
            for v in range(n):
                if W[u, v] > 0 and v not in seen:
                    seen.add(v)
                    q.append(v)
    return count


@st.composite
def weight_matrices(draw, n_min=2, n_max=6):
    n = draw(st.integers(n_min, n_max))
    vals = draw(st.lists(st.floats(0.01, 1), min_size=n * n, max_size=n * n))
    drop = draw(st.lists(st.booleans(), min_size=n * n, max_size=n * n))
    W = np.array(vals).reshape(n, n) * ~np.array(drop).reshape(n, n)
    W = np.triu(W, 1)
    return W + W.T


def test_link_gain_threshold():
    assert link_gain(40.0, 40.0) == 40.0
    assert link_gain(39.9, 40.0) == 0.0
    assert link_gain(99.9, 10.0) == 99.9


class TestLaplacian:
    def test_unit_triangle(self):
        L = laplacian(CommGraph(K3 * 100, 100))
        assert np.allclose(np.diag(L), 2) and L[0, 1] == -1
        assert np.linalg.eigvalsh(L) == pytest.approx([0, 3, 3], abs=1e-12)

    def test_path(self):
        L = laplacian(CommGraph(P3 * 50, 50))
        assert np.linalg.eigvalsh(L) == pytest.approx([0, 1, 3], abs=1e-12)

    def test_no_links(self):
        assert not laplacian(CommGraph(np.zeros((3, 3)), 10)).any()

    @given(W=weight_matrices())
    def test_ones_in_kernel(self, W):
        L = laplacian_from_gains(W)
        assert np.abs(L @ np.ones(len(W))).max() < 1e-9

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            CommGraph(np.array([[0, 1], [2, 0]]), 10)


class TestFiedler:
    def test_examples(self):
        assert fiedler(laplacian_from_gains(K3)) == pytest.approx(3)
        assert fiedler(laplacian_from_gains(P3)) == pytest.approx(1)
        W = np.zeros((3, 3))
        W[0, 1] = W[1, 0] = 1
        assert fiedler(laplacian_from_gains(W)) == pytest.approx(0, abs=1e-12)

    def test_rejects_non_laplacian(self):
        with pytest.raises(ValueError):
            fiedler(np.eye(3))

    @given(W=weight_matrices())
    def test_matches_component_count(self, W):
        assert (fiedler(laplacian_from_gains(W)) > 1e-9) == (components(W) == 1)

    @given(W=weight_matrices(4, 4), i=st.integers(0, 3), j=st.integers(0, 3), bump=st.floats(0, 1))
    def test_monotone_under_gain_increase(self, W, i, j, bump):
        if i == j:
            return
        W2 = W.copy()
        W2[i, j] += bump
        W2[j, i] += bump
        before = np.linalg.eigvalsh(laplacian_from_gains(W))[1]
        after = np.linalg.eigvalsh(laplacian_from_gains(W2))[1]
        assert fiedler(laplacian_from_gains(W2)) >= fiedler(laplacian_from_gains(W)) - 1e-12
        assert after >= before - 1e-12

    @given(W=weight_matrices(2, 5))
    @settings(max_examples=200)
    def test_batch_closed_forms_match_eigensolver(self, W):
        ref = max(np.linalg.eigvalsh(laplacian_from_gains(W))[1], 0.0)
        assert fiedler_batch(W[None])[0] == pytest.approx(ref, abs=1e-12)


def test_neighbors():
    assert neighbors(CommGraph(K3, 1), 0) == {1, 2}
    assert neighbors(CommGraph(np.zeros((3, 3)), 1), 0) == set()
    assert neighbors(CommGraph(P3, 1), 2) == {1}


def test_gain_matrix_from_positions():
    cfg = ModemConfig(noise_level=40, detection_threshold=40)
    reach = brentq(lambda d: snr(cfg, d) - cfg.detection_threshold, 1.0, 1e5)
    pts = [(0, 0), (0.8 * reach, 0), (1.6 * reach, 0)]
    g = gain_matrix(pts, cfg)
    assert g[0, 1] > 0 and g[1, 2] > 0 and g[0, 2] == 0
    assert np.allclose(g, g.T) and np.all(np.diag(g) == 0)
    # the middle node relays, so the graph is still connected
    assert fiedler(laplacian(comm_graph(pts, cfg))) > 0
