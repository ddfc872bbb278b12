"""SNR-weighted communication graph and its algebraic connectivity."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import ModemConfig, snr_array

CONNECTED_TOL = 1e-9


@dataclass
class CommGraph:
    gains: np.ndarray
    rho_max: float

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("gains must be square")
        if not np.allclose(g, g.T, atol=1e-12):
            raise ValueError("gains must be symmetric")
        if np.any(np.diag(g) != 0) or np.any(g < 0):
            raise ValueError("gains need a zero diagonal and nonnegative entries")
        self.gains = g

    @property
    def n(self) -> int:
        return self.gains.shape[0]


def link_gain(rho: float, dt: float) -> float:
    return rho if rho >= dt else 0.0


def gain_matrix(positions: Sequence[Sequence[float]], cfg: ModemConfig) -> np.ndarray:
    """Thresholded SNR gains between every pair of positions."""
    P = np.asarray(positions, dtype=float).reshape(-1, 2)
    d = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=-1)
    rho = snr_array(cfg, d)
    g = np.where(rho >= cfg.detection_threshold, rho, 0.0)
    np.fill_diagonal(g, 0.0)
    return g


def comm_graph(positions, cfg: ModemConfig) -> CommGraph:
    return CommGraph(gain_matrix(positions, cfg), cfg.rho_max)


def laplacian(g: CommGraph) -> np.ndarray:
    """Normalized weighted Laplacian; the diagonal sums only the surviving gains."""
    W = g.gains / g.rho_max
    return np.diag(W.sum(axis=1)) - W


def laplacian_from_gains(W: np.ndarray) -> np.ndarray:
    """Batched Laplacian of already-normalized weights with shape (..., n, n)."""
    deg = W.sum(axis=-1)
    L = -W.copy()
    idx = np.arange(W.shape[-1])
    L[..., idx, idx] = deg
    return L


def fiedler(L: np.ndarray) -> float:
    """Second-smallest Laplacian eigenvalue, clipped at zero."""
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError("Laplacian must be square")
    scale = max(1.0, float(np.abs(L).max()))
    if not np.allclose(L, L.T, atol=1e-12 * scale):
        raise ValueError("Laplacian must be symmetric")
    if np.abs(L.sum(axis=1)).max() > 1e-9 * scale:
        raise ValueError("Laplacian rows must sum to zero")
    if L.shape[0] < 2:
        return 0.0
    ev = np.linalg.eigvalsh(L)
    return max(float(ev[1]), 0.0)


def is_connected(L: np.ndarray) -> bool:
    return fiedler(L) > CONNECTED_TOL


def neighbors(g: CommGraph, i: int) -> set[int]:
    return {j for j in range(g.n) if j != i and g.gains[i, j] > 0}


def fiedler_batch(W: np.ndarray) -> np.ndarray:
    """Fiedler values of a stack of normalized weight matrices, shape (..., n, n).

    Two- and three-node graphs use closed forms built only from arithmetic
    and a square root: for three nodes with edge weights a, b, c the nonzero
    eigenvalues are the roots of ``x^2 - 2(a+b+c) x + 3(ab+bc+ca)``.
    """
    n = W.shape[-1]
    if n < 2:
        return np.zeros(W.shape[:-2])
    if n == 2:
        return 2.0 * W[..., 0, 1]
    if n == 3:
        a, b, c = W[..., 0, 1], W[..., 0, 2], W[..., 1, 2]
        s = a + b + c
        q = a * b + b * c + c * a
        root = np.sqrt(np.clip(s * s - 3.0 * q, 0.0, None))
        den = s + root
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(den > 0, 3.0 * q / den, 0.0)
    return np.clip(np.linalg.eigvalsh(laplacian_from_gains(W))[..., 1], 0.0, None)
