"""Share-and-estimate bearing-only tracker.

Each bearing is turned into a pseudolinear measurement that is linear in the
target position. Over a short window the target is assumed to move with
constant velocity, so a measurement taken ``dt`` after the window start is
linear in the window-start state as well::

    sin(b) x_s - cos(b) y_s = [sin b, -cos b, dt sin b, -dt cos b] . xi(t0)

Stacking these rows gives a regressor that is solved by weighted least
squares and the solution is propagated to the query time.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .world import Measurement

MIN_MEASUREMENTS = 4
MIN_SINGULAR_VALUE = 1e-6


class EstimationError(RuntimeError):
    """Base class for failed solves; the caller keeps its previous estimate."""


class InsufficientData(EstimationError):
    pass


class IllConditioned(EstimationError):
    pass


def transition(dt: float) -> np.ndarray:
    """State transition of the constant-velocity model over ``dt``."""
    F = np.eye(4)
    F[0, 2] = F[1, 3] = dt
    return F


@dataclass
class TargetEstimate:
    xi: np.ndarray
    P: np.ndarray
    t_ref: float
    m_used: int = 0

    @property
    def position(self) -> np.ndarray:
        return self.xi[:2]

    @property
    def velocity(self) -> np.ndarray:
        return self.xi[2:]


@dataclass
class MeasurementBuffer:
    """Time-sorted moving window of local and received measurements."""

    window: float = 20.0
    capacity: int = 40
    items: list[Measurement] = field(default_factory=list)
    _keys: set = field(default_factory=set, repr=False)

    def __len__(self) -> int:
        return len(self.items)

    def add(self, m: Measurement) -> bool:
        key = (m.source_id, m.t)
        if key in self._keys:
            return False
        pos = bisect.bisect_right([x.t for x in self.items], m.t)
        self.items.insert(pos, m)
        self._keys.add(key)
        if len(self.items) > self.capacity:
            self._drop(len(self.items) - self.capacity)
        return True

    def _drop(self, k: int):
        for m in self.items[:k]:
            self._keys.discard((m.source_id, m.t))
        del self.items[:k]

    def prune(self, t_now: float):
        k = 0
        while k < len(self.items) and self.items[k].t < t_now - self.window:
            k += 1
        if k:
            self._drop(k)


def pseudo_measurement(m: Measurement) -> tuple[float, np.ndarray]:
    s, c = math.sin(m.bearing), math.cos(m.bearing)
    return s * m.x_obs - c * m.y_obs, np.array([s, -c])


def build_regressor(items: list[Measurement] | MeasurementBuffer) -> tuple[np.ndarray, np.ndarray, float]:
    items = list(items.items if isinstance(items, MeasurementBuffer) else items)
    if not items:
        raise InsufficientData("empty measurement buffer")
    t0 = min(m.t for m in items)
    b = np.array([m.bearing for m in items])
    dt = np.array([m.t for m in items]) - t0
    s, c = np.sin(b), np.cos(b)
    Phi = np.column_stack([s, -c, dt * s, -dt * c])
    z = s * np.array([m.x_obs for m in items]) - c * np.array([m.y_obs for m in items])
    return Phi, z, t0


def estimate(buf, t_now: float, sigma: float) -> TargetEstimate:
    """Windowed WLS estimate of the target state at ``t_now``.

    With a scalar noise level the weights do not move the solution, only the
    covariance, so the solve goes through the SVD of the regressor directly.
    """
    Phi, z, t0 = build_regressor(buf)
    M = Phi.shape[0]
    if M < MIN_MEASUREMENTS:
        raise InsufficientData(f"{M} measurements, need {MIN_MEASUREMENTS}")
    U, S, Vt = np.linalg.svd(Phi, full_matrices=False)
    if S[-1] < MIN_SINGULAR_VALUE:
        raise IllConditioned(f"smallest singular value {S[-1]:.3g}")
    xi0 = Vt.T @ ((U.T @ z) / S)
    P0 = (sigma ** 2) * (Vt.T / S ** 2) @ Vt
    P0 = 0.5 * (P0 + P0.T)
    return propagate(TargetEstimate(xi0, P0, t0, M), t_now)


def propagate(est: TargetEstimate, t: float) -> TargetEstimate:
    dt = t - est.t_ref
    if dt < 0:
        raise ValueError("cannot propagate an estimate backwards in time")
    F = transition(dt)
    P = F @ est.P @ F.T
    return TargetEstimate(F @ est.xi, 0.5 * (P + P.T), t, est.m_used)
