"""Ground-truth kinematics for the target and the vehicles, plus bearing sensing.

Vehicles follow a planar unicycle model (surge along the heading, no sway).
Integration over a step with constant controls is exact: the path is a circular
arc when the yaw rate is nonzero and a straight segment otherwise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

TRAJECTORY_KINDS = ("fixed", "constant-velocity", "sinusoid")


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.fmod(a + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


def _sinc(x: float) -> float:
    # sin(x)/x, continuous at 0
    if abs(x) < 1e-8:
        return 1.0 - x * x / 6.0
    return math.sin(x) / x


@dataclass(frozen=True)
class TargetState:
    p: tuple[float, float]
    v: tuple[float, float] = (0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.p[0], self.p[1], self.v[0], self.v[1]])


@dataclass(frozen=True)
class AgentState:
    x: float
    y: float
    theta: float
    u_max: float = 1.0
    r_max: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def p(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Measurement:
    t: float
    bearing: float
    x_obs: float
    y_obs: float
    source_id: int


@dataclass(frozen=True)
class TrajectorySpec:
    kind: str
    p0: tuple[float, float]
    v0: tuple[float, float] = (0.0, 0.0)
    v_n: float = 0.0
    omega: float = 0.01
    heading0: float = 0.0

    def __post_init__(self):
        if self.kind not in TRAJECTORY_KINDS:
            raise ValueError(f"unknown trajectory kind {self.kind!r}")


def clamp_controls(s: AgentState, surge: float, yaw_rate: float) -> tuple[float, float]:
    u = min(max(surge, -s.u_max), s.u_max)
    r = min(max(yaw_rate, -s.r_max), s.r_max)
    if u != surge or r != yaw_rate:
        log.warning("control (%.4g, %.4g) clamped to (%.4g, %.4g)", surge, yaw_rate, u, r)
    return u, r


def arc_displacement(theta: float, surge: float, yaw_rate: float, dt: float) -> tuple[float, float]:
    """Exact displacement of a unicycle holding (surge, yaw_rate) for dt seconds.

    Written as a chord of length ``surge*dt*sinc(dtheta/2)`` along the mean
    heading, which is exact for arcs and reduces to a straight line at zero
    yaw rate without a special case.
    """
    dth = yaw_rate * dt
    chord = surge * dt * _sinc(0.5 * dth)
    mid = theta + 0.5 * dth
    return chord * math.cos(mid), chord * math.sin(mid)


def step_agent(s: AgentState, u: Sequence[float], dt: float) -> AgentState:
    """Advance an agent by ``dt`` seconds under control ``u = (surge, yaw_rate)``."""
    if not all(math.isfinite(v) for v in (s.x, s.y, s.theta)):
        raise ValueError("non-finite agent state")
    if dt <= 0:
        raise ValueError("dt must be positive")
    surge, yaw = clamp_controls(s, float(u[0]), float(u[1]))
    dx, dy = arc_displacement(s.theta, surge, yaw, dt)
    return replace(s, x=s.x + dx, y=s.y + dy, theta=s.theta + yaw * dt)


def _rot(heading: float) -> np.ndarray:
    c, s = math.cos(heading), math.sin(heading)
    return np.array([[c, -s], [s, c]])


def target_truth(traj: TrajectorySpec, t: float) -> TargetState:
    """True target position and velocity at time ``t``.

    The sinusoid weaves across a straight track: in the track frame the
    offset is ``(v_n sin(omega t + pi), v_n t)``, rotated by ``heading0``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    p0 = np.asarray(traj.p0, dtype=float)
    if traj.kind == "fixed":
        return TargetState(p=(float(p0[0]), float(p0[1])))
    if traj.kind == "constant-velocity":
        v0 = np.asarray(traj.v0, dtype=float)
        p = p0 + v0 * t
        return TargetState(p=(float(p[0]), float(p[1])), v=(float(v0[0]), float(v0[1])))
    if traj.kind == "sinusoid":
        R = _rot(traj.heading0)
        off = np.array([traj.v_n * math.sin(traj.omega * t + math.pi), traj.v_n * t])
        vel = np.array([traj.v_n * traj.omega * math.cos(traj.omega * t + math.pi), traj.v_n])
        p = p0 + R @ off
        v = R @ vel
        return TargetState(p=(float(p[0]), float(p[1])), v=(float(v[0]), float(v[1])))
    raise ValueError(f"unknown trajectory kind {traj.kind!r}")


def true_bearing(target_p: Sequence[float], sensor_p: Sequence[float]) -> float:
    dx = target_p[0] - sensor_p[0]
    dy = target_p[1] - sensor_p[1]
    if dx == 0.0 and dy == 0.0:
        raise ValueError("bearing undefined for coincident positions")
    return math.atan2(dy, dx)


def measure_bearing(target_p: Sequence[float], sensor_p: Sequence[float], sigma: float,
                    rng: np.random.Generator) -> float:
    """Bearing from sensor to target corrupted by uniform noise in [-sigma, sigma]."""
    beta = true_bearing(target_p, sensor_p)
    noise = rng.uniform(-sigma, sigma) if sigma > 0 else 0.0
    return wrap_angle(beta + noise)
