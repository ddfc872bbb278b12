"""Receding-horizon planner over discrete heading increments.

Each agent searches the tree of heading-increment sequences of length ``H``
with a level-wise branch and bound: all surviving prefixes of one depth are
expanded together and pruned against a greedy incumbent using an admissible
bound on the remaining stages. The target estimate is represented by
unscented-transform sigma points; every stage cost is the sigma-weighted
average of the geometry and distance terms plus the connectivity term of the
predicted communication graph. Neighbors are rolled forward along the
policies of intent they last broadcast.

Agents plan one after another in TDMA slot order (:func:`sma_round`), so
agent ``i`` sees fresh policies from its predecessors and residual intents
from its successors.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .channel import ModemConfig, snr_array
from .estimator import TargetEstimate
from .graph import CONNECTED_TOL, fiedler_batch, laplacian_from_gains
from .world import AgentState, arc_displacement

log = logging.getLogger(__name__)

SENTINEL = 1e9
PENALTY = 1e6
N_STATE = 4


@dataclass(frozen=True)
class PlannerParams:
    horizon: int = 4
    n_actions: int = 7
    max_turn: float = 0.3
    turn_step: float = 0.05
    min_turn: float = 0.1
    alpha: float = 0.5
    gamma: float = 0.3
    d_r: float = 30.0
    d_max: float = 300.0
    d_safe: float = 25.0
    omega0: float = 1.0 / 3.0
    mode: str = "weighted"
    epsilon: float | None = None
    adapt: bool = False
    adapt_window: int = 5

    def validate(self) -> list[str]:
        errs = []
        if self.horizon < 1:
            errs.append("planner.horizon must be >= 1")
        if self.n_actions < 1 or self.n_actions % 2 == 0:
            errs.append("planner.n_actions must be odd")
        if not 0 <= self.alpha <= 1:
            errs.append("planner.alpha must lie in [0, 1]")
        if not 0 <= self.gamma <= 1:
            errs.append("planner.gamma must lie in [0, 1]")
        if not 0 < self.d_r < self.d_max:
            errs.append("planner.d_r must be positive and below d_max")
        if self.d_safe < 0:
            errs.append("planner.d_safe must be nonnegative")
        if not 0 <= self.omega0 < 1:
            errs.append("planner.omega0 must lie in [0, 1)")
        if self.min_turn <= 0 or self.max_turn < self.min_turn:
            errs.append("planner.max_turn must be >= min_turn > 0")
        if self.adapt and self.max_turn - self.turn_step < self.min_turn:
            errs.append("planner.max_turn - turn_step must stay >= min_turn")
        if self.mode not in ("weighted", "epsilon"):
            errs.append(f"planner.mode {self.mode!r} is not 'weighted' or 'epsilon'")
        return errs

    def actions(self, max_turn: float | None = None) -> np.ndarray:
        m = self.max_turn if max_turn is None else max_turn
        if self.n_actions == 1:
            return np.zeros(1)
        return np.linspace(-m, m, self.n_actions)


@dataclass(frozen=True)
class IntentPolicy:
    headings: tuple[float, ...]
    surge: float
    issued_at: int = 0

    def __len__(self) -> int:
        return len(self.headings)


@dataclass
class NeighborInfo:
    """Last broadcast received from a neighbor."""

    pose: AgentState
    policy: IntentPolicy
    t_sent: float
    round_heard: int


@dataclass
class Belief:
    own: AgentState
    t: float
    target: TargetEstimate | None
    neighbors: dict[int, NeighborInfo] = field(default_factory=dict)
    round: int = 0
    agent_id: int = 0

    def ages(self) -> dict[int, int]:
        return {j: self.round - nb.round_heard for j, nb in self.neighbors.items()}


@dataclass
class SigmaSet:
    points: np.ndarray
    weights: np.ndarray

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def cov(self) -> np.ndarray:
        d = self.points - self.mean()
        return (self.weights[:, None] * d).T @ d


@dataclass
class PlanResult:
    policy: IntentPolicy
    cost: float
    evaluations: int
    sequence: tuple[int, ...] = ()


def _sqrt_psd(P: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(0.5 * (P + P.T))
        if np.any(w < -1e-9 * max(1.0, abs(w).max())):
            log.info("covariance not PSD, clipping eigenvalues %s", w)
        return V * np.sqrt(np.clip(w, 0.0, None))


def sigma_points(est: TargetEstimate, omega0: float = 1.0 / 3.0) -> SigmaSet:
    """Symmetric sigma set with center weight ``omega0``.

    The wings sit at ``mean +- sqrt(n/(1-omega0)) * k_j`` where ``k_j`` are the
    columns of a square root ``K`` of ``P`` with ``K K^T = P``.
    """
    if omega0 >= 1:
        raise ValueError("omega0 must be < 1")
    n = N_STATE
    K = _sqrt_psd(np.asarray(est.P, dtype=float))
    scale = math.sqrt(n / (1.0 - omega0))
    mean = np.asarray(est.xi, dtype=float)
    pts = np.empty((2 * n + 1, n))
    pts[0] = mean
    pts[1:n + 1] = mean + scale * K.T
    pts[n + 1:] = mean - scale * K.T
    w = np.full(2 * n + 1, (1.0 - omega0) / (2 * n))
    w[0] = omega0
    return SigmaSet(pts, w)


def geometry_cost(bearings: Sequence[float]) -> float:
    """Inverse smallest singular value of the stacked ``[sin b, -cos b]`` rows."""
    b = np.asarray(bearings, dtype=float)
    if b.size == 0:
        raise ValueError("need at least one bearing")
    Phi = np.column_stack([np.sin(b), -np.cos(b)])
    s = np.linalg.svd(Phi, compute_uv=False)
    s1 = s[-1] if Phi.shape[0] >= 2 else 0.0
    if s1 < 1e-9:
        return SENTINEL
    return 1.0 / s1


def _geometry_from_sum(S: np.ndarray, m: int) -> np.ndarray:
    # S = sum of exp(2i*beta) over m unit bearings; the Gram matrix of the
    # [sin, -cos] rows has eigenvalues m/2 +- |S|/2
    lam = 0.5 * (m - np.abs(S))
    s1 = np.sqrt(np.clip(lam, 0.0, None))
    with np.errstate(divide="ignore"):
        return np.where(s1 < 1e-9, SENTINEL, 1.0 / s1)


def distance_cost(d_hat: float, d_r: float) -> float:
    return d_hat / d_r


def connectivity_cost(gains: np.ndarray, rho_max: float, i: int = 0) -> float:
    """Connectivity penalty of agent ``i`` for a predicted gain matrix.

    One term per neighbor: the inverse Fiedler value of the whole predicted
    graph, or the sentinel when that link is below threshold or the graph is
    disconnected.
    """
    g = np.asarray(gains, dtype=float)
    n = g.shape[0]
    if n < 2:
        return 0.0
    W = g / rho_max
    ev = np.linalg.eigvalsh(laplacian_from_gains(W))
    s2 = ev[1]
    total = 0.0
    for j in range(n):
        if j == i:
            continue
        if g[i, j] <= 0 or s2 <= CONNECTED_TOL:
            total += SENTINEL
        else:
            total += 1.0 / s2
    return total


def surge_heuristic(d_hat: float, v_target: float, params: PlannerParams, u_max: float) -> float:
    """Pursue at full speed when far, match the target speed at the desired range."""
    k_v = u_max / params.d_r
    return min(max(abs(v_target) + k_v * (d_hat - params.d_r), 0.0), u_max)


def default_surge(params: PlannerParams, u_max: float) -> float:
    # no estimate yet: behave as if at the edge of the allowed range
    return surge_heuristic(params.d_max, 0.0, params, u_max)


def extend_intent(policy: IntentPolicy) -> IntentPolicy:
    """Drop the consumed action and repeat the last one as the base policy."""
    h = policy.headings
    if not h:
        return policy
    return replace(policy, headings=h[1:] + (h[-1],), issued_at=policy.issued_at + 1)


def adapt_granularity(history: Sequence[float], params: PlannerParams, max_turn: float) -> float:
    """Shrink the heading range after a run of small first increments."""
    w = params.adapt_window
    if len(history) < w or params.n_actions < 3:
        return max_turn
    smallest = 2.0 * max_turn / (params.n_actions - 1)
    if all(abs(a) <= smallest + 1e-12 for a in history[-w:]):
        return max(max_turn - params.turn_step, params.min_turn)
    return max_turn


def predict_pose(info: NeighborInfo, tau: float, dt_plan: float) -> tuple[float, float, float]:
    """Pose of a neighbor at time ``tau`` if it follows its last intent.

    Beyond the broadcast horizon the last increment is repeated, matching
    :func:`extend_intent`.
    """
    x, y, th = info.pose.x, info.pose.y, info.pose.theta
    remaining = max(tau - info.t_sent, 0.0)
    heads = info.policy.headings or (0.0,)
    u = info.policy.surge
    k = 0
    while remaining > 1e-12:
        seg = min(dt_plan, remaining)
        r = heads[min(k, len(heads) - 1)] / dt_plan
        dx, dy = arc_displacement(th, u, r, seg)
        x, y, th = x + dx, y + dy, th + r * seg
        remaining -= seg
        k += 1
    return x, y, th


class PlanProblem:
    """Precomputed rollout data for one agent's search at one decision epoch.

    Node states are rows ``(x, y, cos(theta), sin(theta))``. Children are
    produced with angle-addition formulas so that a rollout uses only
    correctly rounded arithmetic and the cost of a sequence does not depend
    on how many nodes are expanded together.
    """

    def __init__(self, belief: Belief, params: PlannerParams, modem: ModemConfig, dt_plan: float,
                 max_turn: float | None = None, mode: str | None = None,
                 neighbor_ids: Sequence[int] | None = None):
        if belief.target is None:
            raise ValueError("planning needs a target estimate")
        self.params = params
        self.modem = modem
        self.dt = dt_plan
        self.mode = mode or params.mode
        self.H = params.horizon
        self.actions = params.actions(max_turn)
        self.U = len(self.actions)
        self.center = (self.U - 1) // 2
        own = belief.own
        self.root = np.array([[own.x, own.y, math.cos(own.theta), math.sin(own.theta)]])
        est = belief.target
        self.surge = surge_heuristic(float(np.linalg.norm(est.position - np.array(own.p))),
                                     float(np.linalg.norm(est.velocity)), params, own.u_max)
        half = 0.5 * self.actions
        self._chord = self.surge * dt_plan * np.sinc(half / np.pi)
        self._ch, self._sh = np.cos(half), np.sin(half)
        self._ca, self._sa = np.cos(self.actions), np.sin(self.actions)
        self.sigma = sigma_points(est, params.omega0)
        ids = sorted(belief.neighbors) if neighbor_ids is None else list(neighbor_ids)
        self.m = len(ids)
        H = self.H
        pts = self.sigma.points
        self.w = self.sigma.weights
        steps = dt_plan * np.arange(1, H + 1)
        # sigma-point target positions at each future step (H, L, 2)
        self.targets = pts[None, :, :2] + steps[:, None, None] * pts[None, :, 2:]
        nb = np.zeros((H, self.m, 2))
        for k, j in enumerate(ids):
            info = belief.neighbors[j]
            for h in range(H):
                nb[h, k] = predict_pose(info, belief.t + steps[h], dt_plan)[:2]
        self.nb = nb
        # neighbor share of the doubled-angle bearing sums, per step and sigma point
        rx = self.targets[:, :, None, 0] - nb[:, None, :, 0]
        ry = self.targets[:, :, None, 1] - nb[:, None, :, 1]
        r2 = rx * rx + ry * ry
        with np.errstate(invalid="ignore", divide="ignore"):
            self.nb_re = np.where(r2 > 0, (rx * rx - ry * ry) / r2, 0.0).sum(axis=-1)
            self.nb_im = np.where(r2 > 0, 2 * rx * ry / r2, 0.0).sum(axis=-1)
        n = self.m + 1
        W = np.zeros((H, n, n))
        if self.m:
            dnn = np.linalg.norm(nb[:, :, None, :] - nb[:, None, :, :], axis=-1)
            rho = snr_array(modem, dnn)
            g = np.where(rho >= modem.detection_threshold, rho, 0.0)
            idx = np.arange(self.m)
            g[:, idx, idx] = 0.0
            W[:, 1:, 1:] = g / modem.rho_max
        self.W_nn = W
        self.geometry_floor = 1.0 / math.sqrt((self.m + 1) / 2.0)
        self.epsilon = None
        if self.mode == "epsilon":
            eps = params.epsilon
            if eps is None:
                eps = 1.0 / (0.7 * math.sqrt((self.m + 1) / 2.0))
            self.epsilon = eps
        self.evaluations = 0

    def _wsum(self, x: np.ndarray) -> np.ndarray:
        # explicit accumulation over sigma points keeps the result independent of batch shape
        acc = self.w[0] * x[..., 0]
        for l in range(1, x.shape[-1]):
            acc = acc + self.w[l] * x[..., l]
        return acc

    def step(self, states: np.ndarray, acts: np.ndarray, h: int):
        """Apply action indices ``acts`` to ``states`` (broadcast) and cost step ``h``.

        Returns the new states and, per row, the stage cost, the expected
        geometry cost and the feasibility flag.
        """
        p = self.params
        x, y, c, s = (states[..., k] for k in range(4))
        ch, sh, ca, sa, chord = self._ch[acts], self._sh[acts], self._ca[acts], self._sa[acts], self._chord[acts]
        x2 = x + chord * (c * ch - s * sh)
        y2 = y + chord * (s * ch + c * sh)
        c2 = c * ca - s * sa
        s2 = s * ca + c * sa
        new = np.stack([x2, y2, c2, s2], axis=-1)
        tg = self.targets[h]
        rx = tg[:, 0] - x2[..., None]
        ry = tg[:, 1] - y2[..., None]
        d2 = rx * rx + ry * ry
        with np.errstate(invalid="ignore", divide="ignore"):
            re = np.where(d2 > 0, (rx * rx - ry * ry) / d2, 0.0) + self.nb_re[h]
            im = np.where(d2 > 0, 2 * rx * ry / d2, 0.0) + self.nb_im[h]
            lam = 0.5 * ((self.m + 1) - np.sqrt(re * re + im * im))
            s1 = np.sqrt(np.clip(lam, 0.0, None))
            jg = np.where(s1 < 1e-9, SENTINEL, 1.0 / s1)
        d = np.sqrt(d2)
        jd = d / p.d_r
        range_pen = np.where((d <= p.d_r) | (d >= p.d_max), PENALTY, 0.0)
        jc = np.zeros(x2.shape)
        safe_pen = np.zeros(x2.shape)
        if self.m:
            nb = self.nb[h]
            ex = nb[:, 0] - x2[..., None]
            ey = nb[:, 1] - y2[..., None]
            dd = np.sqrt(ex * ex + ey * ey)
            safe_pen = PENALTY * (dd < p.d_safe).sum(axis=-1)
            if p.gamma > 0:
                rho = snr_array(self.modem, np.ascontiguousarray(dd))
                g = np.where(rho >= self.modem.detection_threshold, rho, 0.0) / self.modem.rho_max
                Wc = np.broadcast_to(self.W_nn[h], x2.shape + self.W_nn[h].shape).copy()
                Wc[..., 0, 1:] = g
                Wc[..., 1:, 0] = g
                f2 = fiedler_batch(Wc)
                with np.errstate(divide="ignore"):
                    term = np.where(f2 > CONNECTED_TOL, 1.0 / f2, SENTINEL)
                jc = np.where(g > 0, term[..., None], SENTINEL).sum(axis=-1)
        exp_g = self._wsum(jg)
        if self.mode == "epsilon":
            stage = self._wsum(jd + range_pen) + p.gamma * jc + safe_pen
            feasible = exp_g <= self.epsilon
        else:
            stage = self._wsum(p.alpha * jg + (1 - p.alpha) * jd + range_pen) + p.gamma * jc + safe_pen
            feasible = np.ones(x2.shape, dtype=bool)
        return new, stage, exp_g, feasible

    def _remaining_bound(self, states: np.ndarray, h: int) -> np.ndarray:
        """Admissible lower bound on the stages after step ``h`` for nodes at ``states``."""
        p = self.params
        lb = np.zeros(states.shape[:-1])
        reach = self.surge * self.dt
        for k in range(h + 1, self.H):
            tg = self.targets[k]
            rx = tg[:, 0] - states[..., 0, None]
            ry = tg[:, 1] - states[..., 1, None]
            dmin = np.clip(np.sqrt(rx * rx + ry * ry) - reach * (k - h), 0.0, None)
            if self.mode == "epsilon":
                stage = self._wsum(dmin / p.d_r)
            else:
                stage = p.alpha * self.geometry_floor + self._wsum((1 - p.alpha) * dmin / p.d_r)
            lb = lb + (2 * stage if k == self.H - 1 else stage)
        return lb

    def _select(self, costs: np.ndarray, seqs: np.ndarray):
        if costs.size == 0:
            return None
        dev = np.abs(seqs - self.center).sum(axis=1)
        keys = tuple(seqs[:, k] for k in range(seqs.shape[1] - 1, -1, -1)) + (dev, costs)
        i = np.lexsort(keys)[0]
        return float(costs[i]), tuple(int(v) for v in seqs[i])

    def _greedy(self):
        state, acc, seq = self.root, 0.0, []
        allacts = np.arange(self.U)
        for h in range(self.H):
            new, stage, _, feas = self.step(state[:, None, :], allacts[None, :], h)
            stage = stage[0] + (stage[0] if h == self.H - 1 else 0.0)
            if not feas[0].any():
                return math.inf, None
            k = int(np.argmin(np.where(feas[0], stage, np.inf)))
            acc = acc + stage[k]
            seq.append(k)
            state = new[0, k][None, :]
        return float(acc), tuple(seq)

    def branch_and_bound(self):
        """Best (cost, sequence) found by pruned level-wise expansion, or None.

        A greedy dive provides the incumbent; a node survives while its
        accumulated cost plus an admissible bound on the remaining stages
        does not exceed it. Survivors of each level are expanded together.
        """
        incumbent, greedy_seq = self._greedy()
        slack = 1e-9 * max(1.0, abs(incumbent)) if math.isfinite(incumbent) else 0.0
        states = self.root
        acc = np.zeros(1)
        seqs = np.zeros((1, 0), dtype=int)
        allacts = np.arange(self.U)
        for h in range(self.H):
            new, stage, _, feas = self.step(states[:, None, :], allacts[None, :], h)
            last = h == self.H - 1
            cost = acc[:, None] + (2 * stage if last else stage)
            P = states.shape[0]
            child_seq = np.concatenate([np.repeat(seqs, self.U, axis=0),
                                        np.tile(allacts, P)[:, None]], axis=1)
            cost = cost.reshape(-1)
            feas = feas.reshape(-1)
            new = new.reshape(-1, 4)
            if last:
                self.evaluations += cost.size
                if greedy_seq is not None and not (child_seq[:, :-1] == greedy_seq[:-1]).all(axis=1).any():
                    self.evaluations += self.U
                return self._select(cost[feas], child_seq[feas])
            keep = feas.copy()
            if math.isfinite(incumbent):
                keep &= cost + self._remaining_bound(new, h) <= incumbent + slack
            states, acc, seqs = new[keep], cost[keep], child_seq[keep]
            if states.shape[0] == 0:
                if greedy_seq is not None:
                    self.evaluations += self.U
                    return incumbent, greedy_seq
                return None
        return None

    def sequence_costs(self, seqs: np.ndarray):
        """Cost of each full sequence (rows of action indices), evaluated row by row in parallel."""
        seqs = np.asarray(seqs, dtype=int)
        states = np.repeat(self.root, seqs.shape[0], axis=0)
        acc = np.zeros(seqs.shape[0])
        ok = np.ones(seqs.shape[0], dtype=bool)
        for h in range(seqs.shape[1]):
            states, stage, _, feas = self.step(states, seqs[:, h], h)
            acc = acc + (2 * stage if h == self.H - 1 else stage)
            ok &= feas
        return acc, ok

    def exhaustive(self):
        """Reference: enumerate all ``U**H`` sequences and pick the best."""
        import itertools

        seqs = np.array(list(itertools.product(range(self.U), repeat=self.H)), dtype=int)
        costs, ok = self.sequence_costs(seqs)
        self.evaluations += seqs.shape[0]
        return self._select(costs[ok], seqs[ok])

    def sequence_cost(self, seq: Sequence[int]) -> float:
        return float(self.sequence_costs(np.asarray([seq]))[0][0])

    def to_policy(self, seq: Sequence[int], issued_at: int) -> IntentPolicy:
        return IntentPolicy(tuple(float(self.actions[k]) for k in seq), self.surge, issued_at)


def default_policy(belief: Belief, params: PlannerParams) -> IntentPolicy:
    return IntentPolicy((0.0,) * params.horizon, default_surge(params, belief.own.u_max), belief.round)


def plan(belief: Belief, params: PlannerParams, modem: ModemConfig, dt_plan: float,
         mode: str | None = None, max_turn: float | None = None, exhaustive: bool = False) -> PlanResult:
    """Best heading-increment sequence for one agent.

    Without a target estimate the agent holds its heading at the default
    surge. In epsilon mode, if no sequence keeps the expected geometry cost
    under the threshold, the weighted-mode optimum is returned instead.
    """
    if belief.target is None:
        return PlanResult(default_policy(belief, params), float("nan"), 0)
    prob = PlanProblem(belief, params, modem, dt_plan, max_turn=max_turn, mode=mode)
    found = prob.exhaustive() if exhaustive else prob.branch_and_bound()
    if found is None:
        log.debug("no feasible sequence in epsilon mode, falling back to weighted")
        alt = PlanProblem(belief, params, modem, dt_plan, max_turn=max_turn, mode="weighted")
        found = alt.exhaustive() if exhaustive else alt.branch_and_bound()
        alt.evaluations += prob.evaluations
        prob = alt
    cost, seq = found
    return PlanResult(prob.to_policy(seq, belief.round), cost, prob.evaluations, seq)


def receive_policy(belief: Belief, sender: int, pose: AgentState, policy: IntentPolicy, t_sent: float,
                   params: PlannerParams) -> None:
    """Store a neighbor's broadcast, filling in its surge from our own estimate.

    The wire format carries only heading increments, so the receiver applies
    the same surge rule the sender used, evaluated at the sender's pose.
    """
    surge = policy.surge
    if not math.isfinite(surge):
        if belief.target is None:
            surge = default_surge(params, pose.u_max)
        else:
            d = float(np.hypot(*(belief.target.position - np.array(pose.p))))
            surge = surge_heuristic(d, float(np.linalg.norm(belief.target.velocity)), params, pose.u_max)
    belief.neighbors[sender] = NeighborInfo(pose, replace(policy, surge=surge), t_sent, belief.round)


def sma_round(beliefs: Mapping[int, Belief], order: Sequence[int], params: PlannerParams,
              modem: ModemConfig, dt_plan: float, lost: set[tuple[int, int]] = frozenset(),
              mode: str | None = None) -> tuple[dict[int, IntentPolicy], dict[int, int]]:
    """One decision epoch of sequential planning at a common time instant.

    Agents plan in ``order``; each fresh policy is handed to every later
    agent unless the ``(sender, receiver)`` pair is in ``lost``, in which case
    the receiver keeps whatever (possibly aged) intent it already had.
    Returns the policies and the per-agent leaf-evaluation counts.
    """
    policies, evals = {}, {}
    for pos, i in enumerate(order):
        b = beliefs[i]
        res = plan(b, params, modem, dt_plan, mode=mode)
        policies[i] = res.policy
        evals[i] = res.evaluations
        for j in order[pos + 1:]:
            if (i, j) in lost:
                continue
            receive_policy(beliefs[j], i, b.own, res.policy, b.t, params)
    return policies, evals


def joint_exhaustive(beliefs: Mapping[int, Belief], order: Sequence[int], params: PlannerParams,
                     modem: ModemConfig, dt_plan: float) -> tuple[dict[int, tuple[int, ...]], float, int]:
    """Centralized reference: minimize the summed agent costs over the joint action space.

    Only meant for tiny instances; it evaluates ``U**(H*n)`` joint sequences.
    """
    import itertools

    U, H = params.n_actions, params.horizon
    acts = params.actions()
    seqs = list(itertools.product(range(U), repeat=H))
    best, best_cost, count = None, math.inf, 0
    for combo in itertools.product(seqs, repeat=len(order)):
        total = 0.0
        for a, i in enumerate(order):
            b = beliefs[i]
            nbs = {}
            for c, j in enumerate(order):
                if j == i:
                    continue
                pol = IntentPolicy(tuple(float(acts[k]) for k in combo[c]), math.nan)
                tmp = Belief(b.own, b.t, b.target, dict(b.neighbors), b.round, i)
                receive_policy(tmp, j, beliefs[j].own, pol, beliefs[j].t, params)
                nbs[j] = tmp.neighbors[j]
            prob = PlanProblem(Belief(b.own, b.t, b.target, nbs, b.round, i), params, modem, dt_plan)
            total += prob.sequence_cost(combo[a])
        count += 1
        if total < best_cost:
            best, best_cost = combo, total
    return {i: best[a] for a, i in enumerate(order)}, best_cost, count
