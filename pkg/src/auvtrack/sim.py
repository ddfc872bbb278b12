"""Slot-stepped discrete-event simulation of the tracking team.

Virtual time advances one TDMA slot at a time. At the start of a slot the
packets broadcast in the previous slot land, then the slot owner estimates,
plans and broadcasts. Within the slot the world is integrated in ticks so
that bearings can be sampled at the sensing period.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import channel
from .channel import AcousticPacket, PacketError, decode_packet, encode_packet, measurement_capacity
from .config import ScenarioConfig
from .estimator import EstimationError, MeasurementBuffer, TargetEstimate, estimate, propagate
from .graph import comm_graph, fiedler, laplacian
from .planner import (Belief, IntentPolicy, adapt_granularity, connectivity_cost, default_policy,
                      plan, receive_policy, surge_heuristic)
from .world import AgentState, Measurement, TargetState, measure_bearing, step_agent, target_truth

log = logging.getLogger(__name__)

OPT_GEOMETRY_3 = 1.0 / math.sqrt(1.5)

CSV_FIELDS = [
    "round", "t", "agent", "alive", "x", "y", "theta", "target_x", "target_y", "target_vx", "target_vy",
    "est_x", "est_y", "est_vx", "est_vy", "trace_p", "error", "j_g", "j_d", "j_c", "fiedler",
    "sent", "delivered", "evaluations", "max_turn", "plan_cost",
]


def tracking_error(est: TargetEstimate | np.ndarray, truth: TargetState) -> float:
    xi = est.xi if isinstance(est, TargetEstimate) else np.asarray(est)
    return float(math.hypot(xi[0] - truth.p[0], xi[1] - truth.p[1]))


def team_geometry_cost(positions: Sequence[Sequence[float]], target_p: Sequence[float]) -> float:
    """Geometry cost of the whole team from true positions (closed form)."""
    s = 0j
    m = 0
    for p in positions:
        dx, dy = target_p[0] - p[0], target_p[1] - p[1]
        r2 = dx * dx + dy * dy
        if r2 > 0:
            s += complex(dx, dy) ** 2 / r2
            m += 1
    lam = 0.5 * (m - abs(s))
    return 1e9 if lam <= 1e-18 else 1.0 / math.sqrt(lam)


@dataclass
class AgentRuntime:
    id: int
    state: AgentState
    buffer: MeasurementBuffer
    belief: Belief
    policy: IntentPolicy
    control: tuple[float, float] = (0.0, 0.0)
    pending: list[Measurement] = field(default_factory=list)
    estimate: TargetEstimate | None = None
    alive: bool = True
    max_turn: float = 0.0
    history: list[float] = field(default_factory=list)
    evaluations: int = 0
    plan_cost: float = math.nan


@dataclass
class RunLog:
    name: str
    seed: int
    n_agents: int
    rows: list[dict] = field(default_factory=list)
    transmissions: list[tuple[int, int, float]] = field(default_factory=list)
    converge_after: float = 0.0
    failed: dict[int, float] = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _fmt(r[k]) for k in CSV_FIELDS})
        return buf.getvalue()

    def series(self, key: str, agent: int | None = None) -> np.ndarray:
        rows = self.rows if agent is None else [r for r in self.rows if r["agent"] == agent]
        if agent is None:
            rows = [r for r in rows if r["agent"] == 0]
        return np.array([r[key] for r in rows], dtype=float)

    def times(self) -> np.ndarray:
        return self.series("t")

    def rounds(self) -> list[list[dict]]:
        out: dict[int, list[dict]] = {}
        for r in self.rows:
            out.setdefault(r["round"], []).append(r)
        return [out[k] for k in sorted(out)]

    def surviving(self) -> list[int]:
        return [i for i in range(self.n_agents) if i not in self.failed]

    def mean_error(self, t_from: float | None = None, agents: Iterable[int] | None = None) -> float:
        t0 = self.converge_after if t_from is None else t_from
        ids = set(self.surviving() if agents is None else agents)
        errs = [r["error"] for r in self.rows if r["t"] >= t0 and r["agent"] in ids and r["alive"]]
        errs = [e for e in errs if math.isfinite(e)]
        return float(np.mean(errs)) if errs else math.nan

    def spread(self) -> np.ndarray:
        """Mean pairwise distance among alive agents, per round."""
        out = []
        for rs in self.rounds():
            pts = [(r["x"], r["y"]) for r in rs if r["alive"]]
            ds = [math.dist(a, b) for k, a in enumerate(pts) for b in pts[:k]]
            out.append(float(np.mean(ds)) if ds else 0.0)
        return np.array(out)

    def summary(self) -> dict:
        last = self.rounds()[-1] if self.rows else []
        return {
            "name": self.name,
            "seed": self.seed,
            "rounds": len(self.rounds()),
            "final_time": last[0]["t"] if last else 0.0,
            "final_geometry_cost": last[0]["j_g"] if last else math.nan,
            "final_fiedler": last[0]["fiedler"] if last else math.nan,
            "mean_error_post_convergence": self.mean_error(),
            "converge_after": self.converge_after,
            "mean_spread": float(self.spread().mean()) if self.rows else math.nan,
            "packets_sent": int(sum(rs[0]["sent"] for rs in self.rounds())),
            "packets_delivered": int(sum(rs[0]["delivered"] for rs in self.rounds())),
            "max_evaluations": int(max((r["evaluations"] for r in self.rows), default=0)),
            "failed": {str(k): v for k, v in self.failed.items()},
        }

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{self.name}_seed{self.seed}.csv"
        json_path = out / f"{self.name}_seed{self.seed}.json"
        csv_path.write_text(self.to_csv())
        json_path.write_text(json.dumps(_jsonable(self.summary()), indent=2, sort_keys=True) + "\n")
        return csv_path, json_path


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.10g}"
    return str(v)


def _jsonable(d):
    if isinstance(d, dict):
        return {k: _jsonable(v) for k, v in d.items()}
    if isinstance(d, float) and not math.isfinite(d):
        return None
    return d


def _tick(a: float, b: float) -> Fraction:
    fa, fb = Fraction(a).limit_denominator(1000), Fraction(b).limit_denominator(1000)
    return Fraction(math.gcd(fa.numerator * fb.denominator, fb.numerator * fa.denominator),
                    fa.denominator * fb.denominator)


def _place_agents(cfg: ScenarioConfig, rng: np.random.Generator) -> list[AgentState]:
    if cfg.placement is None:
        return [AgentState(a.x, a.y, a.heading, a.u_max, a.r_max) for a in cfg.agents]
    pl = cfg.placement
    xmin, xmax, ymin, ymax = pl.box
    pts: list[tuple[float, float]] = []
    for _ in range(10000):
        if len(pts) == pl.count:
            break
        p = (float(rng.uniform(xmin, xmax)), float(rng.uniform(ymin, ymax)))
        if all(math.dist(p, q) >= cfg.planner.d_safe for q in pts):
            pts.append(p)
    else:
        raise RuntimeError("could not place agents respecting the safety distance")
    heads = rng.uniform(-math.pi, math.pi, size=pl.count)
    return [AgentState(x, y, float(h), pl.u_max, pl.r_max) for (x, y), h in zip(pts, heads)]


class Simulation:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        n = cfg.n_agents
        ss = np.random.SeedSequence(cfg.seed)
        s_sense, s_place, s_link = ss.spawn(3)
        self.rng_sense = np.random.default_rng(s_sense)
        rng_place = np.random.default_rng(s_place)
        self.rng_link = {(i, j): np.random.default_rng(s)
                         for (i, j), s in zip([(i, j) for i in range(n) for j in range(n)], s_link.spawn(n * n))}
        target = cfg.target
        if cfg.random_target_heading:
            target = replace(target, heading0=float(rng_place.uniform(-math.pi, math.pi)))
        self.target = target
        states = _place_agents(cfg, rng_place)
        self.agents = []
        for i, s in enumerate(states):
            belief = Belief(own=s, t=0.0, target=None, agent_id=i)
            self.agents.append(AgentRuntime(
                id=i, state=s, buffer=MeasurementBuffer(cfg.window, cfg.capacity), belief=belief,
                policy=default_policy(belief, cfg.planner), max_turn=cfg.planner.max_turn))
        self.fail_at = {}
        for f in cfg.failures:
            self.fail_at[f.agent] = min(f.time, self.fail_at.get(f.agent, math.inf))
        self.log = RunLog(cfg.name, cfg.seed, n,
                          converge_after=cfg.converge_after if cfg.converge_after is not None else cfg.duration / 3)
        self.n_meas = max(measurement_capacity(cfg.planner.horizon, cfg.budget), 0)

    def _sense(self, t: float):
        p = self.target_at(t).p
        for a in self.agents:
            if not a.alive or (a.state.x, a.state.y) == p:
                continue
            b = measure_bearing(p, a.state.p, self.cfg.sigma, self.rng_sense)
            m = Measurement(t, b, a.state.x, a.state.y, a.id)
            a.buffer.add(m)
            a.pending.append(m)

    def target_at(self, t: float) -> TargetState:
        return target_truth(self.target, t)

    def _act(self, a: AgentRuntime, t: float, rnd: int):
        cfg, params = self.cfg, self.cfg.planner
        a.buffer.prune(t)
        try:
            a.estimate = estimate(a.buffer, t, cfg.sigma)
        except EstimationError as e:
            log.debug("agent %d keeps previous estimate: %s", a.id, e)
            if a.estimate is not None:
                a.estimate = propagate(a.estimate, t)
        b = a.belief
        b.own, b.t, b.round, b.target = a.state, t, rnd, a.estimate
        # forget neighbors that have been silent too long
        for j in [j for j, nb in b.neighbors.items() if rnd - nb.round_heard > cfg.silence_timeout]:
            del b.neighbors[j]
        if cfg.planner_enabled:
            res = plan(b, params, cfg.modem, cfg.dt_plan, max_turn=a.max_turn)
            a.policy, a.evaluations, a.plan_cost = res.policy, res.evaluations, res.cost
        else:
            surge = default_policy(b, params).surge
            if a.estimate is not None:
                d = float(np.hypot(*(a.estimate.position - np.array(a.state.p))))
                surge = surge_heuristic(d, float(np.linalg.norm(a.estimate.velocity)), params, a.state.u_max)
            a.policy = IntentPolicy((0.0,) * params.horizon, surge, rnd)
            a.evaluations, a.plan_cost = 0, math.nan
        first = a.policy.headings[0]
        a.control = (a.policy.surge, first / cfg.dt_plan)
        if params.adapt and a.estimate is not None:
            a.history.append(first)
            new = adapt_granularity(a.history, params, a.max_turn)
            if new != a.max_turn:
                a.max_turn = new
                a.history.clear()

    def _broadcast(self, a: AgentRuntime, t: float, slot: int) -> list[tuple[int, bytes]]:
        cfg = self.cfg
        meas = sorted(a.pending, key=lambda m: m.t, reverse=True)[: self.n_meas]
        a.pending.clear()
        pkt = AcousticPacket(a.id, (a.state.x, a.state.y, a.state.theta), a.policy.headings, meas)
        data = encode_packet(pkt, cfg.budget)
        self.log.transmissions.append((slot, a.id, t))
        out = []
        for r in self.agents:
            if r.id == a.id or not r.alive:
                continue
            if channel.transmit(pkt, a.state.p, r.state.p, cfg.modem, cfg.pdr, self.rng_link[(a.id, r.id)]):
                out.append((r.id, data))
        return out

    def _deliver(self, recv: AgentRuntime, data: bytes, t_sent: float):
        cfg = self.cfg
        try:
            pkt = decode_packet(data, cfg.planner.horizon, cfg.n_agents)
        except PacketError as e:
            log.warning("dropping malformed packet: %s", e)
            return
        x, y, th = pkt.pose
        pose = AgentState(x, y, th, recv.state.u_max, recv.state.r_max)
        receive_policy(recv.belief, pkt.sender, pose, IntentPolicy(pkt.headings, math.nan), t_sent, cfg.planner)
        for m in pkt.measurements:
            recv.buffer.add(m)

    def run(self) -> RunLog:
        cfg = self.cfg
        n = cfg.n_agents
        tdma = cfg.tdma
        tick = _tick(cfg.sensing_period, cfg.slot)
        ticks_per_slot = int(Fraction(cfg.slot).limit_denominator(1000) / tick)
        ticks_per_sense = int(Fraction(cfg.sensing_period).limit_denominator(1000) / tick)
        dt_tick = float(tick)
        n_slots = int(round(cfg.duration / cfg.slot))
        inflight: list[tuple[int, bytes, float]] = []
        sent = delivered = 0
        g = 0
        for s in range(n_slots):
            t = s * cfg.slot
            rnd = s // n
            for rid, data, t_sent in inflight:
                if self.agents[rid].alive:
                    self._deliver(self.agents[rid], data, t_sent)
            inflight = []
            for a in self.agents:
                if a.alive and self.fail_at.get(a.id, math.inf) <= t:
                    a.alive = False
                    a.control = (0.0, 0.0)
                    self.log.failed[a.id] = t
            owner = self.agents[channel.slot_owner(t, tdma)]
            for k in range(ticks_per_slot):
                tk = t + k * dt_tick
                if g % ticks_per_sense == 0:
                    self._sense(tk)
                if k == 0 and owner.alive:
                    self._act(owner, t, rnd)
                    out = self._broadcast(owner, t, s)
                    sent += sum(1 for r in self.agents if r.alive and r.id != owner.id)
                    delivered += len(out)
                    inflight = [(rid, data, t) for rid, data in out]
                for a in self.agents:
                    if a.alive:
                        a.state = step_agent(a.state, a.control, dt_tick)
                g += 1
            if s % n == n - 1:
                self._record(rnd, (s + 1) * cfg.slot, sent, delivered)
                sent = delivered = 0
        return self.log

    def _record(self, rnd: int, t: float, sent: int, delivered: int):
        cfg = self.cfg
        truth = self.target_at(t)
        alive = [a for a in self.agents if a.alive]
        pos = [a.state.p for a in alive]
        jg = team_geometry_cost(pos, truth.p) if alive else math.nan
        gains = comm_graph(pos, cfg.modem).gains if alive else np.zeros((0, 0))
        fied = fiedler(laplacian(comm_graph(pos, cfg.modem))) if len(alive) >= 2 else 0.0
        idx = {a.id: k for k, a in enumerate(alive)}
        for a in self.agents:
            est = propagate(a.estimate, t) if a.estimate is not None else None
            row = {
                "round": rnd, "t": t, "agent": a.id, "alive": a.alive,
                "x": a.state.x, "y": a.state.y, "theta": a.state.theta,
                "target_x": truth.p[0], "target_y": truth.p[1],
                "target_vx": truth.v[0], "target_vy": truth.v[1],
                "est_x": math.nan, "est_y": math.nan, "est_vx": math.nan, "est_vy": math.nan,
                "trace_p": math.nan, "error": math.nan,
                "j_g": jg, "j_d": math.hypot(truth.p[0] - a.state.x, truth.p[1] - a.state.y) / cfg.planner.d_r,
                "j_c": connectivity_cost(gains, cfg.modem.rho_max, idx[a.id]) if a.alive else math.nan,
                "fiedler": fied, "sent": sent, "delivered": delivered,
                "evaluations": a.evaluations, "max_turn": a.max_turn, "plan_cost": a.plan_cost,
            }
            if est is not None:
                row.update(est_x=est.xi[0], est_y=est.xi[1], est_vx=est.xi[2], est_vy=est.xi[3],
                           trace_p=float(np.trace(est.P)), error=tracking_error(est, truth))
            self.log.rows.append(row)


def run_scenario(cfg: ScenarioConfig) -> RunLog:
    return Simulation(cfg).run()


def horizon_sweep(cfg: ScenarioConfig, horizons: Sequence[int], n_seeds: int) -> list[dict]:
    """Seed-averaged post-convergence tracking error for each horizon."""
    if n_seeds < 2:
        raise ValueError("need at least two seeds")
    rows = []
    for H in horizons:
        errs = []
        for k in range(n_seeds):
            run_cfg = cfg.with_overrides(seed=cfg.seed + k, planner_horizon=int(H))
            errs.append(run_scenario(run_cfg).mean_error())
        rows.append({"horizon": int(H), "mean_error": float(np.mean(errs)), "errors": [float(e) for e in errs]})
    return rows
