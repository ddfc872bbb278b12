"""Scenario configuration: YAML files mapped onto typed dataclasses."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .channel import MAX_AGENTS, ModemConfig, TdmaConfig, byte_budget, measurement_capacity
from .planner import PlannerParams
from .world import TRAJECTORY_KINDS, TrajectorySpec


class ConfigError(ValueError):
    """Configuration rejected; ``errors`` lists every violated rule."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class AgentSpec:
    x: float
    y: float
    heading: float = 0.0
    u_max: float = 1.0
    r_max: float = 0.05


@dataclass(frozen=True)
class Placement:
    """Random initial placement inside an axis-aligned box."""

    count: int
    box: tuple[float, float, float, float]
    u_max: float = 1.0
    r_max: float = 0.05


@dataclass(frozen=True)
class Failure:
    agent: int
    time: float


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    duration: float
    seed: int
    target: TrajectorySpec
    modem: ModemConfig
    slot: float
    planner: PlannerParams
    agents: tuple[AgentSpec, ...] = ()
    placement: Placement | None = None
    slot_order: tuple[int, ...] = ()
    sensing_period: float = 1.0
    sigma: float = math.radians(3.5)
    pdr: float = 1.0
    window_periods: float = 20.0
    capacity: int = 40
    failures: tuple[Failure, ...] = ()
    planner_enabled: bool = True
    random_target_heading: bool = False
    converge_after: float | None = None
    silence_timeout: int = 3

    @property
    def n_agents(self) -> int:
        return self.placement.count if self.placement is not None else len(self.agents)

    @property
    def tdma(self) -> TdmaConfig:
        return TdmaConfig(self.n_agents, self.slot, tuple(self.slot_order))

    @property
    def dt_plan(self) -> float:
        return self.n_agents * self.slot

    @property
    def window(self) -> float:
        return self.window_periods * self.sensing_period

    @property
    def budget(self) -> int:
        return byte_budget(self.modem.bitrate, self.slot)

    def with_overrides(self, **kw) -> "ScenarioConfig":
        names = {f.name for f in fields(PlannerParams)}
        planner_kw = {k[len("planner_"):]: kw.pop(k) for k in list(kw)
                      if k.startswith("planner_") and k[len("planner_"):] in names}
        cfg = replace(self, **kw)
        if planner_kw:
            cfg = replace(cfg, planner=replace(cfg.planner, **planner_kw))
        return cfg


def _tuple2(v) -> tuple[float, float]:
    return (float(v[0]), float(v[1]))


def _pick(cls, raw: dict, errors: list[str], where: str) -> dict:
    names = {f.name for f in fields(cls)}
    for k in raw:
        if k not in names:
            errors.append(f"{where}: unknown key {k!r}")
    return {k: v for k, v in raw.items() if k in names}


def _commensurate(a: float, b: float) -> bool:
    fa = Fraction(a).limit_denominator(1000)
    fb = Fraction(b).limit_denominator(1000)
    r = fa / fb
    return r.denominator == 1 or (1 / r).denominator == 1


def parse_config(raw: dict[str, Any]) -> ScenarioConfig:
    errors: list[str] = []
    raw = dict(raw or {})

    tgt = dict(raw.get("target") or {})
    target = None
    if tgt.get("kind") not in TRAJECTORY_KINDS:
        errors.append(f"target.kind must be one of {TRAJECTORY_KINDS}, got {tgt.get('kind')!r}")
    else:
        random_heading = bool(tgt.pop("random_heading", False))
        kw = _pick(TrajectorySpec, tgt, errors, "target")
        for k in ("p0", "v0"):
            if k in kw:
                kw[k] = _tuple2(kw[k])
        if "p0" not in kw:
            errors.append("target.p0 is required")
        else:
            target = TrajectorySpec(**kw)
        raw["random_target_heading"] = random_heading

    modem = None
    try:
        modem = ModemConfig(**_pick(ModemConfig, dict(raw.get("modem") or {}), errors, "modem"))
    except (TypeError, ValueError) as e:
        errors.append(f"modem: {e}")

    planner = PlannerParams(**_pick(PlannerParams, dict(raw.get("planner") or {}), errors, "planner"))
    errors += planner.validate()

    agents, placement = (), None
    if "placement" in raw and raw["placement"]:
        p = dict(raw["placement"])
        try:
            placement = Placement(count=int(p["count"]), box=tuple(float(v) for v in p["box"]),
                                  u_max=float(p.get("u_max", 1.0)), r_max=float(p.get("r_max", 0.05)))
            if len(placement.box) != 4:
                errors.append("placement.box needs [xmin, xmax, ymin, ymax]")
        except (KeyError, TypeError, ValueError) as e:
            errors.append(f"placement: {e}")
    else:
        try:
            agents = tuple(AgentSpec(**{k: float(v) for k, v in a.items()}) for a in raw.get("agents") or [])
        except TypeError as e:
            errors.append(f"agents: {e}")
        if not agents:
            errors.append("at least one agent (or a placement block) is required")

    sensing = dict(raw.get("sensing") or {})
    est = dict(raw.get("estimator") or {})
    tdma = dict(raw.get("tdma") or {})
    metrics = dict(raw.get("metrics") or {})
    failures = []
    for f in raw.get("failures") or []:
        try:
            failures.append(Failure(int(f["agent"]), float(f["time"])))
        except (KeyError, TypeError, ValueError):
            errors.append(f"failures: malformed entry {f!r}")

    cfg = None
    # unknown keys are dropped by _pick, so semantic checks can still run and
    # the caller sees every problem at once
    if target is not None and modem is not None and (agents or placement) and not any(
            e.startswith(("failures:", "placement", "agents:")) for e in errors):
        try:
            cfg = ScenarioConfig(
                name=str(raw.get("name", "scenario")),
                duration=float(raw.get("duration", 600)),
                seed=int(raw.get("seed", 0)),
                target=target,
                modem=modem,
                slot=float(tdma.get("slot", 2.0)),
                slot_order=tuple(int(i) for i in tdma.get("order") or ()),
                planner=planner,
                agents=agents,
                placement=placement,
                sensing_period=float(sensing.get("period", 1.0)),
                sigma=math.radians(float(sensing.get("sigma_deg", 3.5))),
                pdr=float(raw.get("pdr", 1.0)),
                window_periods=float(est.get("window_periods", 20)),
                capacity=int(est.get("capacity", 40)),
                failures=tuple(failures),
                planner_enabled=bool(raw.get("planner_enabled", True)),
                random_target_heading=bool(raw.get("random_target_heading", False)),
                converge_after=metrics.get("converge_after"),
                silence_timeout=int(raw.get("silence_timeout", 3)),
            )
        except (TypeError, ValueError) as e:
            errors.append(f"config: {e}")
        else:
            errors += validate(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg


def validate(cfg: ScenarioConfig) -> list[str]:
    errs = []
    n = cfg.n_agents
    if not 1 <= n <= MAX_AGENTS:
        errs.append(f"agent count {n} outside [1, {MAX_AGENTS}]")
    if cfg.slot <= 0:
        errs.append("tdma.slot must be positive")
    else:
        ratio = cfg.duration / cfg.slot
        if cfg.duration <= 0 or abs(ratio - round(ratio)) > 1e-9:
            errs.append("duration must be a positive multiple of tdma.slot")
        if cfg.sensing_period <= 0 or not _commensurate(cfg.sensing_period, cfg.slot):
            errs.append("sensing.period and tdma.slot must divide one another")
    if cfg.slot_order and sorted(cfg.slot_order) != list(range(n)):
        errs.append("tdma.order must be a permutation of agent ids")
    if not 0 <= cfg.pdr <= 1:
        errs.append("pdr must lie in [0, 1]")
    if cfg.sigma < 0:
        errs.append("sensing.sigma_deg must be nonnegative")
    if cfg.capacity < 4 or cfg.window_periods <= 0:
        errs.append("estimator.capacity must be >= 4 and window_periods positive")
    for f in cfg.failures:
        if not 0 <= f.agent < n:
            errs.append(f"failure references unknown agent {f.agent}")
    p = cfg.planner
    if cfg.slot > 0 and measurement_capacity(p.horizon, cfg.budget) < 0:
        errs.append(f"intent block for H={p.horizon} does not fit the {cfg.budget}-byte slot budget")
    specs = cfg.agents
    r_max = min((a.r_max for a in specs), default=cfg.placement.r_max if cfg.placement else 0.05)
    if cfg.slot > 0 and p.max_turn > r_max * cfg.dt_plan + 1e-12:
        errs.append(f"planner.max_turn {p.max_turn} exceeds r_max * round duration = {r_max * cfg.dt_plan:.4g}")
    for i, a in enumerate(specs):
        for j in range(i):
            d = math.hypot(a.x - specs[j].x, a.y - specs[j].y)
            if d < p.d_safe:
                errs.append(f"agents {j} and {i} start {d:.3g} m apart, below d_safe {p.d_safe}")
    if cfg.placement is not None:
        b = cfg.placement.box
        if len(b) == 4 and (b[1] <= b[0] or b[3] <= b[2]):
            errs.append("placement.box must have xmin < xmax and ymin < ymax")
    return errs


def load_config(path: str | Path) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError([f"YAML parse error: {e}"]) from e
    if not isinstance(raw, dict):
        raise ConfigError(["config root must be a mapping"])
    return parse_config(raw)


def builtin_scenarios() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("auvtrack.scenarios").iterdir()
                  if p.name.endswith(".yaml"))


def scenario_path(name: str) -> Path:
    """Path of a shipped scenario, accepting either a bare name or a file path."""
    p = Path(name)
    if p.exists():
        return p
    candidate = resources.files("auvtrack.scenarios") / f"{name}.yaml"
    if not candidate.is_file():
        raise FileNotFoundError(f"no config file or built-in scenario named {name!r}")
    return Path(str(candidate))
