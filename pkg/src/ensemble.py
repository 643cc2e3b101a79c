"""
粒子系综
构造饱和海森堡下界的高斯初值，按采样器抽取横向坐标 y₀，并行积分整个系综
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.errors import DomainError, SimulationError, ValidationError
from src.integrate import (Arrival, Failed, IntegratorConfig, Outcome,
                           Trajectory, integrate)
from src.model import MomentSet, PhaseState, PhysParams
from src.potential import PotentialKind
from src.run_log import get_logger
from src.scheduler import EnsembleScheduler

logger = get_logger(__name__)

GRID = 'grid'
UNIFORM = 'uniform'
GAUSSIAN = 'gaussian'

OUTCOME_COLUMNS = ['index', 'y0', 'outcome', 'y_hit', 't_hit', 'status']


@dataclass(frozen=True)
class Sampler:
    """
    y₀ 采样器

    Attributes:
        kind: grid（含端点的等间距网格）| uniform | gaussian（按 |Ψ₀(y)|² 采样）
        seed: 随机采样器的种子
        sigma: gaussian 的标准差，None 时取 EnsembleConfig.sy0
    """
    kind: str = GRID
    seed: Optional[int] = None
    sigma: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (GRID, UNIFORM, GAUSSIAN):
            raise DomainError(f"未知的采样器: {self.kind}")


@dataclass(frozen=True)
class EnsembleConfig:
    """
    系综配置（默认值为标准束流初值：x₀=400, pₓ₀=−5000, s=0.2）
    """
    n: int = 2000
    y_range: Tuple[float, float] = (-4.0, 4.0)
    sampler: Sampler = Sampler()
    x0: float = 400.0
    px0: float = -5000.0
    py0: float = 0.0
    sx0: float = 0.2
    sy0: float = 0.2
    u: float = 0.25
    workers: int = 1
    retain_trajectories: bool = False

    def validate(self, hbar: float = 1.0) -> 'EnsembleConfig':
        problems = []
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            problems.append(('n', f"必须为 ≥ 1 的整数，当前为 {self.n}"))
        lo, hi = self.y_range
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            problems.append(('y_range', f"必须满足 lo < hi，当前为 {self.y_range}"))
        for name in ('sx0', 'sy0'):
            if not getattr(self, name) > 0:
                problems.append((name, f"必须为正，当前为 {getattr(self, name)}"))
        if self.u < hbar ** 2 / 4.0 and not math.isclose(self.u, hbar ** 2 / 4.0, rel_tol=1e-12):
            problems.append(('u', f"违反海森堡下界: U={self.u} < ħ²/4={hbar ** 2 / 4.0}"))
        if problems:
            raise ValidationError(problems)
        return self


@dataclass(frozen=True)
class ParticleRecord:
    """单个粒子：下标、初始 y₀、终止结果"""
    index: int
    y0: float
    outcome: Outcome


@dataclass
class EnsembleResult:
    """
    系综结果

    Attributes:
        records: 按输入下标排列的 (index, y₀, Outcome)
        trajectories: retain_trajectories 时保留的稠密轨迹（失败粒子为 None）
    """
    records: List[ParticleRecord]
    trajectories: Optional[List[Optional[Trajectory]]] = None

    @property
    def counts(self) -> Dict[str, int]:
        counts = {'arrivals': 0, 'reflections': 0, 'timeouts': 0, 'failures': 0}
        key = {'arrival': 'arrivals', 'reflected': 'reflections',
               'timeout': 'timeouts', 'failed': 'failures'}
        for record in self.records:
            counts[key[record.outcome.label]] += 1
        return counts

    @property
    def n(self) -> int:
        return len(self.records)

    def arrivals(self) -> List[ParticleRecord]:
        return [r for r in self.records if isinstance(r.outcome, Arrival)]

    def to_frame(self) -> pd.DataFrame:
        """系综结果 CSV：index, y0, outcome, y_hit, t_hit, status"""
        rows = []
        for r in self.records:
            o = r.outcome
            rows.append({
                'index': r.index,
                'y0': r.y0,
                'outcome': o.label,
                'y_hit': o.y_hit if isinstance(o, Arrival) else np.nan,
                't_hit': o.t_hit if isinstance(o, Arrival) else np.nan,
                'status': o.reason if isinstance(o, Failed) else 'ok',
            })
        return pd.DataFrame(rows, columns=OUTCOME_COLUMNS)


def gaussian_initial_moments(sigma0: float, p: PhysParams) -> MomentSet:
    """
    初始高斯态的二阶矩：g20 = σ₀², g11 = 0, g02 = ħ²/(4σ₀²)
    """
    if not sigma0 > 0:
        raise DomainError(f"sigma0 必须为正: {sigma0}")
    return MomentSet(g20=sigma0 ** 2, g11=0.0, g02=p.hbar ** 2 / (4.0 * sigma0 ** 2))


def sample_y0(cfg: EnsembleConfig) -> np.ndarray:
    """按采样器抽取 n 个 y₀"""
    lo, hi = cfg.y_range
    sampler = cfg.sampler
    if sampler.kind == GRID:
        if cfg.n == 1:
            return np.array([0.5 * (lo + hi)])
        return np.linspace(lo, hi, cfg.n)

    rng = np.random.default_rng(sampler.seed)
    if sampler.kind == UNIFORM:
        return rng.uniform(lo, hi, cfg.n)

    sigma = cfg.sy0 if sampler.sigma is None else sampler.sigma
    if not sigma > 0:
        raise DomainError(f"gaussian 采样器的 σ 必须为正: {sigma}")
    center = 0.5 * (lo + hi)
    # 截断到 y_range：拒绝采样
    accepted = np.empty(0)
    while accepted.size < cfg.n:
        draw = rng.normal(center, sigma, cfg.n)
        accepted = np.concatenate([accepted, draw[(draw >= lo) & (draw <= hi)]])
    return accepted[:cfg.n]


def build_ics(cfg: EnsembleConfig, p: PhysParams) -> List[PhaseState]:
    """
    构造系综初值

    (x, pₓ, p_y, sₓ, s_y) 取自配置，p_s = 0（G^{1,1} = 0 的高斯态），y₀ 由采样器给出
    """
    cfg.validate(p.hbar)
    if not math.isclose(cfg.u, p.u, rel_tol=1e-12):
        raise ValidationError([('u', f"系综 U={cfg.u} 与物理参数 U={p.u} 不一致")])
    return [
        PhaseState(t=0.0, x=cfg.x0, y=float(y0), px=cfg.px0, py=cfg.py0,
                   sx=cfg.sx0, psx=0.0, sy=cfg.sy0, psy=0.0).check()
        for y0 in sample_y0(cfg)
    ]


def _integrate_particle(task):
    """worker：积分一个粒子，领域错误转为 Failed 记录"""
    index, st0, p, icfg, kind, retain = task
    try:
        traj = integrate(st0, p, icfg, kind)
    except SimulationError as e:
        return index, Failed(reason=str(e), state=getattr(e, 'last_state', None)), None
    return index, traj.outcome, (traj if retain else None)


def run_ensemble(cfg: EnsembleConfig, p: PhysParams, icfg: IntegratorConfig = IntegratorConfig(),
                 kind: PotentialKind = PotentialKind()) -> EnsembleResult:
    """
    积分整个系综

    每个初值独立积分，结果按输入下标排列；单粒子失败记为 Failed，不中断系综
    """
    states = build_ics(cfg, p)
    icfg.validate()
    tasks = [(i, st, p, icfg, kind, cfg.retain_trajectories) for i, st in enumerate(states)]

    scheduler = EnsembleScheduler(workers=cfg.workers)
    results = scheduler.execute_batch(tasks, _integrate_particle)

    records = []
    trajectories = [] if cfg.retain_trajectories else None
    for (index, outcome, traj), st in zip(results, states):
        records.append(ParticleRecord(index=index, y0=st.y, outcome=outcome))
        if trajectories is not None:
            trajectories.append(traj)
        if isinstance(outcome, Failed):
            logger.warning(f"⚠️ 粒子 {index} (y0={st.y:.6g}) 积分失败: {outcome.reason}")

    result = EnsembleResult(records=records, trajectories=trajectories)
    logger.info(f"✅ 系综完成: {result.counts}")
    return result
