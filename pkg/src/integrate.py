"""
轨迹积分器
Dormand–Prince 5(4) 自适应步进（scipy RK45），逐步检测事件：
到达屏幕 (x = x_screen, ẋ < 0)、被反射回源平面 (x = x_reflect, ẋ > 0)、超时
"""

import math
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np
import pandas as pd
from scipy.integrate import RK45, solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from src.dynamics import hamiltonian_2d, rhs_1d, rhs_2d_array
from src.errors import DomainError, OutOfRangeError, StiffnessError, ValidationError
from src.model import PhaseState, PhysParams, moments_from_canonical
from src.potential import PotentialKind
from src.run_log import get_logger

logger = get_logger(__name__)

TRAJECTORY_COLUMNS = ['t', 'x', 'y', 'px', 'py', 'sx', 'psx', 'sy', 'psy', 'H_Q']


@dataclass(frozen=True)
class IntegratorConfig:
    """
    积分器配置

    Attributes:
        rtol, atol: 嵌入式误差估计的相对/绝对容差
        h0: 初始步长
        h_max: 最大步长（默认一步最多前进约 0.5 长度单位，小于势垒厚度）
        h_min: 步长下限，低于它视为刚性失败
        t_max: 积分时长
        x_screen: 屏幕平面
        x_reflect: 反射判定平面（源平面）
    """
    rtol: float = 1e-9
    atol: float = 1e-12
    h0: float = 1e-6
    h_max: float = 1e-4
    h_min: float = 1e-15
    t_max: float = 1.0
    x_screen: float = -350.0
    x_reflect: float = 400.0

    def validate(self) -> 'IntegratorConfig':
        problems = []
        for name in ('rtol', 'atol', 'h0', 'h_max', 'h_min', 't_max'):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                problems.append((name, f"必须为正，当前为 {value}"))
        if not self.h_min < self.h_max:
            problems.append(('h_min', f"必须小于 h_max={self.h_max}，当前为 {self.h_min}"))
        if not self.h_min <= self.h0 <= self.h_max:
            problems.append(('h0', f"必须在 [h_min, h_max] = [{self.h_min}, {self.h_max}] 内，当前为 {self.h0}"))
        if not self.x_screen < 0:
            problems.append(('x_screen', f"必须 < 0，当前为 {self.x_screen}"))
        if not self.x_reflect > 0:
            problems.append(('x_reflect', f"必须 > 0，当前为 {self.x_reflect}"))
        if problems:
            raise ValidationError(problems)
        return self


# ========== 终止结果 ==========

@dataclass(frozen=True)
class Arrival:
    """到达屏幕"""
    y_hit: float
    t_hit: float
    state: PhaseState
    label = 'arrival'


@dataclass(frozen=True)
class Reflected:
    """回到源平面，pₓ > 0"""
    t_exit: float
    state: PhaseState
    label = 'reflected'


@dataclass(frozen=True)
class Timeout:
    """t_max 内没有触发任何事件"""
    state: PhaseState
    label = 'timeout'


@dataclass(frozen=True)
class Failed:
    """单粒子积分失败（系综中作为数据记录）"""
    reason: str
    state: Optional[PhaseState] = None
    label = 'failed'

    @property
    def t(self) -> Optional[float]:
        return None if self.state is None else self.state.t


Outcome = Union[Arrival, Reflected, Timeout, Failed]


# ========== 轨迹 ==========

@dataclass
class Trajectory:
    """
    稠密轨迹：每个接受步（以及事件定位点）的状态与导数

    Attributes:
        t: 严格递增的时间 (N,)
        z: 状态向量 (N, 8)，顺序见 PhaseState.VECTOR_FIELDS
        dz: 对应的导数 (N, 8)，用于三次 Hermite 插值
        outcome: 终止结果
        params, kind: 生成轨迹所用的物理参数与势
    """
    t: np.ndarray
    z: np.ndarray
    dz: np.ndarray
    outcome: Outcome
    params: PhysParams
    kind: PotentialKind = PotentialKind()
    _spline: Optional[CubicHermiteSpline] = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def t_start(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    def state_at(self, index: int) -> PhaseState:
        return PhaseState.from_array(self.t[index], self.z[index])

    @property
    def samples(self) -> List[PhaseState]:
        return [self.state_at(i) for i in range(len(self.t))]

    def energies(self) -> np.ndarray:
        return np.array([hamiltonian_2d(s, self.params, self.kind) for s in self.samples])

    def energy_drift(self) -> float:
        """|H_Q(end) − H_Q(0)| / |H_Q(0)|"""
        h_start = hamiltonian_2d(self.state_at(0), self.params, self.kind)
        h_end = hamiltonian_2d(self.state_at(-1), self.params, self.kind)
        return abs(h_end - h_start) / abs(h_start)

    def heisenberg_products(self) -> np.ndarray:
        """每个样本两个方向中较小的 g20·g02 − g11²"""
        u = self.params.u
        return np.array([
            min(moments_from_canonical(s.sx, s.psx, u).casimir,
                moments_from_canonical(s.sy, s.psy, u).casimir)
            for s in self.samples
        ])

    def to_frame(self) -> pd.DataFrame:
        """轨迹 CSV 的表格形式"""
        frame = pd.DataFrame(self.z, columns=list(PhaseState.VECTOR_FIELDS))
        frame.insert(0, 't', self.t)
        frame['H_Q'] = self.energies()
        return frame[TRAJECTORY_COLUMNS]


def _locate_crossing(dense, plane: float, t_old: float, t_new: float) -> float:
    """在本步的稠密插值上求 x(t) = plane"""
    f_old = dense(t_old)[0] - plane
    f_new = dense(t_new)[0] - plane
    if f_new == 0.0 or f_old * f_new > 0:
        return t_new
    return brentq(lambda s: dense(s)[0] - plane, t_old, t_new,
                  xtol=1e-15, rtol=4 * sys.float_info.epsilon)


def integrate(st0: PhaseState, p: PhysParams, cfg: IntegratorConfig = IntegratorConfig(),
              kind: PotentialKind = PotentialKind()) -> Trajectory:
    """
    积分单条轨迹，直到第一个终止事件

    Args:
        st0: 初始状态，x 必须在 (x_screen, x_reflect] 内
        p: 已校验的物理参数
        cfg: 积分器配置
        kind: 势类型（默认双缝势）

    Returns:
        Trajectory

    Raises:
        StiffnessError: 步长下溢或色散持续塌缩，携带最后的有效状态
    """
    st0.check()
    cfg.validate()
    if not (cfg.x_screen < st0.x <= cfg.x_reflect):
        raise DomainError(f"初始 x={st0.x} 必须在 (x_screen={cfg.x_screen}, x_reflect={cfg.x_reflect}] 内")

    def fun(t, z):
        return rhs_2d_array(t, z, p, kind)

    z0 = st0.as_array()
    solver = RK45(fun, st0.t, z0, t_bound=st0.t + cfg.t_max,
                  rtol=cfg.rtol, atol=cfg.atol, max_step=cfg.h_max,
                  first_step=min(cfg.h0, cfg.h_max, cfg.t_max))

    ts = [st0.t]
    zs = [z0]
    dzs = [fun(st0.t, z0)]
    outcome: Optional[Outcome] = None

    while outcome is None:
        message = solver.step()
        last_good = PhaseState.from_array(ts[-1], zs[-1])
        if solver.status == 'failed':
            raise StiffnessError(f"积分失败（t={last_good.t:.9g}）: {message}", last_good)
        if solver.step_size is not None and solver.step_size < cfg.h_min and solver.status != 'finished':
            raise StiffnessError(f"步长下溢 h={solver.step_size:.3e}（t={last_good.t:.9g}）", last_good)

        t_old, t_new = solver.t_old, solver.t
        z_new = solver.y
        if not np.all(np.isfinite(z_new)) or z_new[4] <= 0 or z_new[6] <= 0:
            raise StiffnessError(f"色散塌缩（t={t_new:.9g}）", last_good)

        x_old, x_new = zs[-1][0], z_new[0]
        plane = None
        if x_old > cfg.x_screen >= x_new:
            plane = cfg.x_screen
        elif x_old < cfg.x_reflect <= x_new:
            plane = cfg.x_reflect

        if plane is not None:
            dense = solver.dense_output()
            t_event = _locate_crossing(dense, plane, t_old, t_new)
            z_event = dense(t_event) if t_event < t_new else np.array(z_new)
            event_state = PhaseState.from_array(t_event, z_event)
            if plane == cfg.x_screen:
                outcome = Arrival(y_hit=event_state.y, t_hit=t_event, state=event_state)
            else:
                outcome = Reflected(t_exit=t_event, state=event_state)
            t_new, z_new = t_event, z_event

        if t_new > ts[-1]:
            ts.append(t_new)
            zs.append(np.array(z_new))
            # 接受步末端的导数由 RK45 的 FSAL 阶段给出
            dzs.append(np.array(solver.f) if plane is None else fun(t_new, z_new))

        if outcome is None and solver.status == 'finished':
            outcome = Timeout(state=PhaseState.from_array(ts[-1], zs[-1]))

    return Trajectory(t=np.array(ts), z=np.vstack(zs), dz=np.vstack(dzs),
                      outcome=outcome, params=p, kind=kind)


def interpolate(traj: Trajectory, t: float) -> PhaseState:
    """
    轨迹在任意时刻的状态（三次 Hermite，样本时刻返回存储值本身）

    Raises:
        OutOfRangeError: t 超出轨迹时间区间
    """
    if not (traj.t_start <= t <= traj.t_end):
        raise OutOfRangeError(f"t={t} 超出轨迹区间 [{traj.t_start}, {traj.t_end}]")
    index = int(np.searchsorted(traj.t, t))
    if index < len(traj.t) and traj.t[index] == t:
        return traj.state_at(index)
    if traj._spline is None:
        traj._spline = CubicHermiteSpline(traj.t, traj.z, traj.dz, axis=0)
    return PhaseState.from_array(t, traj._spline(t))


def integrate_1d(x: float, px: float, s: float, ps: float, u: float,
                 kind: PotentialKind, p: PhysParams, t_end: float,
                 t_eval: Optional[np.ndarray] = None, rtol: float = 1e-10,
                 atol: float = 1e-12, max_step: float = np.inf):
    """
    一维正则哈密顿量的固定区间积分（自由粒子、谐振子验证）

    Returns:
        (t, Z)，Z 的列为 (x, px, s, ps)
    """
    def fun(t, z):
        if not z[2] > 0:
            return np.full(4, np.inf)
        return rhs_1d(z[0], z[1], z[2], z[3], u, kind, p)

    sol = solve_ivp(fun, (0.0, t_end), [x, px, s, ps], method='RK45', t_eval=t_eval,
                    rtol=rtol, atol=atol, max_step=max_step)
    if not sol.success:
        raise StiffnessError(f"1-D 积分失败: {sol.message}")
    return sol.t, sol.y.T
