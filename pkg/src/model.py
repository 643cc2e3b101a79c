"""
核心数据类型
物理参数、8 维半经典相空间点、二阶矩，以及矩变量 G^{a,b} 与正则变量 (s, p_s, U) 之间的转换
"""

import math
import sys
from dataclasses import dataclass, fields
from typing import List, Tuple

import numpy as np

from src.errors import DomainError, HeisenbergViolationError, ValidationError
from src.run_log import get_logger

logger = get_logger(__name__)

_EPS = sys.float_info.epsilon


@dataclass(frozen=True)
class PhysParams:
    """
    模型物理常数（无量纲代码单位，默认 ħ = 1）

    Attributes:
        m: 质量
        omega: 势垒频率 ω
        v0: 势垒高度 V₀
        alpha: 势垒厚度 α
        hbar: 约化普朗克常数 ħ
        u: Casimir 量 U，两个方向共用
    """
    m: float = 1.0
    omega: float = 1.0e4
    v0: float = 1.0e7
    alpha: float = 1.5
    hbar: float = 1.0
    u: float = 0.25

    @property
    def heisenberg_bound(self) -> float:
        return self.hbar ** 2 / 4.0

    @property
    def saturated(self) -> bool:
        """U 是否饱和海森堡下界"""
        return math.isclose(self.u, self.heisenberg_bound, rel_tol=1e-12)


@dataclass(frozen=True)
class PhaseState:
    """
    半经典相空间点

    x, y 为位置期望值；px, py 为动量期望值；
    sx, sy 为色散 s = √G^{2,0}；psx, psy 为色散动量 p_s = G^{1,1}/√G^{2,0}
    """
    t: float
    x: float
    y: float
    px: float
    py: float
    sx: float
    psx: float
    sy: float
    psy: float

    # 积分器内部向量的分量顺序
    VECTOR_FIELDS = ('x', 'y', 'px', 'py', 'sx', 'psx', 'sy', 'psy')

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in self.VECTOR_FIELDS], dtype=np.float64)

    @classmethod
    def from_array(cls, t: float, z) -> 'PhaseState':
        return cls(float(t), *(float(v) for v in z))

    def mirrored(self) -> 'PhaseState':
        """(y, p_y) → (−y, −p_y)"""
        return PhaseState(self.t, self.x, -self.y, self.px, -self.py,
                          self.sx, self.psx, self.sy, self.psy)

    def check(self) -> 'PhaseState':
        """检查 sx, sy > 0 且所有分量有限"""
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise DomainError(f"PhaseState.{f.name} 不是有限值: {value}")
        if self.sx <= 0 or self.sy <= 0:
            raise DomainError(f"色散必须为正: sx={self.sx}, sy={self.sy}")
        return self


@dataclass(frozen=True)
class MomentSet:
    """单个方向的二阶中心矩（Weyl 序）"""
    g20: float
    g11: float
    g02: float

    @property
    def casimir(self) -> float:
        return self.g20 * self.g02 - self.g11 ** 2


def moments_from_canonical(s: float, ps: float, u: float) -> MomentSet:
    """
    正则变量 → 二阶矩

    g20 = s², g11 = p_s·s, g02 = (U + p_s²s²)/s²

    Args:
        s: 色散，必须 > 0
        ps: 色散动量
        u: Casimir，必须 > 0
    """
    if not s > 0:
        raise DomainError(f"s 必须为正: {s}")
    if not u > 0:
        raise DomainError(f"u 必须为正: {u}")
    g20 = s * s
    return MomentSet(g20=g20, g11=ps * s, g02=(u + ps * ps * g20) / g20)


def canonical_from_moments(ms: MomentSet, hbar: float = 1.0) -> Tuple[float, float, float]:
    """
    二阶矩 → 正则变量 (s, p_s, U)

    U = g20·g02 − g11² 在 (p_s s)² ≫ U 时有消去误差，
    海森堡判定的容差按 g20·g02 的量级放宽

    Returns:
        (s, ps, u)
    """
    if not ms.g20 > 0:
        raise DomainError(f"g20 必须为正: {ms.g20}")
    s = math.sqrt(ms.g20)
    ps = ms.g11 / s
    u = ms.casimir
    bound = hbar ** 2 / 4.0
    tolerance = 8.0 * _EPS * abs(ms.g20 * ms.g02)
    if u < bound - tolerance:
        raise HeisenbergViolationError([('u', f"由矩重建的 U={u} 低于 ħ²/4={bound}")])
    return s, ps, u


def heisenberg_product(s: float, ps: float, u: float) -> float:
    """重建矩的不确定度乘积 g20·g02 − g11²（恒等于 U，舍入误差内）"""
    return moments_from_canonical(s, ps, u).casimir


def validate_params(p: PhysParams) -> PhysParams:
    """
    校验物理参数

    每个违反的不变量都带字段名报告；U < ħ²/4 抛 HeisenbergViolationError，
    U = ħ²/4 记为饱和态

    Returns:
        原样返回 p
    """
    problems: List[Tuple[str, str]] = []
    for name in ('m', 'omega', 'v0', 'alpha', 'hbar'):
        value = getattr(p, name)
        if not (math.isfinite(value) and value > 0):
            problems.append((name, f"必须为正的有限值，当前为 {value}"))

    heisenberg = False
    if not math.isfinite(p.u):
        problems.append(('u', f"必须为有限值，当前为 {p.u}"))
    elif p.hbar > 0 and p.u < p.heisenberg_bound and not p.saturated:
        problems.append(('u', f"违反海森堡下界: U={p.u} < ħ²/4={p.heisenberg_bound}"))
        heisenberg = True

    if problems:
        if heisenberg:
            raise HeisenbergViolationError(problems)
        raise ValidationError(problems)

    if p.saturated:
        logger.debug(f"U={p.u} 饱和海森堡下界 (saturated)")
    return p
