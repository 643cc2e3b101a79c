"""
势函数
双缝势 V(x,y) = V₀(1 − mω²y²/(4V₀))² e^{−(x/α)²}，验证用的自由/谐振子势，以及缝的几何量
"""

import math
from dataclasses import dataclass
from typing import Optional

from src.errors import DomainError
from src.model import PhysParams
from src.run_log import get_logger

logger = get_logger(__name__)

DOUBLE_SLIT = 'double_slit'
FREE = 'free'
HARMONIC = 'harmonic'

# e^{-700} 以下视为 0，避免在无力区产生次正规数
EXP_CUTOFF = 700.0


@dataclass(frozen=True)
class PotentialKind:
    """
    势的种类：double_slit | free | harmonic(omega_h)
    其余参数取自 PhysParams
    """
    tag: str = DOUBLE_SLIT
    omega_h: Optional[float] = None

    def __post_init__(self):
        if self.tag not in (DOUBLE_SLIT, FREE, HARMONIC):
            raise DomainError(f"未知的势类型: {self.tag}")
        if self.tag == HARMONIC and not (self.omega_h is not None and self.omega_h > 0):
            raise DomainError(f"谐振子势需要 omega_h > 0，当前为 {self.omega_h}")

    @classmethod
    def double_slit(cls) -> 'PotentialKind':
        return cls(DOUBLE_SLIT)

    @classmethod
    def free(cls) -> 'PotentialKind':
        return cls(FREE)

    @classmethod
    def harmonic(cls, omega_h: float) -> 'PotentialKind':
        return cls(HARMONIC, omega_h)


@dataclass(frozen=True)
class SlitGeometry:
    """
    缝的几何量

    Attributes:
        y_slit: 缝中心 |y|
        d: 缝间距 2·y_slit
        a_width: 给定探测能量下的开口全宽（未计算时为 None）
        e_probe: 计算 a_width 所用的探测能量
    """
    y_slit: float
    d: float
    a_width: Optional[float] = None
    e_probe: Optional[float] = None


def gaussian_factor(x: float, alpha: float) -> float:
    """e^{−(x/α)²}，指数参数超过 EXP_CUTOFF 时直接返回 0"""
    arg = (x / alpha) ** 2
    if arg > EXP_CUTOFF:
        return 0.0
    return math.exp(-arg)


def barrier_profile(y: float, p: PhysParams) -> float:
    """势的 y 方向前因子，因式分解形式 V₀(1 − k y²)²，k = mω²/(4V₀)"""
    k = p.m * p.omega ** 2 / (4.0 * p.v0)
    w = 1.0 - k * y * y
    return p.v0 * w * w


def v_slit(x: float, y: float, p: PhysParams) -> float:
    """双缝势 V(x, y)，处处非负"""
    e = gaussian_factor(x, p.alpha)
    if e == 0.0:
        return 0.0
    return barrier_profile(y, p) * e


def v_validation(kind: PotentialKind, x: float, p: PhysParams) -> float:
    """1-D 验证势：free → 0；harmonic → ½ m ω_h² x²"""
    if kind.tag == FREE:
        return 0.0
    if kind.tag == HARMONIC:
        return 0.5 * p.m * kind.omega_h ** 2 * x * x
    raise DomainError("1-D 验证势只支持 free / harmonic")


def potential_average_2d(x: float, y: float, sx: float, sy: float,
                         p: PhysParams, kind: PotentialKind = PotentialKind()) -> float:
    """
    ¼ Σ V(x ± sₓ, y ± s_y)

    双缝势对 x、y 可分离，四点平均等于
    ¼ [P(y+s_y) + P(y−s_y)] · [E(x+sₓ) + E(x−sₓ)]
    """
    if kind.tag == FREE:
        return 0.0
    if kind.tag == HARMONIC:
        return 0.5 * p.m * kind.omega_h ** 2 * (x * x + sx * sx + y * y + sy * sy)
    e_sum = gaussian_factor(x + sx, p.alpha) + gaussian_factor(x - sx, p.alpha)
    if e_sum == 0.0:
        return 0.0
    p_sum = barrier_profile(y + sy, p) + barrier_profile(y - sy, p)
    return 0.25 * p_sum * e_sum


def slit_centers(p: PhysParams) -> SlitGeometry:
    """缝中心为前因子的二重根：y_slit = 2√(V₀/(mω²))"""
    y_slit = 2.0 * math.sqrt(p.v0 / (p.m * p.omega ** 2))
    return SlitGeometry(y_slit=y_slit, d=2.0 * y_slit)


def slit_width(p: PhysParams, e_probe: float) -> float:
    """
    y_slit 附近 V(0, y) < e_probe 的区间全宽

    由 |1 − mω²y²/(4V₀)| < √(e_probe/V₀) 得
    y± = 2√((V₀ ± √(V₀·e_probe))/(mω²))，宽度 = y₊ − y₋

    Args:
        e_probe: 探测能量，必须在 (0, V₀) 内
    """
    if not (0.0 < e_probe < p.v0):
        raise DomainError(f"探测能量必须在 (0, V₀={p.v0}) 内，当前为 {e_probe}")
    root = math.sqrt(p.v0 * e_probe)
    mw2 = p.m * p.omega ** 2
    y_plus = 2.0 * math.sqrt((p.v0 + root) / mw2)
    y_minus = 2.0 * math.sqrt((p.v0 - root) / mw2)
    return y_plus - y_minus


def probe_energy(p: PhysParams, px0: float, fallback_fraction: float = 0.5) -> float:
    """
    缝宽的默认探测能量：束流动能 pₓ₀²/2m

    束流动能 ≥ V₀ 时两个开口连成一片，缝宽无定义，回退到 fallback_fraction·V₀
    """
    kinetic = px0 * px0 / (2.0 * p.m)
    if 0.0 < kinetic < p.v0:
        return kinetic
    if not (0.0 < fallback_fraction < 1.0):
        raise DomainError(f"fallback_fraction 必须在 (0, 1) 内，当前为 {fallback_fraction}")
    fallback = fallback_fraction * p.v0
    logger.warning(f"⚠️ 束流动能 {kinetic:.6g} 不在 (0, V₀) 内，缝宽探测能量回退为 {fallback:.6g}")
    return fallback


def slit_geometry(p: PhysParams, e_probe: float) -> SlitGeometry:
    """slit_centers + slit_width 的完整几何量"""
    centers = slit_centers(p)
    return SlitGeometry(y_slit=centers.y_slit, d=centers.d,
                        a_width=slit_width(p, e_probe), e_probe=e_probe)
