"""
量子修正哈密顿量与运动方程

2-D: H_Q = (pₓ²+p_sx²)/2m + (p_y²+p_sy²)/2m + U/2msₓ² + U/2ms_y² + ¼ΣV(x±sₓ, y±s_y)
1-D: H_Q = (pₓ²+p_s²)/2m + U/2ms² + ½(V(x+s)+V(x−s))

运动方程由 H_Q 解析求导得到（不直接照抄已发表的方程），grad_check 用有限差分核对两者一致
"""

import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from src.errors import DomainError
from src.model import PhaseState, PhysParams
from src.potential import (FREE, HARMONIC, EXP_CUTOFF, PotentialKind,
                           potential_average_2d, v_validation)

_DEFAULT_KIND = PotentialKind()


@dataclass(frozen=True)
class StateDerivative:
    """PhaseState 各分量的时间导数"""
    dx: float
    dy: float
    dpx: float
    dpy: float
    dsx: float
    dpsx: float
    dsy: float
    dpsy: float

    def as_array(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.dpx, self.dpy,
                         self.dsx, self.dpsx, self.dsy, self.dpsy], dtype=np.float64)


def _check_dispersions(sx: float, sy: float):
    if not (sx > 0 and sy > 0):
        raise DomainError(f"色散必须为正: sx={sx}, sy={sy}")


def _exp_pair(x: float, sx: float, alpha: float) -> Tuple[float, float]:
    """E(x+sₓ), E(x−sₓ)；每次 RHS 只算一次"""
    a_plus = ((x + sx) / alpha) ** 2
    a_minus = ((x - sx) / alpha) ** 2
    e_plus = 0.0 if a_plus > EXP_CUTOFF else math.exp(-a_plus)
    e_minus = 0.0 if a_minus > EXP_CUTOFF else math.exp(-a_minus)
    return e_plus, e_minus


def _potential_gradient(x: float, y: float, sx: float, sy: float,
                        p: PhysParams, kind: PotentialKind) -> Tuple[float, float, float, float]:
    """
    四点平均势对 (x, y, sₓ, s_y) 的偏导

    E'(u) = −2u/α²·E(u)，P'(u) = −mω²u(1 − k u²)，k = mω²/(4V₀)
    """
    if kind.tag == FREE:
        return 0.0, 0.0, 0.0, 0.0
    if kind.tag == HARMONIC:
        c = p.m * kind.omega_h ** 2
        return c * x, c * y, c * sx, c * sy

    e_plus, e_minus = _exp_pair(x, sx, p.alpha)
    if e_plus == 0.0 and e_minus == 0.0:
        return 0.0, 0.0, 0.0, 0.0

    mw2 = p.m * p.omega ** 2
    k = mw2 / (4.0 * p.v0)
    u_plus = y + sy
    u_minus = y - sy
    w_plus = 1.0 - k * u_plus * u_plus
    w_minus = 1.0 - k * u_minus * u_minus
    p_sum = p.v0 * (w_plus * w_plus + w_minus * w_minus)
    dp_plus = -mw2 * u_plus * w_plus
    dp_minus = -mw2 * u_minus * w_minus

    two_over_a2 = 2.0 / (p.alpha * p.alpha)
    de_plus = -two_over_a2 * (x + sx) * e_plus
    de_minus = -two_over_a2 * (x - sx) * e_minus
    e_sum = e_plus + e_minus

    dv_dx = 0.25 * p_sum * (de_plus + de_minus)
    dv_dsx = 0.25 * p_sum * (de_plus - de_minus)
    dv_dy = 0.25 * e_sum * (dp_plus + dp_minus)
    dv_dsy = 0.25 * e_sum * (dp_plus - dp_minus)
    return dv_dx, dv_dy, dv_dsx, dv_dsy


def _derivative_components(x, y, px, py, sx, psx, sy, psy,
                           p: PhysParams, kind: PotentialKind) -> Tuple[float, ...]:
    dv_dx, dv_dy, dv_dsx, dv_dsy = _potential_gradient(x, y, sx, sy, p, kind)
    inv_m = 1.0 / p.m
    return (
        px * inv_m,
        py * inv_m,
        -dv_dx,
        -dv_dy,
        psx * inv_m,
        p.u * inv_m / sx ** 3 - dv_dsx,
        psy * inv_m,
        p.u * inv_m / sy ** 3 - dv_dsy,
    )


def hamiltonian_2d_terms(st: PhaseState, p: PhysParams,
                         kind: PotentialKind = _DEFAULT_KIND) -> Tuple[float, float, float]:
    """
    H_Q 的三部分

    Returns:
        (动能项, Casimir 项 U/2msₓ² + U/2ms_y², 四点平均势)
    """
    _check_dispersions(st.sx, st.sy)
    kinetic = (st.px ** 2 + st.psx ** 2 + st.py ** 2 + st.psy ** 2) / (2.0 * p.m)
    casimir = p.u / (2.0 * p.m * st.sx ** 2) + p.u / (2.0 * p.m * st.sy ** 2)
    potential = potential_average_2d(st.x, st.y, st.sx, st.sy, p, kind)
    return kinetic, casimir, potential


def hamiltonian_2d(st: PhaseState, p: PhysParams, kind: PotentialKind = _DEFAULT_KIND) -> float:
    """二维量子修正哈密顿量 H_Q"""
    kinetic, casimir, potential = hamiltonian_2d_terms(st, p, kind)
    return kinetic + casimir + potential


def rhs_2d(st: PhaseState, p: PhysParams, kind: PotentialKind = _DEFAULT_KIND) -> StateDerivative:
    """
    二维运动方程右端：H_Q 的辛梯度
    ẋ=∂H/∂pₓ, ṗₓ=−∂H/∂x, ṡₓ=∂H/∂p_sx, ṗ_sx=−∂H/∂sₓ（y 方向同理）
    U 是参数，没有对应的演化分量
    """
    _check_dispersions(st.sx, st.sy)
    return StateDerivative(*_derivative_components(
        st.x, st.y, st.px, st.py, st.sx, st.psx, st.sy, st.psy, p, kind))


def rhs_2d_array(t: float, z: np.ndarray, p: PhysParams,
                 kind: PotentialKind = _DEFAULT_KIND) -> np.ndarray:
    """
    积分器热循环用的数组版 RHS

    s ≤ 0 时返回全 inf，让步长控制器拒绝这一步
    """
    x, y, px, py, sx, psx, sy, psy = z
    if not (sx > 0 and sy > 0):
        return np.full(8, np.inf)
    return np.array(_derivative_components(x, y, px, py, sx, psx, sy, psy, p, kind))


def hamiltonian_1d(x: float, px: float, s: float, ps: float, u: float,
                   kind: PotentialKind, p: PhysParams) -> float:
    """一维正则哈密顿量（free / harmonic 验证势）"""
    if not s > 0:
        raise DomainError(f"s 必须为正: {s}")
    potential = 0.5 * (v_validation(kind, x + s, p) + v_validation(kind, x - s, p))
    return (px * px + ps * ps) / (2.0 * p.m) + u / (2.0 * p.m * s * s) + potential


def _validation_force(kind: PotentialKind, x: float, p: PhysParams) -> float:
    """V'(x)"""
    if kind.tag == FREE:
        return 0.0
    if kind.tag == HARMONIC:
        return p.m * kind.omega_h ** 2 * x
    raise DomainError("1-D 验证势只支持 free / harmonic")


def rhs_1d(x: float, px: float, s: float, ps: float, u: float,
           kind: PotentialKind, p: PhysParams) -> np.ndarray:
    """
    一维运动方程 (ẋ, ṗₓ, ṡ, ṗ_s)

    ṗₓ = −½(V'(x+s)+V'(x−s))，ṗ_s = U/ms³ − ½(V'(x+s)−V'(x−s))
    """
    if not s > 0:
        raise DomainError(f"s 必须为正: {s}")
    f_plus = _validation_force(kind, x + s, p)
    f_minus = _validation_force(kind, x - s, p)
    return np.array([
        px / p.m,
        -0.5 * (f_plus + f_minus),
        ps / p.m,
        u / (p.m * s ** 3) - 0.5 * (f_plus - f_minus),
    ])


# 导数向量分量 → (哈密顿量对哪个变量求导, 符号)
_SYMPLECTIC_PAIRS = (
    ('px', 1.0),    # dx
    ('py', 1.0),    # dy
    ('x', -1.0),    # dpx
    ('y', -1.0),    # dpy
    ('psx', 1.0),   # dsx
    ('sx', -1.0),   # dpsx
    ('psy', 1.0),   # dsy
    ('sy', -1.0),   # dpsy
)
_MOMENTA = frozenset(('px', 'py', 'psx', 'psy'))


def _shifted(st: PhaseState, name: str, delta: float) -> PhaseState:
    values = {f: getattr(st, f) for f in ('t',) + PhaseState.VECTOR_FIELDS}
    values[name] += delta
    return PhaseState(**values)


def _partial(st: PhaseState, name: str, h: float, term) -> float:
    """中心差分 + 一次 Richardson 外推"""
    def central(step):
        return (term(_shifted(st, name, step)) - term(_shifted(st, name, -step))) / (2.0 * step)
    return (4.0 * central(0.5 * h) - central(h)) / 3.0


def grad_check(st: PhaseState, p: PhysParams, h: float = 1e-5,
               kind: PotentialKind = _DEFAULT_KIND,
               rhs: Callable[..., StateDerivative] = rhs_2d) -> float:
    """
    RHS 与 H_Q 有限差分辛梯度的一致性检查

    H_Q 的三部分分别差分后求和，避免 10⁷ 量级的动能项舍入误差淹没小分量；
    位置方向步长 h·max(1, |z_i|)，色散方向不超过 s/2；
    动量方向步长按总动量 |p| 取 h·max(1, |p|)：动能对动量是二次的，中心差分只剩舍入误差，
    舍入误差约 eps·T/step，步长必须随动能一起放大

    Returns:
        max_i |rhs_i − fd_i| / (1 + |rhs_i|)
    """
    _check_dispersions(st.sx, st.sy)
    terms = [lambda s, i=i: hamiltonian_2d_terms(s, p, kind)[i] for i in range(3)]
    analytic = rhs(st, p, kind).as_array()
    p_norm = math.sqrt(st.px ** 2 + st.py ** 2 + st.psx ** 2 + st.psy ** 2)

    worst = 0.0
    for component, (name, sign) in enumerate(_SYMPLECTIC_PAIRS):
        value = getattr(st, name)
        if name in _MOMENTA:
            step = h * max(1.0, abs(value), p_norm)
        else:
            step = h * max(1.0, abs(value))
        if name in ('sx', 'sy'):
            step = min(step, 0.5 * value)
        fd = sign * sum(_partial(st, name, step, term) for term in terms)
        error = abs(analytic[component] - fd) / (1.0 + abs(analytic[component]))
        worst = max(worst, error)
    return worst
