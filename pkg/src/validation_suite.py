"""
自检套件
梯度一致性、一维自由粒子/谐振子闭式解、二维自由飞行、镜像对称与能量守恒
"""

import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional

import numpy as np

from src.dynamics import StateDerivative, grad_check, rhs_2d
from src.errors import SimulationError
from src.integrate import Arrival, IntegratorConfig, integrate, integrate_1d
from src.model import PhaseState, PhysParams
from src.potential import PotentialKind
from src.run_log import get_logger

logger = get_logger(__name__)

# 各项检查的阈值
GRAD_TOL = 1e-5
GRAD_FORCE_FREE_TOL = 1e-10
FREE_SPREAD_TOL = 1e-8
HARMONIC_TOL = 1e-6
FREE_FLIGHT_T_TOL = 1e-9
MIRROR_TOL = 1e-8
ON_AXIS_TOL = 1e-6
ENERGY_DRIFT_TOL = 1e-6


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ''

    def to_dict(self) -> Dict:
        return {'name': self.name, 'passed': self.passed, 'measured': self.measured,
                'threshold': self.threshold, 'detail': self.detail}


@dataclass
class ValidationReport:
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def get(self, name: str) -> CheckResult:
        return next(c for c in self.checks if c.name == name)

    def to_dict(self) -> Dict:
        return {'passed': self.passed, 'checks': [c.to_dict() for c in self.checks]}


def beam_state(y0: float = 0.0, x0: float = 400.0, px0: float = -5000.0) -> PhaseState:
    """束流初值：x₀=400, pₓ₀=−5000, sₓ=s_y=0.2, p_s=0"""
    return PhaseState(t=0.0, x=x0, y=y0, px=px0, py=0.0, sx=0.2, psx=0.0, sy=0.2, psy=0.0)


def random_states(n: int, p: PhysParams, seed: int = 2024) -> List[PhaseState]:
    """势垒附近 (|x| ≤ 3α) 的随机状态，动量与色散取束流初值附近的范围"""
    rng = np.random.default_rng(seed)
    states = []
    for _ in range(n):
        states.append(PhaseState(
            t=0.0,
            x=rng.uniform(-3.0 * p.alpha, 3.0 * p.alpha),
            y=rng.uniform(-4.0, 4.0),
            px=rng.uniform(-5500.0, -4500.0),
            py=rng.uniform(-100.0, 100.0),
            sx=rng.uniform(0.05, 0.5),
            psx=rng.uniform(-100.0, 100.0),
            sy=rng.uniform(0.05, 0.5),
            psy=rng.uniform(-100.0, 100.0),
        ))
    return states


def _check(name: str, measured: float, threshold: float, detail: str = '') -> CheckResult:
    passed = bool(np.isfinite(measured) and measured < threshold)
    icon = '✅' if passed else '❌'
    logger.info(f"{icon} {name}: {measured:.3e} (阈值 {threshold:.0e})")
    return CheckResult(name, passed, float(measured), threshold, detail)


def check_grad_random(p: PhysParams, rhs: Callable[..., StateDerivative] = rhs_2d,
                      n: int = 100, seed: int = 2024) -> CheckResult:
    worst = max(grad_check(st, p, rhs=rhs) for st in random_states(n, p, seed))
    return _check('grad_check_random', worst, GRAD_TOL, f"{n} 个随机状态")


def check_grad_force_free(p: PhysParams, rhs: Callable[..., StateDerivative] = rhs_2d) -> CheckResult:
    return _check('grad_check_force_free', grad_check(beam_state(), p, rhs=rhs),
                  GRAD_FORCE_FREE_TOL, 'x = 400')


def check_grad_barrier_center(p: PhysParams, rhs: Callable[..., StateDerivative] = rhs_2d) -> CheckResult:
    st = replace(beam_state(), x=0.0)
    return _check('grad_check_barrier_center', grad_check(st, p, rhs=rhs), GRAD_TOL, 'x = y = 0')


def free_spread(s0: float, u: float, m: float, t) -> np.ndarray:
    """s(t) = √(s₀² + U t²/(m² s₀²))"""
    t = np.asarray(t, dtype=float)
    return np.sqrt(s0 ** 2 + u * t ** 2 / (m ** 2 * s0 ** 2))


def harmonic_variance(sigma0: float, omega_h: float, hbar: float, m: float, t) -> np.ndarray:
    """Δx² = σ₀²cos²(ωt) + ħ²/(4m²ω²σ₀²)·sin²(ωt)"""
    t = np.asarray(t, dtype=float)
    return (sigma0 ** 2 * np.cos(omega_h * t) ** 2
            + hbar ** 2 / (4.0 * m ** 2 * omega_h ** 2 * sigma0 ** 2) * np.sin(omega_h * t) ** 2)


def check_free_spreading(p: PhysParams, s0: float = 0.2, t_end: float = 0.15) -> CheckResult:
    _, z = integrate_1d(0.0, 0.0, s0, 0.0, p.u, PotentialKind.free(), p, t_end,
                        t_eval=np.array([t_end]))
    error = abs(z[-1, 2] - float(free_spread(s0, p.u, p.m, t_end)))
    return _check('free_spreading_1d', error, FREE_SPREAD_TOL, f"t = {t_end}")


def check_harmonic(p: PhysParams, sigma0: float = 0.2, omega_h: float = 2.0 * math.pi,
                   periods: int = 5) -> CheckResult:
    """饱和初值（U = ħ²/4）下一维谐振子的 s(t)² 与闭式解比较"""
    u = p.hbar ** 2 / 4.0
    t_end = periods * 2.0 * math.pi / omega_h
    t_eval = np.linspace(0.0, t_end, 50 * periods + 1)
    t, z = integrate_1d(0.0, 0.0, sigma0, 0.0, u, PotentialKind.harmonic(omega_h), p, t_end,
                        t_eval=t_eval)
    error = float(np.max(np.abs(z[:, 2] ** 2 - harmonic_variance(sigma0, omega_h, p.hbar, p.m, t))))
    return _check('harmonic_1d', error, HARMONIC_TOL, f"{periods} 个周期")


def check_free_flight(p: PhysParams, icfg: IntegratorConfig) -> List[CheckResult]:
    """二维自由飞行：t_hit = 750/5000 = 0.15，sₓ(t_hit) 符合自由展宽"""
    traj = integrate(beam_state(), p, icfg, PotentialKind.free())
    outcome = traj.outcome
    if not isinstance(outcome, Arrival):
        return [CheckResult('free_flight_t_hit', False, math.inf, FREE_FLIGHT_T_TOL,
                            f"结果为 {outcome.label}")]
    t_expected = (beam_state().x - icfg.x_screen) / abs(beam_state().px / p.m)
    return [
        _check('free_flight_t_hit', abs(outcome.t_hit - t_expected), FREE_FLIGHT_T_TOL,
               f"t_hit = {outcome.t_hit:.12g}"),
        _check('free_flight_sx', abs(outcome.state.sx - float(free_spread(0.2, p.u, p.m, outcome.t_hit))),
               FREE_SPREAD_TOL, f"sx = {outcome.state.sx:.12g}"),
    ]


def check_barrier_trajectories(p: PhysParams, icfg: IntegratorConfig,
                               y0: float = 0.3) -> List[CheckResult]:
    """
    穿越势垒的轨迹：镜像对 (±y₀) 的 y 序列相反、轴上粒子留在轴上、能量漂移
    """
    kind = PotentialKind.double_slit()
    upper = integrate(beam_state(y0), p, icfg, kind)
    lower = integrate(beam_state(-y0), p, icfg, kind)
    if len(upper) == len(lower) and np.array_equal(upper.t, lower.t):
        mirror = float(np.max(np.abs(upper.z[:, 1] + lower.z[:, 1])))
    else:
        mirror = math.inf
    on_axis = integrate(beam_state(0.0), p, icfg, kind)
    results = [_check('mirror_symmetry', mirror, MIRROR_TOL, f"y0 = ±{y0}")]
    if isinstance(on_axis.outcome, Arrival):
        results.append(_check('on_axis', abs(on_axis.outcome.y_hit), ON_AXIS_TOL))
    else:
        results.append(CheckResult('on_axis', False, math.inf, ON_AXIS_TOL,
                                   f"结果为 {on_axis.outcome.label}"))
    results.append(_check('energy_drift', on_axis.energy_drift(), ENERGY_DRIFT_TOL,
                          f"rtol = {icfg.rtol:g}"))
    return results


def run_validation(p: PhysParams = PhysParams(), icfg: Optional[IntegratorConfig] = None,
                   rhs: Callable[..., StateDerivative] = rhs_2d) -> ValidationReport:
    """
    运行全部检查

    Args:
        icfg: 二维积分用的配置（可覆盖 rtol 演示漂移随容差变化）
        rhs: 被检查的右端函数（默认 rhs_2d）
    """
    icfg = icfg or IntegratorConfig()
    checks = [
        check_grad_random(p, rhs),
        check_grad_force_free(p, rhs),
        check_grad_barrier_center(p, rhs),
        check_free_spreading(p),
        check_harmonic(p),
    ]
    for suite in (check_free_flight, check_barrier_trajectories):
        try:
            checks.extend(suite(p, icfg))
        except SimulationError as e:
            logger.error(f"❌ {suite.__name__} 失败: {e}")
            checks.append(CheckResult(suite.__name__, False, math.inf, 0.0, str(e)))
    return ValidationReport(checks)
