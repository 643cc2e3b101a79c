"""
配置加载
读取仓库根目录的 config.json（或同结构的 .toml），与内置默认值深度合并，
再叠加命令行覆盖项，生成经过校验的 RunConfig
"""

import copy
import json
import os
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

from src.ensemble import EnsembleConfig, Sampler
from src.errors import (ConfigurationError, DomainError, HeisenbergViolationError,
                        ValidationError)
from src.integrate import IntegratorConfig
from src.model import PhysParams, validate_params
from src.potential import PotentialKind

DEFAULT_CONFIG_PATH = os.path.join(os.path.dirname(__file__), '..', 'config.json')

# 与 config.json 相同的结构；文件中缺失的字段回落到这里
DEFAULTS: Dict[str, Dict[str, Any]] = {
    'physics': {
        'm': 1.0, 'omega': 1.0e4, 'v0': 1.0e7, 'alpha': 1.5, 'hbar': 1.0, 'u': 0.25,
        'potential': 'double_slit', 'omega_h': None,
    },
    'integrator': {
        'rtol': 1e-9, 'atol': 1e-12, 'h0': 1e-6, 'h_max': 1e-4, 'h_min': 1e-15,
        't_max': 1.0, 'x_screen': -350.0, 'x_reflect': 400.0,
    },
    'ensemble': {
        'n': 2000, 'y_range': [-4.0, 4.0], 'sampler': 'grid', 'seed': 12345, 'sigma': None,
        'x0': 400.0, 'px0': -5000.0, 'py0': 0.0, 'sx0': 0.2, 'sy0': 0.2,
        'workers': 1, 'retain_trajectories': False,
    },
    'analysis': {
        'bin_width': 0.1, 'y_range': [-6.0, 6.0], 'smoothing_bandwidth': None,
        'envelope': True, 'probe_energy': None, 'crossing_y0_threshold': 0.3,
        'fringe_window': 3.0, 'snapshot_times': [],
    },
    'outputs': {
        'out_dir': 'output', 'svg': False, 'xlsx': False,
    },
}


@dataclass(frozen=True)
class AnalysisConfig:
    """后处理参数"""
    bin_width: float = 0.1
    y_range: Tuple[float, float] = (-6.0, 6.0)
    smoothing_bandwidth: Optional[float] = None
    envelope: bool = True
    probe_energy: Optional[float] = None
    crossing_y0_threshold: float = 0.3
    fringe_window: float = 3.0
    snapshot_times: Tuple[float, ...] = ()


@dataclass(frozen=True)
class OutputConfig:
    out_dir: str = 'output'
    svg: bool = False
    xlsx: bool = False


@dataclass(frozen=True)
class RunConfig:
    """一次运行的完整配置"""
    physics: PhysParams
    potential: PotentialKind
    integrator: IntegratorConfig
    ensemble: EnsembleConfig
    analysis: AnalysisConfig
    outputs: OutputConfig


def _deep_merge(base: Dict, update: Dict, prefix: str = '') -> Dict:
    merged = copy.deepcopy(base)
    unknown = []
    for key, value in update.items():
        if key not in merged:
            unknown.append((f"{prefix}{key}", "未知的配置项"))
        elif isinstance(merged[key], dict):
            if not isinstance(value, dict):
                unknown.append((f"{prefix}{key}", "必须是一个配置段"))
                continue
            merged[key] = _deep_merge(merged[key], value, f"{prefix}{key}.")
        else:
            merged[key] = value
    if unknown:
        raise ValidationError(unknown)
    return merged


def load_config(path: Optional[str] = None) -> Dict:
    """
    加载配置文件

    Args:
        path: 配置文件路径；为空时读取仓库根目录的 config.json（不存在则只用默认值）

    Returns:
        与 DEFAULTS 同结构的字典
    """
    if path is None:
        path = DEFAULT_CONFIG_PATH
        if not os.path.exists(path):
            return copy.deepcopy(DEFAULTS)
    elif not os.path.exists(path):
        raise ConfigurationError(f"配置文件不存在: {path}")

    try:
        if path.endswith('.toml'):
            import tomllib
            with open(path, 'rb') as f:
                raw = tomllib.load(f)
        else:
            with open(path, 'r', encoding='utf-8') as f:
                raw = json.load(f)
    except (ValueError, OSError) as e:
        raise ConfigurationError(f"无法解析配置文件 '{path}': {e}") from e

    if not isinstance(raw, dict):
        raise ConfigurationError(f"配置文件顶层必须是对象: {path}")
    return _deep_merge(DEFAULTS, raw)


def apply_overrides(raw: Dict, overrides: Optional[Dict[str, Any]]) -> Dict:
    """
    叠加覆盖项

    Args:
        overrides: {'section.key': value}；value 为 None 的项忽略
    """
    merged = copy.deepcopy(raw)
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        section, _, key = dotted.partition('.')
        if section not in merged or key not in merged[section]:
            raise ValidationError([(dotted, "未知的配置项")])
        merged[section][key] = value
    return merged


def _pair(value, name: str) -> Tuple[float, float]:
    try:
        lo, hi = value
        return float(lo), float(hi)
    except (TypeError, ValueError):
        raise ValidationError([(name, f"必须是 [lo, hi]，当前为 {value}")])


def _optional_float(value) -> Optional[float]:
    return None if value is None else float(value)


def _build_physics(section: Dict) -> Tuple[PhysParams, PotentialKind]:
    p = PhysParams(**{name: float(section[name])
                      for name in ('m', 'omega', 'v0', 'alpha', 'hbar', 'u')})
    try:
        kind = PotentialKind(section['potential'], _optional_float(section['omega_h']))
    except DomainError as e:
        raise ValidationError([('physics.potential', str(e))])
    return validate_params(p), kind


def _build_ensemble(section: Dict, p: PhysParams) -> EnsembleConfig:
    seed = section['seed']
    try:
        sampler = Sampler(kind=section['sampler'], seed=None if seed is None else int(seed),
                          sigma=_optional_float(section['sigma']))
    except DomainError as e:
        raise ValidationError([('sampler', str(e))])
    n = section['n']
    return EnsembleConfig(
        n=int(n) if isinstance(n, (int, float)) and float(n).is_integer() else n,
        y_range=_pair(section['y_range'], 'y_range'),
        sampler=sampler,
        x0=float(section['x0']), px0=float(section['px0']), py0=float(section['py0']),
        sx0=float(section['sx0']), sy0=float(section['sy0']),
        u=p.u,
        workers=int(section['workers']),
        retain_trajectories=bool(section['retain_trajectories']),
    ).validate(p.hbar)


def _build_analysis(section: Dict) -> AnalysisConfig:
    cfg = AnalysisConfig(
        bin_width=float(section['bin_width']),
        y_range=_pair(section['y_range'], 'y_range'),
        smoothing_bandwidth=_optional_float(section['smoothing_bandwidth']),
        envelope=bool(section['envelope']),
        probe_energy=_optional_float(section['probe_energy']),
        crossing_y0_threshold=float(section['crossing_y0_threshold']),
        fringe_window=float(section['fringe_window']),
        snapshot_times=tuple(float(t) for t in section['snapshot_times']),
    )
    problems = []
    if not cfg.bin_width > 0:
        problems.append(('bin_width', f"必须为正，当前为 {cfg.bin_width}"))
    if not cfg.y_range[0] < cfg.y_range[1]:
        problems.append(('y_range', f"必须满足 lo < hi，当前为 {cfg.y_range}"))
    if cfg.smoothing_bandwidth is not None and cfg.smoothing_bandwidth < 0:
        problems.append(('smoothing_bandwidth', "不能为负"))
    if problems:
        raise ValidationError(problems)
    return cfg


def build_run_config(raw: Dict, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    原始配置 + 覆盖项 → RunConfig

    所有配置段都会校验；失败的字段以 "段名.字段名" 汇总到一个 ValidationError
    （任一字段违反海森堡下界时为 HeisenbergViolationError）
    """
    raw = apply_overrides(raw, overrides)
    problems = []
    heisenberg = False

    def collect(section: str, error: ValidationError):
        nonlocal heisenberg
        heisenberg = heisenberg or isinstance(error, HeisenbergViolationError)
        for name, msg in error.fields:
            problems.append((name if '.' in name else f"{section}.{name}", msg))

    physics = kind = integrator = ensemble = analysis = None
    try:
        physics, kind = _build_physics(raw['physics'])
    except ValidationError as e:
        collect('physics', e)
    try:
        integrator = IntegratorConfig(**{k: float(v) for k, v in raw['integrator'].items()}).validate()
    except ValidationError as e:
        collect('integrator', e)
    if physics is not None:
        try:
            ensemble = _build_ensemble(raw['ensemble'], physics)
        except ValidationError as e:
            collect('ensemble', e)
    try:
        analysis = _build_analysis(raw['analysis'])
    except ValidationError as e:
        collect('analysis', e)

    if integrator is not None and ensemble is not None:
        if not (integrator.x_screen < ensemble.x0 <= integrator.x_reflect):
            problems.append(('ensemble.x0', f"必须在 (x_screen, x_reflect] 内，当前为 {ensemble.x0}"))

    if problems:
        if heisenberg:
            raise HeisenbergViolationError(problems)
        raise ValidationError(problems)

    outputs = raw['outputs']
    return RunConfig(physics=physics, potential=kind, integrator=integrator, ensemble=ensemble,
                     analysis=analysis,
                     outputs=OutputConfig(out_dir=str(outputs['out_dir']),
                                          svg=bool(outputs['svg']), xlsx=bool(outputs['xlsx'])))
