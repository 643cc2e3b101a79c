"""
系综后处理
屏幕直方图、Fraunhofer 参考曲线、不确定度带、系综快照、到达时间统计、条纹相关性，
以及穿越对称轴与相互作用强度的统计
"""

import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.ndimage import gaussian_filter1d
from scipy.signal import find_peaks
from scipy.stats import chi2, pearsonr

from src.ensemble import EnsembleResult
from src.errors import (ConfigurationError, EmptyInputError, OutOfRangeError,
                        UndefinedCorrelationError, ValidationError)
from src.integrate import Arrival, Failed, Reflected, Trajectory, interpolate
from src.model import PhysParams
from src.potential import probe_energy, slit_centers, slit_width

HISTOGRAM_COLUMNS = ['bin_center', 'count', 'smoothed', 'reference_intensity']
ARRIVAL_TIME_COLUMNS = ['index', 'y0', 't_hit']
SNAPSHOT_COLUMNS = ['index', 'x', 'y']


# ========== 到达集合与直方图 ==========

@dataclass(frozen=True)
class ArrivalSet:
    """到达屏幕的粒子：下标、初始 y₀、落点 y_hit、到达时间 t_hit"""
    index: np.ndarray
    y0: np.ndarray
    y_hit: np.ndarray
    t_hit: np.ndarray

    def __len__(self) -> int:
        return len(self.y_hit)

    @classmethod
    def from_result(cls, result: EnsembleResult) -> 'ArrivalSet':
        arrivals = result.arrivals()
        return cls(index=np.array([r.index for r in arrivals], dtype=int),
                   y0=np.array([r.y0 for r in arrivals], dtype=float),
                   y_hit=np.array([r.outcome.y_hit for r in arrivals], dtype=float),
                   t_hit=np.array([r.outcome.t_hit for r in arrivals], dtype=float))

    @classmethod
    def from_hits(cls, y_hit: Sequence[float], t_hit: Optional[Sequence[float]] = None) -> 'ArrivalSet':
        y = np.asarray(y_hit, dtype=float)
        t = np.full(len(y), np.nan) if t_hit is None else np.asarray(t_hit, dtype=float)
        return cls(index=np.arange(len(y)), y0=np.full(len(y), np.nan), y_hit=y, t_hit=t)


@dataclass(frozen=True)
class HistogramSpec:
    """
    Attributes:
        bin_width: 箱宽
        y_range: 统计区间
        smoothing: 高斯核带宽（长度）；None 表示 2 倍箱宽，0 表示不平滑
    """
    bin_width: float = 0.1
    y_range: Tuple[float, float] = (-6.0, 6.0)
    smoothing: Optional[float] = None

    def validate(self) -> 'HistogramSpec':
        problems = []
        if not self.bin_width > 0:
            problems.append(('bin_width', f"必须为正，当前为 {self.bin_width}"))
        lo, hi = self.y_range
        if not lo < hi:
            problems.append(('y_range', f"必须满足 lo < hi，当前为 {self.y_range}"))
        if self.smoothing is not None and self.smoothing < 0:
            problems.append(('smoothing', f"不能为负，当前为 {self.smoothing}"))
        if problems:
            raise ValidationError(problems)
        return self

    @property
    def bandwidth(self) -> float:
        return 2.0 * self.bin_width if self.smoothing is None else self.smoothing


@dataclass
class HistogramResult:
    """分箱结果；counts 为原始计数，smoothed 为高斯核平滑后的计数"""
    edges: np.ndarray
    counts: np.ndarray
    smoothed: np.ndarray
    bin_width: float
    n_arrivals: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def metadata(self) -> Dict:
        in_range = int(self.counts.sum())
        return {
            'n_arrivals': self.n_arrivals,
            'in_range': in_range,
            'out_of_range': self.n_arrivals - in_range,
            'bin_width': self.bin_width,
            'normalization': 'raw counts; integral = sum(count) * bin_width',
            'integral': in_range * self.bin_width,
        }

    def to_frame(self, reference: Optional[np.ndarray] = None) -> pd.DataFrame:
        ref = np.full(len(self.counts), np.nan) if reference is None else reference
        return pd.DataFrame({'bin_center': self.centers, 'count': self.counts,
                             'smoothed': self.smoothed, 'reference_intensity': ref},
                            columns=HISTOGRAM_COLUMNS)


def histogram(arrivals: ArrivalSet, spec: HistogramSpec = HistogramSpec()) -> HistogramResult:
    """
    屏幕落点直方图

    Raises:
        EmptyInputError: 没有到达粒子
    """
    spec.validate()
    if len(arrivals) == 0:
        raise EmptyInputError("没有到达屏幕的粒子，无法统计直方图")
    lo, hi = spec.y_range
    n_bins = max(1, int(round((hi - lo) / spec.bin_width)))
    edges = lo + spec.bin_width * np.arange(n_bins + 1)
    counts, _ = np.histogram(arrivals.y_hit, bins=edges)
    if spec.bandwidth > 0:
        smoothed = gaussian_filter1d(counts.astype(float), sigma=spec.bandwidth / spec.bin_width,
                                     mode='constant')
    else:
        smoothed = counts.astype(float)
    return HistogramResult(edges=edges, counts=counts, smoothed=smoothed,
                           bin_width=spec.bin_width, n_arrivals=len(arrivals))


# ========== Fraunhofer 参考曲线 ==========

@dataclass(frozen=True)
class FraunhoferSpec:
    """
    双缝远场强度 I(y) = A·cos²(πdy/(λL))·sinc²(πay/(λL))

    Attributes:
        lambda_db: 德布罗意波长 2πħ/|pₓ₀|
        d: 缝间距
        a: 缝宽
        big_l: 势垒到屏幕的距离
        amplitude: 归一化幅度
        envelope: 是否乘单缝 sinc² 包络
    """
    lambda_db: float
    d: float
    a: float
    big_l: float
    amplitude: float = 1.0
    envelope: bool = True

    def validate(self) -> 'FraunhoferSpec':
        problems = [(name, f"必须为正，当前为 {getattr(self, name)}")
                    for name in ('lambda_db', 'd', 'a', 'big_l', 'amplitude')
                    if not getattr(self, name) > 0]
        if not problems and not self.a < self.d:
            problems.append(('a', f"缝宽 a={self.a} 必须小于缝间距 d={self.d}"))
        if problems:
            raise ValidationError(problems)
        return self

    @property
    def fringe_spacing(self) -> float:
        """Δy = λL/d"""
        return self.lambda_db * self.big_l / self.d

    @classmethod
    def from_physics(cls, p: PhysParams, px0: float, x_screen: float,
                     e_probe: Optional[float] = None, amplitude: float = 1.0,
                     envelope: bool = True) -> 'FraunhoferSpec':
        """λ 由束流动量给出，d 取缝中心间距，a 取探测能量下的缝宽，L = |x_screen|"""
        if e_probe is None:
            e_probe = probe_energy(p, px0)
        return cls(lambda_db=2.0 * math.pi * p.hbar / abs(px0),
                   d=slit_centers(p).d,
                   a=slit_width(p, e_probe),
                   big_l=abs(x_screen),
                   amplitude=amplitude,
                   envelope=envelope).validate()


def fraunhofer_reference(spec: FraunhoferSpec, ys) -> np.ndarray:
    """在 ys 处计算参考强度；np.sinc(0) = 1 精确成立"""
    ys = np.asarray(ys, dtype=float)
    scale = spec.lambda_db * spec.big_l
    intensity = spec.amplitude * np.cos(math.pi * spec.d * ys / scale) ** 2
    if spec.envelope:
        # np.sinc(u) = sin(πu)/(πu)
        intensity = intensity * np.sinc(spec.a * ys / scale) ** 2
    return intensity


def fringe_score(hist: HistogramResult, reference: np.ndarray,
                 fringe_spacing: Optional[float] = None, window: float = 3.0) -> float:
    """
    平滑直方图与参考曲线（在箱中心采样）的 Pearson 相关系数

    Args:
        fringe_spacing: 给定时只比较 |y| ≤ window·fringe_spacing 的箱

    Raises:
        UndefinedCorrelationError: 任一输入在比较区间内为常数
    """
    values = np.asarray(hist.smoothed, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if fringe_spacing is not None:
        mask = np.abs(hist.centers) <= window * fringe_spacing
        values, reference = values[mask], reference[mask]
    if len(values) < 2 or np.ptp(values) == 0 or np.ptp(reference) == 0:
        raise UndefinedCorrelationError("比较区间内输入为常数，相关系数无定义")
    return float(pearsonr(values, reference)[0])


@dataclass(frozen=True)
class FringeReport:
    """平滑直方图上的峰"""
    peaks: np.ndarray
    global_max: float
    secondary: np.ndarray
    measured_spacing: Optional[float]

    def symmetric_secondary_count(self, tolerance: float) -> int:
        """有镜像伙伴（|y + y'| ≤ tolerance）的次级极大个数"""
        count = 0
        for y in self.secondary:
            if np.any(np.abs(self.secondary + y) <= tolerance):
                count += 1
        return count


def find_fringes(hist: HistogramResult, prominence: float = 0.05) -> FringeReport:
    """
    在平滑直方图上找局部极大

    Args:
        prominence: 峰的最小突出度（相对最高平滑计数的比例）
    """
    smoothed = hist.smoothed
    if np.max(smoothed) <= 0:
        raise EmptyInputError("直方图为空，无法寻找条纹")
    index, _ = find_peaks(smoothed, prominence=prominence * float(np.max(smoothed)))
    centers = hist.centers
    peaks = centers[index]
    global_max = float(centers[int(np.argmax(smoothed))])
    secondary = peaks[peaks != global_max]
    spacing = float(np.median(np.diff(np.sort(peaks)))) if len(peaks) >= 2 else None
    return FringeReport(peaks=peaks, global_max=global_max, secondary=secondary,
                        measured_spacing=spacing)


@dataclass(frozen=True)
class ParityReport:
    """镜像箱对 (y, −y) 的卡方对称性检验"""
    statistic: float
    dof: int
    p_value: float

    def to_dict(self) -> Dict:
        return {'chi2': self.statistic, 'dof': self.dof, 'p_value': self.p_value}


def mirror_parity(hist: HistogramResult) -> ParityReport:
    """
    检验计数在 y → −y 下是否对称

    每对镜像箱 (a, b) 贡献 (a − b)²/(a + b)，空箱对不计入自由度；奇数个箱时中间箱与自身配对，跳过

    Raises:
        ValidationError: 分箱区间不关于 0 对称
        EmptyInputError: 没有非空的镜像箱对
    """
    edges = hist.edges
    if not math.isclose(edges[0], -edges[-1], rel_tol=1e-9, abs_tol=1e-12 * hist.bin_width):
        raise ValidationError([('y_range', f"镜像检验要求区间关于 0 对称，当前为 "
                                           f"[{edges[0]}, {edges[-1]}]")])
    counts = np.asarray(hist.counts, dtype=float)
    half = len(counts) // 2
    a, b = counts[:half], counts[::-1][:half]
    total = a + b
    used = total > 0
    dof = int(np.count_nonzero(used))
    if dof == 0:
        raise EmptyInputError("没有非空的镜像箱对")
    statistic = float(np.sum((a[used] - b[used]) ** 2 / total[used]))
    return ParityReport(statistic=statistic, dof=dof, p_value=float(chi2.sf(statistic, dof)))



# ========== 不确定度带与快照 ==========

@dataclass(frozen=True)
class BeltSeries:
    """每个样本时刻的 x ± sₓ、y ± s_y"""
    t: np.ndarray
    x_lower: np.ndarray
    x_upper: np.ndarray
    y_lower: np.ndarray
    y_upper: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'t': self.t, 'x_lower': self.x_lower, 'x_upper': self.x_upper,
                             'y_lower': self.y_lower, 'y_upper': self.y_upper})


def belt(traj: Trajectory) -> BeltSeries:
    """不确定度带"""
    if len(traj) == 0:
        raise EmptyInputError("空轨迹")
    x, y, sx, sy = traj.z[:, 0], traj.z[:, 1], traj.z[:, 4], traj.z[:, 6]
    return BeltSeries(t=traj.t.copy(), x_lower=x - sx, x_upper=x + sx,
                      y_lower=y - sy, y_upper=y + sy)


@dataclass(frozen=True)
class Snapshot:
    """某一时刻系综中各粒子的位置"""
    t: float
    indices: np.ndarray
    points: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'index': self.indices, 'x': self.points[:, 0], 'y': self.points[:, 1]},
                            columns=SNAPSHOT_COLUMNS)


def common_span(result: EnsembleResult) -> Tuple[float, float]:
    """所有保留轨迹共同覆盖的时间区间"""
    if result.trajectories is None:
        raise ConfigurationError("系综未保留轨迹（需要 retain_trajectories）")
    kept = [traj for traj in result.trajectories if traj is not None]
    if not kept:
        raise EmptyInputError("没有可用的轨迹")
    return max(traj.t_start for traj in kept), min(traj.t_end for traj in kept)


def snapshot(result: EnsembleResult, t: float) -> Snapshot:
    """
    t 时刻的系综位置（由稠密轨迹插值）

    Raises:
        ConfigurationError: 未保留轨迹
        OutOfRangeError: t 不在公共时间区间内
    """
    start, end = common_span(result)
    if not (start <= t <= end):
        raise OutOfRangeError(f"t={t} 不在公共时间区间 [{start}, {end}] 内")
    indices, points = [], []
    for record, traj in zip(result.records, result.trajectories):
        if traj is None:
            continue
        state = interpolate(traj, t)
        indices.append(record.index)
        points.append((state.x, state.y))
    return Snapshot(t=t, indices=np.array(indices, dtype=int),
                    points=np.array(points, dtype=float).reshape(-1, 2))


def nearest_neighbour_spacing_variance(ys: Sequence[float]) -> float:
    """y 方向最近邻间距的方差（聚团程度）"""
    ys = np.sort(np.asarray(ys, dtype=float))
    if len(ys) < 2:
        return 0.0
    gaps = np.diff(ys)
    nearest = np.minimum(np.concatenate([[np.inf], gaps]), np.concatenate([gaps, [np.inf]]))
    return float(np.var(nearest))


# ========== 到达时间 ==========

@dataclass(frozen=True)
class ArrivalTimeStats:
    """到达时间统计"""
    index: np.ndarray
    y0: np.ndarray
    t_hit: np.ndarray
    t_min: float
    t_median: float
    t_max: float
    counts: np.ndarray
    edges: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'index': self.index, 'y0': self.y0, 't_hit': self.t_hit},
                            columns=ARRIVAL_TIME_COLUMNS)


def arrival_times(result: EnsembleResult, bins='auto') -> ArrivalTimeStats:
    """
    到达时间：每个粒子的 t_hit、最小/中位/最大值与分箱分布

    Raises:
        EmptyInputError: 没有到达粒子
    """
    arrivals = ArrivalSet.from_result(result)
    if len(arrivals) == 0:
        raise EmptyInputError("没有到达屏幕的粒子，无法统计到达时间")
    counts, edges = np.histogram(arrivals.t_hit, bins=bins)
    return ArrivalTimeStats(index=arrivals.index, y0=arrivals.y0, t_hit=arrivals.t_hit,
                            t_min=float(np.min(arrivals.t_hit)),
                            t_median=float(np.median(arrivals.t_hit)),
                            t_max=float(np.max(arrivals.t_hit)),
                            counts=counts, edges=edges)


# ========== 穿越与相互作用分类 ==========

def crossing_statistics(result: EnsembleResult, y0_threshold: float = 0.3) -> Dict:
    """
    从一侧半平面出发、落在另一侧的到达粒子

    上半平面：y₀ > y0_threshold 且 y_hit < 0；下半平面镜像
    """
    arrivals = ArrivalSet.from_result(result)
    upper = arrivals.y0 > y0_threshold
    lower = arrivals.y0 < -y0_threshold
    crossed_upper = int(np.sum(upper & (arrivals.y_hit < 0)))
    crossed_lower = int(np.sum(lower & (arrivals.y_hit > 0)))
    n_upper, n_lower = int(np.sum(upper)), int(np.sum(lower))
    return {
        'y0_threshold': y0_threshold,
        'n_upper': n_upper,
        'crossed_upper': crossed_upper,
        'n_lower': n_lower,
        'crossed_lower': crossed_lower,
        'crossing_count': crossed_upper + crossed_lower,
        'crossing_fraction': (crossed_upper + crossed_lower) / (n_upper + n_lower)
        if n_upper + n_lower else 0.0,
    }


def classify_interaction(result: EnsembleResult, p: PhysParams,
                         sy0: float = 0.2, py0: float = 0.0) -> pd.DataFrame:
    """
    粒子与势垒的相互作用强度：reflected / strong / weak

    到达粒子的横向动量改变 |Δp_y| 不小于初始动量不确定度 √U/s_y0 时记为 strong；
    超时与失败的粒子分别记为 timeout / failed
    """
    scale = math.sqrt(p.u) / sy0
    rows = []
    for record in result.records:
        outcome = record.outcome
        if isinstance(outcome, Reflected):
            label = 'reflected'
        elif isinstance(outcome, Arrival):
            label = 'strong' if abs(outcome.state.py - py0) >= scale else 'weak'
        elif isinstance(outcome, Failed):
            label = 'failed'
        else:
            label = 'timeout'
        rows.append({'index': record.index, 'y0': record.y0, 'interaction': label})
    return pd.DataFrame(rows, columns=['index', 'y0', 'interaction'])
