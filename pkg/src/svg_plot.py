"""
原生 SVG 1.1 绘图
折线、不确定度带、直方图柱、散点与坐标轴；只用于快速查看，CSV 才是正式结果
"""

import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np

from src.errors import EmptyInputError

# 默认画布
WIDTH = 720
HEIGHT = 480
MARGIN = (60, 20, 30, 50)   # left, right, top, bottom

COLORS = {
    'path': '#c0392b',
    'belt': '#27ae60',
    'bar': '#e74c3c',
    'reference': '#000000',
    'axis': '#333333',
    'point': '#c0392b',
}


def _num(value: float) -> str:
    """坐标保留 3 位小数，去掉多余的 0"""
    text = f"{value:.3f}".rstrip('0').rstrip('.')
    return '0' if text in ('-0', '') else text


def _attrs(attr: Dict) -> str:
    """stroke_width → stroke-width；值为 None 的属性不输出"""
    parts = []
    for key, value in attr.items():
        if value is None:
            continue
        name = key.rstrip('_').replace('_', '-')
        if isinstance(value, float):
            value = _num(value)
        parts.append(f'{name}="{escape(str(value))}"')
    return ' '.join(parts)


def _nice_ticks(lo: float, hi: float, count: int = 6) -> List[float]:
    """1-2-5 序列的刻度"""
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / max(1, count - 1)
    magnitude = 10 ** math.floor(math.log10(raw))
    step = next(m * magnitude for m in (1, 2, 5, 10) if m * magnitude >= raw)
    first = math.ceil(lo / step) * step
    ticks = []
    value = first
    while value <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(value) < 1e-12 * step else value)
        value += step
    return ticks


def _finite_range(values: Iterable[float], pad: float = 0.05) -> Tuple[float, float]:
    arr = np.asarray(list(values), dtype=float)
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        raise EmptyInputError("没有可绘制的数据")
    lo, hi = float(arr.min()), float(arr.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    extra = pad * (hi - lo)
    return lo - extra, hi + extra


class SvgCanvas:
    """
    一张二维图
    数据坐标通过 x_range / y_range 线性映射到画布像素，y 轴向上
    """

    def __init__(self, x_range: Tuple[float, float], y_range: Tuple[float, float],
                 width: int = WIDTH, height: int = HEIGHT, title: Optional[str] = None):
        self.x_range = x_range
        self.y_range = y_range
        self.width = width
        self.height = height
        self.title = title
        self.elements: List[str] = []

    # 坐标变换
    def px(self, x: float) -> float:
        left, right, _, _ = MARGIN
        lo, hi = self.x_range
        return left + (x - lo) / (hi - lo) * (self.width - left - right)

    def py(self, y: float) -> float:
        _, _, top, bottom = MARGIN
        lo, hi = self.y_range
        return self.height - bottom - (y - lo) / (hi - lo) * (self.height - top - bottom)

    def _add(self, tag: str, body: Optional[str] = None, **attr):
        if body is None:
            self.elements.append(f"<{tag} {_attrs(attr)}/>")
        else:
            self.elements.append(f"<{tag} {_attrs(attr)}>{escape(body)}</{tag}>")

    def _points(self, xs: Sequence[float], ys: Sequence[float]) -> str:
        return ' '.join(f"{_num(self.px(x))},{_num(self.py(y))}"
                        for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y))

    # 图元
    def polyline(self, xs, ys, color: str = COLORS['path'], width: float = 1.5,
                 dash: Optional[str] = None):
        self._add('polyline', points=self._points(xs, ys), fill='none', stroke=color,
                  stroke_width=width, stroke_dasharray=dash)

    def band(self, xs, lower, upper, color: str = COLORS['belt'], opacity: float = 0.35):
        """lower 与 upper 之间的填充带（不确定度带）"""
        xs = list(xs)
        outline = self._points(xs + xs[::-1], list(lower) + list(upper)[::-1])
        self._add('polygon', points=outline, fill=color, fill_opacity=opacity, stroke='none')

    def bars(self, edges, heights, color: str = COLORS['bar']):
        base = self.py(max(self.y_range[0], 0.0))
        for lo, hi, h in zip(edges[:-1], edges[1:], heights):
            if h <= 0:
                continue
            top = self.py(h)
            self._add('rect', x=float(self.px(lo)), y=float(top),
                      width=float(self.px(hi) - self.px(lo)), height=float(base - top),
                      fill=color, fill_opacity=0.6)

    def scatter(self, xs, ys, color: str = COLORS['point'], radius: float = 1.5):
        for x, y in zip(xs, ys):
            if math.isfinite(x) and math.isfinite(y):
                self._add('circle', cx=float(self.px(x)), cy=float(self.py(y)), r=radius, fill=color)

    def axes(self, x_label: str = '', y_label: str = ''):
        left, right, top, bottom = MARGIN
        x0, y0 = left, self.height - bottom
        axis = COLORS['axis']
        self._add('line', x1=x0, y1=y0, x2=self.width - right, y2=y0, stroke=axis)
        self._add('line', x1=x0, y1=top, x2=x0, y2=y0, stroke=axis)
        for tick in _nice_ticks(*self.x_range):
            x = self.px(tick)
            self._add('line', x1=float(x), y1=y0, x2=float(x), y2=y0 + 4, stroke=axis)
            self._add('text', f"{tick:g}", x=float(x), y=y0 + 16, font_size=10, text_anchor='middle')
        for tick in _nice_ticks(*self.y_range):
            y = self.py(tick)
            self._add('line', x1=x0 - 4, y1=float(y), x2=x0, y2=float(y), stroke=axis)
            self._add('text', f"{tick:g}", x=x0 - 6, y=float(y) + 3, font_size=10, text_anchor='end')
        if x_label:
            self._add('text', x_label, x=float(0.5 * (left + self.width - right)),
                      y=self.height - 8, font_size=12, text_anchor='middle')
        if y_label:
            cy = 0.5 * (top + self.height - bottom)
            self._add('text', y_label, x=14, y=float(cy), font_size=12, text_anchor='middle',
                      transform=f"rotate(-90 14 {_num(cy)})")
        if self.title:
            self._add('text', self.title, x=float(0.5 * self.width), y=16, font_size=13,
                      text_anchor='middle')

    def render(self) -> str:
        header = (f'<svg version="1.1" xmlns="http://www.w3.org/2000/svg" '
                  f'width="{self.width}" height="{self.height}" '
                  f'viewBox="0 0 {self.width} {self.height}">')
        body = '\n'.join(self.elements)
        return f'<?xml version="1.0" encoding="UTF-8"?>\n{header}\n' \
               f'<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n'

    def save(self, path: str):
        with open(path, 'w', encoding='utf-8') as f:
            f.write(self.render())


# ========== 具体图 ==========

def plot_trajectory(traj, path: str, belt=None):
    """单条轨迹 y(x) 与 y ± s_y 带"""
    x, y = traj.z[:, 0], traj.z[:, 1]
    lower = y if belt is None else belt.y_lower
    upper = y if belt is None else belt.y_upper
    canvas = SvgCanvas(_finite_range(x), _finite_range(np.concatenate([lower, upper])),
                       title=f"trajectory ({traj.outcome.label})")
    if belt is not None:
        canvas.band(x, belt.y_lower, belt.y_upper)
    canvas.polyline(x, y)
    canvas.axes('x', 'y')
    canvas.save(path)


def plot_paths(trajectories, path: str, max_paths: int = 400):
    """系综中多条轨迹 y(x)（等间隔抽取，最多 max_paths 条）"""
    kept = [traj for traj in trajectories if traj is not None]
    if not kept:
        raise EmptyInputError("没有可绘制的轨迹")
    stride = max(1, math.ceil(len(kept) / max_paths))
    kept = kept[::stride]
    xs = np.concatenate([traj.z[:, 0] for traj in kept])
    ys = np.concatenate([traj.z[:, 1] for traj in kept])
    canvas = SvgCanvas(_finite_range(xs), _finite_range(ys), title='ensemble trajectories')
    for traj in kept:
        canvas.polyline(traj.z[:, 0], traj.z[:, 1], width=0.6)
    canvas.axes('x', 'y')
    canvas.save(path)


def plot_histogram(hist, path: str, reference: Optional[np.ndarray] = None):
    """屏幕直方图（红色柱 + 平滑曲线）与 Fraunhofer 参考（黑色虚线）"""
    top = float(np.max(hist.counts))
    if reference is not None:
        top = max(top, float(np.nanmax(reference)))
    canvas = SvgCanvas((float(hist.edges[0]), float(hist.edges[-1])), (0.0, 1.05 * max(top, 1.0)),
                       title='arrivals at screen')
    canvas.bars(hist.edges, hist.counts)
    canvas.polyline(hist.centers, hist.smoothed, width=1.2)
    if reference is not None:
        canvas.polyline(hist.centers, reference, color=COLORS['reference'], width=1.0, dash='5,3')
    canvas.axes('y', 'count')
    canvas.save(path)


def plot_arrival_times(stats, path: str):
    """到达时间 t_hit 与初始 y₀ 的散点"""
    canvas = SvgCanvas(_finite_range(stats.y0), _finite_range(stats.t_hit),
                       title='time of arrival')
    canvas.scatter(stats.y0, stats.t_hit)
    canvas.axes('y0', 't_hit')
    canvas.save(path)


def plot_snapshot(snap, path: str):
    """某一时刻的系综位置"""
    canvas = SvgCanvas(_finite_range(snap.points[:, 0]), _finite_range(snap.points[:, 1]),
                       title=f"ensemble at t = {snap.t:g}")
    canvas.scatter(snap.points[:, 0], snap.points[:, 1])
    canvas.axes('x', 'y')
    canvas.save(path)
