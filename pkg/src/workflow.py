"""
工作流编排器
协调单轨迹模拟、系综模拟、自检与几何量计算，负责输出目录与文件写出
"""

import os
from dataclasses import asdict, replace
from datetime import datetime
from typing import Callable, Dict, Optional, Tuple

from src import analysis
from src.config_loader import RunConfig
from src.dynamics import StateDerivative, rhs_2d
from src.ensemble import run_ensemble
from src.errors import (ConfigurationError, EmptyInputError, SimulationError, StiffnessError,
                        UndefinedCorrelationError, ValidationError)
from src.integrate import Arrival, Reflected, integrate
from src.model import PhaseState
from src.potential import probe_energy, slit_centers, slit_width
from src.result_writer import ensure_dir, write_csv, write_json, write_workbook
from src.run_log import RunLog
from src.svg_plot import (plot_arrival_times, plot_histogram, plot_paths, plot_snapshot,
                          plot_trajectory)
from src.validation_suite import run_validation

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


class SimulationWorkflow:
    """
    模拟工作流
    每个子命令返回 (退出码, 摘要字典)；文件写出都在这里完成
    """

    def __init__(self, config: RunConfig, run_id: Optional[str] = None):
        """
        Args:
            config: 已校验的运行配置
            run_id: 运行标识（默认使用当前时间）
        """
        self.config = config
        self.run_id = run_id or datetime.now().strftime('%Y%m%d_%H%M%S')
        self.log = RunLog(self.run_id)

    # ========== 公共部分 ==========

    def _out_dir(self) -> str:
        try:
            return ensure_dir(self.config.outputs.out_dir)
        except OSError as e:
            raise ConfigurationError(f"无法创建输出目录 '{self.config.outputs.out_dir}': {e}") from e

    def _path(self, name: str) -> str:
        return os.path.join(self._out_dir(), name)

    def _finish(self, code: int, summary: Dict, summary_name: Optional[str] = None) -> Tuple[int, Dict]:
        if summary_name:
            summary.setdefault('files', {})['summary'] = write_json(summary, self._path(summary_name))
        self.log.save(self._path('run_log.log'))
        return code, summary

    def geometry(self) -> Dict:
        """缝几何与 Fraunhofer 参考参数"""
        p = self.config.physics
        px0 = self.config.ensemble.px0
        e_probe = self.config.analysis.probe_energy
        if e_probe is None:
            e_probe = probe_energy(p, px0)
        spec = analysis.FraunhoferSpec.from_physics(p, px0, self.config.integrator.x_screen,
                                                    e_probe=e_probe,
                                                    envelope=self.config.analysis.envelope)
        centers = slit_centers(p)
        return {
            'y_slit': centers.y_slit,
            'd': centers.d,
            'a_width': slit_width(p, e_probe),
            'e_probe': e_probe,
            'e_beam': px0 * px0 / (2.0 * p.m),
            'lambda_dB': spec.lambda_db,
            'L': spec.big_l,
            'fringe_spacing': spec.fringe_spacing,
        }

    # ========== 子命令 ==========

    def cmd_geometry(self) -> Tuple[int, Dict]:
        """缝中心、缝宽与条纹间距（只输出 JSON，不写文件）"""
        return EXIT_OK, self.geometry()

    def cmd_simulate(self, y0: float = 0.0) -> Tuple[int, Dict]:
        """
        单条轨迹：trajectory.csv（可选 trajectory.svg）+ 结果摘要

        积分失败时退出码为 1，摘要中带最后的有效状态
        """
        cfg = self.config
        ens = cfg.ensemble
        st0 = PhaseState(t=0.0, x=ens.x0, y=y0, px=ens.px0, py=ens.py0,
                         sx=ens.sx0, psx=0.0, sy=ens.sy0, psy=0.0)
        self.log.add_log('START', f"模拟单条轨迹 y0={y0}，势: {cfg.potential.tag}")

        try:
            traj = integrate(st0, cfg.physics, cfg.integrator, cfg.potential)
        except StiffnessError as e:
            self.log.add_log('ERROR', f"积分失败: {e}")
            summary = {'command': 'simulate', 'y0': y0, 'outcome': 'failed', 'error': str(e),
                       'last_state': asdict(e.last_state) if e.last_state is not None else None}
            return self._finish(EXIT_FAILURE, summary, 'simulate_summary.json')

        outcome = traj.outcome
        files = {'trajectory': write_csv(traj.to_frame(), self._path('trajectory.csv'))}
        belt = analysis.belt(traj)
        files['belt'] = write_csv(belt.to_frame(), self._path('belt.csv'))
        if cfg.outputs.svg:
            plot_trajectory(traj, self._path('trajectory.svg'), belt)
            files['trajectory_svg'] = self._path('trajectory.svg')

        summary = {
            'command': 'simulate',
            'y0': y0,
            'potential': cfg.potential.tag,
            'outcome': outcome.label,
            'y_hit': outcome.y_hit if isinstance(outcome, Arrival) else None,
            't_hit': outcome.t_hit if isinstance(outcome, Arrival) else None,
            't_exit': outcome.t_exit if isinstance(outcome, Reflected) else None,
            't_end': traj.t_end,
            'final_state': asdict(outcome.state),
            'samples': len(traj),
            'energy_drift': traj.energy_drift(),
            'files': files,
        }
        self.log.add_log('INFO', f"轨迹结束: {outcome.label}，{len(traj)} 个样本")
        return self._finish(EXIT_OK, summary, 'simulate_summary.json')

    def cmd_ensemble(self) -> Tuple[int, Dict]:
        """
        系综模拟：outcomes.csv、histogram.csv、arrival_times.csv、interactions.csv，
        保留轨迹时还有 snapshot_*.csv；可选 SVG 与 Excel
        """
        cfg = self.config
        ens = cfg.ensemble
        self.log.add_log('START', f"系综模拟 n={ens.n}，采样器: {ens.sampler.kind}，workers={ens.workers}")

        result = run_ensemble(ens, cfg.physics, cfg.integrator, cfg.potential)
        counts = result.counts
        self.log.add_log('INFO', f"积分完成: {counts}")
        if counts['failures']:
            self.log.add_log('WARNING', f"{counts['failures']} 个粒子积分失败（见 outcomes.csv 的 status 列）")

        files = {'outcomes': write_csv(result.to_frame(), self._path('outcomes.csv'))}
        sheets = {'outcomes': result.to_frame()}
        geometry = self.geometry()
        summary = {
            'command': 'ensemble',
            'n': result.n,
            'sampler': ens.sampler.kind,
            'seed': ens.sampler.seed,
            'potential': cfg.potential.tag,
            'counts': counts,
            'geometry': geometry,
        }

        interactions = analysis.classify_interaction(result, cfg.physics, sy0=ens.sy0, py0=ens.py0)
        files['interactions'] = write_csv(interactions, self._path('interactions.csv'))
        summary['interactions'] = {k: int(v) for k, v in
                                   interactions['interaction'].value_counts().sort_index().items()}
        summary['crossing'] = analysis.crossing_statistics(result, cfg.analysis.crossing_y0_threshold)
        summary['crossing_count'] = summary['crossing']['crossing_count']

        arrivals = analysis.ArrivalSet.from_result(result)
        if len(arrivals):
            self._analyse_arrivals(result, arrivals, geometry, summary, files, sheets)
        else:
            self.log.add_log('WARNING', "没有粒子到达屏幕，跳过直方图与到达时间统计")
            summary.update({'fringe_score': None, 'arrival_time': None})

        if result.trajectories is not None:
            self._write_snapshots(result, summary, files, sheets)
            if cfg.outputs.svg:
                plot_paths(result.trajectories, self._path('trajectories.svg'))
                files['trajectories_svg'] = self._path('trajectories.svg')

        summary['files'] = files
        if cfg.outputs.xlsx:
            files['xlsx'] = write_workbook(sheets, self._path('ensemble.xlsx'), summary)
        self.log.add_log('INFO', f"系综完成: 到达 {counts['arrivals']}，反射 {counts['reflections']}，"
                                 f"超时 {counts['timeouts']}")
        return self._finish(EXIT_OK, summary, 'ensemble_summary.json')

    def _analyse_arrivals(self, result, arrivals, geometry: Dict, summary: Dict,
                          files: Dict, sheets: Dict):
        cfg = self.config.analysis
        hist = analysis.histogram(arrivals, analysis.HistogramSpec(
            bin_width=cfg.bin_width, y_range=cfg.y_range, smoothing=cfg.smoothing_bandwidth))
        peak = float(hist.smoothed.max())
        spec = analysis.FraunhoferSpec(lambda_db=geometry['lambda_dB'], d=geometry['d'],
                                       a=geometry['a_width'], big_l=geometry['L'],
                                       amplitude=peak if peak > 0 else 1.0,
                                       envelope=cfg.envelope).validate()
        reference = analysis.fraunhofer_reference(spec, hist.centers)
        frame = hist.to_frame(reference)
        files['histogram'] = write_csv(frame, self._path('histogram.csv'))
        sheets['histogram'] = frame

        try:
            score = analysis.fringe_score(hist, reference, spec.fringe_spacing, cfg.fringe_window)
        except UndefinedCorrelationError as e:
            self.log.add_log('WARNING', f"fringe_score 无定义: {e}")
            score = None
        try:
            fringes = analysis.find_fringes(hist)
            measured = fringes.measured_spacing
            global_max = fringes.global_max
            symmetric = fringes.symmetric_secondary_count(hist.bin_width)
        except EmptyInputError:
            measured, global_max, symmetric = None, None, 0
        try:
            parity = analysis.mirror_parity(hist).to_dict()
        except (ValidationError, EmptyInputError) as e:
            self.log.add_log('WARNING', f"镜像对称检验跳过: {e}")
            parity = None

        times = analysis.arrival_times(result)
        files['arrival_times'] = write_csv(times.to_frame(), self._path('arrival_times.csv'))
        sheets['arrival_times'] = times.to_frame()

        summary.update({
            'histogram': hist.metadata,
            'fringe_score': score,
            'fringe_spacing': {'theoretical': spec.fringe_spacing, 'measured': measured},
            'global_max_y': global_max,
            'symmetric_secondary_maxima': symmetric,
            'mirror_parity': parity,
            'arrival_time': {'min': times.t_min, 'median': times.t_median, 'max': times.t_max},
        })
        if self.config.outputs.svg:
            plot_histogram(hist, self._path('histogram.svg'), reference)
            plot_arrival_times(times, self._path('arrival_times.svg'))
            files['histogram_svg'] = self._path('histogram.svg')
            files['arrival_times_svg'] = self._path('arrival_times.svg')

    def _write_snapshots(self, result, summary: Dict, files: Dict, sheets: Dict):
        start, end = analysis.common_span(result)
        spacing = {}
        for t in self.config.analysis.snapshot_times:
            try:
                snap = analysis.snapshot(result, t)
            except SimulationError as e:
                self.log.add_log('WARNING', f"快照 t={t} 跳过: {e}")
                continue
            name = f"snapshot_t{t:g}"
            files[name] = write_csv(snap.to_frame(), self._path(f"{name}.csv"))
            sheets[name] = snap.to_frame()
            spacing[f"{t:g}"] = analysis.nearest_neighbour_spacing_variance(snap.points[:, 1])
            if self.config.outputs.svg:
                plot_snapshot(snap, self._path(f"{name}.svg"))
        summary['snapshots'] = {'common_span': [start, end], 'nn_spacing_variance': spacing}

    def cmd_validate(self, rtol: Optional[float] = None,
                     rhs: Callable[..., StateDerivative] = rhs_2d) -> Tuple[int, Dict]:
        """
        运行自检套件；全部通过时退出码为 0，否则为 1

        Args:
            rtol: 覆盖二维积分的相对容差
            rhs: 被检查的右端函数
        """
        icfg = self.config.integrator
        if rtol is not None:
            icfg = replace(icfg, rtol=rtol).validate()
        self.log.add_log('START', f"运行自检 (rtol={icfg.rtol:g})")
        report = run_validation(self.config.physics, icfg, rhs)
        failed = [c.name for c in report.checks if not c.passed]
        if failed:
            self.log.add_log('ERROR', f"未通过: {', '.join(failed)}")
        else:
            self.log.add_log('INFO', "全部检查通过")
        summary = {'command': 'validate', 'rtol': icfg.rtol, **report.to_dict()}
        return self._finish(EXIT_OK if report.passed else EXIT_FAILURE, summary,
                            'validation_report.json')
