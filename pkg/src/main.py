"""
主程序
双缝半经典轨迹模拟器的命令行入口：simulate / ensemble / validate / geometry
结果摘要以 JSON 输出到 stdout，状态信息输出到 stderr
"""

import argparse
import os
import sys

# 添加项目根目录到路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.config_loader import build_run_config, load_config
from src.errors import ConfigurationError, DomainError, SimulationError, ValidationError
from src.result_writer import to_json
from src.run_log import get_logger, setup_console
from src.workflow import EXIT_CONFIG, EXIT_FAILURE, SimulationWorkflow

logger = get_logger('cli')


def _common_options() -> argparse.ArgumentParser:
    """所有子命令共用的覆盖项"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='配置文件路径（.json 或 .toml，默认: 仓库根目录 config.json）')
    common.add_argument('--out', help='输出目录（默认: output）')
    common.add_argument('--svg', action='store_true', default=None, help='同时输出 SVG 图')
    common.add_argument('--xlsx', action='store_true', default=None, help='同时输出 Excel 工作簿')
    common.add_argument('--potential', choices=['double_slit', 'free', 'harmonic'], help='势类型')
    common.add_argument('--omega-h', type=float, help='谐振子势的频率 ω_h')
    common.add_argument('--v0', type=float, help='势垒高度 V₀')
    common.add_argument('--omega', type=float, help='势垒频率 ω')
    common.add_argument('--u', type=float, help='Casimir U')
    common.add_argument('--hbar', type=float, help='约化普朗克常数 ħ')
    common.add_argument('--px0', type=float, help='束流动量 pₓ₀')
    common.add_argument('--rtol', type=float, help='积分相对容差')
    common.add_argument('--atol', type=float, help='积分绝对容差')
    common.add_argument('--t-max', type=float, help='积分时长')
    common.add_argument('--envelope', choices=['on', 'off'], help='Fraunhofer 参考是否带单缝包络')
    common.add_argument('-v', '--verbose', action='store_true', help='输出调试信息')
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        description='双缝半经典轨迹模拟器（矩展开的量子修正哈密顿量）',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog='''
示例用法:
  # 单条轨迹（y0 = 0.3），输出轨迹 CSV 与 SVG
  python src/main.py simulate --y0 0.3 --svg

  # 2000 个粒子的网格系综
  python src/main.py ensemble --n 2000 --out output/grid

  # 按 |Ψ₀(y)|² 采样的系综，固定种子，保留轨迹并输出快照
  python src/main.py ensemble --n 10000 --sampler gaussian --seed 7 \\
    --retain-trajectories --snapshot-t 0.08 --snapshot-t 0.1

  # 自检（放宽容差演示能量漂移检查失败）
  python src/main.py validate --rtol 1e-3

  # 缝几何与条纹间距
  python src/main.py geometry
        '''
    )
    sub = parser.add_subparsers(dest='command', required=True)

    simulate = sub.add_parser('simulate', parents=[common], help='积分单条轨迹')
    simulate.add_argument('--y0', type=float, default=0.0, help='初始横向坐标 y₀（默认: 0）')

    ensemble = sub.add_parser('ensemble', parents=[common], help='积分粒子系综并做统计分析')
    ensemble.add_argument('--n', type=int, help='粒子数')
    ensemble.add_argument('--seed', type=int, help='随机采样器的种子')
    ensemble.add_argument('--sampler', choices=['grid', 'uniform', 'gaussian'], help='y₀ 采样器')
    ensemble.add_argument('--workers', type=int, help='worker 进程数（0 表示全部 CPU）')
    ensemble.add_argument('--retain-trajectories', action='store_true', default=None,
                          help='保留稠密轨迹（快照与轨迹图需要）')
    ensemble.add_argument('--snapshot-t', type=float, action='append', dest='snapshot_times',
                          help='快照时刻，可重复')

    sub.add_parser('validate', parents=[common], help='运行自检套件')
    sub.add_parser('geometry', parents=[common], help='输出缝几何与条纹间距')
    return parser


def collect_overrides(args: argparse.Namespace) -> dict:
    """命令行参数 → {'段名.字段名': 值}"""
    envelope = None if args.envelope is None else args.envelope == 'on'
    return {
        'outputs.out_dir': args.out,
        'outputs.svg': args.svg,
        'outputs.xlsx': args.xlsx,
        'physics.potential': args.potential,
        'physics.omega_h': args.omega_h,
        'physics.v0': args.v0,
        'physics.omega': args.omega,
        'physics.u': args.u,
        'physics.hbar': args.hbar,
        'ensemble.px0': args.px0,
        'integrator.rtol': args.rtol,
        'integrator.atol': args.atol,
        'integrator.t_max': args.t_max,
        'analysis.envelope': envelope,
        'ensemble.n': getattr(args, 'n', None),
        'ensemble.seed': getattr(args, 'seed', None),
        'ensemble.sampler': getattr(args, 'sampler', None),
        'ensemble.workers': getattr(args, 'workers', None),
        'ensemble.retain_trajectories': getattr(args, 'retain_trajectories', None),
        'analysis.snapshot_times': getattr(args, 'snapshot_times', None),
    }


def _error_summary(error: Exception) -> dict:
    summary = {'error': type(error).__name__, 'message': str(error)}
    if isinstance(error, ValidationError):
        summary['fields'] = [{'field': name, 'message': msg} for name, msg in error.fields]
    return summary


def main(argv=None) -> int:
    """主函数，返回退出码"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_console(args.verbose)

    try:
        config = build_run_config(load_config(args.config), collect_overrides(args))
    except (ConfigurationError, ValidationError, DomainError, TypeError, ValueError) as e:
        logger.error(f"❌ 配置错误: {e}")
        print(to_json(_error_summary(e)))
        return EXIT_CONFIG

    workflow = SimulationWorkflow(config)
    try:
        if args.command == 'simulate':
            code, summary = workflow.cmd_simulate(args.y0)
        elif args.command == 'ensemble':
            code, summary = workflow.cmd_ensemble()
        elif args.command == 'validate':
            code, summary = workflow.cmd_validate()
        else:
            code, summary = workflow.cmd_geometry()
    except (ConfigurationError, DomainError) as e:
        logger.error(f"❌ 配置错误: {e}")
        print(to_json(_error_summary(e)))
        return EXIT_CONFIG
    except (SimulationError, OSError) as e:
        logger.error(f"❌ 运行失败: {e}")
        print(to_json(_error_summary(e)))
        return EXIT_FAILURE

    print(to_json(summary))
    return code


if __name__ == "__main__":
    sys.exit(main())
