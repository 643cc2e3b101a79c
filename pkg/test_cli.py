"""
命令行测试
通过 main(argv) 调用各子命令，检查退出码、stdout 上的 JSON 摘要与输出文件
"""

import json
import os
import sys
from dataclasses import replace

import pandas as pd

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.config_loader import build_run_config, load_config
from src.dynamics import rhs_2d
from src.main import main
from src.potential import PotentialKind
from src.workflow import EXIT_FAILURE, SimulationWorkflow


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_geometry(capsys, tmp_path):
    code, summary = _run(capsys, ['geometry', '--out', str(tmp_path)])
    assert code == 0
    assert abs(summary['y_slit'] - 0.6324555) < 1e-7
    assert abs(summary['d'] - 1.2649111) < 1e-7
    assert abs(summary['fringe_spacing'] - 0.3477) < 1e-4
    assert summary['e_probe'] == 5.0e6 and summary['e_beam'] == 12.5e6
    assert 0.0 < summary['a_width'] < summary['d']

    _, faster = _run(capsys, ['geometry', '--px0=-10000'])
    assert abs(faster['fringe_spacing'] - 0.5 * summary['fringe_spacing']) < 1e-12

    _, stiffer = _run(capsys, ['geometry', '--omega', '20000'])
    assert abs(stiffer['y_slit'] - 0.5 * summary['y_slit']) < 1e-12
    print("✅ geometry 子命令通过")


def test_invalid_u_is_config_error(capsys, tmp_path):
    code, summary = _run(capsys, ['simulate', '--u', '0.1', '--out', str(tmp_path)])
    assert code == 2
    assert summary['error'] == 'HeisenbergViolationError'
    assert 'physics.u' in [f['field'] for f in summary['fields']]
    assert not os.listdir(tmp_path)
    print("✅ U < ħ²/4 退出码为 2")


def test_config_file_errors(capsys, tmp_path):
    code, summary = _run(capsys, ['geometry', '--config', str(tmp_path / 'missing.json')])
    assert code == 2 and summary['error'] == 'ConfigurationError'

    bad = tmp_path / 'bad.json'
    bad.write_text(json.dumps({'physics': {'mass': 1.0}}), encoding='utf-8')
    code, summary = _run(capsys, ['geometry', '--config', str(bad)])
    assert code == 2
    assert [f['field'] for f in summary['fields']] == ['physics.mass']

    code, summary = _run(capsys, ['geometry', '--rtol', '-1'])
    assert code == 2 and 'integrator.rtol' in [f['field'] for f in summary['fields']]

    bad.write_text(json.dumps({'integrator': {'h_min': 1e-3}}), encoding='utf-8')
    code, summary = _run(capsys, ['geometry', '--config', str(bad)])
    assert code == 2 and 'integrator.h_min' in [f['field'] for f in summary['fields']]
    print("✅ 配置文件错误退出码为 2")


def test_explicit_slit_energy_setting(capsys, tmp_path):
    path = tmp_path / 'probe.json'
    path.write_text(json.dumps({'analysis': {'probe_energy': 2.0e6}}), encoding='utf-8')
    code, summary = _run(capsys, ['geometry', '--config', str(path)])
    assert code == 0 and summary['e_probe'] == 2.0e6

    # 显式的 0 不能被当成“未设置”而回退到 0.5·V₀
    path.write_text(json.dumps({'analysis': {'probe_energy': 0.0}}), encoding='utf-8')
    code, summary = _run(capsys, ['geometry', '--config', str(path)])
    assert code == 2
    assert summary['error'] == 'DomainError'
    print("✅ 显式探测能量生效，0 触发定义域错误")


def test_toml_config(capsys, tmp_path):
    path = tmp_path / 'run.toml'
    path.write_text('[physics]\nomega = 20000.0\n\n[ensemble]\npx0 = -10000.0\n', encoding='utf-8')
    code, summary = _run(capsys, ['geometry', '--config', str(path)])
    assert code == 0
    assert abs(summary['y_slit'] - 0.31622776601683794) < 1e-12
    assert summary['e_beam'] == 5.0e7
    print("✅ TOML 配置可用")


def test_shipped_toml_matches_json_defaults():
    root = os.path.dirname(os.path.abspath(__file__))
    from_toml = build_run_config(load_config(os.path.join(root, 'config.toml')))
    from_json = build_run_config(load_config(os.path.join(root, 'config.json')))
    assert from_toml == from_json == build_run_config(load_config())
    print("✅ config.toml 与 config.json 给出相同的默认配置")


def test_simulate_on_axis(capsys, tmp_path):
    code, summary = _run(capsys, ['simulate', '--y0', '0', '--out', str(tmp_path), '--svg'])
    assert code == 0
    assert summary['outcome'] == 'arrival'
    assert abs(summary['y_hit']) < 1e-6
    assert summary['t_hit'] >= 0.15 - 1e-9
    for name in ('trajectory.csv', 'belt.csv', 'trajectory.svg', 'simulate_summary.json', 'run_log.log'):
        assert (tmp_path / name).exists(), name

    frame = pd.read_csv(tmp_path / 'trajectory.csv')
    assert list(frame.columns) == ['t', 'x', 'y', 'px', 'py', 'sx', 'psx', 'sy', 'psy', 'H_Q']
    assert frame['t'].is_monotonic_increasing
    assert frame['x'].iloc[0] == 400.0
    assert abs(frame['x'].iloc[-1] + 350.0) < 1e-6
    print("✅ simulate y0 = 0 通过")


def test_simulate_free_straight_line(capsys, tmp_path):
    code, summary = _run(capsys, ['simulate', '--y0', '4', '--potential', 'free',
                                  '--out', str(tmp_path)])
    assert code == 0 and summary['potential'] == 'free'
    frame = pd.read_csv(tmp_path / 'trajectory.csv')
    assert (frame['y'] == 4.0).all()
    assert summary['y_hit'] == 4.0
    print("✅ 自由势下轨迹为直线")


def test_simulate_stiffness_failure(capsys, tmp_path):
    config = tmp_path / 'stiff.json'
    config.write_text(json.dumps({'integrator': {'h0': 5e-5, 'h_min': 5e-5}}), encoding='utf-8')
    code, summary = _run(capsys, ['simulate', '--config', str(config), '--out', str(tmp_path)])
    assert code == EXIT_FAILURE
    assert summary['outcome'] == 'failed'
    assert abs(summary['last_state']['x']) < 10.0
    assert (tmp_path / 'simulate_summary.json').exists()
    print("✅ 积分失败退出码为 1 并带最后状态")


def test_ensemble_free(capsys, tmp_path):
    code, summary = _run(capsys, ['ensemble', '--n', '10', '--potential', 'free',
                                  '--out', str(tmp_path)])
    assert code == 0
    assert summary['counts']['arrivals'] == 10
    outcomes = pd.read_csv(tmp_path / 'outcomes.csv')
    assert len(outcomes) == 10
    assert list(outcomes.columns) == ['index', 'y0', 'outcome', 'y_hit', 't_hit', 'status']
    for name in ('histogram.csv', 'arrival_times.csv', 'interactions.csv', 'ensemble_summary.json'):
        assert (tmp_path / name).exists(), name
    assert abs(summary['arrival_time']['median'] - 0.15) < 1e-9
    assert summary['crossing_count'] == 0
    assert set(summary['mirror_parity']) == {'chi2', 'dof', 'p_value'}
    print("✅ 自由势系综写出 10 行结果")


def test_ensemble_is_reproducible(capsys, tmp_path):
    outputs = []
    for run in ('a', 'b'):
        out = tmp_path / run
        code, _ = _run(capsys, ['ensemble', '--n', '8', '--sampler', 'uniform', '--seed', '42',
                                '--potential', 'free', '--out', str(out)])
        assert code == 0
        outputs.append(out)
    for name in ('outcomes.csv', 'histogram.csv', 'arrival_times.csv'):
        assert (outputs[0] / name).read_bytes() == (outputs[1] / name).read_bytes()
    print("✅ 相同种子的 CSV 逐字节相同")


def test_ensemble_snapshots_and_workbook(capsys, tmp_path):
    code, summary = _run(capsys, ['ensemble', '--n', '3', '--potential', 'free',
                                  '--retain-trajectories', '--snapshot-t', '0.1',
                                  '--snapshot-t', '5', '--svg', '--xlsx', '--out', str(tmp_path)])
    assert code == 0
    assert (tmp_path / 'snapshot_t0.1.csv').exists()
    assert not (tmp_path / 'snapshot_t5.csv').exists()
    assert list(summary['snapshots']['nn_spacing_variance']) == ['0.1']
    for name in ('ensemble.xlsx', 'histogram.svg', 'trajectories.svg', 'snapshot_t0.1.svg'):
        assert (tmp_path / name).exists(), name
    sheets = pd.read_excel(tmp_path / 'ensemble.xlsx', sheet_name=None)
    assert {'summary', 'outcomes', 'histogram'} <= set(sheets)
    print("✅ 快照、SVG 与 Excel 输出通过")


def test_validate_default_build_passes(capsys, tmp_path):
    code, summary = _run(capsys, ['validate', '--out', str(tmp_path)])
    failed = [(c['name'], c['measured']) for c in summary['checks'] if not c['passed']]
    assert failed == []
    assert code == 0 and summary['passed'] is True
    assert (tmp_path / 'validation_report.json').exists()
    print("✅ 默认配置下 validate 全部通过")


def test_validate_detects_sign_flip(tmp_path):
    def flipped(st, p, kind=PotentialKind()):
        d = rhs_2d(st, p, kind)
        return replace(d, dpy=-d.dpy)

    config = build_run_config(load_config(), {'outputs.out_dir': str(tmp_path)})
    code, summary = SimulationWorkflow(config, run_id='flip').cmd_validate(rhs=flipped)
    assert code == EXIT_FAILURE
    assert summary['passed'] is False
    failed = {c['name'] for c in summary['checks'] if not c['passed']}
    assert 'grad_check_random' in failed
    assert (tmp_path / 'validation_report.json').exists()
    print("✅ 翻转 ṗ_y 符号时 validate 失败")


def test_validate_loose_tolerance(capsys, tmp_path):
    code, summary = _run(capsys, ['validate', '--rtol', '1e-3', '--out', str(tmp_path)])
    assert code == 1
    assert summary['rtol'] == 1e-3
    drift = next(c for c in summary['checks'] if c['name'] == 'energy_drift')
    assert drift['passed'] is False
    print("✅ rtol = 1e-3 时能量漂移检查失败")


if __name__ == "__main__":
    import pytest
    sys.exit(pytest.main([__file__, '-v']))
