"""
哈密顿量与运动方程测试
"""

import math
import os
import sys
from dataclasses import fields, replace

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.dynamics import (StateDerivative, grad_check, hamiltonian_1d, hamiltonian_2d,
                          hamiltonian_2d_terms, rhs_1d, rhs_2d, rhs_2d_array)
from src.errors import DomainError
from src.model import PhaseState, PhysParams
from src.potential import PotentialKind, potential_average_2d
from src.validation_suite import (beam_state, check_free_spreading, check_harmonic,
                                  random_states)

P = PhysParams()
FREE = PotentialKind.free()


def test_hamiltonian_2d_examples():
    assert math.isclose(hamiltonian_2d(beam_state(), P), 12_500_006.25, rel_tol=1e-14)

    still = PhaseState(t=0.0, x=0.0, y=0.0, px=0.0, py=0.0, sx=1.0, psx=0.0, sy=1.0, psy=0.0)
    assert hamiltonian_2d(still, P, FREE) == 0.25

    st = PhaseState(t=0.0, x=0.4, y=0.3, px=-4000.0, py=12.0, sx=0.2, psx=3.0, sy=0.25, psy=-1.0)
    assert hamiltonian_2d(st, P) == hamiltonian_2d(st.mirrored(), P)

    kinetic, casimir, potential = hamiltonian_2d_terms(st, P)
    assert kinetic + casimir + potential == hamiltonian_2d(st, P)
    assert potential == potential_average_2d(st.x, st.y, st.sx, st.sy, P)
    kinetic, casimir, potential = hamiltonian_2d_terms(beam_state(), P)
    assert kinetic == 12_500_000.0 and potential == 0.0
    assert math.isclose(casimir, 6.25, rel_tol=1e-14)

    with pytest.raises(DomainError):
        hamiltonian_2d(replace(st, sy=0.0), P)
    print("✅ hamiltonian_2d 示例通过")


def test_hamiltonian_1d_examples():
    assert math.isclose(hamiltonian_1d(0.0, 0.0, 0.2, 0.0, 0.25, FREE, P), 3.125, rel_tol=1e-14)
    assert hamiltonian_1d(1.0, 0.0, 1.0, 0.0, 0.25, PotentialKind.harmonic(1.0), P) == 1.125

    omega_h, m = 2.5, 1.7
    p = PhysParams(m=m)
    x, px, s, ps, u = 0.3, 1.1, 0.4, -0.6, 0.3
    expected = (px ** 2 + ps ** 2) / (2 * m) + u / (2 * m * s ** 2) + 0.5 * m * omega_h ** 2 * (x ** 2 + s ** 2)
    value = hamiltonian_1d(x, px, s, ps, u, PotentialKind.harmonic(omega_h), p)
    assert math.isclose(value, expected, rel_tol=1e-13)

    with pytest.raises(DomainError):
        hamiltonian_1d(0.0, 0.0, 0.0, 0.0, 0.25, FREE, P)
    print("✅ hamiltonian_1d 示例通过")


def test_rhs_2d_force_free():
    d = rhs_2d(beam_state(), P)
    assert d.dx == -5000.0 and d.dy == 0.0
    assert d.dpx == 0.0 and d.dpy == 0.0
    assert d.dsx == 0.0 and d.dsy == 0.0
    assert math.isclose(d.dpsx, 31.25, rel_tol=1e-13)
    assert math.isclose(d.dpsy, 31.25, rel_tol=1e-13)

    still = PhaseState(t=0.0, x=0.0, y=0.0, px=0.0, py=0.0, sx=1.0, psx=0.0, sy=1.0, psy=0.0)
    assert rhs_2d(still, P, FREE).dpsx == 0.25
    print("✅ 无力区 RHS 通过")


def test_rhs_2d_mirror():
    for st in random_states(50, P, seed=9):
        d = rhs_2d(st, P)
        m = rhs_2d(st.mirrored(), P)
        assert m.dy == -d.dy and m.dpy == -d.dpy
        for name in ('dx', 'dpx', 'dsx', 'dpsx', 'dsy', 'dpsy'):
            assert getattr(m, name) == getattr(d, name)
    print("✅ (y, p_y) 镜像宇称通过")


def test_rhs_2d_array_matches_dataclass():
    for st in random_states(20, P, seed=4):
        assert np.array_equal(rhs_2d_array(st.t, st.as_array(), P), rhs_2d(st, P).as_array())
    collapsed = replace(beam_state(), sx=-0.1).as_array()
    assert np.all(np.isinf(rhs_2d_array(0.0, collapsed, P)))
    with pytest.raises(DomainError):
        rhs_2d(PhaseState(0.0, 0.0, 0.0, 0.0, 0.0, 0.2, 0.0, -0.2, 0.0), P)
    print("✅ 数组版 RHS 与 StateDerivative 一致")


def test_casimir_is_a_parameter():
    names = {f.name for f in fields(StateDerivative)}
    assert names == {'dx', 'dy', 'dpx', 'dpy', 'dsx', 'dpsx', 'dsy', 'dpsy'}
    assert len(rhs_2d_array(0.0, beam_state().as_array(), P)) == 8
    print("✅ U 没有演化分量")


def test_rhs_1d_examples():
    d = rhs_1d(0.0, 0.0, 0.2, 0.0, 0.25, FREE, P)
    assert math.isclose(d[3], 31.25, rel_tol=1e-13)

    omega_h, s = 3.0, 0.7
    d = rhs_1d(0.5, 0.0, s, 0.0, 0.25, PotentialKind.harmonic(omega_h), P)
    assert math.isclose(d[3], 0.25 / s ** 3 - omega_h ** 2 * s, rel_tol=1e-13)
    assert math.isclose(d[1], -omega_h ** 2 * 0.5, rel_tol=1e-13)

    d = rhs_1d(0.0, 0.0, 1.0, 3.0, 0.25, FREE, PhysParams(m=2.0))
    assert d[2] == 1.5

    with pytest.raises(DomainError):
        rhs_1d(0.0, 0.0, -1.0, 0.0, 0.25, FREE, P)
    print("✅ rhs_1d 示例通过")


def test_rhs_1d_is_symplectic_gradient():
    kind = PotentialKind.harmonic(2.0)
    x, px, s, ps, u, h = 0.4, -1.3, 0.6, 0.8, 0.3, 1e-6
    H = lambda *z: hamiltonian_1d(*z, u, kind, P)
    fd = np.array([
        (H(x, px + h, s, ps) - H(x, px - h, s, ps)) / (2 * h),
        -(H(x + h, px, s, ps) - H(x - h, px, s, ps)) / (2 * h),
        (H(x, px, s, ps + h) - H(x, px, s, ps - h)) / (2 * h),
        -(H(x, px, s + h, ps) - H(x, px, s - h, ps)) / (2 * h),
    ])
    assert np.allclose(rhs_1d(x, px, s, ps, u, kind, P), fd, rtol=1e-7, atol=1e-7)
    print("✅ rhs_1d 为 H 的辛梯度")


def test_grad_check():
    worst = max(grad_check(st, P) for st in random_states(100, P))
    assert worst < 1e-5, worst
    assert grad_check(beam_state(), P) < 1e-10
    assert grad_check(replace(beam_state(), x=0.0), P) < 1e-5
    print(f"✅ grad_check: 随机状态最大误差 {worst:.2e}")


def test_grad_check_momentum_steps_follow_kinetic_energy():
    # 动能 ~1.25e7 时，小的 p_sx / p_sy 也不能用 1e-5 量级的差分步长
    for psx, psy in ((0.5, -0.3), (37.3, 12.0), (-99.0, 64.0)):
        far = PhaseState(t=0.0, x=20.0, y=0.1, px=-5000.0, py=3.0,
                         sx=0.2, psx=psx, sy=0.3, psy=psy)
        assert grad_check(far, P) < 1e-6, (psx, psy)
        near = replace(far, x=0.4, y=0.7)
        assert grad_check(near, P) < 1e-5, (psx, psy)
    print("✅ 动量方向的差分步长随动能放大")


def test_grad_check_detects_sign_flip():
    def flipped(st, p, kind=PotentialKind()):
        d = rhs_2d(st, p, kind)
        return replace(d, dpy=-d.dpy)

    st = PhaseState(t=0.0, x=0.3, y=0.4, px=-5000.0, py=0.0, sx=0.2, psx=0.0, sy=0.2, psy=0.0)
    assert grad_check(st, P, rhs=flipped) > 1.0
    print("✅ 翻转 ṗ_y 符号被 grad_check 发现")


def test_one_dimensional_closed_forms():
    assert check_free_spreading(P).passed
    assert check_harmonic(P).passed
    print("✅ 一维自由粒子与谐振子闭式解通过")


if __name__ == "__main__":
    print("🚀 开始 dynamics 测试...\n")
    test_hamiltonian_2d_examples()
    test_hamiltonian_1d_examples()
    test_rhs_2d_force_free()
    test_rhs_2d_mirror()
    test_rhs_2d_array_matches_dataclass()
    test_casimir_is_a_parameter()
    test_rhs_1d_examples()
    test_rhs_1d_is_symplectic_gradient()
    test_grad_check()
    test_grad_check_momentum_steps_follow_kinetic_energy()
    test_grad_check_detects_sign_flip()
    test_one_dimensional_closed_forms()
    print("\n✨ dynamics 测试全部通过！")
