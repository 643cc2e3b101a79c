"""
势函数与缝几何测试
"""

import math
import os
import sys

import numpy as np
import pytest
from scipy.optimize import brentq

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.errors import DomainError
from src.model import PhysParams
from src.potential import (PotentialKind, potential_average_2d, probe_energy, slit_centers,
                           slit_geometry, slit_width, v_slit, v_validation)

P = PhysParams()


def test_v_slit_examples():
    assert v_slit(0.0, 0.0, P) == 1.0e7
    y_slit = 2.0 * math.sqrt(P.v0 / (P.m * P.omega ** 2))
    assert abs(y_slit - 0.6324555) < 1e-7
    assert abs(v_slit(0.0, y_slit, P)) < 1e-6 * P.v0
    assert v_slit(400.0, 0.0, P) == 0.0
    print("✅ v_slit 示例通过")


def test_v_slit_symmetry_and_sign():
    rng = np.random.default_rng(5)
    for _ in range(300):
        x, y = rng.uniform(-6, 6), rng.uniform(-4, 4)
        v = v_slit(x, y, P)
        assert v >= 0.0
        assert v == v_slit(-x, y, P) == v_slit(x, -y, P)
    print("✅ 非负性与对称性通过")


def test_v_slit_locality():
    # |y| ≤ √2·y_slit 时前因子不超过 V₀
    for y in (0.0, 0.5, 0.8):
        x = 10.5 * P.alpha
        assert v_slit(x, y, P) < P.v0 * math.exp(-100.0)
    print("✅ |x| > 10α 时势可忽略")


def test_slit_centers():
    g = slit_centers(P)
    assert abs(g.y_slit - 0.6324555) < 1e-7
    assert abs(g.d - 1.2649111) < 1e-7
    assert v_slit(0.0, g.y_slit, P) < 1e-6 * P.v0
    assert v_slit(0.0, -g.y_slit, P) < 1e-6 * P.v0

    # 前因子 1 − mω²y²/(4V₀) 在 (0, 4) 上变号的位置
    k = P.m * P.omega ** 2 / (4.0 * P.v0)
    root = brentq(lambda y: 1.0 - k * y * y, 1e-6, 4.0, xtol=1e-14)
    assert abs(root - g.y_slit) < 1e-12

    assert slit_centers(PhysParams(m=1.0, omega=2.0, v0=1.0)).y_slit == 1.0
    assert slit_centers(PhysParams(m=1.0, omega=2.0, v0=1.0)).d == 2.0
    assert slit_centers(PhysParams(m=4.0, omega=1.0, v0=1.0)).y_slit == 1.0
    print("✅ slit_centers 通过")


def test_slit_width_domain():
    for e in (P.v0, 12.5e6, 0.0, -1.0):
        with pytest.raises(DomainError):
            slit_width(P, e)
    print("✅ 探测能量越界被拒绝")


def test_slit_width_matches_bisection():
    e = 0.25 * P.v0
    y_slit = slit_centers(P).y_slit
    f = lambda y: v_slit(0.0, y, P) - e
    y_minus = brentq(f, 0.0, y_slit, xtol=1e-13)
    y_plus = brentq(f, y_slit, math.sqrt(2.0) * y_slit, xtol=1e-13)
    width = slit_width(P, e)
    assert abs(width - (y_plus - y_minus)) < 1e-9
    assert 0.0 < width < slit_centers(P).d

    g = slit_geometry(P, e)
    assert g.a_width == width and g.e_probe == e
    print(f"✅ 缝宽 {width:.9f} 与二分结果一致")


def test_probe_energy():
    # 默认束流动能 12.5·10⁶ > V₀，回退到 0.5·V₀
    assert probe_energy(P, -5000.0) == 0.5 * P.v0
    assert probe_energy(P, -3000.0) == 4.5e6
    assert probe_energy(P, -5000.0, fallback_fraction=0.25) == 0.25 * P.v0
    with pytest.raises(DomainError):
        probe_energy(P, -5000.0, fallback_fraction=1.5)
    print("✅ probe_energy 通过")


def test_v_validation():
    assert v_validation(PotentialKind.free(), 17.0, P) == 0.0
    assert v_validation(PotentialKind.harmonic(2.0), 3.0, PhysParams(m=1.0)) == 18.0
    assert v_validation(PotentialKind.harmonic(1.0), 1.0, PhysParams(m=2.0)) == 1.0
    with pytest.raises(DomainError):
        v_validation(PotentialKind.double_slit(), 1.0, P)
    print("✅ v_validation 通过")


def test_potential_kind():
    with pytest.raises(DomainError):
        PotentialKind.harmonic(0.0)
    with pytest.raises(DomainError):
        PotentialKind('square')
    assert PotentialKind() == PotentialKind.double_slit()
    print("✅ PotentialKind 校验通过")


def test_potential_average_2d():
    x, y, sx, sy = 0.3, 0.4, 0.2, 0.15
    four_point = 0.25 * sum(v_slit(x + a, y + b, P) for a in (sx, -sx) for b in (sy, -sy))
    assert math.isclose(potential_average_2d(x, y, sx, sy, P), four_point, rel_tol=1e-12)

    harmonic = PotentialKind.harmonic(3.0)
    expected = 0.5 * 9.0 * (x * x + sx * sx + y * y + sy * sy)
    assert math.isclose(potential_average_2d(x, y, sx, sy, P, harmonic), expected, rel_tol=1e-12)
    assert potential_average_2d(x, y, sx, sy, P, PotentialKind.free()) == 0.0
    print("✅ 四点平均势通过")


if __name__ == "__main__":
    print("🚀 开始 potential 测试...\n")
    test_v_slit_examples()
    test_v_slit_symmetry_and_sign()
    test_v_slit_locality()
    test_slit_centers()
    test_slit_width_domain()
    test_slit_width_matches_bisection()
    test_probe_energy()
    test_v_validation()
    test_potential_kind()
    test_potential_average_2d()
    print("\n✨ potential 测试全部通过！")
