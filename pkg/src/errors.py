"""
异常定义
模拟器各模块共用的错误类型
"""

from typing import List, Optional, Tuple


class SimulationError(Exception):
    """所有领域错误的基类"""


class DomainError(SimulationError, ValueError):
    """参数超出定义域（s ≤ 0、u ≤ 0、探测能量越界等）"""


class ValidationError(DomainError):
    """
    参数/配置校验失败

    Args:
        fields: [(字段名, 说明), ...]
    """

    def __init__(self, fields: List[Tuple[str, str]]):
        self.fields = list(fields)
        detail = '; '.join(f"{name}: {msg}" for name, msg in self.fields)
        super().__init__(f"参数校验失败 - {detail}")

    @property
    def field_names(self) -> List[str]:
        return [name for name, _ in self.fields]


class HeisenbergViolationError(ValidationError):
    """U 低于海森堡下界 ħ²/4"""


class StiffnessError(SimulationError):
    """
    积分失败：步长下溢或色散塌缩持续发生

    Args:
        message: 错误描述
        last_state: 最后一个有效的 PhaseState
    """

    def __init__(self, message: str, last_state=None):
        self.last_state = last_state
        super().__init__(message)

    @property
    def t(self) -> Optional[float]:
        return None if self.last_state is None else self.last_state.t


class OutOfRangeError(SimulationError, ValueError):
    """插值或快照的时间超出轨迹区间"""


class EmptyInputError(SimulationError, ValueError):
    """没有可统计的到达粒子"""


class UndefinedCorrelationError(SimulationError, ValueError):
    """相关系数无定义（输入为常数）"""


class ConfigurationError(SimulationError):
    """配置不满足操作要求（例如未保留轨迹、配置文件不存在）"""
