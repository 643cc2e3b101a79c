"""
结果输出
CSV（pandas，'.' 小数点，浮点按 17 位有效数字写出以保证可逐字节复现）、JSON 摘要、Excel 工作簿
"""

import json
import math
import os
from typing import Dict, Optional

import numpy as np
import pandas as pd

from src.run_log import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = '%.17g'


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def write_csv(frame: pd.DataFrame, path: str) -> str:
    """写 CSV：固定表头、无行号、LF 换行"""
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.debug(f"写出 {path} ({len(frame)} 行)")
    return path


def _jsonable(value):
    """numpy 标量/数组与非有限浮点转成 JSON 可表示的值"""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def to_json(summary: Dict) -> str:
    return json.dumps(_jsonable(summary), ensure_ascii=False, indent=2)


def write_json(summary: Dict, path: str) -> str:
    with open(path, 'w', encoding='utf-8') as f:
        f.write(to_json(summary))
        f.write('\n')
    return path


def write_workbook(sheets: Dict[str, pd.DataFrame], path: str,
                   summary: Optional[Dict] = None) -> str:
    """
    多个表写入同一个 Excel 工作簿（openpyxl 引擎）

    Args:
        sheets: {工作表名: DataFrame}
        summary: 可选的摘要，展开为 key / value 两列的 summary 表
    """
    with pd.ExcelWriter(path, engine='openpyxl') as writer:
        if summary is not None:
            rows = [{'key': key, 'value': json.dumps(_jsonable(value), ensure_ascii=False)
                     if isinstance(value, (dict, list)) else _jsonable(value)}
                    for key, value in summary.items()]
            pd.DataFrame(rows, columns=['key', 'value']).to_excel(writer, sheet_name='summary',
                                                                   index=False)
        for name, frame in sheets.items():
            # Excel 工作表名最长 31 个字符
            frame.to_excel(writer, sheet_name=name[:31], index=False)
    logger.info(f"📊 已导出 Excel: {path}")
    return path
