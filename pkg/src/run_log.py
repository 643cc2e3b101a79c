"""
运行日志
控制台输出带 emoji 前缀的状态行（写到 stderr，stdout 留给 JSON 摘要），
同时保留每条记录，运行结束后可落盘为 run_log.log
"""

import logging
import sys
from datetime import datetime
from typing import Dict, List

LOGGER_NAME = 'momentous'

_LEVEL_ICONS = {
    'DEBUG': '🔎',
    'INFO': '✅',
    'START': '🚀',
    'WARNING': '⚠️',
    'ERROR': '❌',
}


def get_logger(name: str = LOGGER_NAME) -> logging.Logger:
    """取 momentous 命名空间下的 logger"""
    if name != LOGGER_NAME and not name.startswith(LOGGER_NAME + '.'):
        name = f"{LOGGER_NAME}.{name}"
    return logging.getLogger(name)


def setup_console(verbose: bool = False) -> None:
    """给根 logger 挂一个 stderr 输出（重复调用不会重复挂载）"""
    root = logging.getLogger(LOGGER_NAME)
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    if not any(getattr(h, '_momentous', False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter('%(message)s'))
        handler._momentous = True
        root.addHandler(handler)


class RunLog:
    """
    一次运行的日志记录器
    add_log(level, message) 同时输出到控制台并保存在内存中，save 时落盘
    """

    def __init__(self, run_id: str):
        """
        Args:
            run_id: 运行标识（写入每条记录）
        """
        self.run_id = run_id
        self.entries: List[Dict] = []
        self._logger = get_logger('run')

    def add_log(self, level: str, message: str):
        """追加一条日志并输出到控制台"""
        level = level.upper()
        self.entries.append({
            'run_id': self.run_id,
            'time': datetime.now().isoformat(timespec='seconds'),
            'level': level,
            'message': message,
        })
        icon = _LEVEL_ICONS.get(level, '•')
        py_level = logging.INFO if level == 'START' else getattr(logging, level, logging.INFO)
        self._logger.log(py_level, f"{icon} {message}")

    def save(self, path: str):
        """写出 run_log.log（制表符分隔：时间、级别、消息）"""
        with open(path, "w", encoding="utf-8") as f:
            for entry in self.entries:
                f.write(f"{entry['time']}\t{entry['level']}\t{entry['message']}\n")
