"""
多进程并行调度器
把系综中互相独立的积分任务分发给 worker 池，结果按输入顺序收集
"""

import concurrent.futures
import os
from typing import Callable, List, Optional, Sequence, TypeVar

from src.run_log import get_logger

T = TypeVar('T')
R = TypeVar('R')

logger = get_logger(__name__)


class EnsembleScheduler:
    """
    系综调度器
    workers = 1 时在本进程串行执行；否则使用进程池。
    结果列表按任务下标排列，与执行顺序无关
    """

    def __init__(self, workers: int = 1, chunksize: Optional[int] = None):
        """
        Args:
            workers: worker 数量，0 或负数表示使用全部 CPU
            chunksize: 每次分发给 worker 的任务数（默认按任务量自动估计）
        """
        if workers is None or workers <= 0:
            workers = os.cpu_count() or 1
        self.workers = workers
        self.chunksize = chunksize

    def _progress(self, done: int, total: int):
        step = max(1, total // 10)
        if done % step == 0 or done == total:
            logger.info(f"▶️ 已完成 {done}/{total} 个粒子")

    def execute_batch(self, tasks: Sequence[T], worker: Callable[[T], R]) -> List[R]:
        """
        执行一批任务

        Args:
            tasks: 任务列表（必须可 pickle）
            worker: 模块级函数（必须可 pickle）

        Returns:
            与 tasks 一一对应的结果列表
        """
        total = len(tasks)
        actual_workers = max(1, min(self.workers, total))
        logger.info(f"🚀 开始执行 {total} 个积分任务，并发数: {actual_workers}")

        results: List[R] = []
        if actual_workers == 1:
            for task in tasks:
                results.append(worker(task))
                self._progress(len(results), total)
            return results

        chunksize = self.chunksize or max(1, total // (actual_workers * 8))
        with concurrent.futures.ProcessPoolExecutor(max_workers=actual_workers) as executor:
            # map 保证结果顺序与 tasks 一致
            for result in executor.map(worker, tasks, chunksize=chunksize):
                results.append(result)
                self._progress(len(results), total)
        return results
