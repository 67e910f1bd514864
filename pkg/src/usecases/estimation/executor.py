"""
サンプル実行モジュール。

サンプル番号の範囲を固定サイズのチャンクに分割して計算し、チャンク順に結合します。
チャンク分割はワーカー数に依存しないため、結果はワーカー数によらずビット単位で一致します。
"""

import concurrent.futures as cf
from collections.abc import Iterable
try:
    from typing import Self
except ImportError:  # Python < 3.11
    from typing_extensions import Self

from src.entities.exceptions import SampleFailureError
from src.entities.statistics import LevelStats
from src.usecases.simulation.sampler import ChunkTask, SimulationProblem, chunk_tasks, sample_chunk
from src.utils.logger import get_logger

logger = get_logger(__name__)


def _run_task(args: tuple[SimulationProblem, ChunkTask]) -> LevelStats:
    problem, task = args
    return sample_chunk(problem, task)


class LevelSampler:
    """レベルごとのサンプル計算器。

    各レベルで次に使うサンプル番号を覚えており、追加計算では常に新しい番号を使います。
    workers > 1 の場合のプロセスプールは最初の並列計算で生成し、close() まで使い回します。
    with 文で使うと、ブロックを抜けるときにプールを閉じます。
    """

    def __init__(
        self,
        problem: SimulationProblem,
        chunk_size: int = 2048,
        workers: int = 1,
        max_failure_fraction: float = 1e-4,
    ) -> None:
        """初期化。"""
        self.problem = problem
        self.chunk_size = chunk_size
        self.workers = max(1, workers)
        self.max_failure_fraction = max_failure_fraction
        self._next_index: dict[tuple[int, int | None], int] = {}
        self._executor: cf.ProcessPoolExecutor | None = None

    def __enter__(self) -> Self:
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()

    def close(self) -> None:
        """プロセスプールを閉じる。"""
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    def _map(self, tasks: list[ChunkTask]) -> Iterable[LevelStats]:
        payload = [(self.problem, task) for task in tasks]
        if self.workers == 1 or len(tasks) == 1:
            return map(_run_task, payload)
        if self._executor is None:
            self._executor = cf.ProcessPoolExecutor(max_workers=self.workers)
            logger.debug("プロセスプールを生成しました", workers=self.workers)
        # map は入力順に結果を返す
        return list(self._executor.map(_run_task, payload))

    def sample(self, level: int, count: int, steps: int | None = None) -> LevelStats:
        """count 個の新しいサンプルを計算。

        Args:
            level: MLMCのレベル（steps 指定時は記録用）
            count: サンプル数
            steps: 単一レベル経路のステップ数（StMC）

        Returns:
            今回計算した分の統計量
        """
        key = (level, steps)
        start = self._next_index.get(key, 0)
        self._next_index[key] = start + count
        tasks = chunk_tasks(level, start, count, self.chunk_size, steps)

        merged: LevelStats | None = None
        for stats in self._map(tasks):
            merged = stats if merged is None else merged.merge(stats)
        if merged is None:
            h = self.problem.final_time / steps if steps else self.problem.step_size(level)
            return LevelStats.empty(level, h, self.problem.qoi.dimension)

        if merged.n_failed:
            logger.warning(
                "不安定なサンプルを除外しました",
                level=level,
                failed=merged.n_failed,
                attempted=merged.n_attempted,
            )
        return merged

    def extend(
        self, stats: LevelStats | None, level: int, count: int, steps: int | None = None
    ) -> LevelStats:
        """既存の統計量に count 個のサンプルを追加し、失敗率を検査。

        Raises:
            SampleFailureError: 累積の失敗率が閾値を超えた場合
        """
        added = self.sample(level, count, steps)
        combined = added if stats is None else stats.merge(added)
        self.check_failures(combined)
        return combined

    def check_failures(self, stats: LevelStats) -> None:
        """失敗率の検査。"""
        if stats.n_attempted == 0:
            return
        if stats.n_failed / stats.n_attempted > self.max_failure_fraction:
            raise SampleFailureError(stats.n_failed, stats.n_attempted, self.max_failure_fraction)
