"""
標準モンテカルロ（StMC）推定モジュール。

最細刻み h_L = T/M_L の経路を N 本計算し、評価量の標本平均を推定値とします。
"""

import math
import time
from contextlib import AbstractContextManager, nullcontext

import numpy as np

from src.entities.exceptions import InvariantViolationError
from src.entities.run_config import RunConfig
from src.entities.statistics import LevelStats, RunResult
from src.usecases.base import SyncUseCase
from src.usecases.estimation.executor import LevelSampler
from src.usecases.estimation.mlmc import BiasFit, choose_levels, run_pilot
from src.usecases.simulation.sampler import SimulationProblem
from src.utils.decorators import timer
from src.utils.logger import get_logger

logger = get_logger(__name__)


def required_samples(variance: float, eps: float) -> int:
    """Var/N <= ε²/2 を満たす標本数 max(1, ⌈2V/ε²⌉)。"""
    if variance < 0.0 or not eps > 0:
        raise InvariantViolationError("V >= 0, eps > 0", (variance, eps))
    return max(1, math.ceil(2.0 * variance / eps**2))


class StMCEstimator(SyncUseCase[RunConfig, RunResult]):
    """StMC推定ユースケース。

    finest_steps 未指定の場合は MLMC と同じパイロット計算で (α, c₁) を推定し、
    同じ ε での MLMC の最細レベルに合わせて M_L を決めます。
    n_samples 未指定の場合は pilot_samples 本で分散を見積もり、条件を満たすまで追加します。
    """

    def __init__(self, workers: int = 1, sampler: LevelSampler | None = None) -> None:
        """初期化。"""
        self._workers = workers
        self._sampler = sampler

    def _sampler_for(self, config: RunConfig) -> AbstractContextManager[LevelSampler]:
        # 外部から渡されたサンプラーは呼び出し側が閉じる
        if self._sampler is not None:
            return nullcontext(self._sampler)
        return LevelSampler(
            SimulationProblem.from_config(config),
            chunk_size=config.chunk_size,
            workers=self._workers,
            max_failure_fraction=config.max_failure_fraction,
        )

    def execute(self, input_data: RunConfig) -> RunResult:
        """StMC推定を実行。"""
        with self._sampler_for(input_data) as sampler:
            return self._estimate(input_data, sampler)

    def _estimate(self, config: RunConfig, sampler: LevelSampler) -> RunResult:

        started = time.perf_counter()
        fit: BiasFit | None = None
        pilot_cost = 0
        if config.finest_steps is not None:
            steps = config.finest_steps
            level = 0
        else:
            pilot, fit = run_pilot(config, sampler)
            pilot_cost = sum(s.cost_steps for s in pilot)
            level = choose_levels(
                fit.alpha,
                fit.c1,
                config.eps,
                config.coarse_steps,
                config.final_time,
                config.max_level,
            )
            steps = config.steps(level)
        pilot_wall = time.perf_counter() - started
        h = config.final_time / steps
        logger.info("StMCの刻み幅を決定しました", steps=steps, h=h)

        stats = self._sample(config, sampler, level, steps)
        wall = time.perf_counter() - started

        return RunResult(
            method="stmc",
            integrator=config.integrator.value,
            estimate=stats.mean,
            std_errors=stats.std_error,
            statistical_error=math.sqrt(stats.max_variance / stats.n_samples),
            levels=[stats],
            seed=config.seed,
            total_cost_steps=stats.cost_steps,
            bias_estimate=fit.bias(h) if fit is not None else None,
            alpha=fit.alpha if fit is not None else None,
            c1=fit.c1 if fit is not None else None,
            finest_level=level,
            wall_time=wall,
            pilot_cost_steps=pilot_cost,
            pilot_wall_time=pilot_wall,
            config_echo=config.to_dict(),
        )

    def _sample(
        self, config: RunConfig, sampler: LevelSampler, level: int, steps: int
    ) -> LevelStats:
        if config.n_samples is not None:
            return sampler.extend(None, level, config.n_samples, steps)

        stats = sampler.extend(None, level, config.pilot_samples, steps)
        while True:
            needed = required_samples(stats.max_variance, config.eps)
            logger.info("StMCの標本数を見積もりました", current=stats.n_samples, required=needed)
            if needed <= stats.n_samples:
                return stats
            stats = sampler.extend(stats, level, needed - stats.n_samples, steps)


@timer
def run_stmc(config: RunConfig, workers: int = 1, sampler: LevelSampler | None = None) -> RunResult:
    """StMC推定を実行。"""
    result = StMCEstimator(workers=workers, sampler=sampler).execute(config)
    logger.info(
        "StMC推定が完了しました",
        estimate=np.asarray(result.estimate).tolist(),
        n=result.levels[0].n_samples,
        cost_steps=result.total_cost_steps,
    )
    return result
