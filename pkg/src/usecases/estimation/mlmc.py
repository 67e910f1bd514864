"""
マルチレベルモンテカルロ（MLMC）推定モジュール。

パイロット計算によるバイアス定数 (α, c₁) の推定、レベル数 L の選択、
標本数の最適配分、および MLMC 推定の実行を提供します。
"""

import math
import time
from collections.abc import Sequence
from contextlib import AbstractContextManager, nullcontext
from dataclasses import dataclass

import numpy as np

from src.entities.exceptions import (
    BiasEstimationError,
    InvariantViolationError,
    LevelCapExceededError,
)
from src.entities.run_config import RunConfig
from src.entities.statistics import LevelStats, RunResult
from src.usecases.base import SyncUseCase
from src.usecases.estimation.executor import LevelSampler
from src.usecases.simulation.sampler import SimulationProblem
from src.utils.decorators import timer
from src.utils.logger import get_logger

logger = get_logger(__name__)

# |E[Y_ℓ]| がこの倍率×標準誤差を下回るレベルは0と区別できないとみなす
SIGNIFICANCE_FACTOR = 2.0
MIN_FIT_LEVELS = 3


@dataclass(frozen=True)
class BiasFit:
    """バイアス定数の推定結果 |E[P_ℓ − P]| ≈ c₁ h_ℓ^α。"""

    alpha: float
    c1: float

    def bias(self, h: float) -> float:
        """刻み幅 h でのバイアス推定値。"""
        return self.c1 * h**self.alpha


def estimate_bias_constants(stats: Sequence[LevelStats]) -> BiasFit:
    """パイロット統計量から (α, c₁) を推定。

    ℓ >= 1 の log|E[Y_ℓ]| を log h_ℓ に最小二乗で当てはめ、傾き α と切片 K を得ます。
    |E[Y_ℓ]| = c₁(2^α − 1)h_ℓ^α の関係から c₁ = K/(2^α − 1) です。
    ベクトル評価量では |E[Y_ℓ]| が最大の成分を使用します。

    Raises:
        BiasEstimationError: 使用できるレベルが3未満、いずれかの E[Y_ℓ] が0と区別できない、
            または α <= 0 の場合
    """
    fine_levels = [s for s in stats if s.level >= 1]
    if len(fine_levels) < MIN_FIT_LEVELS:
        raise BiasEstimationError(
            f"当てはめには ℓ>=1 のレベルが{MIN_FIT_LEVELS}つ以上必要です",
            [s.level for s in fine_levels],
        )

    magnitudes = []
    insignificant = []
    for s in fine_levels:
        component = int(np.argmax(np.abs(s.mean)))
        magnitude = abs(float(s.mean[component]))
        error = float(s.std_error[component])
        if magnitude == 0.0 or magnitude < SIGNIFICANCE_FACTOR * error:
            insignificant.append(s.level)
        magnitudes.append(magnitude)
    if insignificant:
        raise BiasEstimationError("E[Y_ℓ] が統計的に0と区別できません", insignificant)

    log_h = np.log([s.h for s in fine_levels])
    slope, intercept = np.polyfit(log_h, np.log(magnitudes), 1)
    alpha = float(slope)
    if not alpha > 0.0:
        raise BiasEstimationError(f"バイアスの減衰率が正ではありません: alpha={alpha:.3g}")
    c1 = math.exp(float(intercept)) / (2.0**alpha - 1.0)
    return BiasFit(alpha=alpha, c1=c1)


def choose_levels(
    alpha: float,
    c1: float,
    eps: float,
    coarse_steps: int,
    final_time: float,
    max_level: int = 16,
) -> int:
    """c₁ h_L^α <= ε/√2 を満たす最小の L を選択。

    Raises:
        LevelCapExceededError: L が max_level を超える場合
    """
    if not (alpha > 0 and c1 > 0 and eps > 0):
        raise InvariantViolationError("alpha > 0, c1 > 0, eps > 0", (alpha, c1, eps))
    target = eps / math.sqrt(2.0)
    for level in range(max_level + 1):
        h = final_time / (coarse_steps * 2**level)
        if c1 * h**alpha <= target:
            return level
    h_required = (target / c1) ** (1.0 / alpha)
    required = math.ceil(math.log2(final_time / (coarse_steps * h_required)))
    raise LevelCapExceededError(max(required, max_level + 1), max_level)


def allocate_samples(
    variances: Sequence[float], step_sizes: Sequence[float], eps: float
) -> list[int]:
    """Σ N_ℓ/h_ℓ を Σ V_ℓ/N_ℓ <= ε²/2 の下で最小化する標本数。

    N_ℓ = ⌈2ε⁻²·√(V_ℓ h_ℓ)·Σ_k √(V_k/h_k)⌉（最低1）。
    """
    v = np.asarray(variances, dtype=np.float64)
    h = np.asarray(step_sizes, dtype=np.float64)
    if np.any(v < 0.0) or not eps > 0:
        raise InvariantViolationError("V_l >= 0, eps > 0", (list(v), eps))
    total = float(np.sum(np.sqrt(v / h)))
    targets = 2.0 / eps**2 * np.sqrt(v * h) * total
    return [max(1, math.ceil(float(n))) for n in targets]


def variance_sum(stats: Sequence[LevelStats]) -> float:
    """Σ_ℓ V_ℓ/N_ℓ（ベクトル評価量では成分の最大分散を使用）。"""
    return sum(s.max_variance / s.n_samples for s in stats if s.n_samples > 0)


def run_pilot(config: RunConfig, sampler: LevelSampler) -> tuple[list[LevelStats], BiasFit]:
    """パイロット計算（レベル 0..pilot_max_level）とバイアス定数の推定。

    E[Y_ℓ] が0と区別できないレベルは標本数を倍にして再推定します。

    Raises:
        BiasEstimationError: max_pilot_refinements 回の再推定後も推定できない場合
    """
    stats = [
        sampler.extend(None, level, config.pilot_samples)
        for level in range(config.pilot_max_level + 1)
    ]
    for attempt in range(config.max_pilot_refinements + 1):
        try:
            fit = estimate_bias_constants(stats)
            break
        except BiasEstimationError as e:
            if attempt == config.max_pilot_refinements or not e.levels:
                raise
            logger.warning("パイロット標本数を増やして再推定します", levels=list(e.levels))
            for level in e.levels:
                stats[level] = sampler.extend(stats[level], level, stats[level].n_samples)

    for s in stats:
        logger.info(
            "パイロット統計量",
            level=s.level,
            n=s.n_samples,
            mean=float(s.mean[s.dominant_component()]),
            variance=s.max_variance,
        )
    logger.info("バイアス定数を推定しました", alpha=fit.alpha, c1=fit.c1)
    return stats, fit


class MLMCEstimator(SyncUseCase[RunConfig, RunResult]):
    """MLMC推定ユースケース。"""

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
        """パイロット → (α, c₁) → L → 標本数配分の反復で推定。"""
        with self._sampler_for(input_data) as sampler:
            return self._estimate(input_data, sampler)

    def _estimate(self, config: RunConfig, sampler: LevelSampler) -> RunResult:
        warnings: list[str] = []

        started = time.perf_counter()
        pilot, fit = run_pilot(config, sampler)
        pilot_wall = time.perf_counter() - started
        pilot_cost = sum(s.cost_steps for s in pilot)

        var_y0, var_y1 = pilot[0].max_variance, pilot[1].max_variance
        if var_y0 > 0.0 and var_y1 >= 0.5 * var_y0:
            message = "Var[Y1] >= Var[Y0]/2: M_0 を大きくすることを検討してください"
            logger.warning(message, var_y0=var_y0, var_y1=var_y1)
            warnings.append(message)

        finest = choose_levels(
            fit.alpha, fit.c1, config.eps, config.coarse_steps, config.final_time, config.max_level
        )
        logger.info("レベル数を選択しました", L=finest, h_L=config.step_size(finest))

        reused = min(finest, config.pilot_max_level)
        levels: list[LevelStats] = [pilot[level] for level in range(reused + 1)]
        for level in range(config.pilot_max_level + 1, finest + 1):
            levels.append(sampler.extend(None, level, config.extension_samples))

        target = config.eps**2 / 2.0
        iteration = 0
        while variance_sum(levels) > target:
            iteration += 1
            counts = allocate_samples(
                [s.max_variance for s in levels], [s.h for s in levels], config.eps
            )
            logger.info("標本数を配分しました", iteration=iteration, counts=counts)
            added = False
            for index, (stats, count) in enumerate(zip(levels, counts, strict=True)):
                if count > stats.n_samples:
                    levels[index] = sampler.extend(stats, stats.level, count - stats.n_samples)
                    added = True
            if not added:
                break

        wall = time.perf_counter() - started
        estimate = np.sum([s.mean for s in levels], axis=0)
        std_errors = np.sqrt(np.sum([s.variance_of_mean for s in levels], axis=0))
        discarded_cost = sum(s.cost_steps for s in pilot[finest + 1 :])

        return RunResult(
            method="mlmc",
            integrator=config.integrator.value,
            estimate=estimate,
            std_errors=std_errors,
            statistical_error=math.sqrt(variance_sum(levels)),
            levels=levels,
            seed=config.seed,
            total_cost_steps=sum(s.cost_steps for s in levels) + discarded_cost,
            bias_estimate=fit.bias(config.step_size(finest)),
            alpha=fit.alpha,
            c1=fit.c1,
            finest_level=finest,
            wall_time=wall,
            pilot_cost_steps=pilot_cost,
            pilot_wall_time=pilot_wall,
            config_echo=config.to_dict(),
            warnings=warnings,
        )


@timer
def run_mlmc(config: RunConfig, workers: int = 1, sampler: LevelSampler | None = None) -> RunResult:
    """MLMC推定を実行。"""
    return MLMCEstimator(workers=workers, sampler=sampler).execute(config)
