"""
診断スイープモジュール。

レベルごとの分散・バイアスの減衰、許容誤差に対する計算コスト、放出高さ別のコスト、
平滑化次数の比較などを表（SweepTable）として出力します。
"""

import dataclasses
from collections.abc import Sequence
from enum import Enum

import numpy as np

from src.entities.qoi import QoIKind, QoISpec
from src.entities.run_config import IntegratorKind, MethodKind, RunConfig
from src.entities.statistics import LevelStats, RunResult, SweepTable
from src.usecases.estimation.executor import LevelSampler
from src.usecases.estimation.mlmc import run_mlmc
from src.usecases.estimation.stmc import run_stmc
from src.usecases.simulation.sampler import SimulationProblem
from src.utils.decorators import validate_args
from src.utils.logger import get_logger
from src.utils.types import FloatArray

logger = get_logger(__name__)

VARIANCE_DECAY_HEADER = ("level", "h", "var_Y", "mean_Y", "n_samples", "cost_steps")
BIAS_DECAY_HEADER = ("level", "h", "abs_mean_Y", "std_error", "n_samples", "cost_steps")
COUPLING_COMPARISON_HEADER = (
    "level",
    "h",
    "var_Y",
    "var_Y_no_signs",
    "abs_mean_Y",
    "abs_mean_Y_no_signs",
    "n_samples",
)
COST_SWEEP_HEADER = (
    "eps",
    "method",
    "integrator",
    "cost_steps",
    "wall_seconds",
    "estimate",
    "stat_error",
)
RELEASE_SWEEP_HEADER = (
    "release_height",
    "method",
    "integrator",
    "cost_steps",
    "wall_seconds",
    "estimate_norm",
    "stat_error",
)
SMOOTHING_STUDY_HEADER = (
    "r",
    "smoothed_estimate",
    "smoothed_error",
    "raw_estimate",
    "raw_error",
    "difference",
)
PDF_HEADER = ("bin_lo", "bin_hi", "concentration", "std_error")

DEFAULT_RELEASE_HEIGHTS = (0.05, 0.1, 0.2)
DEFAULT_SMOOTHING_ORDERS = (2, 4, 6, 8)


class SweepKind(str, Enum):
    """診断スイープの種類。"""

    VARIANCE_DECAY = "variance_decay"
    BIAS_DECAY = "bias_decay"
    COUPLING_COMPARISON = "coupling_comparison"
    COST_VS_EPS = "cost_vs_eps"


def _non_empty(values: Sequence[object]) -> bool:
    return len(values) > 0


def _estimate_value(result: RunResult) -> float:
    """スカラーなら推定値、ベクトルならそのユークリッドノルム。"""
    if result.is_scalar:
        return result.scalar_estimate
    return float(np.linalg.norm(result.estimate))


def _new_sampler(config: RunConfig, workers: int) -> LevelSampler:
    return LevelSampler(
        SimulationProblem.from_config(config),
        chunk_size=config.chunk_size,
        workers=workers,
        max_failure_fraction=config.max_failure_fraction,
    )


def _run_estimator(config: RunConfig, workers: int) -> RunResult:
    if config.method == MethodKind.STMC:
        return run_stmc(config, workers=workers)
    return run_mlmc(config, workers=workers)


def log_log_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """log y を log x に最小二乗で当てはめた傾き（正の値の組のみ使用）。"""
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    mask = (xs > 0) & (ys > 0)
    if int(mask.sum()) < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(xs[mask]), np.log(ys[mask]), 1)
    return float(slope)


def level_sweep_stats(
    config: RunConfig, max_level: int, n_samples: int, workers: int = 1
) -> list[LevelStats]:
    """レベル 0..max_level の Y_ℓ をそれぞれ n_samples 本計算。"""
    with _new_sampler(config, workers) as sampler:
        return [sampler.extend(None, level, n_samples) for level in range(max_level + 1)]


def variance_decay_table(stats: Sequence[LevelStats]) -> SweepTable:
    """分散減衰の表（ベクトル評価量では最大分散の成分）。"""
    rows = []
    for s in stats:
        component = s.dominant_component()
        rows.append(
            (s.level, s.h, s.max_variance, float(s.mean[component]), s.n_samples, s.cost_steps)
        )
    table = SweepTable("variance_decay", VARIANCE_DECAY_HEADER, tuple(rows))
    fine = [s for s in stats if s.level >= 1]
    logger.info(
        "分散の減衰率",
        slope=log_log_slope([s.h for s in fine], [s.max_variance for s in fine]),
    )
    return table


def bias_decay_table(stats: Sequence[LevelStats]) -> SweepTable:
    """バイアス減衰の表（|E[Y_ℓ]| が最大の成分）。"""
    rows = []
    for s in stats:
        mean, error = s.component(int(np.argmax(np.abs(s.mean))))
        rows.append((s.level, s.h, abs(mean), error, s.n_samples, s.cost_steps))
    return SweepTable("bias_decay", BIAS_DECAY_HEADER, tuple(rows))


def coupling_comparison_table(
    signed: Sequence[LevelStats], unsigned: Sequence[LevelStats]
) -> SweepTable:
    """反射符号ありの結合となしの結合を、同じ乱数列のレベルごとに並べた表。"""
    rows = []
    for s, u in zip(signed, unsigned, strict=True):
        rows.append(
            (
                s.level,
                s.h,
                s.max_variance,
                u.max_variance,
                float(np.max(np.abs(s.mean))),
                float(np.max(np.abs(u.mean))),
                s.n_samples,
            )
        )
    fine = [(s, u) for s, u in zip(signed, unsigned, strict=True) if s.level >= 1]
    h = [s.h for s, _ in fine]
    logger.info(
        "反射符号の有無による分散の減衰率",
        slope=log_log_slope(h, [s.max_variance for s, _ in fine]),
        slope_no_signs=log_log_slope(h, [u.max_variance for _, u in fine]),
    )
    return SweepTable("coupling_comparison", COUPLING_COMPARISON_HEADER, tuple(rows))


@validate_args(methods=_non_empty)
def cost_sweep(
    config: RunConfig,
    eps_values: Sequence[float],
    methods: Sequence[MethodKind] = (MethodKind.MLMC, MethodKind.STMC),
    workers: int = 1,
    record_timings: bool = True,
) -> SweepTable:
    """許容誤差ごとに推定を実行し、計算コストを記録（eps_values が空ならヘッダーのみの表）。"""
    rows = []
    for eps in eps_values:
        for method in methods:
            result = _run_estimator(config.replace(eps=eps, method=method), workers)
            rows.append(
                (
                    eps,
                    method.value,
                    config.integrator.value,
                    result.total_cost_steps,
                    result.wall_time if record_timings else 0.0,
                    _estimate_value(result),
                    result.statistical_error,
                )
            )
            logger.info(
                "コストを計測しました",
                eps=eps,
                method=method.value,
                cost_steps=result.total_cost_steps,
            )
    return SweepTable("cost_sweep", COST_SWEEP_HEADER, tuple(rows))


def diagnostic_sweep(
    kind: SweepKind,
    config: RunConfig,
    *,
    workers: int = 1,
    max_level: int | None = None,
    n_samples: int | None = None,
    eps_values: Sequence[float] = (),
    methods: Sequence[MethodKind] = (MethodKind.MLMC, MethodKind.STMC),
    record_timings: bool = True,
) -> SweepTable:
    """診断スイープを実行。

    Args:
        kind: スイープの種類
        config: 実行設定（coupling_comparison は coupling_signs の値によらず両方を計算する）
        workers: ワーカープロセス数
        max_level: レベル系スイープの最大レベル（省略時は pilot_max_level）
        n_samples: レベルごとの標本数（省略時は n_samples、未設定なら pilot_samples）
        eps_values: cost_vs_eps の許容誤差の列
        methods: cost_vs_eps で比較する推定法
        record_timings: False なら経過時間を0として記録

    Returns:
        結果の表
    """
    if kind == SweepKind.COST_VS_EPS:
        return cost_sweep(config, eps_values, methods, workers, record_timings)

    top = config.pilot_max_level if max_level is None else max_level
    count = n_samples or config.n_samples or config.pilot_samples
    if kind == SweepKind.COUPLING_COMPARISON:
        signed = level_sweep_stats(config.replace(coupling_signs=True), top, count, workers)
        unsigned = level_sweep_stats(config.replace(coupling_signs=False), top, count, workers)
        return coupling_comparison_table(signed, unsigned)

    stats = level_sweep_stats(config, top, count, workers)
    if kind == SweepKind.VARIANCE_DECAY:
        return variance_decay_table(stats)
    return bias_decay_table(stats)


@validate_args(heights=_non_empty, methods=_non_empty, integrators=_non_empty)
def release_sweep(
    config: RunConfig,
    heights: Sequence[float] = DEFAULT_RELEASE_HEIGHTS,
    methods: Sequence[MethodKind] = (MethodKind.MLMC, MethodKind.STMC),
    integrators: Sequence[IntegratorKind] = (IntegratorKind.SE,),
    workers: int = 1,
    record_timings: bool = True,
) -> SweepTable:
    """放出高さ・推定法・積分法の組み合わせごとに固定 ε で推定し、コストを記録。"""
    rows = []
    for height in heights:
        for integrator in integrators:
            for method in methods:
                run_config = config.replace(x0=height, integrator=integrator, method=method)
                result = _run_estimator(run_config, workers)
                rows.append(
                    (
                        height,
                        method.value,
                        integrator.value,
                        result.total_cost_steps,
                        result.wall_time if record_timings else 0.0,
                        _estimate_value(result),
                        result.statistical_error,
                    )
                )
                logger.info(
                    "放出高さ別の推定が完了しました",
                    release_height=height,
                    method=method.value,
                    integrator=integrator.value,
                    cost_steps=result.total_cost_steps,
                )
    return SweepTable("release_sweep", RELEASE_SWEEP_HEADER, tuple(rows))


def _single_level_mean(
    config: RunConfig, spec: QoISpec, steps: int, count: int, workers: int
) -> tuple[float, float]:
    """同じ乱数列（同じ seed・サンプル番号）で評価量の標本平均と標準誤差を計算。"""
    problem = dataclasses.replace(SimulationProblem.from_config(config), qoi=spec)
    with LevelSampler(
        problem,
        chunk_size=config.chunk_size,
        workers=workers,
        max_failure_fraction=config.max_failure_fraction,
    ) as sampler:
        stats = sampler.extend(None, 0, count, steps)
    return stats.component(0)


@validate_args(r_values=_non_empty)
def smoothing_study(
    config: RunConfig,
    r_values: Sequence[int] = DEFAULT_SMOOTHING_ORDERS,
    workers: int = 1,
) -> SweepTable:
    """平滑化指示関数と元の指示関数の期待値を共通乱数で比較。

    区間 [a, b] と幅 δ は config.qoi の値を使います。
    """
    steps = config.finest_steps or config.coarse_steps
    count = config.n_samples or config.pilot_samples
    base = config.qoi
    raw_spec = QoISpec(kind=QoIKind.RAW_INDICATOR, a=base.a, b=base.b, delta=base.delta)
    raw_mean, raw_error = _single_level_mean(config, raw_spec, steps, count, workers)

    rows = []
    for r in r_values:
        spec = QoISpec(kind=QoIKind.SMOOTHED_INDICATOR, a=base.a, b=base.b, r=r, delta=base.delta)
        mean, error = _single_level_mean(config, spec, steps, count, workers)
        rows.append((r, mean, error, raw_mean, raw_error, mean - raw_mean))
        logger.info("平滑化の影響を計算しました", r=r, difference=mean - raw_mean)
    return SweepTable("smoothing_study", SMOOTHING_STUDY_HEADER, tuple(rows))


def pdf_table(result: RunResult, bin_edges: Sequence[float]) -> SweepTable:
    """ビン分割濃度場の推定結果から濃度分布の表を作成。"""
    edges = np.asarray(bin_edges, dtype=np.float64)
    estimate: FloatArray = np.atleast_1d(np.asarray(result.estimate, dtype=np.float64))
    errors: FloatArray = np.atleast_1d(np.asarray(result.std_errors, dtype=np.float64))
    rows = tuple(
        (float(edges[i]), float(edges[i + 1]), float(estimate[i]), float(errors[i]))
        for i in range(len(edges) - 1)
    )
    return SweepTable("pdf", PDF_HEADER, rows)
