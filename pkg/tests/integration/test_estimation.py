"""
推定全体の結合テスト。

実際のサンプリングで分散減衰・並列実行の再現性・推定値を検証します。
performance マーカーのテストは既定では実行されません（-m performance で実行）。
"""

import math

import pytest

from src.entities.model import ModelParams
from src.entities.qoi import QoIKind, QoISpec
from src.entities.run_config import IntegratorKind, MethodKind, RunConfig
from src.usecases.estimation.mlmc import (
    BiasFit,
    allocate_samples,
    estimate_bias_constants,
    run_mlmc,
)
from src.usecases.estimation.stmc import run_stmc
from src.usecases.estimation.sweeps import (
    SweepKind,
    cost_sweep,
    diagnostic_sweep,
    level_sweep_stats,
    log_log_slope,
    smoothing_study,
)

MEAN_POSITION = QoISpec(kind=QoIKind.MEAN_POSITION)
RAW_INDICATOR = QoISpec(kind=QoIKind.RAW_INDICATOR)
REFERENCE_MEAN_POSITION = 0.1301
# SE・平均位置・ε = 6.9e-5・M0 = 40 で公表されている標本数 N_0, N_1
REFERENCE_SAMPLES = (6_787_563, 843_711)
BIAS_FIT_SAMPLES = 400_000


def _variance_column(config: RunConfig, max_level: int) -> list[float]:
    table = diagnostic_sweep(SweepKind.VARIANCE_DECAY, config, max_level=max_level)
    return [row[2] for row in table.rows]


def _variance_slope(config: RunConfig, max_level: int) -> float:
    table = diagnostic_sweep(SweepKind.VARIANCE_DECAY, config, max_level=max_level)
    fine = [row for row in table.rows if row[0] >= 1]
    return log_log_slope([row[1] for row in fine], [row[2] for row in fine])


def _bias_fit(integrator: IntegratorKind, adaptive: bool = False) -> BiasFit:
    config = RunConfig(integrator=integrator, adaptive=adaptive, qoi=MEAN_POSITION)
    stats = level_sweep_stats(config, max_level=3, n_samples=BIAS_FIT_SAMPLES, workers=4)
    return estimate_bias_constants(stats)


@pytest.fixture(scope="module")
def bias_fits() -> dict[str, BiasFit]:
    """積分法ごとのバイアス定数（レベル 0..3）。"""
    return {
        "se": _bias_fit(IntegratorKind.SE),
        "gl": _bias_fit(IntegratorKind.GL),
        "baoab": _bias_fit(IntegratorKind.BAOAB),
        "gl_adaptive": _bias_fit(IntegratorKind.GL, adaptive=True),
    }


@pytest.mark.integration
class TestVarianceDecay:
    """結合差分の分散減衰のテスト。"""

    @pytest.mark.parametrize("integrator", [IntegratorKind.SE, IntegratorKind.GL])
    def test_variance_decreases_with_level(self, integrator: IntegratorKind) -> None:
        """レベルが上がるとVar[Y_ℓ]が減少するテスト。"""
        config = RunConfig(integrator=integrator, qoi=MEAN_POSITION, n_samples=1000)
        variances = _variance_column(config, max_level=3)
        assert variances[3] < variances[1] / 2

    def test_adaptive_variance_decreases(self) -> None:
        """適応刻みでもVar[Y_ℓ]が減少するテスト。"""
        config = RunConfig(
            integrator=IntegratorKind.GL, adaptive=True, qoi=MEAN_POSITION, n_samples=500
        )
        variances = _variance_column(config, max_level=3)
        assert variances[3] < variances[1]


@pytest.mark.integration
class TestTelescoping:
    """レベル差分の和と最細レベルの単一推定の一致のテスト。"""

    def test_level_means_sum_to_finest_estimate(self) -> None:
        """Σ E[Y_ℓ] と最細刻みの StMC 推定値が標準誤差の範囲で一致するテスト。"""
        config = RunConfig(integrator=IntegratorKind.GL, qoi=MEAN_POSITION)
        stats = level_sweep_stats(config, max_level=2, n_samples=4000)
        telescoped = sum(float(s.mean[0]) for s in stats)
        telescoped_var = sum(float(s.variance_of_mean[0]) for s in stats)

        direct = run_stmc(config.replace(method=MethodKind.STMC, finest_steps=160, n_samples=4000))
        combined_error = math.sqrt(telescoped_var + direct.statistical_error**2)
        assert abs(telescoped - direct.scalar_estimate) <= 4.0 * combined_error


@pytest.mark.integration
class TestReproducibility:
    """並列実行の再現性のテスト。"""

    def test_workers_do_not_change_result(self) -> None:
        """ワーカー数によらず推定値が一致するテスト。"""
        config = RunConfig(
            method=MethodKind.STMC,
            qoi=MEAN_POSITION,
            finest_steps=80,
            n_samples=600,
            chunk_size=128,
        )
        serial = run_stmc(config, workers=1)
        parallel = run_stmc(config, workers=2)
        assert serial.scalar_estimate == parallel.scalar_estimate
        assert serial.statistical_error == parallel.statistical_error


@pytest.mark.integration
class TestMeanPosition:
    """平均位置の推定値のテスト。"""

    def test_stmc_mean_position(self) -> None:
        """StMCで E[X_T] が参照値に近いテスト。"""
        config = RunConfig(
            method=MethodKind.STMC,
            integrator=IntegratorKind.GL,
            qoi=MEAN_POSITION,
            finest_steps=160,
            n_samples=4000,
        )
        result = run_stmc(config)
        assert result.scalar_estimate == pytest.approx(REFERENCE_MEAN_POSITION, abs=0.015)
        assert result.total_failed == 0


@pytest.mark.performance
class TestAcceptance:
    """机上規模の受け入れ実験。"""

    def test_mlmc_mean_position(self) -> None:
        """ε = 1e-3 のMLMCで E[X_T] = 0.1301 ± 1.5e-3 となるテスト。"""
        config = RunConfig(qoi=MEAN_POSITION, eps=1e-3)
        result = run_mlmc(config, workers=4)
        assert result.scalar_estimate == pytest.approx(REFERENCE_MEAN_POSITION, abs=1.5e-3)
        assert result.statistical_error <= 1e-3 / 2**0.5 * 1.05

    @pytest.mark.parametrize("integrator", list(IntegratorKind))
    def test_variance_decay_is_quadratic(self, integrator: IntegratorKind) -> None:
        """平均位置の分散減衰の傾きが 2 ± 0.3 となるテスト。"""
        config = RunConfig(integrator=integrator, qoi=MEAN_POSITION, n_samples=20000)
        assert _variance_slope(config, max_level=5) == pytest.approx(2.0, abs=0.3)

    def test_raw_indicator_variance_decay_is_linear(self) -> None:
        """平滑化しない指示関数では分散減衰の傾きが 1 ± 0.3 となるテスト。"""
        config = RunConfig(integrator=IntegratorKind.GL, qoi=RAW_INDICATOR, n_samples=20000)
        assert _variance_slope(config, max_level=5) == pytest.approx(1.0, abs=0.3)

    def test_adaptive_se_variance_decay(self) -> None:
        """適応刻みSEでも分散減衰の傾きが 2 ± 0.3 となるテスト。"""
        config = RunConfig(
            integrator=IntegratorKind.SE, adaptive=True, qoi=MEAN_POSITION, n_samples=20000
        )
        assert _variance_slope(config, max_level=5) == pytest.approx(2.0, abs=0.3)

    @pytest.mark.parametrize("name", ["se", "gl", "baoab"])
    def test_weak_order_one(self, bias_fits: dict[str, BiasFit], name: str) -> None:
        """バイアスの減衰率 α が 1 ± 0.3 となるテスト。"""
        assert bias_fits[name].alpha == pytest.approx(1.0, abs=0.3)

    def test_bias_ratios(self, bias_fits: dict[str, BiasFit]) -> None:
        """同じ刻み幅でのバイアス比 SE/GL と SE/BAOAB のテスト。"""
        h = RunConfig().step_size(2)
        se = bias_fits["se"].bias(h)
        assert 6.0 <= se / bias_fits["gl"].bias(h) <= 26.0
        assert 25.0 <= se / bias_fits["baoab"].bias(h) <= 100.0

    def test_adaptive_gl_bias_is_larger(self, bias_fits: dict[str, BiasFit]) -> None:
        """適応刻みGLのバイアスが一様刻みGLの 1.5〜6 倍となるテスト。"""
        h = RunConfig().step_size(2)
        ratio = bias_fits["gl_adaptive"].bias(h) / bias_fits["gl"].bias(h)
        assert 1.5 <= ratio <= 6.0

    def test_coupling_signs_restore_variance_decay(self) -> None:
        """反射符号を結合に入れないと分散減衰が劣化するテスト。"""
        config = RunConfig(integrator=IntegratorKind.SE, qoi=MEAN_POSITION, n_samples=20000)
        table = diagnostic_sweep(SweepKind.COUPLING_COMPARISON, config, max_level=5, workers=4)
        fine = [row for row in table.rows if row[0] >= 1]
        h = [row[1] for row in fine]
        assert log_log_slope(h, [row[2] for row in fine]) >= 1.7
        assert log_log_slope(h, [row[3] for row in fine]) < 1.3

    @pytest.mark.parametrize(
        ("integrator", "degraded"),
        [(IntegratorKind.SE, True), (IntegratorKind.GL, True), (IntegratorKind.BAOAB, False)],
    )
    def test_small_regularisation(self, integrator: IntegratorKind, degraded: bool) -> None:
        """eps_reg = 0.001 では SE・GL の分散減衰が劣化し、BAOAB は保たれるテスト。"""
        config = RunConfig(
            model=ModelParams(eps_reg=0.001),
            integrator=integrator,
            coarse_steps=270,
            qoi=MEAN_POSITION,
            n_samples=4000,
        )
        slope = _variance_slope(config, max_level=3)
        if degraded:
            assert slope < 1.5
        else:
            assert slope >= 1.7

    def test_smoothing_does_not_bias(self) -> None:
        """平滑化指示関数と元の指示関数の期待値の差が 5e-4 以下となるテスト。"""
        config = RunConfig(
            integrator=IntegratorKind.GL, finest_steps=40, n_samples=2_000_000, chunk_size=65536
        )
        table = smoothing_study(config, r_values=(4, 6, 8), workers=4)
        for row in table.rows:
            assert abs(row[5]) <= 5e-4

    def test_sample_allocation_matches_reference(self) -> None:
        """ε = 6.9e-5 の最適標本数が公表値と同程度で、レベルとともに減少するテスト。"""
        config = RunConfig(integrator=IntegratorKind.SE, qoi=MEAN_POSITION)
        stats = level_sweep_stats(config, max_level=8, n_samples=2000, workers=4)
        counts = allocate_samples([s.max_variance for s in stats], [s.h for s in stats], 6.9e-5)
        for count, reference in zip(counts, REFERENCE_SAMPLES, strict=False):
            assert reference / 2 <= count <= reference * 2
        assert all(a > b for a, b in zip(counts, counts[1:], strict=False))

    def test_cost_slopes(self) -> None:
        """MLMC と StMC のコストの ε に対する傾きのテスト。"""
        config = RunConfig(integrator=IntegratorKind.SE, qoi=MEAN_POSITION, pilot_samples=500)
        mlmc = cost_sweep(
            config,
            [1e-3, 5e-4, 2.5e-4, 1e-4],
            methods=(MethodKind.MLMC,),
            workers=4,
            record_timings=False,
        )
        stmc = cost_sweep(
            config,
            [4e-3, 2e-3, 1e-3, 4e-4],
            methods=(MethodKind.STMC,),
            workers=4,
            record_timings=False,
        )
        mlmc_slope = log_log_slope(mlmc.column("eps"), mlmc.column("cost_steps"))
        stmc_slope = log_log_slope(stmc.column("eps"), stmc.column("cost_steps"))
        assert -2.4 <= mlmc_slope <= -1.6
        assert -3.5 <= stmc_slope <= -2.5
