"""
統計量のテスト。

LevelStats の累積・結合と、RunResult・SweepTable の出力用変換を検証します。
"""

import numpy as np
import pytest

from src.entities.exceptions import InvariantViolationError
from src.entities.statistics import LevelStats, RunResult, SweepTable


def _stats(values: list[float], level: int = 1, h: float = 0.0125) -> LevelStats:
    stats = LevelStats.empty(level, h)
    stats.add_samples(np.asarray(values), cost_steps=10 * len(values))
    return stats


class TestLevelStats:
    """LevelStatsのテスト。"""

    def test_mean_and_variance(self) -> None:
        """標本平均と不偏分散のテスト。"""
        values = [1.0, 2.0, 3.0, 4.0]
        stats = _stats(values)
        assert stats.n_samples == 4
        assert stats.mean[0] == pytest.approx(2.5)
        assert stats.variance[0] == pytest.approx(np.var(values, ddof=1))
        assert stats.cost_steps == 40

    def test_variance_of_mean(self) -> None:
        """Var[Ŷ] = Var[Y]/N のテスト。"""
        stats = _stats([0.5, -0.5, 1.5, 0.0, 2.0])
        assert stats.variance_of_mean[0] == pytest.approx(stats.variance[0] / 5)
        assert stats.std_error[0] == pytest.approx(np.sqrt(stats.variance[0] / 5))

    def test_variance_is_clipped(self) -> None:
        """丸め誤差による負の分散が0になるテスト。"""
        stats = _stats([0.1] * 10)
        assert stats.variance[0] >= 0.0
        assert stats.variance[0] == pytest.approx(0.0, abs=1e-15)

    def test_small_sample(self) -> None:
        """標本数が2未満の分散のテスト。"""
        assert _stats([3.0]).variance[0] == 0.0
        assert LevelStats.empty(0, 0.025).mean[0] == 0.0

    def test_merge_is_equivalent_to_single_pass(self) -> None:
        """結合が一括計算と一致するテスト。"""
        rng = np.random.default_rng(7)
        values = rng.normal(size=100)
        merged = _stats(list(values[:37])).merge(_stats(list(values[37:])))
        single = _stats(list(values))
        assert merged.n_samples == single.n_samples
        assert merged.mean[0] == pytest.approx(single.mean[0], rel=1e-12)
        assert merged.variance[0] == pytest.approx(single.variance[0], rel=1e-12)
        assert merged.cost_steps == single.cost_steps

    def test_merge_rejects_other_level(self) -> None:
        """異なるレベルの結合のテスト。"""
        with pytest.raises(InvariantViolationError):
            _stats([1.0], level=1).merge(_stats([1.0], level=2))

    def test_failed_samples(self) -> None:
        """失敗サンプルの計上のテスト。"""
        stats = LevelStats.empty(2, 0.00625)
        stats.add_samples(np.array([1.0, 2.0]), cost_steps=6, n_failed=1)
        assert stats.n_samples == 2
        assert stats.n_failed == 1
        assert stats.n_attempted == 3
        assert stats.cost_per_sample == pytest.approx(2.0)

    def test_vector_samples(self) -> None:
        """ベクトル評価量のテスト。"""
        stats = LevelStats.empty(0, 0.025, dimension=2)
        stats.add_samples(np.array([[0.0, 1.0], [0.0, 3.0], [0.0, 5.0]]), cost_steps=3)
        np.testing.assert_allclose(stats.mean, [0.0, 3.0])
        assert stats.max_variance == pytest.approx(4.0)
        assert stats.dominant_component() == 1
        mean, error = stats.component(1)
        assert mean == pytest.approx(3.0)
        assert error == pytest.approx(np.sqrt(4.0 / 3))

    def test_invalid(self) -> None:
        """不正な値のテスト。"""
        with pytest.raises(InvariantViolationError):
            LevelStats.empty(-1, 0.1)
        with pytest.raises(InvariantViolationError):
            LevelStats.empty(0, 0.0)

    def test_to_dict(self) -> None:
        """辞書変換のテスト。"""
        data = _stats([1.0, 3.0], level=3).to_dict()
        assert data["level"] == 3
        assert data["n_samples"] == 2
        assert data["mean"] == [2.0]
        assert data["variance"] == [2.0]


class TestRunResult:
    """RunResultのテスト。"""

    def test_scalar_payload(self) -> None:
        """スカラー評価量の結果辞書のテスト。"""
        stats = _stats([0.1, 0.2])
        result = RunResult(
            method="mlmc",
            integrator="se",
            estimate=np.array([0.13]),
            std_errors=np.array([0.0004]),
            statistical_error=0.0004,
            levels=[stats],
            seed=1,
            total_cost_steps=100,
            bias_estimate=0.0005,
        )
        payload = result.result_payload()
        assert result.is_scalar
        assert payload["estimate"] == 0.13
        assert payload["std_errors"] == 0.0004
        assert payload["failed_samples"] == 0
        assert payload["bias_estimate"] == 0.0005

    def test_vector_payload(self) -> None:
        """ベクトル評価量の結果辞書のテスト。"""
        result = RunResult(
            method="stmc",
            integrator="gl",
            estimate=np.array([0.25, 0.75]),
            std_errors=np.array([0.01, 0.02]),
            statistical_error=0.02,
            levels=[],
            seed=1,
            total_cost_steps=10,
        )
        payload = result.result_payload()
        assert not result.is_scalar
        assert payload["estimate"] == [0.25, 0.75]
        assert payload["bias_estimate"] is None


class TestSweepTable:
    """SweepTableのテスト。"""

    def test_columns(self) -> None:
        """列の取得とファイル名のテスト。"""
        table = SweepTable("pdf", ("bin_lo", "bin_hi"), ((0.0, 0.5), (0.5, 1.0)))
        assert table.filename == "pdf.csv"
        assert table.column("bin_hi") == [0.5, 1.0]

    def test_row_length_mismatch(self) -> None:
        """列数の不一致のテスト。"""
        with pytest.raises(InvariantViolationError):
            SweepTable("pdf", ("a", "b"), ((1.0,),))
