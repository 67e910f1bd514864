"""
統計量モジュール。

レベルごとのサンプル集計（LevelStats）と、推定実行の結果（RunResult）、
診断スイープの表（SweepTable）を定義します。
"""

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from src.entities.exceptions import InvariantViolationError
from src.utils.types import CsvRow, FloatArray


@dataclass
class LevelStats:
    """レベルℓの累積統計量。

    sum_y, sum_y2 は評価量の成分ごとの和で、形状は (dimension,) です。
    失敗サンプルは和に含めず n_failed にのみ計上します。
    """

    level: int
    h: float
    dimension: int = 1
    n_samples: int = 0
    sum_y: FloatArray = field(default_factory=lambda: np.zeros(0))
    sum_y2: FloatArray = field(default_factory=lambda: np.zeros(0))
    cost_steps: int = 0
    n_failed: int = 0

    def __post_init__(self) -> None:
        """バリデーションと累積配列の初期化。"""
        if self.level < 0:
            raise InvariantViolationError("level >= 0", self.level)
        if not self.h > 0:
            raise InvariantViolationError("h > 0", self.h)
        if self.sum_y.size == 0:
            self.sum_y = np.zeros(self.dimension, dtype=np.float64)
        if self.sum_y2.size == 0:
            self.sum_y2 = np.zeros(self.dimension, dtype=np.float64)
        if self.sum_y.shape != (self.dimension,) or self.sum_y2.shape != (self.dimension,):
            raise InvariantViolationError("sum shape = (dimension,)", self.sum_y.shape)

    @classmethod
    def empty(cls, level: int, h: float, dimension: int = 1) -> "LevelStats":
        """空の統計量を生成。"""
        return cls(level=level, h=h, dimension=dimension)

    @property
    def n_attempted(self) -> int:
        """失敗を含む試行サンプル数。"""
        return self.n_samples + self.n_failed

    def add_samples(self, values: FloatArray, cost_steps: int, n_failed: int = 0) -> None:
        """サンプル (n, dimension) を追加。"""
        values = np.asarray(values, dtype=np.float64).reshape(-1, self.dimension)
        self.n_samples += values.shape[0]
        self.sum_y = self.sum_y + values.sum(axis=0)
        self.sum_y2 = self.sum_y2 + (values * values).sum(axis=0)
        self.cost_steps += int(cost_steps)
        self.n_failed += int(n_failed)

    def merge(self, other: "LevelStats") -> "LevelStats":
        """同じレベルの統計量を結合した新しい統計量を返す。"""
        if other.level != self.level or other.dimension != self.dimension:
            raise InvariantViolationError("merge of matching levels", (self.level, other.level))
        return LevelStats(
            level=self.level,
            h=self.h,
            dimension=self.dimension,
            n_samples=self.n_samples + other.n_samples,
            sum_y=self.sum_y + other.sum_y,
            sum_y2=self.sum_y2 + other.sum_y2,
            cost_steps=self.cost_steps + other.cost_steps,
            n_failed=self.n_failed + other.n_failed,
        )

    @property
    def mean(self) -> FloatArray:
        """成分ごとの標本平均。"""
        if self.n_samples == 0:
            return np.zeros(self.dimension, dtype=np.float64)
        return self.sum_y / self.n_samples

    @property
    def variance(self) -> FloatArray:
        """成分ごとの不偏分散 (sum_y2 − sum_y²/N)/(N−1)（負の丸め誤差は0に切り上げ）。"""
        if self.n_samples < 2:
            return np.zeros(self.dimension, dtype=np.float64)
        centered = self.sum_y2 - self.sum_y * self.sum_y / self.n_samples
        return np.maximum(centered / (self.n_samples - 1), 0.0)

    @property
    def max_variance(self) -> float:
        """成分分散の最大値（ベクトル評価量の標本数配分に使用）。"""
        return float(np.max(self.variance))

    @property
    def variance_of_mean(self) -> FloatArray:
        """標本平均の分散 Var[Y]/N。"""
        if self.n_samples == 0:
            return np.full(self.dimension, np.inf)
        return self.variance / self.n_samples

    @property
    def std_error(self) -> FloatArray:
        """標本平均の標準誤差。"""
        return np.sqrt(self.variance_of_mean)

    @property
    def cost_per_sample(self) -> float:
        """1サンプルあたりの積分ステップ数。"""
        if self.n_attempted == 0:
            return 0.0
        return self.cost_steps / self.n_attempted

    def component(self, index: int) -> tuple[float, float]:
        """成分 index の (平均, 標準誤差)。"""
        return float(self.mean[index]), float(self.std_error[index])

    def dominant_component(self) -> int:
        """分散が最大の成分番号。"""
        return int(np.argmax(self.variance))

    def to_dict(self) -> dict[str, Any]:
        """辞書に変換。"""
        return {
            "level": self.level,
            "h": self.h,
            "n_samples": self.n_samples,
            "n_failed": self.n_failed,
            "cost_steps": self.cost_steps,
            "mean": [float(v) for v in self.mean],
            "variance": [float(v) for v in self.variance],
        }


@dataclass
class RunResult:
    """推定の実行結果。"""

    method: str
    integrator: str
    estimate: FloatArray
    std_errors: FloatArray
    statistical_error: float
    levels: list[LevelStats]
    seed: int
    total_cost_steps: int
    bias_estimate: float | None = None
    alpha: float | None = None
    c1: float | None = None
    finest_level: int = 0
    wall_time: float = 0.0
    pilot_cost_steps: int = 0
    pilot_wall_time: float = 0.0
    config_echo: dict[str, Any] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def is_scalar(self) -> bool:
        """スカラー評価量か。"""
        return int(np.size(self.estimate)) == 1

    @property
    def scalar_estimate(self) -> float:
        """スカラー評価量の推定値。"""
        return float(np.asarray(self.estimate).ravel()[0])

    @property
    def total_failed(self) -> int:
        """全レベルの失敗サンプル数。"""
        return sum(stats.n_failed for stats in self.levels)

    def result_payload(self) -> dict[str, Any]:
        """結果JSON用の辞書。"""
        estimate: float | list[float]
        errors: float | list[float]
        if self.is_scalar:
            estimate = self.scalar_estimate
            errors = float(np.asarray(self.std_errors).ravel()[0])
        else:
            estimate = [float(v) for v in self.estimate]
            errors = [float(v) for v in self.std_errors]
        return {
            "method": self.method,
            "integrator": self.integrator,
            "estimate": estimate,
            "std_errors": errors,
            "statistical_error": self.statistical_error,
            "bias_estimate": self.bias_estimate,
            "alpha": self.alpha,
            "c1": self.c1,
            "finest_level": self.finest_level,
            "total_cost_steps": self.total_cost_steps,
            "pilot_cost_steps": self.pilot_cost_steps,
            "failed_samples": self.total_failed,
            "seed": self.seed,
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class SweepTable:
    """診断スイープの結果表（CSVの1ファイルに対応）。"""

    name: str
    header: tuple[str, ...]
    rows: tuple[CsvRow, ...] = ()

    def __post_init__(self) -> None:
        """バリデーション。"""
        for row in self.rows:
            if len(row) != len(self.header):
                raise InvariantViolationError("len(row) = len(header)", row)

    @property
    def filename(self) -> str:
        """出力ファイル名。"""
        return f"{self.name}.csv"

    def column(self, name: str) -> list[Any]:
        """列の値を取得。"""
        index = self.header.index(name)
        return [row[index] for row in self.rows]
