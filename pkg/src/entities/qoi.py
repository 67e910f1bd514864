"""
評価量（QoI）モジュール。

終端状態に対する評価量（平均位置、区間濃度の指示関数とその平滑化、ビン分割濃度場）と、
モーメント条件を満たす平滑化多項式の構築を提供します。
"""

import functools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.polynomial import polynomial as npoly

from src.entities.base import ValueObject
from src.entities.exceptions import InvariantViolationError, SingularSystemError
from src.entities.particle import ParticleState
from src.utils.types import FloatArray, FloatLike
from src.utils.validators import validate_strictly_increasing

MAX_SMOOTHING_ORDER = 12
DEFAULT_INTERVAL = (0.1055, 0.1555)
DEFAULT_SMOOTHING_ORDER = 4
DEFAULT_SMOOTHING_WIDTH = 0.1
DEFAULT_BIN_COUNT = 20


class QoIKind(str, Enum):
    """評価量の種類。"""

    MEAN_POSITION = "mean_position"
    SMOOTHED_INDICATOR = "smoothed_indicator"
    RAW_INDICATOR = "raw_indicator"
    BINNED_FIELD = "binned_field"


@dataclass(frozen=True)
class SmoothingPolynomial(ValueObject):
    """平滑化多項式 p_r（係数は昇べきの順、次数 r+1 以下）。"""

    r: int
    coefficients: tuple[float, ...]

    def __post_init__(self) -> None:
        """バリデーション。"""
        if len(self.coefficients) != self.r + 2:
            raise InvariantViolationError("len(coefficients) = r + 2", len(self.coefficients))

    def __call__(self, s: FloatLike) -> FloatArray:
        """p_r(s) を評価。"""
        return npoly.polyval(s, self.coefficients)

    def moment_residuals(self) -> FloatArray:
        """モーメント条件 ∫₋₁¹ s^j p_r(s) ds = (−1)^j/(j+1) の残差 (j = 0..r−1)。"""
        base = np.asarray(self.coefficients, dtype=np.float64)
        residuals = np.zeros(self.r, dtype=np.float64)
        for j in range(self.r):
            antiderivative = npoly.polyint(np.concatenate([np.zeros(j), base]))
            integral = npoly.polyval(1.0, antiderivative) - npoly.polyval(-1.0, antiderivative)
            residuals[j] = integral - (-1.0) ** j / (j + 1)
        return residuals


@functools.lru_cache(maxsize=None)
def build_smoothing_polynomial(r: int) -> SmoothingPolynomial:
    """端点条件とモーメント条件から平滑化多項式を構築。

    未知数は係数 c_0..c_{r+1} の r+2 個で、条件は
    p(−1) = 1、p(1) = 0、∫₋₁¹ s^j p(s) ds = (−1)^j/(j+1) (j = 0..r−1) です。

    Args:
        r: モーメント次数 (0 <= r <= 12)

    Returns:
        平滑化多項式

    Raises:
        InvariantViolationError: r が範囲外の場合
        SingularSystemError: 線形系が作業精度で特異な場合
    """
    if not (0 <= r <= MAX_SMOOTHING_ORDER):
        raise InvariantViolationError(f"0 <= r <= {MAX_SMOOTHING_ORDER}", r)

    size = r + 2
    powers = np.arange(size)
    matrix = np.zeros((size, size), dtype=np.float64)
    rhs = np.zeros(size, dtype=np.float64)

    matrix[0] = (-1.0) ** powers
    rhs[0] = 1.0
    matrix[1] = 1.0
    for j in range(r):
        m = powers + j
        # ∫₋₁¹ s^m ds は m が奇数なら0、偶数なら 2/(m+1)
        matrix[2 + j] = np.where(m % 2 == 0, 2.0 / (m + 1), 0.0)
        rhs[2 + j] = (-1.0) ** j / (j + 1)

    condition_number = float(np.linalg.cond(matrix))
    if not np.isfinite(condition_number) or condition_number * np.finfo(np.float64).eps >= 1.0:
        raise SingularSystemError(r, condition_number)

    try:
        coefficients = np.linalg.solve(matrix, rhs)
    except np.linalg.LinAlgError as e:
        raise SingularSystemError(r, condition_number) from e

    return SmoothingPolynomial(r=r, coefficients=tuple(float(c) for c in coefficients))


def _g_array(x: FloatLike, poly: SmoothingPolynomial) -> FloatArray:
    x_arr = np.asarray(x, dtype=np.float64)
    inner = poly(np.clip(x_arr, -1.0, 1.0))
    return np.where(x_arr < -1.0, 1.0, np.where(x_arr > 1.0, 0.0, inner))


def g_r(x: FloatLike, poly: SmoothingPolynomial) -> FloatLike:
    """平滑化ステップ関数 g_r（x < −1 で1、x > 1 で0、その間は p_r(x)）。"""
    value = _g_array(x, poly)
    if np.ndim(x) == 0:
        return float(value)
    return value


def smoothed_indicator(
    x: FloatLike, a: float, b: float, poly: SmoothingPolynomial, delta: float
) -> FloatLike:
    """区間 [a, b] の平滑化指示関数 g_r((x−b)/δ) − g_r((x−a)/δ)。

    Raises:
        InvariantViolationError: a >= b または delta <= 0 の場合
    """
    if not a < b:
        raise InvariantViolationError("a < b", (a, b))
    if not delta > 0:
        raise InvariantViolationError("delta > 0", delta)
    x_arr = np.asarray(x, dtype=np.float64)
    value = _g_array((x_arr - b) / delta, poly) - _g_array((x_arr - a) / delta, poly)
    if np.ndim(x) == 0:
        return float(value)
    return value


def raw_indicator(x: FloatLike, a: float, b: float) -> FloatLike:
    """区間 [a, b] の指示関数。"""
    x_arr = np.asarray(x, dtype=np.float64)
    value = ((x_arr >= a) & (x_arr <= b)).astype(np.float64)
    if np.ndim(x) == 0:
        return float(value)
    return value


def equidistant_bins(height: float, count: int = DEFAULT_BIN_COUNT) -> tuple[float, ...]:
    """[0, H] を count 等分するビン境界。"""
    if count < 1:
        raise InvariantViolationError("bins >= 1", count)
    edges = np.linspace(0.0, height, count + 1)
    edges[-1] = height
    return tuple(float(e) for e in edges)


@dataclass(frozen=True)
class QoISpec(ValueObject):
    """評価量の指定。

    bin_edges は binned_field でのみ使用し、末尾が境界層の高さ H を表します。
    """

    kind: QoIKind = QoIKind.SMOOTHED_INDICATOR
    a: float = DEFAULT_INTERVAL[0]
    b: float = DEFAULT_INTERVAL[1]
    r: int = DEFAULT_SMOOTHING_ORDER
    delta: float = DEFAULT_SMOOTHING_WIDTH
    bin_edges: tuple[float, ...] = field(default_factory=lambda: equidistant_bins(1.0))

    def __post_init__(self) -> None:
        """バリデーション。"""
        if not self.a < self.b:
            raise InvariantViolationError("a < b", (self.a, self.b))
        if not self.delta > 0:
            raise InvariantViolationError("delta > 0", self.delta)
        if not (0 <= self.r <= MAX_SMOOTHING_ORDER):
            raise InvariantViolationError(f"0 <= r <= {MAX_SMOOTHING_ORDER}", self.r)
        if self.kind == QoIKind.BINNED_FIELD:
            is_valid, _ = validate_strictly_increasing(self.bin_edges, "bin_edges")
            if not is_valid or len(self.bin_edges) < 2 or self.bin_edges[0] != 0.0:
                raise InvariantViolationError(
                    "bin edges strictly increasing spanning [0, H]", self.bin_edges
                )

    @property
    def dimension(self) -> int:
        """評価量の次元（ビン分割濃度場ならビン数、それ以外は1）。"""
        if self.kind == QoIKind.BINNED_FIELD:
            return len(self.bin_edges) - 1
        return 1

    @property
    def uses_smoothing(self) -> bool:
        """平滑化多項式を必要とするか。"""
        return self.kind in (QoIKind.SMOOTHED_INDICATOR, QoIKind.BINNED_FIELD)


def _binned_terms(x: FloatArray, spec: QoISpec, poly: SmoothingPolynomial) -> FloatArray:
    """ビン分割濃度場の成分 (n, k)。

    両端の g 項は a_0 で0、a_k で1に置き換えるため、成分の和は常に1になります。
    """
    edges = np.asarray(spec.bin_edges, dtype=np.float64)
    terms = _g_array((x[:, None] - edges[None, :]) / spec.delta, poly)
    terms[:, 0] = 0.0
    terms[:, -1] = 1.0
    return np.diff(terms, axis=1)


def binned_field(x: FloatLike, spec: QoISpec) -> FloatArray:
    """高さ x に対するビン分割濃度場（長さ k、x が配列なら (n, k)）。"""
    poly = build_smoothing_polynomial(spec.r)
    x_arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    values = _binned_terms(x_arr, spec, poly)
    if np.ndim(x) == 0:
        return values[0]
    return values


def evaluate(spec: QoISpec, terminal: ParticleState) -> float | FloatArray:
    """終端状態に対する評価量を計算。"""
    x = terminal.x
    if spec.kind == QoIKind.MEAN_POSITION:
        return float(x)
    if spec.kind == QoIKind.RAW_INDICATOR:
        return float(raw_indicator(x, spec.a, spec.b))
    if spec.kind == QoIKind.SMOOTHED_INDICATOR:
        poly = build_smoothing_polynomial(spec.r)
        return float(smoothed_indicator(x, spec.a, spec.b, poly, spec.delta))
    return binned_field(x, spec)


class QoIEvaluator:
    """配列向けの評価量計算器。

    終端位置の配列 (n,) を受け取り、常に (n, dimension) の配列を返します。
    """

    def __init__(self, spec: QoISpec) -> None:
        """初期化。"""
        self.spec = spec
        self._poly = build_smoothing_polynomial(spec.r) if spec.uses_smoothing else None

    @property
    def dimension(self) -> int:
        """評価量の次元。"""
        return self.spec.dimension

    def __call__(self, x: FloatArray) -> FloatArray:
        """終端位置の配列を評価。"""
        spec = self.spec
        x_arr = np.asarray(x, dtype=np.float64)
        if spec.kind == QoIKind.MEAN_POSITION:
            return x_arr[:, None].copy()
        if spec.kind == QoIKind.RAW_INDICATOR:
            return np.asarray(raw_indicator(x_arr, spec.a, spec.b))[:, None]
        assert self._poly is not None
        if spec.kind == QoIKind.SMOOTHED_INDICATOR:
            values = _g_array((x_arr - spec.b) / spec.delta, self._poly) - _g_array(
                (x_arr - spec.a) / spec.delta, self._poly
            )
            return values[:, None]
        return _binned_terms(x_arr, spec, self._poly)
