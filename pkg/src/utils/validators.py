"""
共通バリデーターモジュール。

入力値の検証ユーティリティを提供します。
"""

import math
from collections.abc import Sequence
from typing import Any

from src.utils.types import ValidationResult


def validate_finite(value: Any, field_name: str = "数値") -> ValidationResult:
    """有限値チェック。

    Args:
        value: チェック対象の値
        field_name: フィールド名

    Returns:
        (is_valid, error_message)のタプル
    """
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return False, f"{field_name}は数値である必要があります"
    if not math.isfinite(value):
        return False, f"{field_name}は有限値である必要があります"
    return True, None


def validate_number_range(
    value: int | float,
    min_value: int | float | None = None,
    max_value: int | float | None = None,
    field_name: str = "数値",
    *,
    exclusive_min: bool = False,
    exclusive_max: bool = False,
) -> ValidationResult:
    """数値範囲チェック。

    Args:
        value: チェック対象の数値
        min_value: 最小値
        max_value: 最大値
        field_name: フィールド名
        exclusive_min: 最小値を含まない場合True
        exclusive_max: 最大値を含まない場合True

    Returns:
        (is_valid, error_message)のタプル
    """
    is_valid, error = validate_finite(value, field_name)
    if not is_valid:
        return is_valid, error

    if min_value is not None:
        if exclusive_min and value <= min_value:
            return False, f"{field_name}は{min_value}より大きくしてください"
        if not exclusive_min and value < min_value:
            return False, f"{field_name}は{min_value}以上にしてください"

    if max_value is not None:
        if exclusive_max and value >= max_value:
            return False, f"{field_name}は{max_value}未満にしてください"
        if not exclusive_max and value > max_value:
            return False, f"{field_name}は{max_value}以下にしてください"

    return True, None


def validate_positive(value: int | float, field_name: str = "数値") -> ValidationResult:
    """正値チェック。"""
    return validate_number_range(value, min_value=0, field_name=field_name, exclusive_min=True)


def validate_strictly_increasing(
    values: Sequence[float], field_name: str = "数列"
) -> ValidationResult:
    """狭義単調増加チェック。

    Args:
        values: チェック対象の数列
        field_name: フィールド名

    Returns:
        (is_valid, error_message)のタプル
    """
    if len(values) < 2:
        return False, f"{field_name}は2点以上必要です"

    for i, (left, right) in enumerate(zip(values[:-1], values[1:], strict=True)):
        if not (math.isfinite(left) and math.isfinite(right)):
            return False, f"{field_name}[{i}]は有限値である必要があります"
        if right <= left:
            return False, f"{field_name}は狭義単調増加である必要があります (index {i + 1})"

    return True, None


def validate_bin_edges(edges: Sequence[float], height: float) -> ValidationResult:
    """ビン境界チェック。

    境界は0からHまでを覆う狭義単調増加列でなければなりません。

    Args:
        edges: ビン境界
        height: 境界層の高さH

    Returns:
        (is_valid, error_message)のタプル
    """
    is_valid, error = validate_strictly_increasing(edges, "ビン境界")
    if not is_valid:
        return is_valid, error

    if edges[0] != 0.0 or not math.isclose(edges[-1], height, rel_tol=0.0, abs_tol=1e-12):
        return False, f"ビン境界は0から{height}までを覆う必要があります"

    return True, None

