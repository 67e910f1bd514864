"""
カスタム型定義モジュール。

プロジェクト全体で使用するカスタム型を定義します。
"""

from pathlib import Path
from typing import Any, TypeAlias

import numpy as np
import numpy.typing as npt

# 基本型エイリアス
JsonDict: TypeAlias = dict[str, Any]
JsonList: TypeAlias = list[Any]
JsonValue: TypeAlias = str | int | float | bool | None | JsonDict | JsonList

# パス関連
PathLike: TypeAlias = str | Path

# 数値配列
FloatArray: TypeAlias = npt.NDArray[np.float64]
IntArray: TypeAlias = npt.NDArray[np.int64]
BoolArray: TypeAlias = npt.NDArray[np.bool_]
FloatLike: TypeAlias = float | FloatArray

# 物理量（無次元化済み）
Height: TypeAlias = float
Velocity: TypeAlias = float
Seconds: TypeAlias = float
Sign: TypeAlias = int  # +1 | -1

# 設定型
ConfigDict: TypeAlias = dict[str, Any]
ConfigSections: TypeAlias = dict[str, dict[str, str]]
EnvironmentVariables: TypeAlias = dict[str, str]

# CSV行
CsvRow: TypeAlias = tuple[Any, ...]

# バリデーション結果
ValidationResult: TypeAlias = tuple[bool, str | None]  # (is_valid, error_message)
