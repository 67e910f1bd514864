"""
ドメイン例外モジュール。

このモジュールでは、ドメイン層およびアプリケーション層で発生する例外を定義します。
"""

from collections.abc import Sequence
from typing import Any


class DomainException(Exception):
    """ドメイン例外の基底クラス。"""

    def __init__(self, message: str, details: dict[str, Any] | None = None) -> None:
        """初期化。"""
        super().__init__(message)
        self.message = message
        self.details = details or {}


class ProfileDomainError(DomainException):
    """プロファイル評価の定義域外エラー。"""

    def __init__(self, x: float, height: float) -> None:
        """初期化。"""
        message = f"高さが定義域[0, {height}]の外、または非有限です: x={x}"
        super().__init__(message, {"x": x, "height": height})


class InvariantViolationError(DomainException):
    """型の不変条件違反の例外。"""

    def __init__(self, invariant: str, value: Any = None) -> None:
        """初期化。"""
        message = f"不変条件違反: {invariant} (値: {value})"
        super().__init__(message, {"invariant": invariant, "value": value})
        self.invariant = invariant


class IntegratorInstabilityError(DomainException):
    """時間積分が不安定化した場合の例外。"""

    def __init__(self, x: float, u: float, height: float) -> None:
        """初期化。"""
        message = f"不安定なステップを検出しました: x={x}, u={u} (|x| > 10H または非有限)"
        super().__init__(message, {"x": x, "u": u, "height": height})


class StabilityError(DomainException):
    """Symplectic Euler の安定性条件違反の例外。"""

    def __init__(self, step_size: float, bound: float) -> None:
        """初期化。"""
        message = f"SEの安定性条件 h < {bound:.6g} を満たしていません: h={step_size:.6g}"
        super().__init__(message, {"step_size": step_size, "bound": bound})


class SingularSystemError(DomainException):
    """平滑化多項式の線形系が数値的に特異な場合の例外。"""

    def __init__(self, r: int, condition_number: float) -> None:
        """初期化。"""
        message = f"平滑化多項式の線形系が特異です: r={r}, 条件数={condition_number:.3g}"
        super().__init__(message, {"r": r, "condition_number": condition_number})


class TimelineError(DomainException):
    """時間点列の結合に関する例外。"""

    def __init__(self, reason: str) -> None:
        """初期化。"""
        super().__init__(f"タイムライン構築エラー: {reason}", {"reason": reason})


class BiasEstimationError(DomainException):
    """バイアス定数の推定に失敗した場合の例外。"""

    def __init__(self, reason: str, levels: Sequence[int] = ()) -> None:
        """初期化。"""
        message = f"バイアス定数の推定エラー: {reason}"
        super().__init__(message, {"reason": reason, "levels": list(levels)})
        self.levels = tuple(levels)


class LevelCapExceededError(DomainException):
    """必要なレベル数が上限を超えた場合の例外。"""

    def __init__(self, required: int, max_level: int) -> None:
        """初期化。"""
        message = f"必要なレベル数が上限を超えています: L>={required} (上限 {max_level})"
        super().__init__(message, {"required": required, "max_level": max_level})


class SampleFailureError(DomainException):
    """失敗サンプルの割合が閾値を超えた場合の例外。"""

    def __init__(self, failed: int, attempted: int, threshold: float) -> None:
        """初期化。"""
        message = f"失敗サンプルが閾値を超えました: {failed}/{attempted} (閾値 {threshold:g})"
        super().__init__(
            message, {"failed": failed, "attempted": attempted, "threshold": threshold}
        )


class ConfigParseError(DomainException):
    """設定ファイルの構文エラー。"""

    def __init__(self, reason: str, line: int | None = None) -> None:
        """初期化。"""
        location = f" (line {line})" if line is not None else ""
        super().__init__(f"設定ファイルの解析エラー{location}: {reason}", {"line": line})
        self.line = line


class ConfigValidationError(DomainException):
    """設定値の検証エラー。"""

    def __init__(self, reason: str, line: int | None = None, invariant: str | None = None) -> None:
        """初期化。"""
        location = f" (line {line})" if line is not None else ""
        super().__init__(
            f"設定値の検証エラー{location}: {reason}",
            {"line": line, "invariant": invariant},
        )
        self.line = line
        self.invariant = invariant


class OutputSchemaError(DomainException):
    """出力レコードのスキーマに関する例外。"""

    def __init__(self, reason: str) -> None:
        """初期化。"""
        super().__init__(f"出力スキーマエラー: {reason}", {"reason": reason})
