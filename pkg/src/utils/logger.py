"""
ロギング設定モジュール。

アプリケーション全体で使用するロガーとフォーマッターを提供します。
"""

import logging
from typing import Any


class StructuredFormatter(logging.Formatter):
    """コンテキスト付きフォーマッター。

    StructuredLoggerが付与した ``context`` を ``key=value`` 形式で末尾に追加します。
    """

    def format(self, record: logging.LogRecord) -> str:
        """ログメッセージをフォーマット。"""
        message = super().format(record)
        context = getattr(record, "context", None)
        if context:
            rendered = " ".join(f"{key}={_render(value)}" for key, value in context.items())
            message = f"{message} | {rendered}"
        return message


class ColoredFormatter(StructuredFormatter):
    """カラー付きフォーマッター（開発環境のTTY向け）。"""

    # ANSIカラーコード
    COLORS = {
        "DEBUG": "\033[36m",  # Cyan
        "INFO": "\033[32m",  # Green
        "WARNING": "\033[33m",  # Yellow
        "ERROR": "\033[31m",  # Red
        "CRITICAL": "\033[35m",  # Magenta
    }
    RESET = "\033[0m"

    def format(self, record: logging.LogRecord) -> str:
        """ログメッセージをフォーマット。"""
        message = super().format(record)
        color = self.COLORS.get(record.levelname)
        if color is None:
            return message
        return f"{color}{message}{self.RESET}"


class StructuredLogger:
    """構造化ログ出力ラッパー。"""

    def __init__(self, logger: logging.Logger) -> None:
        """初期化。"""
        self._logger = logger

    @property
    def name(self) -> str:
        """ロガー名。"""
        return self._logger.name

    def debug(self, message: str, /, **context: Any) -> None:
        """デバッグログを出力。"""
        self._log(logging.DEBUG, message, context)

    def info(self, message: str, /, **context: Any) -> None:
        """情報ログを出力。"""
        self._log(logging.INFO, message, context)

    def warning(self, message: str, /, **context: Any) -> None:
        """警告ログを出力。"""
        self._log(logging.WARNING, message, context)

    def error(
        self, message: str, /, exception: Exception | None = None, **context: Any
    ) -> None:
        """エラーログを出力。"""
        if exception:
            context["exception"] = str(exception)
            context["exception_type"] = type(exception).__name__
        self._log(logging.ERROR, message, context, exception)

    def critical(self, message: str, /, **context: Any) -> None:
        """重大エラーログを出力。"""
        self._log(logging.CRITICAL, message, context)

    def _log(
        self,
        level: int,
        message: str,
        context: dict[str, Any],
        exception: Exception | None = None,
    ) -> None:
        if not self._logger.isEnabledFor(level):
            return
        extra = {"context": context} if context else {}
        self._logger.log(level, message, exc_info=exception, extra=extra)


def get_logger(name: str | None = None) -> StructuredLogger:
    """ロガーを取得。

    Args:
        name: ロガー名（Noneの場合は呼び出し元のモジュール名）

    Returns:
        構造化ロガー
    """
    if name is None:
        import inspect

        frame = inspect.currentframe()
        if frame and frame.f_back:
            name = frame.f_back.f_globals.get("__name__", "unknown")

    return StructuredLogger(logging.getLogger(name))


def _render(value: Any) -> str:
    """コンテキスト値を文字列化。"""
    if isinstance(value, float):
        return f"{value:.6g}"
    text = str(value)
    return text if len(text) <= 120 else f"{text[:117]}..."
