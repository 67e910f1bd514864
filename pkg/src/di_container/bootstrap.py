"""
アプリケーションブートストラップモジュール。

アプリケーション起動時の初期化処理を行います。
"""

import logging
import sys

from src.di_container.config import Environment
from src.di_container.container import get_container
from src.di_container.providers import register_all_providers
from src.utils.logger import ColoredFormatter, StructuredFormatter, get_logger


def setup_logging() -> None:
    """ロギングをセットアップ。"""
    container = get_container()
    config = container.config.logging

    # ログレベルを設定
    log_level = getattr(logging, config.level.upper(), logging.INFO)

    # 開発環境のTTYではカラー表示
    use_color = container.config.is_development() and sys.stderr.isatty()
    formatter_class = ColoredFormatter if use_color else StructuredFormatter

    # ハンドラーの設定（標準出力は結果表示に使うためログは標準エラーへ）
    handlers: list[logging.Handler] = []
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(formatter_class(config.format))
    handlers.append(console_handler)

    # ファイルハンドラー（設定されている場合）
    if config.file_path:
        config.file_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(config.file_path)
        file_handler.setLevel(log_level)
        file_handler.setFormatter(StructuredFormatter(config.format))
        handlers.append(file_handler)

    logging.basicConfig(level=log_level, handlers=handlers, force=True)

    get_logger(__name__).debug("Logging initialized", level=config.level)


def bootstrap(environment: Environment | None = None) -> None:
    """アプリケーションをブートストラップ。

    Args:
        environment: 実行環境（指定しない場合は環境変数から取得）
    """
    container = get_container()
    if environment:
        container.set_environment(environment)

    setup_logging()

    logger = get_logger(__name__)
    logger.debug("Registering service providers...", environment=container.config.environment.value)
    register_all_providers()


def shutdown() -> None:
    """アプリケーションをシャットダウン。"""
    container = get_container()
    container.clear()
    get_logger(__name__).debug("Shutdown completed")
