"""
設定管理モジュール。

環境変数（.env ファイルを含む）から実行時の設定を読み込み、管理します。
シミュレーションの設定（RunConfig）は設定ファイルとCLIフラグから別途生成します。
"""

import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any

from src.entities.run_config import DEFAULT_OUTPUT_DIR
from src.utils.env import get_env, get_env_int, load_environment

DEFAULT_LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class Environment(Enum):
    """環境種別。"""

    DEVELOPMENT = "development"
    STAGING = "staging"
    PRODUCTION = "production"
    TEST = "test"


@dataclass
class LoggingConfig:
    """ロギング設定。"""

    level: str = "INFO"
    format: str = DEFAULT_LOG_FORMAT
    file_path: Path | None = None


@dataclass
class RuntimeConfig:
    """実行環境の設定。"""

    output_dir: str = DEFAULT_OUTPUT_DIR
    workers: int = 1

    def __post_init__(self) -> None:
        """バリデーション。"""
        if self.workers < 1:
            raise ValueError(f"ワーカー数は1以上にしてください: {self.workers}")


class Config:
    """アプリケーション設定。"""

    def __init__(self, environment: Environment | None = None) -> None:
        """初期化。"""
        # 環境変数を読み込み
        load_environment()
        self._environment = environment or self._detect_environment()
        self._load_config()

    @property
    def environment(self) -> Environment:
        """環境を取得。"""
        return self._environment

    @property
    def logging(self) -> LoggingConfig:
        """ロギング設定を取得。"""
        return self._logging_config

    @property
    def runtime(self) -> RuntimeConfig:
        """実行環境の設定を取得。"""
        return self._runtime_config

    def _detect_environment(self) -> Environment:
        """環境を検出。"""
        env_str = os.getenv("APP_ENV", "development").lower()
        try:
            return Environment(env_str)
        except ValueError:
            return Environment.DEVELOPMENT

    def _load_config(self) -> None:
        """設定を読み込み。"""
        # ロギング設定
        log_level = "DEBUG" if self._environment == Environment.DEVELOPMENT else "INFO"
        log_file = get_env("LOG_FILE")
        self._logging_config = LoggingConfig(
            level=get_env("LOG_LEVEL", log_level) or log_level,
            format=get_env("LOG_FORMAT", DEFAULT_LOG_FORMAT) or DEFAULT_LOG_FORMAT,
            file_path=Path(log_file) if log_file else None,
        )

        # 出力先とワーカー数
        self._runtime_config = RuntimeConfig(
            output_dir=get_env("DISPERSION_OUTPUT_DIR") or DEFAULT_OUTPUT_DIR,
            workers=get_env_int("DISPERSION_WORKERS", 1),
        )

    def get(self, key: str, default: Any = None) -> Any:
        """環境変数から値を取得。"""
        return os.getenv(key, default)

    def is_development(self) -> bool:
        """開発環境かどうか。"""
        return self._environment == Environment.DEVELOPMENT

    def is_production(self) -> bool:
        """本番環境かどうか。"""
        return self._environment == Environment.PRODUCTION

    def is_test(self) -> bool:
        """テスト環境かどうか。"""
        return self._environment == Environment.TEST
