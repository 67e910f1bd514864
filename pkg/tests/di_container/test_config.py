"""
設定管理のテスト。

Configクラスの動作を検証します。
"""

import os
from pathlib import Path
from unittest.mock import patch

import pytest

from src.di_container.config import (
    DEFAULT_LOG_FORMAT,
    Config,
    Environment,
    LoggingConfig,
    RuntimeConfig,
)


class TestEnvironment:
    """Environment列挙型のテスト。"""

    def test_environment_values(self) -> None:
        """環境値のテスト。"""
        assert Environment.DEVELOPMENT.value == "development"
        assert Environment.STAGING.value == "staging"
        assert Environment.PRODUCTION.value == "production"
        assert Environment.TEST.value == "test"


class TestRuntimeConfig:
    """RuntimeConfigのテスト。"""

    def test_defaults(self) -> None:
        """デフォルト値のテスト。"""
        runtime = RuntimeConfig()
        assert runtime.output_dir == "output"
        assert runtime.workers == 1

    def test_invalid_workers(self) -> None:
        """ワーカー数が0以下のテスト。"""
        with pytest.raises(ValueError):
            RuntimeConfig(workers=0)


class TestConfig:
    """Configクラスのテスト。"""

    def test_default_environment(self) -> None:
        """デフォルト環境のテスト。"""
        with patch.dict(os.environ, {}, clear=True):
            config = Config()
            assert config.environment == Environment.DEVELOPMENT

    def test_environment_from_env_var(self) -> None:
        """環境変数からの環境設定テスト。"""
        with patch.dict(os.environ, {"APP_ENV": "production"}):
            config = Config()
            assert config.environment == Environment.PRODUCTION

    def test_invalid_environment_fallback(self) -> None:
        """無効な環境値のフォールバックテスト。"""
        with patch.dict(os.environ, {"APP_ENV": "invalid"}):
            config = Config()
            assert config.environment == Environment.DEVELOPMENT

    def test_logging_config_default(self) -> None:
        """ロギング設定のデフォルト値テスト。"""
        with patch.dict(os.environ, {}, clear=True):
            production = Config(Environment.PRODUCTION)
            assert production.logging == LoggingConfig(level="INFO", format=DEFAULT_LOG_FORMAT)
            assert Config(Environment.DEVELOPMENT).logging.level == "DEBUG"

    def test_logging_config_from_env(self) -> None:
        """環境変数からのロギング設定テスト。"""
        with patch.dict(
            os.environ,
            {"LOG_LEVEL": "WARNING", "LOG_FORMAT": "%(message)s", "LOG_FILE": "logs/run.log"},
        ):
            config = Config()
            assert config.logging.level == "WARNING"
            assert config.logging.format == "%(message)s"
            assert config.logging.file_path == Path("logs/run.log")

    def test_runtime_config_from_env(self) -> None:
        """環境変数からの出力先とワーカー数のテスト。"""
        with patch.dict(
            os.environ, {"DISPERSION_OUTPUT_DIR": "results", "DISPERSION_WORKERS": "4"}
        ):
            config = Config()
            assert config.runtime.output_dir == "results"
            assert config.runtime.workers == 4

    def test_invalid_workers_from_env(self) -> None:
        """整数でないワーカー数のテスト。"""
        with patch.dict(os.environ, {"DISPERSION_WORKERS": "many"}), pytest.raises(ValueError):
            Config()

    def test_get_method(self) -> None:
        """getメソッドのテスト。"""
        with patch.dict(os.environ, {"TEST_KEY": "test_value"}):
            config = Config()
            assert config.get("TEST_KEY") == "test_value"
            assert config.get("NON_EXISTENT", "default") == "default"

    def test_environment_checks(self) -> None:
        """環境チェックメソッドのテスト。"""
        assert Config(Environment.DEVELOPMENT).is_development() is True
        assert Config(Environment.PRODUCTION).is_production() is True
        assert Config(Environment.TEST).is_test() is True
        assert Config(Environment.TEST).is_production() is False
