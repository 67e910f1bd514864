"""
ブートストラップのテスト。

ロガーをモックせずに実際の初期化処理を実行します。
"""

import logging
import os
from pathlib import Path
from unittest.mock import patch

import pytest

from src.di_container.bootstrap import bootstrap, shutdown
from src.di_container.config import Environment
from src.di_container.container import DIContainer, get_container
from src.usecases.common.interfaces import OutputRepository


@pytest.fixture(autouse=True)
def restore_logging() -> None:
    """ルートロガーのハンドラーとコンテナを元に戻す。"""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    DIContainer.reset()
    yield
    for handler in root.handlers:
        if handler not in handlers:
            handler.close()
    root.handlers[:] = handlers
    root.setLevel(level)
    DIContainer.reset()


class TestBootstrap:
    """bootstrapのテスト。"""

    def test_bootstrap_in_development(self, tmp_path: Path) -> None:
        """開発環境でDEBUGログがファイルに書き出されるテスト。"""
        log_file = tmp_path / "logs" / "run.log"
        with patch.dict(os.environ, {"LOG_FILE": str(log_file)}, clear=True):
            bootstrap(Environment.DEVELOPMENT)

        assert get_container().has_registration(OutputRepository)
        for handler in logging.getLogger().handlers:
            handler.flush()
        text = log_file.read_text(encoding="utf-8")
        assert "Logging initialized" in text
        assert "level=DEBUG" in text

    def test_bootstrap_and_shutdown(self) -> None:
        """本番環境での初期化と終了処理のテスト。"""
        with patch.dict(os.environ, {}, clear=True):
            bootstrap(Environment.PRODUCTION)
        assert logging.getLogger().level == logging.INFO
        shutdown()
        assert not get_container().has_registration(OutputRepository)
