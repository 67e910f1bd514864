"""
サービスプロバイダーモジュール。

各種サービスの依存関係を設定します。
"""

import logging

from src.adapters.repositories.output_repository import FileOutputRepository
from src.config.run_config_file import RunConfigFileParser
from src.di_container.container import get_container
from src.usecases.common.interfaces import OutputRepository


class ServiceProvider:
    """サービスプロバイダー基底クラス。"""

    def __init__(self) -> None:
        """初期化。"""
        self._container = get_container()
        self._logger = logging.getLogger(self.__class__.__name__)

    def register(self) -> None:
        """サービスを登録。"""
        raise NotImplementedError


class RepositoryProvider(ServiceProvider):
    """リポジトリプロバイダー。"""

    def register(self) -> None:
        """リポジトリを登録。"""
        self._container.register_singleton(OutputRepository, FileOutputRepository)
        self._logger.debug("File output repository registered")


class ConfigParserProvider(ServiceProvider):
    """設定ファイルパーサープロバイダー。"""

    def register(self) -> None:
        """パーサーを登録（既定の出力先は環境変数から）。"""
        output_dir = self._container.config.runtime.output_dir
        self._container.register_factory(
            RunConfigFileParser,
            lambda: RunConfigFileParser(default_output_dir=output_dir),
        )


def register_all_providers() -> None:
    """すべてのプロバイダーを登録。"""
    providers = [
        RepositoryProvider(),
        ConfigParserProvider(),
    ]

    for provider in providers:
        provider.register()
