"""
DIコンテナモジュール。

実行時設定（Config）と、CLIが使用するリポジトリ・パーサーの解決を担います。
"""

from collections.abc import Callable
from typing import Any, TypeVar, cast

from src.di_container.config import Config, Environment
from src.utils.logger import get_logger

T = TypeVar("T")

logger = get_logger(__name__)


class DIContainer:
    """依存性注入コンテナ（プロセス内シングルトン）。"""

    _instance: "DIContainer | None" = None
    _factories: dict[type, Callable[[], Any]]
    _singletons: dict[type, Any]
    _config: Config

    def __new__(cls) -> "DIContainer":
        """シングルトンインスタンスを作成。"""
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._initialize()
        return cls._instance

    @classmethod
    def reset(cls) -> None:
        """シングルトンを破棄（次回の取得時に環境変数を読み直す）。"""
        cls._instance = None

    def _initialize(self) -> None:
        self._factories = {}
        self._singletons = {}
        self._config = Config()

    @property
    def config(self) -> Config:
        """設定を取得。"""
        return self._config

    def register_factory(self, interface: type[T], factory: Callable[[], T]) -> None:
        """解決のたびに factory を呼ぶ登録。"""
        self._factories[interface] = factory
        logger.debug("Factory registered", interface=interface.__name__)

    def register_singleton(self, interface: type[T], factory: Callable[[], T]) -> None:
        """初回のみ factory を呼んでインスタンスを保持する登録（登録済みなら何もしない）。"""
        if interface not in self._singletons:
            self._singletons[interface] = factory()
            logger.debug("Singleton registered", interface=interface.__name__)

    def register_instance(self, interface: type[T], instance: T) -> None:
        """インスタンスを直接登録（テストでの差し替え用）。"""
        self._singletons[interface] = instance

    def resolve(self, interface: type[T]) -> T:
        """依存関係を解決。

        Raises:
            ValueError: 登録されていない型の場合
        """
        if interface in self._singletons:
            return cast(T, self._singletons[interface])
        if interface in self._factories:
            return cast(T, self._factories[interface]())
        raise ValueError(f"No registration found for {interface.__name__}")

    def has_registration(self, interface: type) -> bool:
        """登録があるかチェック。"""
        return interface in self._singletons or interface in self._factories

    def clear(self) -> None:
        """すべての登録をクリア。"""
        self._factories.clear()
        self._singletons.clear()

    def set_environment(self, environment: Environment) -> None:
        """環境を設定（設定を読み直す）。"""
        self._config = Config(environment)
        logger.debug("Environment set", environment=environment.value)


def get_container() -> DIContainer:
    """コンテナインスタンスを取得。"""
    return DIContainer()
