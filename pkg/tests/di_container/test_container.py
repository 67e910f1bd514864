"""
DIコンテナのテスト。
"""

import pytest

from src.di_container.config import Environment
from src.di_container.container import DIContainer, get_container


class Counter:
    """テスト用のサービス。"""

    created = 0

    def __init__(self) -> None:
        """生成回数を数える。"""
        Counter.created += 1


@pytest.fixture(autouse=True)
def clean_container() -> None:
    """各テストの前後でコンテナを破棄。"""
    DIContainer.reset()
    Counter.created = 0
    yield
    DIContainer.reset()


class TestDIContainer:
    """DIContainerのテスト。"""

    def test_singleton_instance(self) -> None:
        """コンテナ自体がシングルトンであるテスト。"""
        assert get_container() is get_container()
        assert DIContainer() is get_container()

    def test_reset(self) -> None:
        """reset後に新しいコンテナが作られるテスト。"""
        first = get_container()
        DIContainer.reset()
        assert get_container() is not first

    def test_register_singleton(self) -> None:
        """シングルトン登録で同じインスタンスが返るテスト。"""
        container = get_container()
        container.register_singleton(Counter, Counter)
        container.register_singleton(Counter, Counter)
        assert container.resolve(Counter) is container.resolve(Counter)
        assert Counter.created == 1

    def test_register_factory(self) -> None:
        """ファクトリ登録で毎回生成されるテスト。"""
        container = get_container()
        container.register_factory(Counter, Counter)
        assert container.resolve(Counter) is not container.resolve(Counter)
        assert Counter.created == 2

    def test_register_instance(self) -> None:
        """インスタンス登録のテスト。"""
        container = get_container()
        instance = Counter()
        container.register_instance(Counter, instance)
        assert container.resolve(Counter) is instance

    def test_resolve_unregistered(self) -> None:
        """未登録の型の解決エラーテスト。"""
        with pytest.raises(ValueError, match="Counter"):
            get_container().resolve(Counter)

    def test_has_registration_and_clear(self) -> None:
        """登録確認とクリアのテスト。"""
        container = get_container()
        container.register_factory(Counter, Counter)
        assert container.has_registration(Counter) is True
        container.clear()
        assert container.has_registration(Counter) is False

    def test_set_environment(self) -> None:
        """環境の切り替えテスト。"""
        container = get_container()
        container.set_environment(Environment.PRODUCTION)
        assert container.config.environment == Environment.PRODUCTION
        assert container.config.is_production() is True
