"""
デコレーターのテスト。
"""

from unittest.mock import patch

import pytest

from src.utils.decorators import timer, validate_args


class TestTimer:
    """timerデコレーターのテスト。"""

    def test_timer_success(self) -> None:
        """正常終了時に経過時間がログ出力されるテスト。"""

        @timer
        def add(a: int, b: int) -> int:
            return a + b

        with patch("src.utils.decorators.get_logger") as mock_logger:
            assert add(1, 2) == 3
            mock_logger.return_value.debug.assert_called_once()
            call_args = mock_logger.return_value.debug.call_args
            assert "add finished" in call_args[0][0]
            assert call_args[1]["elapsed_seconds"] >= 0.0

    def test_timer_exception(self) -> None:
        """例外発生時にエラーログを残して再送出するテスト。"""

        @timer
        def failing_function() -> None:
            raise ValueError("test error")

        with patch("src.utils.decorators.get_logger") as mock_logger:
            with pytest.raises(ValueError, match="test error"):
                failing_function()

            mock_logger.return_value.error.assert_called_once()
            mock_logger.return_value.debug.assert_not_called()
            assert "failing_function failed" in mock_logger.return_value.error.call_args[0][0]

    def test_timer_preserves_name(self) -> None:
        """関数名とdocstringが保持されるテスト。"""

        @timer
        def named() -> None:
            """説明。"""

        assert named.__name__ == "named"
        assert named.__doc__ == "説明。"


class TestValidateArgs:
    """validate_argsデコレーターのテスト。"""

    def test_valid_arguments(self) -> None:
        """有効な引数のテスト。"""

        @validate_args(values=lambda v: len(v) > 0)
        def total(values: list[float], scale: float = 1.0) -> float:
            return sum(values) * scale

        assert total([1.0, 2.0], scale=2.0) == 6.0

    def test_invalid_argument(self) -> None:
        """無効な引数のテスト。"""

        @validate_args(values=lambda v: len(v) > 0)
        def total(values: list[float]) -> float:
            return sum(values)

        with pytest.raises(ValueError, match="values"):
            total([])

    def test_default_argument_is_validated(self) -> None:
        """既定値も検証されるテスト。"""

        @validate_args(count=lambda v: v >= 1)
        def repeat(count: int = 0) -> int:
            return count

        with pytest.raises(ValueError):
            repeat()

    def test_unknown_argument_name(self) -> None:
        """存在しない引数名の指定で定義時にエラーとなるテスト。"""
        with pytest.raises(TypeError):

            @validate_args(missing=lambda v: True)
            def noop(value: int) -> int:
                return value
