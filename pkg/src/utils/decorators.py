"""
共通デコレーターモジュール。

推定・スイープの経過時間のログ出力と、引数の事前検証を提供します。
"""

import functools
import inspect
import time
from collections.abc import Callable
from typing import Any, ParamSpec, TypeVar

from src.utils.logger import get_logger

P = ParamSpec("P")
T = TypeVar("T")


def timer(func: Callable[P, T]) -> Callable[P, T]:
    """経過時間（秒）をDEBUGでログ出力するデコレーター。

    例外はログを残して再送出します。
    """
    name = func.__qualname__

    @functools.wraps(func)
    def wrapper(*args: P.args, **kwargs: P.kwargs) -> T:
        logger = get_logger(func.__module__)
        started = time.perf_counter()
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            logger.error(
                f"{name} failed",
                elapsed_seconds=time.perf_counter() - started,
                exception=e,
            )
            raise
        logger.debug(f"{name} finished", elapsed_seconds=time.perf_counter() - started)
        return result

    return wrapper


def validate_args(
    **predicates: Callable[[Any], bool],
) -> Callable[[Callable[P, T]], Callable[P, T]]:
    """引数を述語で検証するデコレーター（省略された引数は既定値で検証）。

    Raises:
        ValueError: 述語が偽を返した場合（ラップされた関数の呼び出し時）
    """

    def decorator(func: Callable[P, T]) -> Callable[P, T]:
        signature = inspect.signature(func)
        unknown = set(predicates) - set(signature.parameters)
        if unknown:
            raise TypeError(f"{func.__qualname__} に存在しない引数です: {sorted(unknown)}")

        @functools.wraps(func)
        def wrapper(*args: P.args, **kwargs: P.kwargs) -> T:
            bound = signature.bind(*args, **kwargs)
            bound.apply_defaults()
            for name, predicate in predicates.items():
                value = bound.arguments[name]
                if not predicate(value):
                    raise ValueError(f"引数 {name} が不正です: {value!r}")
            return func(*args, **kwargs)

        return wrapper

    return decorator
