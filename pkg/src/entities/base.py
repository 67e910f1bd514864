"""
Entity基底クラスモジュール。

このモジュールでは、すべての値オブジェクトの基底クラスを定義します。
"""

import dataclasses
from abc import ABC
from dataclasses import dataclass
from enum import Enum
from typing import Any

try:
    from typing import Self
except ImportError:  # Python < 3.11
    from typing_extensions import Self


@dataclass(frozen=True)
class ValueObject(ABC):
    """値オブジェクト基底クラス。

    サブクラスは ``@dataclass(frozen=True)`` として宣言し、
    不変条件を ``__post_init__`` で検証します。
    """

    def to_dict(self) -> dict[str, Any]:
        """フィールドを辞書に変換（Enumは値、タプルはリストに変換）。"""
        return {
            field.name: _plain(getattr(self, field.name))
            for field in dataclasses.fields(self)
            if field.init
        }

    def replace(self, **changes: Any) -> Self:
        """一部のフィールドを置き換えた新しいインスタンスを生成（不変条件は再検証）。"""
        return dataclasses.replace(self, **changes)


def _plain(value: Any) -> Any:
    """シリアライズ可能な素の値に変換。"""
    if isinstance(value, ValueObject):
        return value.to_dict()
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (tuple, list)):
        return [_plain(item) for item in value]
    return value
