"""
共通インターフェース定義モジュール。

このモジュールでは、ユースケース層で使用するインターフェース（ポート）を定義します。
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from src.entities.statistics import SweepTable

SCHEMA_VERSION = 1


@dataclass
class OutputRecord:
    """結果ファイル（result.json）の内容。"""

    command: str
    config: dict[str, Any]
    result: dict[str, Any]
    levels: list[dict[str, Any]] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict[str, Any]:
        """辞書形式に変換。"""
        return {
            "schema_version": self.schema_version,
            "command": self.command,
            "config": self.config,
            "result": self.result,
            "levels": self.levels,
            "timings": self.timings,
        }


class OutputRepository(ABC):
    """結果出力リポジトリインターフェース。"""

    @abstractmethod
    def write_outputs(
        self, record: OutputRecord, directory: Path, tables: list[SweepTable] | None = None
    ) -> list[Path]:
        """結果JSONとCSV表を書き出し、作成したファイルのパスを返す。"""
        raise NotImplementedError

    @abstractmethod
    def read_record(self, directory: Path) -> OutputRecord:
        """結果JSONを読み込む。"""
        raise NotImplementedError
