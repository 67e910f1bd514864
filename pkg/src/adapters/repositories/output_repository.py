"""
結果出力リポジトリ。

推定結果を result.json に、診断スイープの表をCSVに書き出します。
浮動小数点数は有効数字17桁で出力するため、読み戻した値は書き出した値と一致します。
同じ設定・シードからは常にバイト単位で同じファイルが生成されます。
"""

import csv
import io
import json
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np

from src.entities.exceptions import OutputSchemaError
from src.entities.statistics import SweepTable
from src.usecases.common.interfaces import SCHEMA_VERSION, OutputRecord, OutputRepository
from src.utils.logger import get_logger
from src.utils.types import CsvRow

logger = get_logger(__name__)

RESULT_FILENAME = "result.json"
_REQUIRED_KEYS = ("schema_version", "command", "config", "result", "levels", "timings")


def format_float(value: float) -> str:
    """有効数字17桁の文字列に変換（非有限値はエラー）。"""
    if not math.isfinite(value):
        raise OutputSchemaError(f"有限でない数値は出力できません: {value}")
    text = format(value, ".17g")
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def _plain(value: Any) -> Any:
    """numpy の値を Python の値に変換。"""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def _emit(value: Any, indent: int) -> str:
    """キー順を保ったJSONテキストを生成。"""
    value = _plain(value)
    pad = "  " * (indent + 1)
    close = "  " * indent
    if value is None or isinstance(value, (bool, str)):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [
            f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_emit(v, indent + 1)}"
            for k, v in value.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [f"{pad}{_emit(v, indent + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    raise OutputSchemaError(f"JSONに変換できない値です: {type(value).__name__}")


def dumps_record(record: OutputRecord) -> str:
    """出力レコードをJSONテキストに変換。"""
    return _emit(record.to_dict(), 0) + "\n"


def _csv_cell(value: Any) -> str:
    value = _plain(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def dumps_table(header: Sequence[str], rows: Sequence[CsvRow]) -> str:
    """CSVテキストに変換（行がなければヘッダーのみ）。"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(cell) for cell in row])
    return buffer.getvalue()


class FileOutputRepository(OutputRepository):
    """ファイルシステムへの結果出力。"""

    def write_outputs(
        self, record: OutputRecord, directory: Path, tables: list[SweepTable] | None = None
    ) -> list[Path]:
        """result.json と各表のCSVを書き出す。

        Raises:
            OutputSchemaError: 有限でない数値など出力できない値を含む場合
            OSError: 書き込みに失敗した場合
        """
        # 変換がすべて成功してから書き込む
        contents: list[tuple[str, str]] = [(RESULT_FILENAME, dumps_record(record))]
        for table in tables or []:
            contents.append((table.filename, dumps_table(table.header, table.rows)))

        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for name, text in contents:
            path = directory / name
            path.write_text(text, encoding="utf-8")
            written.append(path)
        logger.info("結果を書き出しました", directory=str(directory), files=[p.name for p in written])
        return written

    def read_record(self, directory: Path) -> OutputRecord:
        """result.json を読み込む。

        Raises:
            OutputSchemaError: スキーマのバージョンが異なる、または必須キーがない場合
        """
        path = Path(directory) / RESULT_FILENAME
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise OutputSchemaError(f"JSONとして読み込めません: {e}") from e
        if not isinstance(data, dict):
            raise OutputSchemaError("最上位がオブジェクトではありません")
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise OutputSchemaError(
                f"未対応のスキーマバージョンです: {version} (対応: {SCHEMA_VERSION})"
            )
        missing = [key for key in _REQUIRED_KEYS if key not in data]
        if missing:
            raise OutputSchemaError(f"必須キーがありません: {missing}")
        return OutputRecord(
            command=data["command"],
            config=data["config"],
            result=data["result"],
            levels=data["levels"],
            timings=data["timings"],
            schema_version=version,
        )


def read_table(path: Path) -> tuple[tuple[str, ...], list[tuple[str, ...]]]:
    """CSVファイルを (ヘッダー, 行) として読み込む。"""
    with Path(path).open(encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = tuple(next(reader, ()))
        return header, [tuple(row) for row in reader]
