"""
乱数ストリームモジュール。

サンプルごとに独立で再現可能な標準正規乱数列を提供します。
k 番目の乱数は (seed, family, level, sample_index, k) だけで決まるため、
ワーカー数や処理順序に依存せず同じ結果が得られます。
"""

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from src.utils.types import BoolArray, FloatArray, IntArray

DEFAULT_BLOCK_SIZE = 256


class StreamFamily(IntEnum):
    """乱数ストリームの系列。"""

    MULTILEVEL = 0
    SINGLE_LEVEL = 1


def make_generator(
    seed: int, level: int, sample_index: int, family: int = StreamFamily.MULTILEVEL
) -> np.random.Generator:
    """(seed, family, level, sample_index) に対応するPhilox生成器を生成。"""
    sequence = np.random.SeedSequence(seed, spawn_key=(int(family), level, sample_index))
    return np.random.Generator(np.random.Philox(sequence))


@dataclass
class NoiseStream:
    """サンプル1つ分の標準正規乱数ストリーム。"""

    seed: int
    level: int
    sample_index: int
    cursor: int = 0
    family: int = StreamFamily.MULTILEVEL
    _generator: np.random.Generator | None = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        """生成器の初期化（cursor 分だけ読み飛ばす）。"""
        self._generator = make_generator(self.seed, self.level, self.sample_index, self.family)
        if self.cursor > 0:
            self._generator.standard_normal(self.cursor)

    def next(self) -> float:
        """次の乱数を取得。"""
        assert self._generator is not None
        self.cursor += 1
        return float(self._generator.standard_normal())

    def take(self, count: int) -> FloatArray:
        """count 個の乱数をまとめて取得（1個ずつ取得した場合と同じ列）。"""
        assert self._generator is not None
        self.cursor += count
        return self._generator.standard_normal(count)


def draw_normal(stream: NoiseStream) -> float:
    """ストリームから標準正規乱数を1つ取得し、cursor を進める。"""
    return stream.next()


class NoiseBlockReader:
    """複数サンプルのストリームをブロック単位で読み出すリーダー。

    サンプルごとに消費速度が異なってもよく（適応刻み）、各サンプルは自分のストリームを
    先頭から順に消費します。
    """

    def __init__(
        self,
        seed: int,
        level: int,
        sample_indices: Sequence[int] | IntArray,
        family: int = StreamFamily.MULTILEVEL,
        block_size: int = DEFAULT_BLOCK_SIZE,
    ) -> None:
        """初期化。"""
        self._generators = [
            make_generator(seed, level, int(index), family) for index in sample_indices
        ]
        self._block_size = block_size
        n = len(self._generators)
        self._buffer = np.empty((n, block_size), dtype=np.float64)
        self._position = np.full(n, block_size, dtype=np.int64)

    @property
    def size(self) -> int:
        """サンプル数。"""
        return len(self._generators)

    def _refill(self, rows: IntArray) -> None:
        for row in rows:
            self._buffer[row] = self._generators[row].standard_normal(self._block_size)
        self._position[rows] = 0

    def draw(self, mask: BoolArray | None = None) -> FloatArray:
        """mask が真のサンプルの次の乱数を取得（偽のサンプルは0を返し消費しない）。"""
        if mask is None:
            rows = np.arange(self.size)
        else:
            rows = np.flatnonzero(mask)
        exhausted = rows[self._position[rows] >= self._block_size]
        if exhausted.size:
            self._refill(exhausted)
        values = np.zeros(self.size, dtype=np.float64)
        values[rows] = self._buffer[rows, self._position[rows]]
        self._position[rows] += 1
        return values
