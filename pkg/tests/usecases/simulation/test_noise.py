"""
乱数ストリームのテスト。
"""

import numpy as np
from scipy import stats

from src.usecases.simulation.noise import (
    NoiseBlockReader,
    NoiseStream,
    StreamFamily,
    draw_normal,
    make_generator,
)


class TestNoiseStream:
    """NoiseStreamのテスト。"""

    def test_reproducible(self) -> None:
        """同じキーで同じ乱数列となるテスト。"""
        first = NoiseStream(seed=1, level=2, sample_index=3)
        second = NoiseStream(seed=1, level=2, sample_index=3)
        assert [first.next() for _ in range(5)] == [second.next() for _ in range(5)]

    def test_independent_keys(self) -> None:
        """キーが異なると乱数列が異なるテスト。"""
        base = NoiseStream(seed=1, level=2, sample_index=3).take(4)
        for other in (
            NoiseStream(seed=2, level=2, sample_index=3),
            NoiseStream(seed=1, level=1, sample_index=3),
            NoiseStream(seed=1, level=2, sample_index=4),
            NoiseStream(seed=1, level=2, sample_index=3, family=StreamFamily.SINGLE_LEVEL),
        ):
            assert not np.array_equal(base, other.take(4))

    def test_take_matches_next(self) -> None:
        """まとめて取得しても1個ずつ取得しても同じ列となるテスト。"""
        bulk = NoiseStream(seed=5, level=0, sample_index=0).take(6)
        stream = NoiseStream(seed=5, level=0, sample_index=0)
        single = [draw_normal(stream) for _ in range(6)]
        np.testing.assert_array_equal(bulk, single)
        assert stream.cursor == 6

    def test_cursor_skips(self) -> None:
        """cursor 指定で途中から再開できるテスト。"""
        values = NoiseStream(seed=5, level=1, sample_index=7).take(4)
        resumed = NoiseStream(seed=5, level=1, sample_index=7, cursor=3)
        assert resumed.next() == values[3]


class TestNoiseBlockReader:
    """NoiseBlockReaderのテスト。"""

    def test_matches_individual_streams(self) -> None:
        """ブロック境界をまたいでも個別ストリームと一致するテスト。"""
        reader = NoiseBlockReader(seed=9, level=1, sample_indices=[4, 5, 6], block_size=4)
        drawn = np.stack([reader.draw() for _ in range(10)], axis=1)
        for row, index in enumerate([4, 5, 6]):
            expected = make_generator(9, 1, index).standard_normal(10)
            np.testing.assert_array_equal(drawn[row], expected)

    def test_masked_draw(self) -> None:
        """mask が偽のサンプルは消費しないテスト。"""
        reader = NoiseBlockReader(seed=9, level=0, sample_indices=[0, 1], block_size=3)
        first = reader.draw(np.array([True, False]))
        assert first[1] == 0.0
        second = reader.draw()
        expected = make_generator(9, 0, 1).standard_normal(1)
        assert second[1] == expected[0]
        assert reader.size == 2


class TestDistribution:
    """乱数列の分布のテスト。"""

    def test_stream_is_standard_normal(self) -> None:
        """1本のストリームが標準正規分布に従うテスト（KS検定）。"""
        values = NoiseStream(seed=3, level=0, sample_index=0).take(5000)
        assert stats.kstest(values, "norm").pvalue > 0.001

    def test_across_samples_is_standard_normal(self) -> None:
        """標本をまたいだ同じ位置の乱数が標準正規分布に従うテスト。"""
        reader = NoiseBlockReader(seed=3, level=2, sample_indices=np.arange(3000))
        first = reader.draw()
        assert stats.kstest(first, "norm").pvalue > 0.001
