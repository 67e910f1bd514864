"""
粒子状態のテスト。
"""

import pytest

from src.entities.exceptions import InvariantViolationError
from src.entities.particle import ParticleState, StepRecord


class TestParticleState:
    """ParticleStateのテスト。"""

    def test_release(self) -> None:
        """放出状態のテスト。"""
        state = ParticleState.release(0.05, 0.1)
        assert state == ParticleState(x=0.05, u=0.1, t=0.0, parity=1, n_refl=0)

    def test_parity_follows_reflections(self) -> None:
        """パリティが反射回数の偶奇と一致するテスト。"""
        assert ParticleState(x=0.1, u=0.0, parity=-1, n_refl=3).parity == -1
        with pytest.raises(InvariantViolationError, match="parity"):
            ParticleState(x=0.1, u=0.0, parity=1, n_refl=1)

    def test_negative_height(self) -> None:
        """負の高さのテスト。"""
        with pytest.raises(InvariantViolationError, match="0 <= x"):
            ParticleState(x=-0.01, u=0.0)

    def test_height_above_top(self) -> None:
        """上端 H を超える高さのテスト。"""
        assert ParticleState(x=1.0, u=0.0).x == 1.0
        assert ParticleState(x=1.5, u=0.0, height=2.0).height == 2.0
        with pytest.raises(InvariantViolationError, match="x <= H"):
            ParticleState(x=1.01, u=0.0)
        with pytest.raises(InvariantViolationError, match="x <= H"):
            ParticleState.release(0.6, 0.0, height=0.5)

    def test_negative_reflections(self) -> None:
        """負の反射回数のテスト。"""
        with pytest.raises(InvariantViolationError, match="n_refl"):
            ParticleState(x=0.1, u=0.0, n_refl=-1)


class TestStepRecord:
    """StepRecordのテスト。"""

    def test_defaults(self) -> None:
        """既定値のテスト。"""
        record = StepRecord(ParticleState.release(0.1, 0.0), 0, 0.5)
        assert record.noise_parity == 1
        assert record.stability_warning is False

    def test_negative_reflections(self) -> None:
        """負の反射回数のテスト。"""
        with pytest.raises(InvariantViolationError):
            StepRecord(ParticleState.release(0.1, 0.0), -1, 0.0)
