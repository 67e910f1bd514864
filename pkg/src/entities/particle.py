"""
粒子状態モジュール。

単一粒子の状態（高さ、速度、時刻、反射パリティ）と1ステップの記録を定義します。
"""

from dataclasses import dataclass

from src.entities.base import ValueObject
from src.entities.exceptions import InvariantViolationError
from src.entities.model import DEFAULT_HEIGHT


@dataclass(frozen=True)
class ParticleState(ValueObject):
    """粒子状態。

    parity は反射回数の偶奇 (−1)^{n_refl} です。height は位置の上端 H です。
    """

    x: float
    u: float
    t: float = 0.0
    parity: int = 1
    n_refl: int = 0
    height: float = DEFAULT_HEIGHT

    def __post_init__(self) -> None:
        """バリデーション。"""
        if self.n_refl < 0:
            raise InvariantViolationError("n_refl >= 0", self.n_refl)
        expected = 1 if self.n_refl % 2 == 0 else -1
        if self.parity != expected:
            raise InvariantViolationError("parity = (-1)^n_refl", self.parity)
        if not (0.0 <= self.x <= self.height):
            raise InvariantViolationError("0 <= x <= H", self.x)

    @classmethod
    def release(cls, x0: float, u0: float, height: float = DEFAULT_HEIGHT) -> "ParticleState":
        """放出時の初期状態を生成。"""
        return cls(x=x0, u=u0, height=height)


@dataclass(frozen=True)
class StepRecord(ValueObject):
    """1ステップの記録。

    noise_parity はノイズを適用した時点の反射パリティです
    （SE/GLはステップ開始時、BAOABは中間点）。
    """

    new_state: ParticleState
    reflections_this_step: int
    noise_used: float
    noise_parity: int = 1
    stability_warning: bool = False

    def __post_init__(self) -> None:
        """バリデーション。"""
        if self.reflections_this_step < 0:
            raise InvariantViolationError("reflections_this_step >= 0", self.reflections_this_step)
