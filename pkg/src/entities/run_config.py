"""
実行設定モジュール。

1回の実行（推定または診断スイープ）に必要なすべての設定値を保持し、
シミュレーション開始前に各モジュールの不変条件を検証します。
"""

from dataclasses import dataclass, field
from enum import Enum

from src.entities.base import ValueObject
from src.entities.exceptions import InvariantViolationError, StabilityError
from src.entities.model import ModelParams, se_stability_bound
from src.entities.qoi import QoIKind, QoISpec
from src.utils.validators import validate_bin_edges, validate_number_range, validate_positive

DEFAULT_X0 = 0.05
DEFAULT_U0 = 0.1
DEFAULT_FINAL_TIME = 1.0
DEFAULT_COARSE_STEPS = 40
DEFAULT_X_ADAPT = 0.05
DEFAULT_EPS = 1e-3
DEFAULT_PILOT_SAMPLES = 10_000
DEFAULT_PILOT_MAX_LEVEL = 4
DEFAULT_MAX_LEVEL = 16
DEFAULT_EXTENSION_SAMPLES = 1_000
DEFAULT_MAX_FAILURE_FRACTION = 1e-4
DEFAULT_MAX_PILOT_REFINEMENTS = 3
DEFAULT_CHUNK_SIZE = 2048
DEFAULT_SEED = 20240101
DEFAULT_OUTPUT_DIR = "output"


class IntegratorKind(str, Enum):
    """時間積分法。"""

    SE = "se"
    GL = "gl"
    BAOAB = "baoab"


class MethodKind(str, Enum):
    """推定法。"""

    STMC = "stmc"
    MLMC = "mlmc"


@dataclass(frozen=True)
class RunConfig(ValueObject):
    """実行設定。"""

    model: ModelParams = field(default_factory=ModelParams)
    x0: float = DEFAULT_X0
    u0: float = DEFAULT_U0
    integrator: IntegratorKind = IntegratorKind.SE
    method: MethodKind = MethodKind.MLMC
    final_time: float = DEFAULT_FINAL_TIME
    coarse_steps: int = DEFAULT_COARSE_STEPS
    finest_steps: int | None = None
    adaptive: bool = False
    x_adapt: float = DEFAULT_X_ADAPT
    coupling_signs: bool = True
    qoi: QoISpec = field(default_factory=QoISpec)
    eps: float = DEFAULT_EPS
    n_samples: int | None = None
    pilot_samples: int = DEFAULT_PILOT_SAMPLES
    pilot_max_level: int = DEFAULT_PILOT_MAX_LEVEL
    max_level: int = DEFAULT_MAX_LEVEL
    extension_samples: int = DEFAULT_EXTENSION_SAMPLES
    max_failure_fraction: float = DEFAULT_MAX_FAILURE_FRACTION
    max_pilot_refinements: int = DEFAULT_MAX_PILOT_REFINEMENTS
    chunk_size: int = DEFAULT_CHUNK_SIZE
    seed: int = DEFAULT_SEED
    output_dir: str = DEFAULT_OUTPUT_DIR

    def __post_init__(self) -> None:
        """バリデーション。

        Raises:
            InvariantViolationError: 不変条件違反
            StabilityError: SEの安定性条件違反
        """
        height = self.model.height
        self._require(validate_number_range(self.x0, 0.0, height, "x0"), "0 <= x0 <= H", self.x0)
        self._require(validate_number_range(self.u0, field_name="u0"), "u0 finite", self.u0)
        self._require(validate_positive(self.final_time, "final_time"), "T > 0", self.final_time)
        self._require_int(self.coarse_steps, "M_0 >= 1")
        if self.finest_steps is not None:
            self._require_int(self.finest_steps, "M_L >= 1")
        self._require(validate_positive(self.eps, "eps"), "eps > 0", self.eps)
        if self.n_samples is not None:
            self._require_int(self.n_samples, "n_samples >= 1")
        self._require_int(self.pilot_samples, "pilot_samples >= 2", minimum=2)
        self._require_int(self.extension_samples, "extension_samples >= 2", minimum=2)
        self._require_int(self.chunk_size, "chunk_size >= 1")
        self._require_int(self.max_level, "max_level >= 0", minimum=0)
        self._require_int(self.max_pilot_refinements, "max_pilot_refinements >= 0", minimum=0)
        if not (3 <= self.pilot_max_level <= self.max_level):
            raise InvariantViolationError("3 <= pilot_max_level <= max_level", self.pilot_max_level)
        self._require(
            validate_number_range(self.max_failure_fraction, 0.0, 1.0, "max_failure_fraction"),
            "0 <= max_failure_fraction <= 1",
            self.max_failure_fraction,
        )
        if self.seed < 0:
            raise InvariantViolationError("seed >= 0", self.seed)

        if self.adaptive:
            if self.integrator == IntegratorKind.BAOAB:
                raise InvariantViolationError("adaptive requires integrator in {se, gl}", "baoab")
            if not (0.0 < self.x_adapt < height):
                raise InvariantViolationError("0 < x_adapt < H", self.x_adapt)

        if self.qoi.kind == QoIKind.BINNED_FIELD:
            self._require(
                validate_bin_edges(self.qoi.bin_edges, height),
                "bin edges strictly increasing spanning [0, H]",
                self.qoi.bin_edges,
            )

        if self.integrator == IntegratorKind.SE:
            self._check_se_stability()

    @staticmethod
    def _require(result: tuple[bool, str | None], invariant: str, value: object) -> None:
        is_valid, _ = result
        if not is_valid:
            raise InvariantViolationError(invariant, value)

    @staticmethod
    def _require_int(value: int, invariant: str, minimum: int = 1) -> None:
        if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
            raise InvariantViolationError(invariant, value)

    def _check_se_stability(self) -> None:
        """SEの安定性条件 h < 2/λ を検証（適応刻みでは λ(x_adapt) を基準とする）。"""
        reference = self.x_adapt if self.adaptive else None
        bound = se_stability_bound(self.model, reference)
        if self.coarse_step >= bound:
            raise StabilityError(self.coarse_step, bound)
        if self.finest_steps is not None:
            h_finest = self.final_time / self.finest_steps
            if h_finest >= bound:
                raise StabilityError(h_finest, bound)

    @property
    def coarse_step(self) -> float:
        """最粗レベルの刻み幅 h_0 = T/M_0。"""
        return self.final_time / self.coarse_steps

    def step_size(self, level: int) -> float:
        """レベルℓの刻み幅 h_ℓ = T/(M_0·2^ℓ)。"""
        return self.final_time / (self.coarse_steps * 2**level)

    def steps(self, level: int) -> int:
        """レベルℓの時間ステップ数 M_0·2^ℓ。"""
        return self.coarse_steps * 2**level
