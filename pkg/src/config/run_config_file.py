"""
実行設定ファイル読み込みモジュール。

セクション付きの key = value 形式の設定ファイルを解析し、pydanticモデルで型と未知キーを検証した後、
RunConfig エンティティに変換します。エラーは該当する行番号付きで報告します。

    [model]      kappa_sigma, kappa_tau, u_star, height, eps_reg, x_ref, deterministic
    [release]    x0, u0
    [simulation] integrator, method, final_time, coarse_steps, finest_steps, adaptive, x_adapt,
                 coupling_signs
    [qoi]        kind, a, b, r, delta, bins, bin_edges
    [estimator]  eps, n_samples, pilot_samples, pilot_max_level, max_level, extension_samples,
                 max_failure_fraction, max_pilot_refinements, chunk_size
    [run]        seed, output_dir
"""

import configparser
import re
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.entities import model as model_defaults
from src.entities import qoi as qoi_defaults
from src.entities import run_config as run_defaults
from src.entities.exceptions import (
    ConfigParseError,
    ConfigValidationError,
    InvariantViolationError,
    StabilityError,
)
from src.entities.model import ModelParams
from src.entities.qoi import QoIKind, QoISpec, equidistant_bins
from src.entities.run_config import IntegratorKind, MethodKind, RunConfig
from src.utils.logger import get_logger
from src.utils.types import ConfigSections, PathLike

logger = get_logger(__name__)

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:\s#;\[][^=:]*?)\s*[=:]")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelSection(_Section):
    """[model] セクション。"""

    kappa_sigma: float = model_defaults.DEFAULT_KAPPA_SIGMA
    kappa_tau: float = model_defaults.DEFAULT_KAPPA_TAU
    u_star: float = model_defaults.DEFAULT_U_STAR
    height: float = model_defaults.DEFAULT_HEIGHT
    eps_reg: float = model_defaults.DEFAULT_EPS_REG
    x_ref: float = model_defaults.DEFAULT_HEIGHT
    deterministic: bool = False


class ReleaseSection(_Section):
    """[release] セクション。"""

    x0: float = run_defaults.DEFAULT_X0
    u0: float = run_defaults.DEFAULT_U0


class SimulationSection(_Section):
    """[simulation] セクション。"""

    integrator: IntegratorKind = IntegratorKind.SE
    method: MethodKind = MethodKind.MLMC
    final_time: float = run_defaults.DEFAULT_FINAL_TIME
    coarse_steps: int = run_defaults.DEFAULT_COARSE_STEPS
    finest_steps: int | None = None
    adaptive: bool = False
    x_adapt: float = run_defaults.DEFAULT_X_ADAPT
    coupling_signs: bool = True

    @field_validator("integrator", "method", mode="before")
    @classmethod
    def _lower(cls, value: Any) -> Any:
        return value.strip().lower() if isinstance(value, str) else value


class QoISection(_Section):
    """[qoi] セクション。"""

    kind: QoIKind = QoIKind.SMOOTHED_INDICATOR
    a: float = qoi_defaults.DEFAULT_INTERVAL[0]
    b: float = qoi_defaults.DEFAULT_INTERVAL[1]
    r: int = qoi_defaults.DEFAULT_SMOOTHING_ORDER
    delta: float = qoi_defaults.DEFAULT_SMOOTHING_WIDTH
    bins: int = Field(default=qoi_defaults.DEFAULT_BIN_COUNT, ge=1)
    bin_edges: tuple[float, ...] | None = None

    @field_validator("kind", mode="before")
    @classmethod
    def _normalize_kind(cls, value: Any) -> Any:
        if isinstance(value, str):
            return value.strip().lower().replace("-", "_")
        return value

    @field_validator("bin_edges", mode="before")
    @classmethod
    def _split_edges(cls, value: Any) -> Any:
        if isinstance(value, str):
            return tuple(float(item) for item in value.split(",") if item.strip())
        return value


class EstimatorSection(_Section):
    """[estimator] セクション。"""

    eps: float = run_defaults.DEFAULT_EPS
    n_samples: int | None = None
    pilot_samples: int = run_defaults.DEFAULT_PILOT_SAMPLES
    pilot_max_level: int = run_defaults.DEFAULT_PILOT_MAX_LEVEL
    max_level: int = run_defaults.DEFAULT_MAX_LEVEL
    extension_samples: int = run_defaults.DEFAULT_EXTENSION_SAMPLES
    max_failure_fraction: float = run_defaults.DEFAULT_MAX_FAILURE_FRACTION
    max_pilot_refinements: int = run_defaults.DEFAULT_MAX_PILOT_REFINEMENTS
    chunk_size: int = run_defaults.DEFAULT_CHUNK_SIZE


class RunSection(_Section):
    """[run] セクション。"""

    seed: int = run_defaults.DEFAULT_SEED
    output_dir: str | None = None


SECTION_MODELS: dict[str, type[_Section]] = {
    "model": ModelSection,
    "release": ReleaseSection,
    "simulation": SimulationSection,
    "qoi": QoISection,
    "estimator": EstimatorSection,
    "run": RunSection,
}


def _line_index(text: str) -> dict[tuple[str, str | None], int]:
    """(セクション, キー) → 行番号（セクション見出しはキー None）。"""
    index: dict[tuple[str, str | None], int] = {}
    section: str | None = None
    for number, line in enumerate(text.splitlines(), start=1):
        if line.lstrip().startswith(("#", ";")):
            continue
        header = _SECTION_RE.match(line)
        if header:
            section = header.group(1).strip()
            index.setdefault((section, None), number)
            continue
        key = _KEY_RE.match(line)
        if key and section is not None:
            index.setdefault((section, key.group(1).strip().lower()), number)
    return index


def read_sections(text: str) -> tuple[ConfigSections, dict[tuple[str, str | None], int]]:
    """設定テキストをセクション → {キー: 文字列値} に分解。

    Raises:
        ConfigParseError: 構文エラー（見出しのない行、重複キー、重複セクションなど）
    """
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigParseError("セクション見出しの前にキーがあります", e.lineno) from e
    except configparser.ParsingError as e:
        line = e.errors[0][0] if e.errors else None
        raise ConfigParseError("key = value の形式ではありません", line) from e
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as e:
        raise ConfigParseError(str(e.message), e.lineno) from e
    except configparser.Error as e:
        raise ConfigParseError(str(e)) from e

    sections = {name: dict(parser.items(name, raw=True)) for name in parser.sections()}
    return sections, _line_index(text)


class RunConfigFileParser:
    """実行設定ファイルのパーサー。

    overrides は {セクション: {キー: 値}} の形でファイルの値を上書きします（CLIフラグ用）。
    """

    def __init__(self, default_output_dir: str = run_defaults.DEFAULT_OUTPUT_DIR) -> None:
        """初期化。"""
        self.default_output_dir = default_output_dir

    def parse_file(
        self, path: PathLike, overrides: dict[str, dict[str, Any]] | None = None
    ) -> RunConfig:
        """設定ファイルを読み込んで RunConfig を生成。"""
        text = Path(path).read_text(encoding="utf-8")
        logger.debug("設定ファイルを読み込みました", path=str(path))
        return self.parse_text(text, overrides)

    def parse_text(
        self, text: str = "", overrides: dict[str, dict[str, Any]] | None = None
    ) -> RunConfig:
        """設定テキストを解析して RunConfig を生成。

        Raises:
            ConfigParseError: 構文エラー
            ConfigValidationError: 未知のセクション・キー、型エラー、不変条件違反
        """
        raw, lines = read_sections(text)
        merged: dict[str, dict[str, Any]] = {name: dict(values) for name, values in raw.items()}
        for section, values in (overrides or {}).items():
            merged.setdefault(section, {}).update(
                {key: value for key, value in values.items() if value is not None}
            )

        sections = {}
        for name, values in merged.items():
            model = SECTION_MODELS.get(name)
            if model is None:
                raise ConfigValidationError(
                    f"未知のセクションです: [{name}]", lines.get((name, None)), invariant=name
                )
            try:
                sections[name] = model.model_validate(values)
            except ValidationError as e:
                error = e.errors()[0]
                key = str(error["loc"][0]) if error["loc"] else None
                line = lines.get((name, key)) or lines.get((name, None))
                raise ConfigValidationError(
                    f"[{name}] {key}: {error['msg']}", line, invariant=f"{name}.{key}"
                ) from e

        return self._build(sections, lines)

    def _build(
        self, sections: dict[str, _Section], lines: dict[tuple[str, str | None], int]
    ) -> RunConfig:
        model = sections.get("model") or ModelSection()
        release = sections.get("release") or ReleaseSection()
        simulation = sections.get("simulation") or SimulationSection()
        qoi = sections.get("qoi") or QoISection()
        estimator = sections.get("estimator") or EstimatorSection()
        run = sections.get("run") or RunSection()
        assert isinstance(model, ModelSection)
        assert isinstance(release, ReleaseSection)
        assert isinstance(simulation, SimulationSection)
        assert isinstance(qoi, QoISection)
        assert isinstance(estimator, EstimatorSection)
        assert isinstance(run, RunSection)

        try:
            params = ModelParams(**model.model_dump())
            edges = qoi.bin_edges or equidistant_bins(params.height, qoi.bins)
            spec = QoISpec(
                kind=qoi.kind, a=qoi.a, b=qoi.b, r=qoi.r, delta=qoi.delta, bin_edges=edges
            )
            return RunConfig(
                model=params,
                x0=release.x0,
                u0=release.u0,
                qoi=spec,
                seed=run.seed,
                output_dir=run.output_dir or self.default_output_dir,
                **simulation.model_dump(),
                **estimator.model_dump(),
            )
        except InvariantViolationError as e:
            raise ConfigValidationError(str(e), self._line_for(e.invariant, lines), e.invariant) from e
        except StabilityError as e:
            raise ConfigValidationError(
                str(e), lines.get(("simulation", "coarse_steps")), "h < 2/lambda"
            ) from e

    @staticmethod
    def _line_for(invariant: str, lines: dict[tuple[str, str | None], int]) -> int | None:
        """不変条件の文字列に含まれるキー名から行番号を推定。"""
        for (section, key), number in lines.items():
            if key is not None and re.search(rf"\b{re.escape(key)}\b", invariant):
                return number
            if key is None and section == invariant:
                return number
        return None


def parse_config(
    text: str = "",
    overrides: dict[str, dict[str, Any]] | None = None,
    default_output_dir: str = run_defaults.DEFAULT_OUTPUT_DIR,
) -> RunConfig:
    """設定テキストから RunConfig を生成。"""
    return RunConfigFileParser(default_output_dir).parse_text(text, overrides)
