"""
コマンドラインコントローラー。

サブコマンド（run, variance-decay, bias-decay, coupling-comparison, cost-sweep, pdf,
release-sweep, smoothing-study）を
解析して推定・スイープを実行し、result.json と各CSVを出力ディレクトリに書き出します。

終了コード: 0 成功、2 設定・ドメインエラー、3 入出力エラー。
"""

import argparse
import math
import sys
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from src.config.run_config_file import RunConfigFileParser
from src.di_container.container import get_container
from src.entities.exceptions import DomainException
from src.entities.qoi import QoIKind
from src.entities.run_config import IntegratorKind, MethodKind, RunConfig
from src.entities.statistics import RunResult, SweepTable
from src.usecases.common.interfaces import OutputRecord, OutputRepository
from src.usecases.estimation.mlmc import run_mlmc
from src.usecases.estimation.stmc import run_stmc
from src.usecases.estimation.sweeps import (
    DEFAULT_RELEASE_HEIGHTS,
    DEFAULT_SMOOTHING_ORDERS,
    SweepKind,
    cost_sweep,
    diagnostic_sweep,
    log_log_slope,
    pdf_table,
    release_sweep,
    smoothing_study,
)
from src.utils.logger import get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 2
EXIT_IO_ERROR = 3

QOI_CHOICES = [kind.value.replace("_", "-") for kind in QoIKind]

LEVEL_SWEEPS = {
    "variance-decay": SweepKind.VARIANCE_DECAY,
    "bias-decay": SweepKind.BIAS_DECAY,
    "coupling-comparison": SweepKind.COUPLING_COMPARISON,
}


@dataclass
class CommandOutput:
    """サブコマンドの実行結果。"""

    result: dict[str, Any]
    levels: list[dict[str, Any]] = field(default_factory=list)
    tables: list[SweepTable] = field(default_factory=list)
    run_result: RunResult | None = None


def _float_list(text: str) -> list[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"カンマ区切りの数値が必要です: {text}") from e


def _int_list(text: str) -> list[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"カンマ区切りの整数が必要です: {text}") from e


def _choice_list(choices: Sequence[str]) -> Callable[[str], list[str]]:
    def parse(text: str) -> list[str]:
        items = [item.strip().lower() for item in text.split(",") if item.strip()]
        unknown = [item for item in items if item not in choices]
        if unknown:
            raise argparse.ArgumentTypeError(f"{unknown} は {list(choices)} のいずれでもありません")
        return items

    return parse


def _on_off(text: str) -> bool:
    value = text.strip().lower()
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("on または off を指定してください")
    return value == "on"


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="設定ファイルのパス")
    parser.add_argument("--method", choices=[m.value for m in MethodKind], help="推定法")
    parser.add_argument("--integrator", choices=[i.value for i in IntegratorKind], help="時間積分法")
    parser.add_argument("--qoi", choices=QOI_CHOICES, help="評価量")
    parser.add_argument("--eps", type=float, help="許容誤差 ε")
    parser.add_argument("--seed", type=int, help="乱数シード")
    parser.add_argument("--workers", type=int, help="ワーカープロセス数")
    parser.add_argument("--output-dir", help="出力ディレクトリ")
    parser.add_argument(
        "--adaptive", action=argparse.BooleanOptionalAction, default=None, help="適応刻み"
    )
    parser.add_argument("--x-adapt", type=float, help="適応刻みの基準高さ")
    parser.add_argument("--release", type=float, help="放出高さ X_0")
    parser.add_argument("--coarse-steps", type=int, help="最粗レベルのステップ数 M_0")
    parser.add_argument("--finest-steps", type=int, help="StMCのステップ数 M_L")
    parser.add_argument("--samples", type=int, help="固定標本数 N")
    parser.add_argument(
        "--coupling-signs", type=_on_off, metavar="{on,off}", help="境界反射の符号を結合に使うか"
    )
    parser.add_argument(
        "--timings",
        type=_on_off,
        default=True,
        metavar="{on,off}",
        help="経過時間を記録するか（off では0を書き出す）",
    )


def build_parser() -> argparse.ArgumentParser:
    """引数パーサーを構築。"""
    parser = argparse.ArgumentParser(
        prog="dispersion",
        description="境界層内の粒子鉛直拡散を StMC / MLMC で推定します",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="推定を1回実行")
    _add_common_arguments(run)

    for name, help_text in (
        ("variance-decay", "レベルごとの Var[Y_ℓ] を計算"),
        ("bias-decay", "レベルごとの |E[Y_ℓ]| を計算"),
        ("coupling-comparison", "反射符号あり・なしの結合で Var[Y_ℓ] を比較"),
    ):
        sweep = subparsers.add_parser(name, help=help_text)
        _add_common_arguments(sweep)
        sweep.add_argument("--max-level", type=int, help="最大レベル（既定は pilot_max_level）")

    cost = subparsers.add_parser("cost-sweep", help="許容誤差に対する計算コスト")
    _add_common_arguments(cost)
    cost.add_argument("--eps-list", type=_float_list, help="許容誤差の列（既定は 4ε,2ε,ε）")
    cost.add_argument(
        "--methods", type=_choice_list([m.value for m in MethodKind]), default=["mlmc", "stmc"]
    )

    pdf = subparsers.add_parser("pdf", help="ビン分割濃度場（鉛直濃度分布）を推定")
    _add_common_arguments(pdf)
    pdf.add_argument("--bins", type=int, help="等間隔ビンの数")

    release = subparsers.add_parser("release-sweep", help="放出高さ別の計算コスト")
    _add_common_arguments(release)
    release.add_argument("--bins", type=int, help="等間隔ビンの数")
    release.add_argument("--heights", type=_float_list, default=list(DEFAULT_RELEASE_HEIGHTS))
    release.add_argument(
        "--methods", type=_choice_list([m.value for m in MethodKind]), default=["mlmc", "stmc"]
    )
    release.add_argument("--integrators", type=_choice_list([i.value for i in IntegratorKind]))

    smoothing = subparsers.add_parser("smoothing-study", help="平滑化次数 r の影響")
    _add_common_arguments(smoothing)
    smoothing.add_argument("--r-values", type=_int_list, default=list(DEFAULT_SMOOTHING_ORDERS))

    return parser


def build_overrides(args: argparse.Namespace) -> dict[str, dict[str, Any]]:
    """CLIフラグを設定ファイルの上書き値に変換（未指定は None で無視される）。"""
    qoi = args.qoi.replace("-", "_") if args.qoi else None
    if args.command in ("pdf", "release-sweep"):
        qoi = QoIKind.BINNED_FIELD.value
    return {
        "release": {"x0": args.release},
        "simulation": {
            "method": args.method,
            "integrator": args.integrator,
            "adaptive": args.adaptive,
            "x_adapt": args.x_adapt,
            "coupling_signs": args.coupling_signs,
            "coarse_steps": args.coarse_steps,
            "finest_steps": args.finest_steps,
        },
        "qoi": {"kind": qoi, "bins": getattr(args, "bins", None)},
        "estimator": {"eps": args.eps, "n_samples": args.samples},
        "run": {"seed": args.seed, "output_dir": args.output_dir},
    }


def _estimate(config: RunConfig, workers: int) -> RunResult:
    if config.method == MethodKind.STMC:
        return run_stmc(config, workers=workers)
    return run_mlmc(config, workers=workers)


def _finite_or_none(value: float) -> float | None:
    return value if math.isfinite(value) else None


def _run(_args: argparse.Namespace, config: RunConfig, workers: int) -> CommandOutput:
    result = _estimate(config, workers)
    return CommandOutput(
        result=result.result_payload(),
        levels=[s.to_dict() for s in result.levels],
        run_result=result,
    )


def _level_sweep(args: argparse.Namespace, config: RunConfig, workers: int) -> CommandOutput:
    kind = LEVEL_SWEEPS[args.command]
    table = diagnostic_sweep(kind, config, workers=workers, max_level=args.max_level)
    fine = [row for row in table.rows if row[0] >= 1]
    h = [row[1] for row in fine]

    def slope(column: int) -> float | None:
        return _finite_or_none(log_log_slope(h, [row[column] for row in fine]))

    # 3列目が Var[Y_ℓ] または |E[Y_ℓ]|
    result: dict[str, Any]
    if kind == SweepKind.COUPLING_COMPARISON:
        result = {"kind": kind.value, "rows": len(table.rows), "slope": slope(2)}
        result["slope_no_signs"] = slope(3)
    else:
        result = {
            "kind": kind.value,
            "coupling_signs": config.coupling_signs,
            "rows": len(table.rows),
            "slope": slope(2),
        }
    return CommandOutput(result=result, tables=[table])


def _cost_sweep(args: argparse.Namespace, config: RunConfig, workers: int) -> CommandOutput:
    eps_values = args.eps_list
    if eps_values is None:
        eps_values = [4 * config.eps, 2 * config.eps, config.eps]
    methods = [MethodKind(m) for m in args.methods]
    table = cost_sweep(config, eps_values, methods, workers, record_timings=args.timings)
    result: dict[str, Any] = {"rows": len(table.rows)}
    for method in methods:
        rows = [row for row in table.rows if row[1] == method.value]
        slope = log_log_slope([row[0] for row in rows], [row[3] for row in rows])
        result[f"{method.value}_cost_slope"] = _finite_or_none(slope)
    return CommandOutput(result=result, tables=[table])


def _pdf(_args: argparse.Namespace, config: RunConfig, workers: int) -> CommandOutput:
    result = _estimate(config, workers)
    table = pdf_table(result, config.qoi.bin_edges)
    payload = result.result_payload()
    payload["concentration_sum"] = float(sum(table.column("concentration")))
    return CommandOutput(
        result=payload,
        levels=[s.to_dict() for s in result.levels],
        tables=[table],
        run_result=result,
    )


def _release_sweep(args: argparse.Namespace, config: RunConfig, workers: int) -> CommandOutput:
    integrators = [IntegratorKind(i) for i in args.integrators or [config.integrator.value]]
    table = release_sweep(
        config,
        heights=args.heights,
        methods=[MethodKind(m) for m in args.methods],
        integrators=integrators,
        workers=workers,
        record_timings=args.timings,
    )
    return CommandOutput(result={"rows": len(table.rows)}, tables=[table])


def _smoothing_study(args: argparse.Namespace, config: RunConfig, workers: int) -> CommandOutput:
    table = smoothing_study(config, args.r_values, workers)
    return CommandOutput(result={"rows": len(table.rows)}, tables=[table])


COMMANDS: dict[str, Callable[[argparse.Namespace, RunConfig, int], CommandOutput]] = {
    "run": _run,
    "variance-decay": _level_sweep,
    "bias-decay": _level_sweep,
    "coupling-comparison": _level_sweep,
    "cost-sweep": _cost_sweep,
    "pdf": _pdf,
    "release-sweep": _release_sweep,
    "smoothing-study": _smoothing_study,
}


def _timings(output: CommandOutput, elapsed: float, enabled: bool) -> dict[str, float]:
    if not enabled:
        return {"wall_seconds": 0.0, "pilot_wall_seconds": 0.0}
    pilot = output.run_result.pilot_wall_time if output.run_result is not None else 0.0
    return {"wall_seconds": elapsed, "pilot_wall_seconds": pilot}


def run_command(args: argparse.Namespace) -> int:
    """サブコマンドを実行して結果を書き出し、終了コードを返す。"""
    container = get_container()
    try:
        parser = container.resolve(RunConfigFileParser)
        repository = container.resolve(OutputRepository)
        overrides = build_overrides(args)
        if args.config is not None:
            config = parser.parse_file(args.config, overrides)
        else:
            config = parser.parse_text("", overrides)
        workers = args.workers or container.config.runtime.workers

        logger.info("コマンドを開始します", command=args.command, workers=workers)
        started = time.perf_counter()
        output = COMMANDS[args.command](args, config, workers)
        elapsed = time.perf_counter() - started

        record = OutputRecord(
            command=args.command,
            config=config.to_dict(),
            result=output.result,
            levels=output.levels,
            timings=_timings(output, elapsed, args.timings),
        )
        written = repository.write_outputs(record, Path(config.output_dir), output.tables)
    except (DomainException, ValueError) as e:
        logger.error("実行に失敗しました", exception=e, command=args.command)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN_ERROR
    except OSError as e:
        logger.error("ファイルの入出力に失敗しました", exception=e, command=args.command)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO_ERROR

    for path in written:
        print(path)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    """CLIのエントリーポイント（引数の誤りは argparse が終了コード2で終了する）。"""
    args = build_parser().parse_args(argv)
    return run_command(args)
